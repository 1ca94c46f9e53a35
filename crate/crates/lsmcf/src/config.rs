//! Declarative experiment configuration (JSON, schema validated before any
//! compute) and the named presets.

use serde::{Deserialize, Serialize};
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::grid::{BoundaryRegime, GridSpec};
use crate::initial_data::{BumpParams, DataPreset, InitialDataSpec};
use crate::solver::SolverParams;

/// Epsilon given either as a multiple of the grid spacing or absolutely.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum EpsilonSpec {
    HMultiple { factor: f64 },
    Absolute { value: f64 },
}

impl EpsilonSpec {
    pub fn resolve(&self, grid: &GridSpec) -> f64 {
        match *self {
            EpsilonSpec::HMultiple { factor } => factor * grid.spacing(),
            EpsilonSpec::Absolute { value } => value,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub dimension: usize,
    pub half_width: f64,
    pub points_per_axis: usize,
    #[serde(default = "default_regime")]
    pub boundary_regime: BoundaryRegime,
}

fn default_regime() -> BoundaryRegime {
    BoundaryRegime::FarFieldConstant
}

impl GridConfig {
    pub fn build(&self) -> Result<GridSpec> {
        GridSpec::new(self.dimension, self.half_width, self.points_per_axis, self.boundary_regime)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub epsilon: EpsilonSpec,
    #[serde(default = "default_dt_safety")]
    pub dt_safety: f64,
    pub t_end: f64,
    /// Defaults to ten stable steps per snapshot when absent.
    #[serde(default)]
    pub snapshot_interval: Option<f64>,
}

fn default_dt_safety() -> f64 {
    0.8
}

impl SolverConfig {
    pub fn build(&self, grid: &GridSpec) -> Result<SolverParams> {
        let probe = SolverParams {
            epsilon: self.epsilon.resolve(grid),
            dt_safety: self.dt_safety,
            t_end: self.t_end,
            snapshot_interval: 1.0,
            track_energy: true,
        };
        let interval = self.snapshot_interval.unwrap_or(10.0 * probe.dt_max(grid));
        let params = SolverParams { snapshot_interval: interval, ..probe };
        params.validate(grid)?;
        Ok(params)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelConfig {
    #[serde(default = "default_level_count")]
    pub count: usize,
    /// Band margin eta as a fraction of the cap height.
    #[serde(default = "default_eta")]
    pub eta_fraction: f64,
}

fn default_level_count() -> usize {
    5
}

fn default_eta() -> f64 {
    0.1
}

impl Default for LevelConfig {
    fn default() -> Self {
        Self { count: default_level_count(), eta_fraction: default_eta() }
    }
}

/// Where the verifier's space-time test family comes from.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum TestFamily {
    Fixed,
    Seeded { seed: u64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifierConfig {
    #[serde(default = "default_true")]
    pub run_residuals: bool,
    #[serde(default = "default_family")]
    pub test_family: TestFamily,
    #[serde(default = "default_family_size")]
    pub family_size: usize,
    /// Median relative residual threshold for the weak-form families.
    #[serde(default = "default_residual_tol")]
    pub residual_tolerance: f64,
}

fn default_true() -> bool {
    true
}

fn default_family() -> TestFamily {
    TestFamily::Fixed
}

fn default_family_size() -> usize {
    5
}

fn default_residual_tol() -> f64 {
    0.05
}

impl Default for VerifierConfig {
    fn default() -> Self {
        Self {
            run_residuals: true,
            test_family: TestFamily::Fixed,
            family_size: default_family_size(),
            residual_tolerance: default_residual_tol(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub directory: Option<PathBuf>,
    #[serde(default)]
    pub persist_snapshots: bool,
    #[serde(default = "default_true")]
    pub emit_svg: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { directory: None, persist_snapshots: false, emit_svg: true }
    }
}

/// Extra experiment structure beyond one plain run.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Mode {
    Single,
    /// Second run from `other_initial_data`; checks the comparison principle
    /// (the run whose data is pointwise smaller must stay below the other).
    Comparison { other_initial_data: InitialDataSpec },
    /// Relabeled run Phi(s) = s + a tanh(b s) over the epsilon ladder.
    Relabel { a: f64, b: f64 },
}

impl Default for Mode {
    fn default() -> Self {
        Mode::Single
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub grid: GridConfig,
    pub solver: SolverConfig,
    pub initial_data: InitialDataSpec,
    #[serde(default)]
    pub levels: LevelConfig,
    #[serde(default)]
    pub verifier: VerifierConfig,
    /// Optional ladder of epsilon values, as multiples of h (descending).
    #[serde(default)]
    pub epsilon_ladder: Option<Vec<f64>>,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub mode: Mode,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<Self> {
        let grid = self.grid.build()?;
        self.solver.build(&grid)?;
        if self.levels.count == 0 || self.levels.count > 64 {
            return Err(Error::Validation("levels.count must be in 1..=64".into()));
        }
        if !(self.levels.eta_fraction > 0.0 && self.levels.eta_fraction < 0.5) {
            return Err(Error::Validation("levels.eta_fraction must be in (0, 0.5)".into()));
        }
        if let Some(ladder) = &self.epsilon_ladder {
            if ladder.is_empty() {
                return Err(Error::Validation("epsilon_ladder must not be empty".into()));
            }
            for pair in ladder.windows(2) {
                if pair[1] >= pair[0] {
                    return Err(Error::Validation(
                        "epsilon_ladder must be strictly descending".into(),
                    ));
                }
            }
            if *ladder.last().unwrap() <= 0.0 {
                return Err(Error::Validation("epsilon_ladder entries must be positive".into()));
            }
        }
        if let Mode::Relabel { a, b } = self.mode {
            if a * b >= 1.0 {
                return Err(Error::Validation(format!(
                    "relabel a*b = {} >= 1 breaks monotonicity",
                    a * b
                )));
            }
        }
        Ok(self.clone())
    }
}

fn circle_bump(center: Vec<f64>, r0: f64, delta: f64) -> BumpParams {
    BumpParams { center, inner_radius: r0, plateau_cap: delta }
}

fn base_2d(name: &str, n: usize, t_end: f64) -> ExperimentConfig {
    ExperimentConfig {
        name: name.to_string(),
        grid: GridConfig {
            dimension: 2,
            half_width: 1.0,
            points_per_axis: n,
            boundary_regime: BoundaryRegime::FarFieldConstant,
        },
        solver: SolverConfig {
            epsilon: EpsilonSpec::HMultiple { factor: 1.0 },
            dt_safety: 0.8,
            t_end,
            // fixed physical cadence so time quadrature matches across grids
            snapshot_interval: Some(0.002),
        },
        initial_data: InitialDataSpec {
            preset: DataPreset::RadialBump(circle_bump(vec![0.0, 0.0], 0.4, 0.2)),
            far_field_value: 0.0,
        },
        levels: LevelConfig::default(),
        verifier: VerifierConfig::default(),
        epsilon_ladder: None,
        output: OutputConfig::default(),
        mode: Mode::Single,
    }
}

/// The named presets.
pub fn preset_names() -> Vec<&'static str> {
    vec![
        "stationary",
        "shrinking_circle",
        "shrinking_circle_coarse",
        "nested_circles_comparison",
        "two_bumps",
        "neumann_half_circle",
        "relabel_ladder",
        "epsilon_ladder_3d_small",
    ]
}

pub fn preset(name: &str) -> Result<ExperimentConfig> {
    let cfg = match name {
        "stationary" => {
            let mut c = base_2d("stationary", 129, 0.02);
            c.initial_data =
                InitialDataSpec { preset: DataPreset::Constant, far_field_value: -0.2 };
            c
        }
        "shrinking_circle" => base_2d("shrinking_circle", 257, 0.06),
        "shrinking_circle_coarse" => base_2d("shrinking_circle_coarse", 129, 0.06),
        "nested_circles_comparison" => {
            let mut c = base_2d("nested_circles_comparison", 129, 0.02);
            c.initial_data = InitialDataSpec {
                preset: DataPreset::RadialBump(circle_bump(vec![0.0, 0.0], 0.3, 0.2)),
                far_field_value: 0.0,
            };
            c.mode = Mode::Comparison {
                other_initial_data: InitialDataSpec {
                    preset: DataPreset::RadialBump(circle_bump(vec![0.0, 0.0], 0.4, 0.2)),
                    far_field_value: 0.0,
                },
            };
            c
        }
        "two_bumps" => {
            let mut c = base_2d("two_bumps", 129, 0.02);
            c.initial_data = InitialDataSpec {
                preset: DataPreset::TwoBumps {
                    first: circle_bump(vec![-0.3, 0.0], 0.2, 0.12),
                    second: circle_bump(vec![0.3, 0.0], 0.2, 0.12),
                },
                far_field_value: 0.0,
            };
            c
        }
        "neumann_half_circle" => {
            let mut c = base_2d("neumann_half_circle", 257, 0.06);
            c.grid.boundary_regime = BoundaryRegime::NeumannBox;
            c.initial_data = InitialDataSpec {
                preset: DataPreset::NeumannHalfBump(circle_bump(vec![-1.0, 0.0], 0.4, 0.2)),
                far_field_value: 0.0,
            };
            c
        }
        "relabel_ladder" => {
            let mut c = base_2d("relabel_ladder", 129, 0.02);
            c.mode = Mode::Relabel { a: 0.3, b: 1.0 };
            c.epsilon_ladder = Some(vec![4.0, 2.0, 1.0]);
            c
        }
        "epsilon_ladder_3d_small" => {
            let mut c = base_2d("epsilon_ladder_3d_small", 65, 0.015);
            c.grid.dimension = 3;
            c.solver.snapshot_interval = Some(0.0015);
            c.initial_data = InitialDataSpec {
                preset: DataPreset::RadialBump(circle_bump(vec![0.0, 0.0, 0.0], 0.4, 0.2)),
                far_field_value: 0.0,
            };
            c.epsilon_ladder = Some(vec![2.0, 1.0]);
            c
        }
        other => {
            return Err(Error::Validation(format!(
                "unknown preset '{other}' (known: {})",
                preset_names().join(", ")
            )))
        }
    };
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_presets_validate() {
        for name in preset_names() {
            let cfg = preset(name).unwrap_or_else(|e| panic!("preset {name}: {e}"));
            assert_eq!(cfg.name, name);
            // round trip through JSON
            let text = serde_json::to_string_pretty(&cfg).unwrap();
            let back = ExperimentConfig::from_json(&text).unwrap();
            assert_eq!(back.name, cfg.name);
        }
    }

    #[test]
    fn unknown_preset_rejected() {
        assert!(preset("no_such_thing").is_err());
    }

    #[test]
    fn unknown_keys_rejected() {
        let mut v: serde_json::Value =
            serde_json::to_value(preset("stationary").unwrap()).unwrap();
        v["surprise"] = serde_json::json!(1);
        assert!(ExperimentConfig::from_json(&v.to_string()).is_err());
    }

    #[test]
    fn small_grid_rejected_before_compute() {
        let mut cfg = preset("stationary").unwrap();
        cfg.grid.points_per_axis = 8;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn epsilon_resolution() {
        let grid = GridSpec::new(2, 1.0, 129, BoundaryRegime::FarFieldConstant).unwrap();
        let h = grid.spacing();
        assert_eq!(EpsilonSpec::HMultiple { factor: 2.0 }.resolve(&grid), 2.0 * h);
        assert_eq!(EpsilonSpec::Absolute { value: 0.03 }.resolve(&grid), 0.03);
    }

    #[test]
    fn ladder_must_descend() {
        let mut cfg = preset("relabel_ladder").unwrap();
        cfg.epsilon_ladder = Some(vec![1.0, 2.0]);
        assert!(cfg.validate().is_err());
    }
}
