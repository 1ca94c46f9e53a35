//! Explicit time integration of the regularized level set equation
//!
//!   du/dt = lap(u) - (grad u . hess(u) grad u) / (|grad u|^2 + eps^2)
//!
//! together with the regularized normal, curvature, and metric fields the
//! diagnostics are built from.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{self, BoundaryRegime, GridSpec, ScalarField, VectorField};

/// sqrt(|grad u|^2 + eps^2), the area element of the graph regularization.
pub fn metric_eps(u: &ScalarField, eps: f64) -> ScalarField {
    let grad = grid::gradient(u);
    metric_from_grad(&grad, eps)
}

pub fn metric_from_grad(grad: &VectorField, eps: f64) -> ScalarField {
    let g = *grad.grid();
    let d = g.dimension;
    let values: Vec<f64> = (0..g.len())
        .into_par_iter()
        .map(|idx| {
            let mut s = eps * eps;
            for a in 0..d {
                let c = grad.component(a)[idx];
                s += c * c;
            }
            s.sqrt()
        })
        .collect();
    ScalarField::new(g, values).expect("length preserved")
}

/// Approximate outer normal nu_eps = -grad u / sqrt(|grad u|^2 + eps^2).
pub fn nu_eps(u: &ScalarField, eps: f64) -> VectorField {
    let grad = grid::gradient(u);
    let g = *grad.grid();
    let d = g.dimension;
    let metric = metric_from_grad(&grad, eps);
    let components: Vec<Vec<f64>> = (0..d)
        .map(|a| {
            (0..g.len())
                .into_par_iter()
                .map(|idx| -grad.component(a)[idx] / metric.values()[idx])
                .collect()
        })
        .collect();
    VectorField::new(g, components).expect("dimension preserved")
}

/// Approximate mean curvature H_eps = div nu_eps.
pub fn mean_curvature_eps(u: &ScalarField, eps: f64) -> ScalarField {
    grid::divergence(&nu_eps(u, eps))
}

/// Right-hand side in Hessian form (the form used for time stepping).
pub fn rhs_hessian_form(u: &ScalarField, eps: f64) -> ScalarField {
    assert!(eps > 0.0, "regularization must be positive");
    let g = *u.grid();
    let d = g.dimension;
    let grad = grid::gradient(u);
    let hess = grid::hessian(u);
    let values: Vec<f64> = (0..g.len())
        .into_par_iter()
        .map(|idx| {
            let mut lap = 0.0;
            let mut quad = 0.0;
            let mut norm2 = eps * eps;
            for a in 0..d {
                let ga = grad.component(a)[idx];
                norm2 += ga * ga;
                lap += hess.get(a, a, idx);
                quad += ga * ga * hess.get(a, a, idx);
                for b in (a + 1)..d {
                    quad += 2.0 * ga * grad.component(b)[idx] * hess.get(a, b, idx);
                }
            }
            lap - quad / norm2
        })
        .collect();
    ScalarField::new(g, values).expect("length preserved")
}

/// Right-hand side in divergence form, -H_eps sqrt(|grad u|^2 + eps^2);
/// the canonical source of H_eps for diagnostics and a cross-check on the
/// Hessian form.
pub fn rhs_divergence_form(u: &ScalarField, eps: f64) -> ScalarField {
    assert!(eps > 0.0, "regularization must be positive");
    let curv = mean_curvature_eps(u, eps);
    let metric = metric_eps(u, eps);
    let g = *u.grid();
    let values: Vec<f64> = (0..g.len())
        .into_par_iter()
        .map(|idx| -curv.values()[idx] * metric.values()[idx])
        .collect();
    ScalarField::new(g, values).expect("length preserved")
}

/// Time-stepping parameters. The step is derived: dt divides the snapshot
/// interval exactly and respects dt <= dt_safety * h^2 / (2 d).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SolverParams {
    pub epsilon: f64,
    pub dt_safety: f64,
    pub t_end: f64,
    pub snapshot_interval: f64,
    /// Record E_eps and the viscous dissipation integral every step.
    #[serde(default = "default_true")]
    pub track_energy: bool,
}

fn default_true() -> bool {
    true
}

impl SolverParams {
    pub fn validate(&self, grid: &GridSpec) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(Error::Spec(format!("epsilon must be in (0, 1], got {}", self.epsilon)));
        }
        if !(self.dt_safety > 0.0 && self.dt_safety <= 1.0) {
            return Err(Error::Spec(format!(
                "dt_safety must be in (0, 1], got {}",
                self.dt_safety
            )));
        }
        if self.t_end < 0.0 {
            return Err(Error::Spec("t_end must be non-negative".into()));
        }
        if !(self.snapshot_interval > 0.0) {
            return Err(Error::Spec("snapshot_interval must be positive".into()));
        }
        let _ = grid;
        Ok(())
    }

    /// Largest stable step, dt_safety * h^2 / (2 d).
    pub fn dt_max(&self, grid: &GridSpec) -> f64 {
        self.dt_safety * grid.spacing() * grid.spacing() / (2.0 * grid.dimension as f64)
    }

    /// Steps per snapshot so that snapshot times are exact multiples of dt.
    pub fn steps_per_snapshot(&self, grid: &GridSpec) -> usize {
        (self.snapshot_interval / self.dt_max(grid)).ceil().max(1.0) as usize
    }

    pub fn dt(&self, grid: &GridSpec) -> f64 {
        self.snapshot_interval / self.steps_per_snapshot(grid) as f64
    }
}

/// A recorded state: the solution and the derived fields at one time.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub time: f64,
    pub u: ScalarField,
    /// H_eps = div nu_eps, from the divergence form.
    pub h_eps: ScalarField,
    /// Discrete du/dt, the divergence-form right-hand side at this state.
    pub u_t: ScalarField,
}

impl Snapshot {
    fn capture(time: f64, u: ScalarField, eps: f64) -> Self {
        let h_eps = mean_curvature_eps(&u, eps);
        let metric = metric_eps(&u, eps);
        let g = *u.grid();
        let values: Vec<f64> = (0..g.len())
            .into_par_iter()
            .map(|idx| -h_eps.values()[idx] * metric.values()[idx])
            .collect();
        let u_t = ScalarField::new(g, values).expect("length preserved");
        Self { time, u, h_eps, u_t }
    }

    pub fn nu_eps(&self, eps: f64) -> VectorField {
        nu_eps(&self.u, eps)
    }
}

/// Per-step energy record.
#[derive(Debug, Clone, Copy)]
pub struct StepDiagnostics {
    pub time: f64,
    /// E_eps = integral sqrt(|grad u|^2 + eps^2)
    pub e_eps: f64,
    /// integral H_eps^2 sqrt(|grad u|^2 + eps^2)
    pub dissipation: f64,
}

/// The full time history of one viscous run.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub grid: GridSpec,
    pub params: SolverParams,
    pub initial: ScalarField,
    pub snapshots: Vec<Snapshot>,
    pub step_series: Vec<StepDiagnostics>,
}

impl Trajectory {
    pub fn epsilon(&self) -> f64 {
        self.params.epsilon
    }

    pub fn dt(&self) -> f64 {
        self.params.dt(&self.grid)
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.time).collect()
    }

    pub fn final_snapshot(&self) -> &Snapshot {
        self.snapshots.last().expect("trajectory has at least the initial snapshot")
    }

    /// Snapshot closest in time to `t`.
    pub fn nearest(&self, t: f64) -> &Snapshot {
        self.snapshots
            .iter()
            .min_by(|a, b| (a.time - t).abs().total_cmp(&(b.time - t).abs()))
            .expect("non-empty")
    }

    /// Index of the snapshot at exactly time `t` (within dt/2).
    pub fn index_at(&self, t: f64) -> Option<usize> {
        let tol = 0.5 * self.dt();
        self.snapshots.iter().position(|s| (s.time - t).abs() <= tol)
    }
}

struct Stepper {
    eps: f64,
    dt: f64,
    far_value: f64,
    sup_bound: f64,
    regime: BoundaryRegime,
}

impl Stepper {
    fn advance(&self, u: &ScalarField, time: f64) -> Result<ScalarField> {
        let rhs = rhs_hessian_form(u, self.eps);
        let g = *u.grid();
        let n = g.points_per_axis;
        let dt = self.dt;
        let far = self.far_value;
        let freeze = self.regime == BoundaryRegime::FarFieldConstant;
        let values: Vec<f64> = (0..g.len())
            .into_par_iter()
            .map(|idx| {
                if freeze && g.on_face(idx) {
                    far
                } else {
                    u.values()[idx] + dt * rhs.values()[idx]
                }
            })
            .collect();
        let next = ScalarField::new(g, values).expect("length preserved");
        let sup = next.sup_norm();
        if !sup.is_finite() || sup > self.sup_bound {
            return Err(Error::Blowup {
                time: time + dt,
                detail: format!("sup-norm {sup} exceeds bound {}", self.sup_bound),
            });
        }
        let _ = n;
        Ok(next)
    }
}

/// One explicit Euler step with boundary enforcement, using the field's own
/// far-field value and sup-norm for the blowup guard.
pub fn step(u: &ScalarField, params: &SolverParams) -> Result<ScalarField> {
    params.validate(u.grid())?;
    let stepper = Stepper {
        eps: params.epsilon,
        dt: params.dt(u.grid()),
        far_value: u.values()[0],
        sup_bound: 2.0 * u.sup_norm() + 1e-12,
        regime: u.grid().boundary_regime,
    };
    stepper.advance(u, 0.0)
}

fn energy_record(u: &ScalarField, eps: f64, time: f64) -> StepDiagnostics {
    let grad = grid::gradient(u);
    let metric = metric_from_grad(&grad, eps);
    let curv = grid::divergence(&{
        let g = *u.grid();
        let d = g.dimension;
        let components: Vec<Vec<f64>> = (0..d)
            .map(|a| {
                (0..g.len())
                    .into_par_iter()
                    .map(|idx| -grad.component(a)[idx] / metric.values()[idx])
                    .collect()
            })
            .collect();
        VectorField::new(g, components).expect("dimension preserved")
    });
    let e_eps = grid::integrate(&metric, None);
    let dissipation = grid::integrate_with(u.grid(), |idx| {
        curv.values()[idx] * curv.values()[idx] * metric.values()[idx]
    });
    StepDiagnostics { time, e_eps, dissipation }
}

/// Integrate from `g` to `t_end`, recording snapshots on the configured
/// cadence and per-step energies when requested.
pub fn run(g: &ScalarField, params: &SolverParams) -> Result<Trajectory> {
    params.validate(g.grid())?;
    if !g.all_finite() {
        return Err(Error::Spec("initial data contains non-finite samples".into()));
    }
    let grid = *g.grid();
    let eps = params.epsilon;
    let dt = params.dt(&grid);
    let steps_per_snap = params.steps_per_snapshot(&grid);
    let n_snaps = if params.t_end <= 0.0 {
        0
    } else {
        (params.t_end / params.snapshot_interval - 1e-9).ceil().max(1.0) as usize
    };

    let stepper = Stepper {
        eps,
        dt,
        far_value: g.values()[0],
        sup_bound: 2.0 * g.sup_norm() + 1e-12,
        regime: grid.boundary_regime,
    };

    let mut snapshots = Vec::with_capacity(n_snaps + 1);
    snapshots.push(Snapshot::capture(0.0, g.clone(), eps));
    let mut step_series = Vec::new();
    if params.track_energy {
        step_series.push(energy_record(g, eps, 0.0));
    }

    let mut u = g.clone();
    for snap in 1..=n_snaps {
        for sub in 0..steps_per_snap {
            let time = ((snap - 1) * steps_per_snap + sub) as f64 * dt;
            u = stepper.advance(&u, time)?;
            if params.track_energy {
                step_series.push(energy_record(&u, eps, time + dt));
            }
        }
        snapshots.push(Snapshot::capture(snap as f64 * params.snapshot_interval, u.clone(), eps));
    }

    Ok(Trajectory { grid, params: *params, initial: g.clone(), snapshots, step_series })
}
