//! The experiment pipeline: build data, certify, run the solver, sweep the
//! geometry, evaluate the verifier suite, and emit diagnostics.csv,
//! residuals.csv, summary.json and SVG charts.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::config::{ExperimentConfig, Mode, TestFamily};
use crate::error::{Error, Result};
use crate::geometry;
use crate::grid::{self, BoundaryRegime, ScalarField};
use crate::initial_data::{self, DataPreset, InitialDataSpec};
use crate::snapshot;
use crate::solver::{self, SolverParams, Trajectory};
use crate::verifier::{self, ResidualReport, TanhRelabel, TestScalar, TestVector};

/// One acceptance-style check: a measured value against its threshold.
#[derive(Debug, Clone, Serialize)]
pub struct CheckRecord {
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

fn check(value: f64, threshold: f64) -> CheckRecord {
    CheckRecord { value, threshold, pass: value <= threshold }
}

/// Machine-readable run summary; every tolerance check is one key in
/// `checks`, auxiliary numbers live in `info`.
#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub name: String,
    pub dimension: usize,
    pub points_per_axis: usize,
    pub epsilon: f64,
    pub t_end: f64,
    pub checks: BTreeMap<String, CheckRecord>,
    pub info: BTreeMap<String, f64>,
    pub passed: bool,
}

/// Everything a run produced, for callers that keep going (ladders, tests).
pub struct RunOutcome {
    pub summary: Summary,
    pub residuals: Vec<ResidualReport>,
    pub trajectory: Trajectory,
}

fn law_radius(r0: f64, dimension: usize, t: f64) -> Option<f64> {
    let r2 = r0 * r0 - 2.0 * (dimension - 1) as f64 * t;
    (r2 > 0.0).then(|| r2.sqrt())
}

fn measured_radius(traj: &Trajectory, center: &[f64], level: f64, t: f64) -> Option<f64> {
    let s = traj.nearest(t);
    match traj.grid.dimension {
        2 => geometry::extract_contour(&s.u, level, s.time)
            .ok()
            .map(|c| c.mean_radius([center[0], center[1]])),
        _ => geometry::ray_crossing_radius(&s.u, center, level),
    }
}

fn median(values: &mut Vec<f64>) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if values.is_empty() {
        return f64::NAN;
    }
    let m = values.len() / 2;
    if values.len() % 2 == 1 {
        values[m]
    } else {
        0.5 * (values[m - 1] + values[m])
    }
}

/// The test families used for the weak-form residuals. Centers sit on the
/// initial interface; for data anchored to a box face, only angles whose
/// bumps stay inside the box are used and the vector fields are tangential
/// to that face.
fn residual_families(
    cfg: &ExperimentConfig,
    spec: &InitialDataSpec,
) -> (Vec<TestScalar>, Vec<TestVector>) {
    let count = cfg.verifier.family_size;
    // the canonical window for the standard horizon, shrunk for short runs
    let t_end = cfg.solver.t_end;
    let window =
        if t_end >= 0.06 { (0.01, 0.05) } else { (0.1 * t_end, 0.9 * t_end) };
    if let TestFamily::Seeded { seed } = cfg.verifier.test_family {
        let scalars =
            verifier::random_scalar_family(seed, count, 0.5, cfg.solver.t_end);
        let vectors = scalars
            .iter()
            .enumerate()
            .map(|(k, z)| TestVector::new(z.clone(), k % 2))
            .collect();
        return (scalars, vectors);
    }
    match &spec.preset {
        DataPreset::NeumannHalfBump(b) => {
            // fan of angles opening away from the anchoring face
            let r0 = b.inner_radius;
            let face_axis =
                b.center.iter().position(|c| c.abs() == cfg.grid.half_width).unwrap_or(0);
            let inward = -b.center[face_axis].signum();
            let tangent_axis = 1 - face_axis;
            let scalars: Vec<TestScalar> = (0..count)
                .map(|k| {
                    let th = -1.0 + 2.0 * (k as f64 + 0.5) / count as f64;
                    let th = th * std::f64::consts::FRAC_PI_3;
                    let mut c = b.center.clone();
                    c[face_axis] += inward * r0 * th.cos();
                    c[tangent_axis] += r0 * th.sin();
                    TestScalar::new(c, 0.15, window)
                })
                .collect();
            let vectors = scalars
                .iter()
                .map(|z| TestVector::new(z.clone(), tangent_axis))
                .collect();
            (scalars, vectors)
        }
        _ => {
            let r0 = spec.bumps().first().map_or(0.4, |b| b.inner_radius);
            let center = spec.bumps().first().map(|b| b.center.clone());
            let mut scalars = verifier::fixed_scalar_family(r0, count);
            for z in &mut scalars {
                z.t_window = window;
            }
            if let Some(c) = center {
                for z in &mut scalars {
                    for (zc, cc) in z.center.iter_mut().zip(&c) {
                        *zc += cc;
                    }
                }
            }
            let vectors = scalars
                .iter()
                .enumerate()
                .map(|(k, z)| TestVector::new(z.clone(), k % 2))
                .collect();
            (scalars, vectors)
        }
    }
}

/// Layer-cake identity for Phi(s) = s:
/// integral (u - min u) = integral over s of |{u > s}| ds.
fn layer_cake_rel_err(u: &ScalarField) -> f64 {
    let (lo, hi) = (u.min(), u.max());
    if hi - lo < 1e-12 {
        return 0.0;
    }
    let lhs = grid::integrate_with(u.grid(), |idx| u.values()[idx] - lo);
    // midpoint rule: |{u > s}| jumps at s = min u when u has a flat floor,
    // so endpoint quadrature nodes would overcount
    let m = 400usize;
    let ds = (hi - lo) / m as f64;
    let mut rhs = 0.0;
    for k in 0..m {
        let s = lo + (k as f64 + 0.5) * ds;
        rhs += geometry::superlevel_volume(u, s) * ds;
    }
    (lhs - rhs).abs() / lhs.abs().max(1e-12)
}

struct GeometrySweep {
    levels: Vec<f64>,
    /// contour length per snapshot per level (2D; empty in 3D)
    lengths: Vec<Vec<f64>>,
    /// coarea band densities at t = 0
    coarea_initial: Vec<f64>,
    radius_series: Vec<(f64, f64)>,
}

fn geometry_sweep(
    traj: &Trajectory,
    spec: &InitialDataSpec,
    levels: &[f64],
) -> GeometrySweep {
    let d = traj.grid.dimension;
    let lengths = if d == 2 {
        traj.snapshots
            .iter()
            .map(|s| {
                levels
                    .iter()
                    .map(|&lvl| {
                        geometry::extract_contour(&s.u, lvl, s.time)
                            .map_or(0.0, |c| c.total_length())
                    })
                    .collect()
            })
            .collect()
    } else {
        vec![]
    };
    let coarea_initial = if d == 2 && !levels.is_empty() {
        // wide enough to span several grid cells radially; the profile is
        // linear across the band so the band average is unbiased
        let ds = 0.1 * (spec.cap_value() - spec.floor_value()).max(1e-6);
        geometry::coarea_density(&traj.initial, levels, ds)
    } else {
        vec![]
    };
    let center = spec.bumps().first().map(|b| b.center.clone()).unwrap_or_default();
    let radius_series = if center.is_empty() {
        vec![]
    } else {
        traj.snapshots
            .iter()
            .filter_map(|s| {
                measured_radius(traj, &center, spec.far_field_value, s.time)
                    .map(|r| (s.time, r))
            })
            .collect()
    };
    GeometrySweep {
        levels: levels.to_vec(),
        lengths,
        coarea_initial,
        radius_series,
    }
}

/// Run one experiment end to end. Tolerance failures are recorded in the
/// summary (`passed = false`); hard errors (validation, blowup) return Err.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    let cfg = cfg.validate()?;
    let grid = cfg.grid.build()?;
    let params = cfg.solver.build(&grid)?;
    let spec = &cfg.initial_data;
    let g = initial_data::build(spec, &grid)?;

    let mut checks: BTreeMap<String, CheckRecord> = BTreeMap::new();
    let mut info: BTreeMap<String, f64> = BTreeMap::new();

    let cert = initial_data::certify_well_prepared(
        &g,
        &initial_data::certification_ladder(&grid),
        3.0,
    )?;
    info.insert("certification_mass_ratio".into(), cert.max_over_min);

    let traj = solver::run(&g, &params)?;

    // far-field shell: the regularized equation drifts the flat region at
    // order eps * t (pure heat equation there)
    if grid.boundary_regime == BoundaryRegime::FarFieldConstant && !spec.bumps().is_empty()
    {
        let floor = spec.floor_value();
        // shell bordering the frozen faces, where the box truncates R^d
        let shell = grid.half_width - 5.0 * grid.spacing();
        let last = traj.final_snapshot();
        let mut drift = 0.0_f64;
        for idx in 0..grid.len() {
            let p = grid.position(idx);
            let rmax = p.iter().map(|x| x.abs()).fold(0.0, f64::max);
            if rmax >= shell {
                drift = drift.max((last.u.values()[idx] - floor).abs());
            }
        }
        checks.insert(
            "far_field_drift".into(),
            check(drift, params.epsilon * params.t_end),
        );
    }

    // viscous energy balance, per step
    if params.track_energy {
        let ve = verifier::viscous_energy_defect(&traj)?;
        checks.insert(
            "energy_max_step_increase".into(),
            check(ve.max_step_increase, 1e-8 * ve.e_initial),
        );
        checks.insert(
            "energy_cumulative_defect_rel".into(),
            check(ve.cumulative_defect_rel, 0.05),
        );
        info.insert("energy_initial".into(), ve.e_initial);
        info.insert("energy_final".into(), ve.e_final);
    }

    // curvature mass monotonicity
    let cm = verifier::curvature_mass_series(&traj);
    checks.insert(
        "curvature_mass_max_rel_increase".into(),
        check(cm.max_relative_increase, 1e-3),
    );
    if let Some((_, m0)) = cm.series.first() {
        info.insert("curvature_mass_initial".into(), *m0);
        info.insert(
            "curvature_mass_max".into(),
            cm.series.iter().map(|s| s.1).fold(0.0, f64::max),
        );
    }
    info.insert("hsq_weighted_mass".into(), verifier::hsq_weighted_mass(&traj));

    // sharp dissipation over the whole run
    let diss = verifier::dissipation_defect(&traj, 0.0, params.t_end)?;
    info.insert("dissipation_defect".into(), diss.defect);
    info.insert("tv_energy_initial".into(), diss.e_t1);
    info.insert("tv_energy_final".into(), diss.e_t2);

    // level sweep (2D with non-degenerate band only)
    let has_band = spec.cap_value() - spec.floor_value() > 1e-12;
    let levels = if has_band {
        spec.levels(cfg.levels.count, cfg.levels.eta_fraction)
    } else {
        vec![]
    };
    let sweep = geometry_sweep(&traj, spec, &levels);

    if grid.dimension == 2 && has_band {
        // per-level sharp dissipation defect, relative to initial length;
        // each level is followed only while its contour stays grid-resolved
        // (the inner levels vanish before t_end, where V ~ 1/R blows up)
        let min_len = 50.0 * grid.spacing();
        let mut worst = 0.0_f64;
        for (k, &lvl) in levels.iter().enumerate() {
            let t2 = traj
                .snapshots
                .iter()
                .enumerate()
                .take_while(|(i, s)| {
                    *i == 0
                        || geometry::extract_contour(&s.u, lvl, s.time)
                            .map_or(false, |c| c.total_length() >= min_len)
                })
                .map(|(_, s)| s.time)
                .last()
                .unwrap_or(0.0);
            if t2 <= 0.0 {
                continue;
            }
            let ld = verifier::level_dissipation_defect(&traj, lvl, 0.0, t2)?;
            info.insert(format!("level_dissipation_defect_{k}"), ld.defect);
            if ld.len_t1 > 1e-12 {
                worst = worst.max(ld.defect.abs() / ld.len_t1);
            }
        }
        checks.insert("level_dissipation_max_defect_rel".into(), check(worst, 0.03));

        // coarea density vs marching squares length at t = 0
        if !sweep.coarea_initial.is_empty() {
            let mut worst = 0.0_f64;
            for (k, &lvl) in levels.iter().enumerate() {
                let c = geometry::extract_contour(&traj.initial, lvl, 0.0)?;
                let len = c.total_length();
                if len > 1e-12 {
                    worst = worst.max((sweep.coarea_initial[k] - len).abs() / len);
                }
            }
            checks.insert("coarea_vs_contour_max_rel".into(), check(worst, 0.03));
        }

        checks.insert(
            "layer_cake_rel_err".into(),
            check(layer_cake_rel_err(&traj.initial), 0.01),
        );

        // L1 continuity of the zero super level set over the full run
        let l1 = verifier::l1_continuity_check(
            &traj,
            spec.far_field_value,
            0.0,
            params.t_end,
        )?;
        info.insert("l1_lhs".into(), l1.lhs);
        info.insert("l1_rhs".into(), l1.rhs);
        checks.insert(
            "l1_continuity".into(),
            CheckRecord { value: l1.lhs, threshold: l1.rhs * 1.1, pass: l1.pass },
        );
    }

    // radius law against the exact circle/sphere solution
    if spec.bumps().len() == 1 {
        if let Ok(r0) = spec.level_radius(spec.far_field_value) {
            if let Some(exact) = law_radius(r0, grid.dimension, params.t_end) {
                let center: Vec<f64> = spec.bumps()[0].center.clone();
                if let Some(measured) =
                    measured_radius(&traj, &center, spec.far_field_value, params.t_end)
                {
                    let rel = (measured - exact).abs() / exact;
                    let tol = match (grid.dimension, grid.boundary_regime) {
                        (3, _) => 0.05,
                        (_, BoundaryRegime::NeumannBox) => 0.03,
                        _ => 0.02,
                    };
                    info.insert("radius_measured".into(), measured);
                    info.insert("radius_exact".into(), exact);
                    checks.insert("radius_rel_err".into(), check(rel, tol));
                }
            }
        }
    }

    // weak-form residual families (2D)
    let mut residuals: Vec<ResidualReport> = Vec::new();
    if cfg.verifier.run_residuals && grid.dimension == 2 && has_band {
        let (scalars, vectors) = residual_families(&cfg, spec);
        let mid_level = spec.far_field_value;
        // symmetric data can make individual test objects degenerate (every
        // term cancels exactly); those carry no information and are skipped
        let mut keep = |r: crate::error::Result<ResidualReport>| match r {
            Ok(rep) => {
                residuals.push(rep);
                Ok(())
            }
            Err(Error::DegenerateTest { .. }) => Ok(()),
            Err(e) => Err(e),
        };
        for z in &scalars {
            keep(verifier::residual_dist_v(&traj, z))?;
            keep(verifier::residual_level_v(&traj, mid_level, z))?;
        }
        for xi in &vectors {
            keep(verifier::residual_dist_mc(&traj, xi))?;
            keep(verifier::residual_level_mc(&traj, mid_level, xi))?;
        }
        let mut all_rels: Vec<f64> = residuals.iter().map(|r| r.rel).collect();
        if !all_rels.is_empty() {
            info.insert("residual_median_combined".into(), median(&mut all_rels));
        }
        for identity in ["dist_v", "dist_mc", "level_v", "level_mc"] {
            let mut rels: Vec<f64> = residuals
                .iter()
                .filter(|r| r.identity == identity)
                .map(|r| r.rel)
                .collect();
            if rels.is_empty() {
                continue;
            }
            let med = median(&mut rels);
            info.insert(format!("residual_median_{identity}"), med);
            checks.insert(
                format!("residual_{identity}"),
                check(med, cfg.verifier.residual_tolerance),
            );
        }
    }

    // mode extras
    match &cfg.mode {
        Mode::Single => {}
        Mode::Comparison { other_initial_data } => {
            let g2 = initial_data::build(other_initial_data, &grid)?;
            let mut below = 0.0_f64;
            for (a, b) in g.values().iter().zip(g2.values()) {
                below = below.max(a - b);
            }
            if below > 0.0 {
                return Err(Error::Validation(
                    "comparison mode requires ordered initial data (g <= other)".into(),
                ));
            }
            let traj2 = solver::run(&g2, &params)?;
            let mut violation = 0.0_f64;
            for (s1, s2) in traj.snapshots.iter().zip(&traj2.snapshots) {
                for (a, b) in s1.u.values().iter().zip(s2.u.values()) {
                    violation = violation.max(a - b);
                }
            }
            checks.insert("comparison_max_violation".into(), check(violation, 1e-6));
        }
        Mode::Relabel { a, b } => {
            let phi = TanhRelabel::new(*a, *b)?;
            let ladder: Vec<f64> = cfg
                .epsilon_ladder
                .clone()
                .unwrap_or_else(|| vec![4.0, 2.0, 1.0])
                .into_iter()
                .map(|f| f * grid.spacing())
                .collect();
            let devs = verifier::relabel_compare(&g, &phi, &params, &ladder)?;
            for (eps, dev) in &devs {
                info.insert(format!("relabel_dev_eps_{eps:.6}"), *dev);
            }
            if devs.len() >= 2 {
                let coarse = devs.first().unwrap().1;
                let fine = devs.last().unwrap().1;
                let ratio = if coarse > 0.0 { fine / coarse } else { 0.0 };
                checks.insert("relabel_decay_ratio".into(), check(ratio, 0.5));
            }
            let affine = verifier::affine_symmetry_dev(&g, &params)?;
            checks.insert("relabel_affine_dev".into(), check(affine, 1e-10));
        }
    }

    let passed = checks.values().all(|c| c.pass);
    let summary = Summary {
        name: cfg.name.clone(),
        dimension: grid.dimension,
        points_per_axis: grid.points_per_axis,
        epsilon: params.epsilon,
        t_end: params.t_end,
        checks,
        info,
        passed,
    };

    if let Some(dir) = &cfg.output.directory {
        write_artifacts(dir, &cfg, &traj, &sweep, &summary, &residuals)?;
    }

    Ok(RunOutcome { summary, residuals, trajectory: traj })
}

fn write_artifacts(
    dir: &Path,
    cfg: &ExperimentConfig,
    traj: &Trajectory,
    sweep: &GeometrySweep,
    summary: &Summary,
    residuals: &[ResidualReport],
) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_diagnostics_csv(&dir.join("diagnostics.csv"), traj, sweep)?;
    write_residuals_csv(&dir.join("residuals.csv"), residuals)?;
    fs::write(dir.join("summary.json"), serde_json::to_string_pretty(summary)?)?;
    if cfg.output.emit_svg {
        write_charts(dir, traj, sweep)?;
    }
    if cfg.output.persist_snapshots {
        let snap_dir = dir.join("snapshots");
        fs::create_dir_all(&snap_dir)?;
        for (k, s) in traj.snapshots.iter().enumerate() {
            snapshot::write_field(
                &snap_dir,
                &format!("{}_{k:04}", cfg.name),
                &s.u,
                s.time,
                traj.epsilon(),
            )?;
        }
    }
    Ok(())
}

fn write_diagnostics_csv(path: &Path, traj: &Trajectory, sweep: &GeometrySweep) -> Result<()> {
    let mut f = fs::File::create(path)?;
    let mut header =
        String::from("time,e_eps,e_tv,curvature_mass,hsq_mass");
    for (k, lvl) in sweep.levels.iter().enumerate() {
        header.push_str(&format!(",len_level_{k}_{lvl:.4}"));
    }
    writeln!(f, "{header}")?;
    let eps = traj.epsilon();
    for (i, s) in traj.snapshots.iter().enumerate() {
        let metric = solver::metric_eps(&s.u, eps);
        let e_eps = grid::integrate(&metric, None);
        let e_tv = grid::integrate(&grid::gradient(&s.u).norm(), None);
        let cmass = grid::integrate_with(&traj.grid, |idx| s.h_eps.values()[idx].abs());
        let hsq = grid::integrate_with(&traj.grid, |idx| {
            let h = s.h_eps.values()[idx];
            h * h * metric.values()[idx]
        });
        let mut row = format!("{:.9},{e_eps:.9},{e_tv:.9},{cmass:.9},{hsq:.9}", s.time);
        if !sweep.lengths.is_empty() {
            for len in &sweep.lengths[i] {
                row.push_str(&format!(",{len:.9}"));
            }
        } else {
            for _ in &sweep.levels {
                row.push_str(",nan");
            }
        }
        writeln!(f, "{row}")?;
    }
    Ok(())
}

fn write_residuals_csv(path: &Path, residuals: &[ResidualReport]) -> Result<()> {
    let mut f = fs::File::create(path)?;
    writeln!(f, "identity,test_id,raw,norm,rel,n,epsilon,level,t_lo,t_hi")?;
    for r in residuals {
        writeln!(
            f,
            "{},{},{:.9e},{:.9e},{:.9e},{},{:.9e},{},{},{}",
            r.identity,
            r.test_id.replace(',', ";"),
            r.raw,
            r.norm,
            r.rel,
            r.n,
            r.epsilon,
            r.level.map_or("".into(), |l| format!("{l:.6}")),
            r.t_window.0,
            r.t_window.1,
        )?;
    }
    Ok(())
}

/// Minimal self-contained SVG line chart.
fn svg_chart(path: &Path, title: &str, series: &[(&str, Vec<(f64, f64)>)]) -> Result<()> {
    const W: f64 = 800.0;
    const H: f64 = 500.0;
    const M: f64 = 60.0;
    let palette = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
    let all: Vec<(f64, f64)> = series.iter().flat_map(|(_, s)| s.iter().copied()).collect();
    if all.is_empty() {
        return Ok(());
    }
    let (x0, x1) = all.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| {
        (a.min(p.0), b.max(p.0))
    });
    let (y0, y1) = all.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| {
        (a.min(p.1), b.max(p.1))
    });
    let xr = (x1 - x0).max(1e-12);
    let yr = (y1 - y0).max(1e-12);
    let px = |x: f64| M + (x - x0) / xr * (W - 2.0 * M);
    let py = |y: f64| H - M - (y - y0) / yr * (H - 2.0 * M);
    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {W} {H}\" \
         font-family=\"sans-serif\" font-size=\"14\">\n"
    ));
    out.push_str(&format!(
        "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"18\">{title}</text>\n",
        W / 2.0
    ));
    out.push_str(&format!(
        "<line x1=\"{M}\" y1=\"{0}\" x2=\"{1}\" y2=\"{0}\" stroke=\"black\"/>\n\
         <line x1=\"{M}\" y1=\"{2}\" x2=\"{M}\" y2=\"{0}\" stroke=\"black\"/>\n",
        H - M,
        W - M,
        M
    ));
    out.push_str(&format!(
        "<text x=\"{M}\" y=\"{}\" font-size=\"12\">{x0:.4}</text>\n\
         <text x=\"{}\" y=\"{}\" text-anchor=\"end\" font-size=\"12\">{x1:.4}</text>\n\
         <text x=\"8\" y=\"{}\" font-size=\"12\">{y1:.4}</text>\n\
         <text x=\"8\" y=\"{}\" font-size=\"12\">{y0:.4}</text>\n",
        H - M + 20.0,
        W - M,
        H - M + 20.0,
        M + 4.0,
        H - M
    ));
    for (k, (label, pts)) in series.iter().enumerate() {
        let color = palette[k % palette.len()];
        let path_d: Vec<String> =
            pts.iter().map(|(x, y)| format!("{:.2},{:.2}", px(*x), py(*y))).collect();
        out.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" \
             points=\"{}\"/>\n",
            path_d.join(" ")
        ));
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" fill=\"{color}\" font-size=\"12\">{label}</text>\n",
            W - M + 4.0 - 110.0,
            M + 18.0 * (k as f64 + 1.0)
        ));
    }
    out.push_str("</svg>\n");
    fs::write(path, out)?;
    Ok(())
}

fn write_charts(dir: &Path, traj: &Trajectory, sweep: &GeometrySweep) -> Result<()> {
    let eps = traj.epsilon();
    let e_eps: Vec<(f64, f64)> = traj
        .snapshots
        .iter()
        .map(|s| (s.time, grid::integrate(&solver::metric_eps(&s.u, eps), None)))
        .collect();
    let e_tv: Vec<(f64, f64)> = traj
        .snapshots
        .iter()
        .map(|s| (s.time, grid::integrate(&grid::gradient(&s.u).norm(), None)))
        .collect();
    svg_chart(&dir.join("energy.svg"), "Energy", &[("E_eps", e_eps), ("E_tv", e_tv)])?;

    let cm = verifier::curvature_mass_series(traj);
    svg_chart(
        &dir.join("curvature_mass.svg"),
        "Curvature mass",
        &[("mass", cm.series)],
    )?;

    if !sweep.lengths.is_empty() {
        let times = traj.times();
        let series: Vec<(String, Vec<(f64, f64)>)> = sweep
            .levels
            .iter()
            .enumerate()
            .map(|(k, lvl)| {
                let pts: Vec<(f64, f64)> = times
                    .iter()
                    .zip(sweep.lengths.iter().map(|row| row[k]))
                    .map(|(&t, l)| (t, l))
                    .collect();
                (format!("s={lvl:.3}"), pts)
            })
            .collect();
        let borrowed: Vec<(&str, Vec<(f64, f64)>)> =
            series.iter().map(|(l, p)| (l.as_str(), p.clone())).collect();
        svg_chart(&dir.join("contour_lengths.svg"), "Contour length", &borrowed)?;
    }

    if !sweep.radius_series.is_empty() {
        let r0 = sweep.radius_series[0].1;
        let exact: Vec<(f64, f64)> = sweep
            .radius_series
            .iter()
            .filter_map(|(t, _)| law_radius(r0, traj.grid.dimension, *t).map(|r| (*t, r)))
            .collect();
        svg_chart(
            &dir.join("radius.svg"),
            "Interface radius",
            &[("measured", sweep.radius_series.clone()), ("exact", exact)],
        )?;
    }
    Ok(())
}

/// Re-run the verifier checks that are recoverable from persisted snapshots
/// (the time derivative is reconstructed from the PDE right-hand side).
pub fn verify_snapshots(dir: &Path) -> Result<Summary> {
    let files = snapshot::list_snapshots(dir)?;
    if files.len() < 2 {
        return Err(Error::Validation(format!(
            "need at least 2 snapshots in {}, found {}",
            dir.display(),
            files.len()
        )));
    }
    let mut fields = Vec::new();
    let mut times = Vec::new();
    let mut epsilon = None;
    for (sidecar, bin_path) in &files {
        let field = snapshot::decode_field(sidecar, &fs::read(bin_path)?)?;
        match epsilon {
            None => epsilon = Some(sidecar.epsilon),
            Some(e) if (e - sidecar.epsilon).abs() > 1e-15 => {
                return Err(Error::Validation("snapshots mix epsilon values".into()))
            }
            _ => {}
        }
        times.push(sidecar.time);
        fields.push(field);
    }
    let eps = epsilon.unwrap();
    let grid = *fields[0].grid();
    let snapshots: Vec<solver::Snapshot> = fields
        .into_iter()
        .zip(&times)
        .map(|(u, &time)| {
            let h_eps = solver::mean_curvature_eps(&u, eps);
            let u_t = solver::rhs_divergence_form(&u, eps);
            solver::Snapshot { time, u, h_eps, u_t }
        })
        .collect();
    let t_end = *times.last().unwrap();
    let params = SolverParams {
        epsilon: eps,
        dt_safety: 0.8,
        t_end,
        snapshot_interval: (t_end - times[0]).max(1e-12) / (times.len() - 1) as f64,
        track_energy: false,
    };
    let initial = snapshots[0].u.clone();
    let traj = Trajectory { grid, params, initial, snapshots, step_series: vec![] };

    let mut checks = BTreeMap::new();
    let mut info = BTreeMap::new();
    let cm = verifier::curvature_mass_series(&traj);
    checks.insert(
        "curvature_mass_max_rel_increase".to_string(),
        check(cm.max_relative_increase, 1e-3),
    );
    let d0 = verifier::dissipation_defect(&traj, times[0], t_end)?;
    info.insert("dissipation_defect".to_string(), d0.defect);
    info.insert("tv_energy_initial".to_string(), d0.e_t1);
    info.insert("tv_energy_final".to_string(), d0.e_t2);
    // the sharp inequality: defect should be non-positive up to quadrature
    checks.insert(
        "dissipation_defect_nonpositive".to_string(),
        check(d0.defect, 0.03 * d0.e_t1.max(1e-12)),
    );
    info.insert("hsq_weighted_mass".to_string(), verifier::hsq_weighted_mass(&traj));
    let passed = checks.values().all(|c: &CheckRecord| c.pass);
    Ok(Summary {
        name: format!("verify:{}", dir.display()),
        dimension: grid.dimension,
        points_per_axis: grid.points_per_axis,
        epsilon: eps,
        t_end,
        checks,
        info,
        passed,
    })
}
