//! Residuals and defects of the distributional (BV) solution identities,
//! evaluated on concrete trajectories with closed-form space-time test
//! functions: normal-velocity and curvature weak forms (bulk and per level),
//! energy-dissipation inequalities, curvature-mass monotonicity, L1
//! continuity, and relabeling invariance.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{self, Contour};
use crate::grid::{self, integrate_with, ScalarField};
use crate::initial_data::{smoothstep, smoothstep_deriv};
use crate::solver::{self, Snapshot, SolverParams, Trajectory};

/// Compactly supported C^1 space-time bump: radial quintic smoothstep in
/// space times a quintic window in time. All derivatives are closed-form;
/// nothing about a test function is ever finite-differenced.
#[derive(Debug, Clone)]
pub struct TestScalar {
    pub center: Vec<f64>,
    pub radius: f64,
    pub t_window: (f64, f64),
    /// When true the window includes the initial-time face: the profile is 1
    /// at t_a (used with t_a = 0 for the initial-term variant of the
    /// velocity identity).
    pub touches_initial: bool,
    pub amplitude: f64,
}

impl TestScalar {
    pub fn new(center: Vec<f64>, radius: f64, t_window: (f64, f64)) -> Self {
        Self { center, radius, t_window, touches_initial: false, amplitude: 1.0 }
    }

    pub fn touching_initial(center: Vec<f64>, radius: f64, t_end: f64) -> Self {
        Self {
            center,
            radius,
            t_window: (0.0, t_end),
            touches_initial: true,
            amplitude: 1.0,
        }
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        let mut out = self.clone();
        out.amplitude *= alpha;
        out
    }

    fn q(&self, x: &[f64]) -> f64 {
        let r2: f64 = x
            .iter()
            .zip(&self.center)
            .map(|(a, c)| (a - c) * (a - c))
            .sum();
        r2.sqrt() / self.radius
    }

    fn space(&self, x: &[f64]) -> f64 {
        1.0 - smoothstep(self.q(x))
    }

    fn space_grad(&self, x: &[f64]) -> Vec<f64> {
        let q = self.q(x);
        if q <= 0.0 || q >= 1.0 {
            return vec![0.0; x.len()];
        }
        let dq = -smoothstep_deriv(q) / (self.radius * self.radius * q);
        x.iter().zip(&self.center).map(|(a, c)| dq * (a - c)).collect()
    }

    fn ramp(&self) -> f64 {
        0.25 * (self.t_window.1 - self.t_window.0)
    }

    fn window(&self, t: f64) -> f64 {
        let (ta, tb) = self.t_window;
        if t < ta - 1e-15 || t > tb + 1e-15 {
            return 0.0;
        }
        let r = self.ramp();
        let rise = if self.touches_initial { 1.0 } else { smoothstep((t - ta) / r) };
        rise * smoothstep((tb - t) / r)
    }

    fn window_deriv(&self, t: f64) -> f64 {
        let (ta, tb) = self.t_window;
        if t < ta || t > tb {
            return 0.0;
        }
        let r = self.ramp();
        let rise = if self.touches_initial { 1.0 } else { smoothstep((t - ta) / r) };
        let fall = smoothstep((tb - t) / r);
        let d_rise =
            if self.touches_initial { 0.0 } else { smoothstep_deriv((t - ta) / r) / r };
        let d_fall = -smoothstep_deriv((tb - t) / r) / r;
        d_rise * fall + rise * d_fall
    }

    pub fn value(&self, x: &[f64], t: f64) -> f64 {
        self.amplitude * self.space(x) * self.window(t)
    }

    pub fn time_deriv(&self, x: &[f64], t: f64) -> f64 {
        self.amplitude * self.space(x) * self.window_deriv(t)
    }

    pub fn grad(&self, x: &[f64], t: f64) -> Vec<f64> {
        let w = self.amplitude * self.window(t);
        self.space_grad(x).into_iter().map(|g| g * w).collect()
    }

    pub fn id(&self) -> String {
        format!(
            "bump(c=({}),r={},t=[{},{}])",
            self.center.iter().map(|c| format!("{c:.3}")).collect::<Vec<_>>().join(","),
            self.radius,
            self.t_window.0,
            self.t_window.1
        )
    }
}

/// Axis-aligned test vector field xi = zeta * e_axis.
#[derive(Debug, Clone)]
pub struct TestVector {
    pub base: TestScalar,
    pub axis: usize,
}

impl TestVector {
    pub fn new(base: TestScalar, axis: usize) -> Self {
        Self { base, axis }
    }
}

/// Outcome of one residual evaluation.
#[derive(Debug, Clone, Serialize)]
pub struct ResidualReport {
    pub identity: String,
    pub test_id: String,
    pub raw: f64,
    pub norm: f64,
    pub rel: f64,
    pub n: usize,
    pub epsilon: f64,
    pub level: Option<f64>,
    pub t_window: (f64, f64),
}

impl ResidualReport {
    fn build(
        identity: &str,
        test_id: String,
        terms: &[f64],
        traj: &Trajectory,
        level: Option<f64>,
        t_window: (f64, f64),
    ) -> Result<Self> {
        let raw: f64 = terms.iter().sum();
        let norm: f64 = terms.iter().map(|t| t.abs()).sum();
        if norm < 1e-12 {
            return Err(Error::DegenerateTest { norm });
        }
        Ok(Self {
            identity: identity.to_string(),
            test_id,
            raw,
            norm,
            rel: raw.abs() / norm,
            n: traj.grid.points_per_axis,
            epsilon: traj.epsilon(),
            level,
            t_window,
        })
    }
}

fn require_cadence(traj: &Trajectory, zeta: &TestScalar) -> Result<()> {
    let inside = traj
        .snapshots
        .iter()
        .filter(|s| s.time >= zeta.t_window.0 && s.time <= zeta.t_window.1)
        .count();
    if inside < 8 {
        return Err(Error::Spec(format!(
            "test window [{}, {}] spans only {inside} snapshots (need >= 8)",
            zeta.t_window.0, zeta.t_window.1
        )));
    }
    Ok(())
}

/// Trapezoid quadrature over the snapshot times.
fn time_trapezoid(traj: &Trajectory, mut f: impl FnMut(&Snapshot) -> f64) -> f64 {
    let vals: Vec<(f64, f64)> = traj.snapshots.iter().map(|s| (s.time, f(s))).collect();
    trapezoid(&vals)
}

fn trapezoid(vals: &[(f64, f64)]) -> f64 {
    let mut acc = 0.0;
    for w in vals.windows(2) {
        acc += 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0);
    }
    acc
}

/// V |grad u| with the gradient cutoff: u_t where |grad u| >= eps/10, else 0.
fn weighted_velocity(s: &Snapshot, eps: f64) -> ScalarField {
    let grad = grid::gradient(&s.u);
    let norm = grad.norm();
    let cut = eps / 10.0;
    let g = *s.u.grid();
    let values: Vec<f64> = (0..g.len())
        .map(|idx| if norm.values()[idx] >= cut { s.u_t.values()[idx] } else { 0.0 })
        .collect();
    ScalarField::new(g, values).expect("length preserved")
}

/// Bulk distributional velocity identity:
/// int int dt_zeta u = -int int zeta V |grad u| - int g zeta(.,0).
pub fn residual_dist_v(traj: &Trajectory, zeta: &TestScalar) -> Result<ResidualReport> {
    require_cadence(traj, zeta)?;
    let eps = traj.epsilon();
    let lhs = time_trapezoid(traj, |s| {
        integrate_with(&traj.grid, |idx| {
            let p = traj.grid.position(idx);
            zeta.time_deriv(&p[..traj.grid.dimension], s.time) * s.u.values()[idx]
        })
    });
    let velocity_term = time_trapezoid(traj, |s| {
        let vw = weighted_velocity(s, eps);
        integrate_with(&traj.grid, |idx| {
            let p = traj.grid.position(idx);
            zeta.value(&p[..traj.grid.dimension], s.time) * vw.values()[idx]
        })
    });
    let initial_term = integrate_with(&traj.grid, |idx| {
        let p = traj.grid.position(idx);
        traj.initial.values()[idx] * zeta.value(&p[..traj.grid.dimension], 0.0)
    });
    ResidualReport::build(
        "dist_v",
        zeta.id(),
        &[lhs, velocity_term, initial_term],
        traj,
        None,
        zeta.t_window,
    )
}

/// Bulk distributional curvature identity:
/// int int (div xi - nu . grad xi nu) |grad u| = -int int xi . nu V |grad u|.
pub fn residual_dist_mc(traj: &Trajectory, xi: &TestVector) -> Result<ResidualReport> {
    require_cadence(traj, &xi.base)?;
    let eps = traj.epsilon();
    let d = traj.grid.dimension;
    let axis = xi.axis;
    let lhs = time_trapezoid(traj, |s| {
        let grad = grid::gradient(&s.u);
        let metric = solver::metric_from_grad(&grad, eps);
        integrate_with(&traj.grid, |idx| {
            let p = traj.grid.position(idx);
            let gz = xi.base.grad(&p[..d], s.time);
            let gn: f64 = (0..d).map(|a| grad.component(a)[idx]).map(|c| c * c).sum();
            let gnorm = gn.sqrt();
            // nu_eps = -grad u / metric
            let nu: Vec<f64> = (0..d)
                .map(|a| -grad.component(a)[idx] / metric.values()[idx])
                .collect();
            let nu_dot_gz: f64 = (0..d).map(|a| nu[a] * gz[a]).sum();
            (gz[axis] - nu_dot_gz * nu[axis]) * gnorm
        })
    });
    let rhs = time_trapezoid(traj, |s| {
        let grad = grid::gradient(&s.u);
        let metric = solver::metric_from_grad(&grad, eps);
        let vw = weighted_velocity(s, eps);
        integrate_with(&traj.grid, |idx| {
            let p = traj.grid.position(idx);
            let nu_axis = -grad.component(axis)[idx] / metric.values()[idx];
            xi.base.value(&p[..d], s.time) * nu_axis * vw.values()[idx]
        })
    });
    ResidualReport::build(
        "dist_mc",
        xi.base.id(),
        &[lhs, rhs],
        traj,
        None,
        xi.base.t_window,
    )
}

fn snapshot_contour(s: &Snapshot, level: f64) -> Option<Contour> {
    match geometry::extract_contour(&s.u, level, s.time) {
        Ok(c) => Some(c),
        Err(Error::EmptyLevelSet { .. }) => None,
        Err(_) => None,
    }
}

/// Velocity V sampled at contour midpoints.
fn contour_velocity(s: &Snapshot, c: &Contour, eps: f64) -> Vec<f64> {
    let grad = grid::gradient(&s.u);
    let v = geometry::velocity_field(&s.u_t, &grad, eps / 10.0);
    geometry::sample_at_midpoints(c, &v)
}

/// Unit outer normal at contour midpoints (interpolated nu_eps, renormalized).
fn contour_normal(s: &Snapshot, c: &Contour, eps: f64) -> Vec<[f64; 2]> {
    let nu = s.nu_eps(eps);
    geometry::sample_vector_at_midpoints(c, &nu)
        .into_iter()
        .map(|v| {
            let n = (v[0] * v[0] + v[1] * v[1]).sqrt();
            if n > 1e-12 {
                [v[0] / n, v[1] / n]
            } else {
                [1.0, 0.0]
            }
        })
        .collect()
}

/// Per-level velocity identity (2D): the volume side integrates dt_zeta over
/// the super level set, the surface side zeta V over the contour.
pub fn residual_level_v(
    traj: &Trajectory,
    level: f64,
    zeta: &TestScalar,
) -> Result<ResidualReport> {
    require_cadence(traj, zeta)?;
    assert_eq!(traj.grid.dimension, 2, "level residuals are 2D");
    let eps = traj.epsilon();
    let vol_term = time_trapezoid(traj, |s| {
        geometry::superlevel_weighted(&s.u, level, |p| zeta.time_deriv(&p, s.time))
    });
    let surf_term = time_trapezoid(traj, |s| match snapshot_contour(s, level) {
        Some(c) => {
            let v = contour_velocity(s, &c, eps);
            let integrand: Vec<f64> = c
                .segments
                .iter()
                .zip(&v)
                .map(|(seg, vv)| {
                    let m = seg.midpoint();
                    zeta.value(&m, s.time) * vv
                })
                .collect();
            geometry::contour_integral(&c, &integrand)
        }
        None => 0.0,
    });
    let initial_term =
        geometry::superlevel_weighted(&traj.initial, level, |p| zeta.value(&p, 0.0));
    ResidualReport::build(
        "level_v",
        zeta.id(),
        &[vol_term, surf_term, initial_term],
        traj,
        Some(level),
        zeta.t_window,
    )
}

/// Per-level curvature identity (2D): both sides are contour integrals with
/// the analytic gradient of the test field.
pub fn residual_level_mc(
    traj: &Trajectory,
    level: f64,
    xi: &TestVector,
) -> Result<ResidualReport> {
    require_cadence(traj, &xi.base)?;
    assert_eq!(traj.grid.dimension, 2, "level residuals are 2D");
    let eps = traj.epsilon();
    let axis = xi.axis;
    let lhs = time_trapezoid(traj, |s| match snapshot_contour(s, level) {
        Some(c) => {
            let normals = contour_normal(s, &c, eps);
            let integrand: Vec<f64> = c
                .segments
                .iter()
                .zip(&normals)
                .map(|(seg, nu)| {
                    let m = seg.midpoint();
                    let gz = xi.base.grad(&m, s.time);
                    let nu_dot_gz = nu[0] * gz[0] + nu[1] * gz[1];
                    gz[axis] - nu_dot_gz * nu[axis]
                })
                .collect();
            geometry::contour_integral(&c, &integrand)
        }
        None => 0.0,
    });
    let rhs = time_trapezoid(traj, |s| match snapshot_contour(s, level) {
        Some(c) => {
            let normals = contour_normal(s, &c, eps);
            let v = contour_velocity(s, &c, eps);
            let integrand: Vec<f64> = c
                .segments
                .iter()
                .zip(normals.iter().zip(&v))
                .map(|(seg, (nu, vv))| {
                    let m = seg.midpoint();
                    xi.base.value(&m, s.time) * nu[axis] * vv
                })
                .collect();
            geometry::contour_integral(&c, &integrand)
        }
        None => 0.0,
    });
    ResidualReport::build(
        "level_mc",
        xi.base.id(),
        &[lhs, rhs],
        traj,
        Some(level),
        xi.base.t_window,
    )
}

/// Sharp-interface energy dissipation between two snapshot times:
/// E(t2) + int int V^2 |grad u| <= E(t1), E = int |grad u|.
#[derive(Debug, Clone, Serialize)]
pub struct DissipationReport {
    pub e_t1: f64,
    pub e_t2: f64,
    pub e_eps_t1: f64,
    pub e_eps_t2: f64,
    pub dissipated: f64,
    pub defect: f64,
}

pub fn dissipation_defect(traj: &Trajectory, t1: f64, t2: f64) -> Result<DissipationReport> {
    let i1 = traj
        .index_at(t1)
        .ok_or_else(|| Error::Spec(format!("t1 = {t1} is not a snapshot time")))?;
    let i2 = traj
        .index_at(t2)
        .ok_or_else(|| Error::Spec(format!("t2 = {t2} is not a snapshot time")))?;
    if i2 <= i1 {
        return Err(Error::Spec("need t1 < t2".into()));
    }
    let eps = traj.epsilon();
    let tv_energy = |s: &Snapshot| {
        let grad = grid::gradient(&s.u);
        let norm = grad.norm();
        grid::integrate(&norm, None)
    };
    let eps_energy = |s: &Snapshot| grid::integrate(&solver::metric_eps(&s.u, eps), None);
    let window = &traj.snapshots[i1..=i2];
    let vals: Vec<(f64, f64)> = window
        .iter()
        .map(|s| {
            let grad = grid::gradient(&s.u);
            let norm = grad.norm();
            let cut = eps / 10.0;
            let d = integrate_with(&traj.grid, |idx| {
                let n = norm.values()[idx];
                if n >= cut {
                    let ut = s.u_t.values()[idx];
                    ut * ut / n
                } else {
                    0.0
                }
            });
            (s.time, d)
        })
        .collect();
    let dissipated = trapezoid(&vals);
    let e_t1 = tv_energy(&traj.snapshots[i1]);
    let e_t2 = tv_energy(&traj.snapshots[i2]);
    Ok(DissipationReport {
        e_t1,
        e_t2,
        e_eps_t1: eps_energy(&traj.snapshots[i1]),
        e_eps_t2: eps_energy(&traj.snapshots[i2]),
        dissipated,
        defect: e_t2 + dissipated - e_t1,
    })
}

/// Per-step viscous energy balance from the recorded step series.
#[derive(Debug, Clone, Serialize)]
pub struct ViscousEnergyReport {
    pub e_initial: f64,
    pub e_final: f64,
    /// Largest forward increase of E_eps over one step (should be <= slack).
    pub max_step_increase: f64,
    /// |sum over steps (dE + dt * dissipation)| / (E(0) - E(T)).
    pub cumulative_defect_rel: f64,
}

pub fn viscous_energy_defect(traj: &Trajectory) -> Result<ViscousEnergyReport> {
    let series = &traj.step_series;
    if series.len() < 2 {
        return Err(Error::Spec("trajectory has no per-step energy record".into()));
    }
    let e0 = series[0].e_eps;
    let e_end = series.last().unwrap().e_eps;
    let mut max_inc = 0.0_f64;
    let mut defect = 0.0;
    for w in series.windows(2) {
        let dt = w[1].time - w[0].time;
        let de = w[1].e_eps - w[0].e_eps;
        max_inc = max_inc.max(de);
        defect += de + dt * w[0].dissipation;
    }
    let drop = e0 - e_end;
    Ok(ViscousEnergyReport {
        e_initial: e0,
        e_final: e_end,
        max_step_increase: max_inc,
        cumulative_defect_rel: if drop > 0.0 { defect.abs() / drop } else { defect.abs() },
    })
}

/// Per-level sharp dissipation defect (2D):
/// len(t2) + int int_contour V^2 - len(t1), expected <= 0 up to tolerance.
#[derive(Debug, Clone, Serialize)]
pub struct LevelDissipationReport {
    pub level: f64,
    pub len_t1: f64,
    pub len_t2: f64,
    pub dissipated: f64,
    pub defect: f64,
}

pub fn level_dissipation_defect(
    traj: &Trajectory,
    level: f64,
    t1: f64,
    t2: f64,
) -> Result<LevelDissipationReport> {
    let i1 = traj
        .index_at(t1)
        .ok_or_else(|| Error::Spec(format!("t1 = {t1} is not a snapshot time")))?;
    let i2 = traj
        .index_at(t2)
        .ok_or_else(|| Error::Spec(format!("t2 = {t2} is not a snapshot time")))?;
    let eps = traj.epsilon();
    let len_at = |s: &Snapshot| snapshot_contour(s, level).map_or(0.0, |c| c.total_length());
    let vals: Vec<(f64, f64)> = traj.snapshots[i1..=i2]
        .iter()
        .map(|s| {
            let d = match snapshot_contour(s, level) {
                Some(c) => {
                    let v = contour_velocity(s, &c, eps);
                    let v2: Vec<f64> = v.iter().map(|x| x * x).collect();
                    geometry::contour_integral(&c, &v2)
                }
                None => 0.0,
            };
            (s.time, d)
        })
        .collect();
    let dissipated = trapezoid(&vals);
    let len_t1 = len_at(&traj.snapshots[i1]);
    let len_t2 = len_at(&traj.snapshots[i2]);
    Ok(LevelDissipationReport {
        level,
        len_t1,
        len_t2,
        dissipated,
        defect: len_t2 + dissipated - len_t1,
    })
}

/// Time series of the curvature mass int |H_eps| dx, with the worst forward
/// increase between consecutive snapshots (relative to the earlier value).
#[derive(Debug, Clone, Serialize)]
pub struct CurvatureMassReport {
    pub series: Vec<(f64, f64)>,
    pub max_relative_increase: f64,
}

pub fn curvature_mass_series(traj: &Trajectory) -> CurvatureMassReport {
    let series: Vec<(f64, f64)> = traj
        .snapshots
        .iter()
        .map(|s| {
            let mass = integrate_with(&traj.grid, |idx| s.h_eps.values()[idx].abs());
            (s.time, mass)
        })
        .collect();
    let mut worst = 0.0_f64;
    for w in series.windows(2) {
        if w[0].1 > 1e-12 {
            worst = worst.max((w[1].1 - w[0].1) / w[0].1);
        }
    }
    CurvatureMassReport { series, max_relative_increase: worst }
}

/// Space-time mass int int H_eps^2 sqrt(|grad u|^2 + eps^2) dx dt.
pub fn hsq_weighted_mass(traj: &Trajectory) -> f64 {
    let eps = traj.epsilon();
    let vals: Vec<(f64, f64)> = traj
        .snapshots
        .iter()
        .map(|s| {
            let metric = solver::metric_eps(&s.u, eps);
            let m = integrate_with(&traj.grid, |idx| {
                let h = s.h_eps.values()[idx];
                h * h * metric.values()[idx]
            });
            (s.time, m)
        })
        .collect();
    trapezoid(&vals)
}

/// L1-continuity bound between two snapshot times for one level:
/// |symmetric difference| <= sqrt(t1-t0) sqrt(int int V^2) sqrt(max perimeter)
/// (the Cauchy-Schwarz constant includes the perimeter factor), with 10%
/// slack plus h * perimeter of quadrature allowance.
#[derive(Debug, Clone, Serialize)]
pub struct L1ContinuityReport {
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

pub fn l1_continuity_check(
    traj: &Trajectory,
    level: f64,
    t0: f64,
    t1: f64,
) -> Result<L1ContinuityReport> {
    let i0 = traj
        .index_at(t0)
        .ok_or_else(|| Error::Spec(format!("t0 = {t0} is not a snapshot time")))?;
    let i1 = traj
        .index_at(t1)
        .ok_or_else(|| Error::Spec(format!("t1 = {t1} is not a snapshot time")))?;
    let eps = traj.epsilon();
    let lhs = geometry::symmetric_difference_volume(
        &traj.snapshots[i0].u,
        &traj.snapshots[i1].u,
        level,
    );
    if i1 == i0 {
        return Ok(L1ContinuityReport { lhs, rhs: 0.0, pass: lhs <= 1e-12 });
    }
    let (lo, hi) = (i0.min(i1), i0.max(i1));
    let vals: Vec<(f64, f64)> = traj.snapshots[lo..=hi]
        .iter()
        .map(|s| {
            let d = match snapshot_contour(s, level) {
                Some(c) => {
                    let v = contour_velocity(s, &c, eps);
                    let v2: Vec<f64> = v.iter().map(|x| x * x).collect();
                    geometry::contour_integral(&c, &v2)
                }
                None => 0.0,
            };
            (s.time, d)
        })
        .collect();
    let dissipated = trapezoid(&vals);
    let max_perimeter = traj.snapshots[lo..=hi]
        .iter()
        .map(|s| snapshot_contour(s, level).map_or(0.0, |c| c.total_length()))
        .fold(0.0, f64::max);
    let rhs = ((t1 - t0).abs() * dissipated * max_perimeter).sqrt();
    let slack = 0.10 * rhs + traj.grid.spacing() * max_perimeter;
    Ok(L1ContinuityReport { lhs, rhs, pass: lhs <= rhs + slack })
}

/// Smooth increasing relabeling Phi(s) = s + a tanh(b s); a b < 1 keeps
/// Phi' > 0.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TanhRelabel {
    pub a: f64,
    pub b: f64,
}

impl TanhRelabel {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if a * b >= 1.0 {
            return Err(Error::Spec(format!("a*b = {} >= 1 would break monotonicity", a * b)));
        }
        Ok(Self { a, b })
    }

    pub fn apply(&self, s: f64) -> f64 {
        s + self.a * (self.b * s).tanh()
    }
}

/// Run the solver from g and from Phi(g) with identical parameters (per
/// ladder epsilon) and report the sup deviation |u_{Phi g} - Phi(u_g)|.
pub fn relabel_compare(
    g: &ScalarField,
    phi: &TanhRelabel,
    params: &SolverParams,
    epsilons: &[f64],
) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::with_capacity(epsilons.len());
    let relabeled = ScalarField::new(
        *g.grid(),
        g.values().iter().map(|&v| phi.apply(v)).collect(),
    )?;
    for &eps in epsilons {
        let p = SolverParams { epsilon: eps, track_energy: false, ..*params };
        let base = solver::run(g, &p)?;
        let mapped = solver::run(&relabeled, &p)?;
        let mut dev = 0.0_f64;
        for (a, b) in base.snapshots.iter().zip(&mapped.snapshots) {
            for (x, y) in a.u.values().iter().zip(b.u.values()) {
                dev = dev.max((y - phi.apply(*x)).abs());
            }
        }
        out.push((eps, dev));
    }
    Ok(out)
}

/// Affine relabeling symmetry: v = 2u + 1 solves the regularized equation
/// with epsilon doubled, exactly, even at the discrete level. Returns the
/// sup deviation |run(2g+1, 2 eps) - (2 run(g, eps) + 1)|.
pub fn affine_symmetry_dev(g: &ScalarField, params: &SolverParams) -> Result<f64> {
    let scaled = ScalarField::new(
        *g.grid(),
        g.values().iter().map(|v| 2.0 * v + 1.0).collect(),
    )?;
    let base = solver::run(g, &SolverParams { track_energy: false, ..*params })?;
    let mapped = solver::run(
        &scaled,
        &SolverParams { epsilon: 2.0 * params.epsilon, track_energy: false, ..*params },
    )?;
    let mut dev = 0.0_f64;
    for (a, b) in base.snapshots.iter().zip(&mapped.snapshots) {
        for (x, y) in a.u.values().iter().zip(b.u.values()) {
            dev = dev.max((y - (2.0 * x + 1.0)).abs());
        }
    }
    Ok(dev)
}

/// The fixed deterministic test family: `count` scalar bumps with centers on
/// the circle of radius r0 at angles 2 pi k / count, radius 0.15, windows
/// covering [0.01, 0.05].
pub fn fixed_scalar_family(r0: f64, count: usize) -> Vec<TestScalar> {
    (0..count)
        .map(|k| {
            let th = 2.0 * std::f64::consts::PI * k as f64 / count as f64;
            TestScalar::new(vec![r0 * th.cos(), r0 * th.sin()], 0.15, (0.01, 0.05))
        })
        .collect()
}

pub fn fixed_vector_family(r0: f64, count: usize) -> Vec<TestVector> {
    fixed_scalar_family(r0, count)
        .into_iter()
        .enumerate()
        .map(|(k, base)| TestVector::new(base, k % 2))
        .collect()
}

/// Seeded random placement (for property tests): centers uniform in the
/// disc of radius `r_max`, windows inside (0, t_end).
pub fn random_scalar_family(
    seed: u64,
    count: usize,
    r_max: f64,
    t_end: f64,
) -> Vec<TestScalar> {
    let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15).max(1);
    let mut next = move || {
        // xorshift64*
        state ^= state >> 12;
        state ^= state << 25;
        state ^= state >> 27;
        (state.wrapping_mul(0x2545f4914f6cdd1d) >> 11) as f64 / (1u64 << 53) as f64
    };
    (0..count)
        .map(|_| {
            let r = r_max * next().sqrt();
            let th = 2.0 * std::f64::consts::PI * next();
            let ta = 0.1 * t_end + 0.4 * t_end * next();
            let tb = ta + 0.3 * t_end + 0.2 * t_end * next();
            TestScalar::new(vec![r * th.cos(), r * th.sin()], 0.1 + 0.1 * next(), (ta, tb.min(0.95 * t_end)))
        })
        .collect()
}
