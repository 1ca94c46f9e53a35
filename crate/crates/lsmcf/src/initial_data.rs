//! Well-prepared initial data: capped radial profiles that are constant far
//! from the interface, plus the numerical certificate that their approximate
//! mean curvature mass stays bounded uniformly in the regularization.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{self, BoundaryRegime, GridSpec, ScalarField};
use crate::solver;

/// Quintic smoothstep on [0, 1].
pub fn smoothstep(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
    }
}

/// d/dt of the quintic smoothstep.
pub fn smoothstep_deriv(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        0.0
    } else {
        30.0 * t * t * (1.0 - t) * (1.0 - t)
    }
}

/// Antiderivative of the quintic smoothstep with I(0) = 0.
fn smoothstep_integral(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        0.5 + (t - 1.0)
    } else {
        t * t * t * t * (2.5 + t * (-3.0 + t))
    }
}

/// Monotone radial profile: value `delta` on an inner plateau, slope -1
/// through the zero crossing at `r_zero`, flattening to `-delta` at the
/// support radius. Piecewise quintic blends keep it C^2 with closed forms.
#[derive(Debug, Clone, Copy)]
pub struct RadialProfile {
    pub delta: f64,
    pub r_zero: f64,
    blend: f64,
}

impl RadialProfile {
    pub fn new(r_zero: f64, delta: f64) -> Result<Self> {
        if !(delta > 0.0) || !(r_zero > 0.0) {
            return Err(Error::Spec("profile needs positive radius and cap".into()));
        }
        let blend = 0.5 * delta;
        if r_zero <= delta + 0.5 * blend {
            return Err(Error::Spec(format!(
                "inner radius {r_zero} too small for cap {delta}: plateau would vanish"
            )));
        }
        Ok(Self { delta, r_zero, blend })
    }

    fn inner_plateau_end(&self) -> f64 {
        self.r_zero - self.delta - 0.5 * self.blend
    }

    fn linear_end(&self) -> f64 {
        self.r_zero + self.delta - 0.5 * self.blend
    }

    /// Radius beyond which the profile is exactly -delta.
    pub fn support_radius(&self) -> f64 {
        self.linear_end() + self.blend
    }

    pub fn value(&self, r: f64) -> f64 {
        let (d, w) = (self.delta, self.blend);
        let r0 = self.inner_plateau_end();
        let r1 = self.linear_end();
        if r <= r0 {
            d
        } else if r <= r0 + w {
            d - w * smoothstep_integral((r - r0) / w)
        } else if r <= r1 {
            d - 0.5 * w - (r - r0 - w)
        } else if r <= r1 + w {
            -d + w * smoothstep_integral((r1 + w - r) / w)
        } else {
            -d
        }
    }

    pub fn deriv(&self, r: f64) -> f64 {
        let w = self.blend;
        let r0 = self.inner_plateau_end();
        let r1 = self.linear_end();
        if r <= r0 || r >= r1 + w {
            0.0
        } else if r <= r0 + w {
            -smoothstep((r - r0) / w)
        } else if r <= r1 {
            -1.0
        } else {
            -smoothstep((r1 + w - r) / w)
        }
    }

    pub fn deriv2(&self, r: f64) -> f64 {
        let w = self.blend;
        let r0 = self.inner_plateau_end();
        let r1 = self.linear_end();
        if r > r0 && r < r0 + w {
            -smoothstep_deriv((r - r0) / w) / w
        } else if r > r1 && r < r1 + w {
            smoothstep_deriv((r1 + w - r) / w) / w
        } else {
            0.0
        }
    }

    /// Radius at which the profile takes the value `y`, for y in (-delta, delta).
    pub fn inverse(&self, y: f64) -> Result<f64> {
        if !(y > -self.delta && y < self.delta) {
            return Err(Error::Spec(format!("level {y} outside profile range")));
        }
        let (mut lo, mut hi) = (0.0, self.support_radius());
        // value is monotone non-increasing in r
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.value(mid) > y {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// Parameters of one radial bump.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BumpParams {
    pub center: Vec<f64>,
    pub inner_radius: f64,
    pub plateau_cap: f64,
}

/// The geometry presets for initial data.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DataPreset {
    RadialBump(BumpParams),
    TwoBumps { first: BumpParams, second: BumpParams },
    /// A radial bump whose center sits exactly on a box face; the restriction
    /// to the box is even across that face, so the Neumann condition holds
    /// there by symmetry.
    NeumannHalfBump(BumpParams),
    /// No bumps at all: g is identically the far-field constant.
    Constant,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct InitialDataSpec {
    pub preset: DataPreset,
    pub far_field_value: f64,
}

impl InitialDataSpec {
    pub fn bumps(&self) -> Vec<&BumpParams> {
        match &self.preset {
            DataPreset::RadialBump(b) | DataPreset::NeumannHalfBump(b) => vec![b],
            DataPreset::TwoBumps { first, second } => vec![first, second],
            DataPreset::Constant => vec![],
        }
    }

    fn delta_ref(&self) -> f64 {
        self.bumps().iter().map(|b| b.plateau_cap).fold(0.0, f64::max)
    }

    /// The constant the data takes outside every bump support.
    pub fn floor_value(&self) -> f64 {
        self.far_field_value - self.delta_ref()
    }

    /// The largest cap value.
    pub fn cap_value(&self) -> f64 {
        self.far_field_value + self.delta_ref()
    }

    /// The non-degenerate level band (floor + eta, cap - eta).
    pub fn level_band(&self, eta_fraction: f64) -> (f64, f64) {
        let eta = eta_fraction * self.delta_ref();
        (self.floor_value() + eta, self.cap_value() - eta)
    }

    /// `count` evenly spaced levels strictly inside the band. An odd count on
    /// a symmetric band includes the midpoint level.
    pub fn levels(&self, count: usize, eta_fraction: f64) -> Vec<f64> {
        let (lo, hi) = self.level_band(eta_fraction);
        (0..count)
            .map(|k| lo + (hi - lo) * (k as f64 + 0.5) / count as f64)
            .collect()
    }

    /// Initial radius of level `s` for a single-bump preset.
    pub fn level_radius(&self, s: f64) -> Result<f64> {
        let b = *self
            .bumps()
            .first()
            .ok_or_else(|| Error::Spec("constant data has no level radii".into()))?;
        let profile = RadialProfile::new(b.inner_radius, b.plateau_cap)?;
        profile.inverse(s - self.far_field_value)
    }
}

fn check_margin(spec: &InitialDataSpec, grid: &GridSpec) -> Result<()> {
    let l = grid.half_width;
    let on_face = matches!(spec.preset, DataPreset::NeumannHalfBump(_));
    for b in spec.bumps() {
        if b.center.len() != grid.dimension {
            return Err(Error::Spec("bump center dimension mismatch".into()));
        }
        let profile = RadialProfile::new(b.inner_radius, b.plateau_cap)?;
        let rs = profile.support_radius();
        for (axis, &c) in b.center.iter().enumerate() {
            let anchored = on_face && c.abs() == l;
            if anchored {
                continue; // support is cut by the anchoring face on purpose
            }
            if l - (c.abs() + rs) < l / 3.0 {
                return Err(Error::Spec(format!(
                    "bump support (radius {rs:.3}) leaves margin < L/3 along axis {axis}"
                )));
            }
        }
        if on_face && !b.center.iter().any(|c| c.abs() == l) {
            return Err(Error::Spec("neumann_half_bump center must lie on a box face".into()));
        }
    }
    if on_face && grid.boundary_regime != BoundaryRegime::NeumannBox {
        return Err(Error::Spec("neumann_half_bump requires the neumann_box regime".into()));
    }
    Ok(())
}

/// Sample the initial data on the grid.
pub fn build(spec: &InitialDataSpec, grid: &GridSpec) -> Result<ScalarField> {
    check_margin(spec, grid)?;
    let floor = spec.floor_value();
    let bumps: Vec<(Vec<f64>, RadialProfile)> = spec
        .bumps()
        .into_iter()
        .map(|b| {
            RadialProfile::new(b.inner_radius, b.plateau_cap).map(|p| (b.center.clone(), p))
        })
        .collect::<Result<_>>()?;
    Ok(ScalarField::from_fn(*grid, |p| {
        let mut v = floor;
        for (center, profile) in &bumps {
            let r = p
                .iter()
                .zip(center)
                .map(|(x, c)| (x - c) * (x - c))
                .sum::<f64>()
                .sqrt();
            // each bump contributes its full height above the floor
            v += profile.value(r) + profile.delta;
        }
        v
    }))
}

/// Per-epsilon approximate curvature mass of candidate initial data.
#[derive(Debug, Clone, Serialize)]
pub struct CertificationReport {
    pub masses: Vec<(f64, f64)>,
    pub max_over_min: f64,
}

/// The finite epsilon ladder standing in for the supremum over (0, 1]:
/// {1, 1/2, 1/4, ...} down to max(h, 1/64).
pub fn certification_ladder(grid: &GridSpec) -> Vec<f64> {
    let floor = grid.spacing().max(1.0 / 64.0);
    let mut eps = 1.0;
    let mut out = vec![];
    while eps >= floor {
        out.push(eps);
        eps *= 0.5;
    }
    if out.is_empty() {
        out.push(1.0);
    }
    out
}

/// Evaluate M(eps) = integral |div nu_eps(g)| over the ladder and fail if the
/// mass grows by more than `growth_factor` as eps decreases.
pub fn certify_well_prepared(
    g: &ScalarField,
    epsilons: &[f64],
    growth_factor: f64,
) -> Result<CertificationReport> {
    let h = g.grid().spacing();
    if epsilons.is_empty() {
        return Err(Error::Spec("empty epsilon ladder".into()));
    }
    for pair in epsilons.windows(2) {
        if pair[1] >= pair[0] {
            return Err(Error::Spec("epsilon ladder must be sorted descending".into()));
        }
    }
    let smallest = *epsilons.last().unwrap();
    if !(smallest > 0.0) || epsilons[0] > 1.0 || smallest < h / 4.0 {
        return Err(Error::Spec(format!(
            "epsilon ladder must lie in [h/4, 1], got [{smallest}, {}]",
            epsilons[0]
        )));
    }
    let masses: Vec<(f64, f64)> = epsilons
        .iter()
        .map(|&eps| {
            let curv = solver::mean_curvature_eps(g, eps);
            let mass = grid::integrate_with(g.grid(), |idx| curv.values()[idx].abs());
            (eps, mass)
        })
        .collect();
    let max = masses.iter().map(|m| m.1).fold(0.0, f64::max);
    let min = masses.iter().map(|m| m.1).fold(f64::INFINITY, f64::min);
    // rounding-level masses (flat data) carry no information about growth
    let max_over_min = if min > 1e-10 { max / min } else { 1.0 };
    let report = CertificationReport { masses, max_over_min };
    if max_over_min > growth_factor {
        return Err(Error::CertificationFailure(format!(
            "curvature mass ratio {max_over_min:.3} exceeds allowed factor {growth_factor}"
        )));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use crate::grid::BoundaryRegime;

    fn circle_spec() -> InitialDataSpec {
        InitialDataSpec {
            preset: DataPreset::RadialBump(BumpParams {
                center: vec![0.0, 0.0],
                inner_radius: 0.4,
                plateau_cap: 0.2,
            }),
            far_field_value: 0.0,
        }
    }

    fn grid257() -> GridSpec {
        GridSpec::new(2, 1.0, 257, BoundaryRegime::FarFieldConstant).unwrap()
    }

    #[test]
    fn profile_cap_and_zero_crossing() {
        let p = RadialProfile::new(0.4, 0.2).unwrap();
        assert_abs_diff_eq!(p.value(0.0), 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(p.value(0.4), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.deriv(0.4), -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.value(p.support_radius() + 0.01), -0.2, epsilon = 1e-15);
    }

    #[test]
    fn profile_is_monotone_and_c1() {
        let p = RadialProfile::new(0.4, 0.2).unwrap();
        let mut prev = p.value(0.0);
        for k in 1..2000 {
            let r = k as f64 * 0.0005;
            let v = p.value(r);
            assert!(v <= prev + 1e-14, "profile increases at r = {r}");
            // finite difference matches the closed-form derivative
            let fd = (p.value(r + 1e-6) - p.value(r - 1e-6)) / 2e-6;
            assert_abs_diff_eq!(fd, p.deriv(r), epsilon = 1e-5);
            prev = v;
        }
    }

    #[test]
    fn profile_inverse_is_a_root() {
        let p = RadialProfile::new(0.4, 0.2).unwrap();
        let r = p.inverse(-0.05).unwrap();
        assert_abs_diff_eq!(p.value(r), -0.05, epsilon = 1e-12);
        assert!(r > 0.4);
    }

    #[test]
    fn build_matches_profile_and_floor() {
        let spec = circle_spec();
        let g = build(&spec, &grid257()).unwrap();
        let grid = *g.grid();
        let center = grid.flat(&[128, 128]);
        assert_abs_diff_eq!(g.values()[center], 0.2, epsilon = 1e-12);
        // exactly constant outside the support radius
        let p = RadialProfile::new(0.4, 0.2).unwrap();
        let rs = p.support_radius();
        for idx in 0..grid.len() {
            let pos = grid.position(idx);
            let r = (pos[0] * pos[0] + pos[1] * pos[1]).sqrt();
            if r > rs + 1e-12 {
                assert_eq!(g.values()[idx], spec.floor_value());
            }
        }
    }

    #[test]
    fn build_is_radially_non_increasing() {
        let spec = circle_spec();
        let g = build(&spec, &grid257()).unwrap();
        let grid = *g.grid();
        // along the +x ray from the center
        let mut prev = f64::INFINITY;
        for i in 128..257 {
            let v = g.values()[grid.flat(&[i, 128])];
            assert!(v <= prev + 1e-14);
            prev = v;
        }
    }

    #[test]
    fn margin_violation_is_an_error() {
        let spec = InitialDataSpec {
            preset: DataPreset::RadialBump(BumpParams {
                center: vec![0.3, 0.0],
                inner_radius: 0.5,
                plateau_cap: 0.2,
            }),
            far_field_value: 0.0,
        };
        assert!(build(&spec, &grid257()).is_err());
    }

    #[test]
    fn neumann_half_bump_has_zero_normal_derivative() {
        let grid = GridSpec::new(2, 1.0, 129, BoundaryRegime::NeumannBox).unwrap();
        let spec = InitialDataSpec {
            preset: DataPreset::NeumannHalfBump(BumpParams {
                center: vec![-1.0, 0.0],
                inner_radius: 0.4,
                plateau_cap: 0.2,
            }),
            far_field_value: 0.0,
        };
        let g = build(&spec, &grid).unwrap();
        let n = grid.points_per_axis;
        let grad = crate::grid::gradient(&g);
        // discrete normal derivative vanishes identically under the Neumann
        // ghost policy, and the data is constant on the other faces
        for j in 0..n {
            assert_eq!(grad.component(0)[grid.flat(&[0, j])], 0.0);
            let a = g.values()[grid.flat(&[n - 1, j])];
            let b = g.values()[grid.flat(&[n - 2, j])];
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
            assert_abs_diff_eq!(
                g.values()[grid.flat(&[j, 0])],
                g.values()[grid.flat(&[j, 1])],
                epsilon = 1e-12
            );
        }
    }

    /// 1D radial quadrature of the approximate curvature mass, used as the
    /// independent oracle for the grid-based certification.
    fn radial_mass_oracle(profile: &RadialProfile, eps: f64) -> f64 {
        let rs = profile.support_radius();
        let m = 200_000;
        let dr = rs / m as f64;
        let mut total = 0.0;
        for k in 0..m {
            let r = (k as f64 + 0.5) * dr;
            let dpsi = profile.deriv(r);
            let d2psi = profile.deriv2(r);
            let root = (dpsi * dpsi + eps * eps).sqrt();
            let q = -dpsi / root; // radial component of nu_eps
            let qp = -d2psi * eps * eps / (root * root * root);
            let h = qp + q / r;
            total += h.abs() * 2.0 * std::f64::consts::PI * r * dr;
        }
        total
    }

    #[test]
    fn certification_masses_match_radial_oracle() {
        let spec = circle_spec();
        let grid = grid257();
        let g = build(&spec, &grid).unwrap();
        let profile = RadialProfile::new(0.4, 0.2).unwrap();
        let ladder = [1.0, 0.25, 0.0625];
        let report = certify_well_prepared(&g, &ladder, 3.0).unwrap();
        for (eps, mass) in &report.masses {
            let oracle = radial_mass_oracle(&profile, *eps);
            let rel = (mass - oracle).abs() / oracle;
            assert!(rel < 0.05, "eps {eps}: grid {mass} vs oracle {oracle}");
        }
    }

    #[test]
    fn certification_ratio_small_to_large_eps_bounded() {
        let grid = grid257();
        let g = build(&circle_spec(), &grid).unwrap();
        let h = grid.spacing();
        let report = certify_well_prepared(&g, &[1.0, h.max(1.0 / 64.0)], 3.0).unwrap();
        assert!(report.max_over_min <= 3.0);
    }

    #[test]
    fn constant_data_has_zero_mass() {
        let grid = grid257();
        let g = ScalarField::constant(grid, 1.0);
        let report = certify_well_prepared(&g, &[1.0, 0.5], 3.0).unwrap();
        for (_, mass) in report.masses {
            assert!(mass.abs() < 1e-12);
        }
    }

    #[test]
    fn bad_ladders_rejected() {
        let grid = grid257();
        let g = build(&circle_spec(), &grid).unwrap();
        assert!(certify_well_prepared(&g, &[0.5, 1.0], 3.0).is_err()); // ascending
        assert!(certify_well_prepared(&g, &[1.0, grid.spacing() / 8.0], 3.0).is_err()); // < h/4
        assert!(certify_well_prepared(&g, &[], 3.0).is_err());
    }
}
