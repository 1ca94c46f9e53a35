//! Derived geometry: generalized normal velocity, marching-squares contour
//! extraction, contour quadrature, super-level volumes, and coarea perimeter
//! densities. Contour-based surface quantities are 2D; 3D callers use the
//! coarea densities and axis-ray crossings instead.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{self, ScalarField, VectorField};

/// Generalized normal velocity V = u_t / |grad u| where the gradient is at
/// least `delta_cut`, and 0 elsewhere.
pub fn velocity_field(u_t: &ScalarField, grad_u: &VectorField, delta_cut: f64) -> ScalarField {
    assert!(delta_cut > 0.0, "cutoff must be positive");
    let g = *u_t.grid();
    let norm = grad_u.norm();
    let values: Vec<f64> = (0..g.len())
        .into_par_iter()
        .map(|idx| {
            let n = norm.values()[idx];
            if n >= delta_cut {
                u_t.values()[idx] / n
            } else {
                0.0
            }
        })
        .collect();
    ScalarField::new(g, values).expect("length preserved")
}

/// One straight piece of an isocontour, confined to a single grid cell.
#[derive(Debug, Clone, Copy)]
pub struct Segment {
    pub a: [f64; 2],
    pub b: [f64; 2],
}

impl Segment {
    pub fn length(&self) -> f64 {
        let dx = self.b[0] - self.a[0];
        let dy = self.b[1] - self.a[1];
        (dx * dx + dy * dy).sqrt()
    }

    pub fn midpoint(&self) -> [f64; 2] {
        [0.5 * (self.a[0] + self.b[0]), 0.5 * (self.a[1] + self.b[1])]
    }
}

/// Polyline approximation of a level set {u = s} at a fixed time.
#[derive(Debug, Clone)]
pub struct Contour {
    pub level: f64,
    pub time: f64,
    pub segments: Vec<Segment>,
}

impl Contour {
    pub fn total_length(&self) -> f64 {
        self.segments.iter().map(Segment::length).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// Mean distance of segment midpoints to `center` (radius of a circular
    /// contour).
    pub fn mean_radius(&self, center: [f64; 2]) -> f64 {
        if self.segments.is_empty() {
            return 0.0;
        }
        // length-weighted so short and long segments count fairly
        let mut num = 0.0;
        let mut den = 0.0;
        for s in &self.segments {
            let m = s.midpoint();
            let r = ((m[0] - center[0]).powi(2) + (m[1] - center[1]).powi(2)).sqrt();
            let w = s.length();
            num += r * w;
            den += w;
        }
        num / den
    }
}

fn edge_point(pa: [f64; 2], va: f64, pb: [f64; 2], vb: f64) -> [f64; 2] {
    let t = va / (va - vb);
    [pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])]
}

/// Marching squares with linear edge interpolation; saddle cells resolved by
/// comparing the cell-average of u against the level.
pub fn extract_contour(u: &ScalarField, s: f64, time: f64) -> Result<Contour> {
    let g = u.grid();
    assert_eq!(g.dimension, 2, "contour extraction is 2D only");
    if !(s > u.min() && s < u.max()) {
        return Err(Error::EmptyLevelSet { level: s });
    }
    let n = g.points_per_axis;
    let segments: Vec<Segment> = (0..(n - 1) * (n - 1))
        .into_par_iter()
        .flat_map_iter(|cell| {
            let i = cell / (n - 1);
            let j = cell % (n - 1);
            cell_segments(u, s, i, j)
        })
        .collect();
    Ok(Contour { level: s, time, segments })
}

fn cell_segments(u: &ScalarField, s: f64, i: usize, j: usize) -> Vec<Segment> {
    let g = u.grid();
    let (x0, x1) = (g.axis_coord(i), g.axis_coord(i + 1));
    let (y0, y1) = (g.axis_coord(j), g.axis_coord(j + 1));
    // corners: 00 = (x0,y0), 10 = (x1,y0), 11 = (x1,y1), 01 = (x0,y1)
    let v00 = u.values()[g.flat(&[i, j])] - s;
    let v10 = u.values()[g.flat(&[i + 1, j])] - s;
    let v11 = u.values()[g.flat(&[i + 1, j + 1])] - s;
    let v01 = u.values()[g.flat(&[i, j + 1])] - s;
    let p00 = [x0, y0];
    let p10 = [x1, y0];
    let p11 = [x1, y1];
    let p01 = [x0, y1];
    let mask = (v00 > 0.0) as usize
        | (((v10 > 0.0) as usize) << 1)
        | (((v11 > 0.0) as usize) << 2)
        | (((v01 > 0.0) as usize) << 3);
    let bottom = || edge_point(p00, v00, p10, v10);
    let right = || edge_point(p10, v10, p11, v11);
    let top = || edge_point(p01, v01, p11, v11);
    let left = || edge_point(p00, v00, p01, v01);
    let seg = |a: [f64; 2], b: [f64; 2]| Segment { a, b };
    match mask {
        0 | 15 => vec![],
        1 | 14 => vec![seg(left(), bottom())],
        2 | 13 => vec![seg(bottom(), right())],
        3 | 12 => vec![seg(left(), right())],
        4 | 11 => vec![seg(right(), top())],
        6 | 9 => vec![seg(bottom(), top())],
        7 | 8 => vec![seg(left(), top())],
        5 => {
            // inside corners 00 and 11
            if (v00 + v10 + v11 + v01) * 0.25 > 0.0 {
                vec![seg(left(), top()), seg(bottom(), right())]
            } else {
                vec![seg(left(), bottom()), seg(top(), right())]
            }
        }
        10 => {
            // inside corners 10 and 01
            if (v00 + v10 + v11 + v01) * 0.25 > 0.0 {
                vec![seg(bottom(), left()), seg(right(), top())]
            } else {
                vec![seg(bottom(), right()), seg(left(), top())]
            }
        }
        _ => unreachable!(),
    }
}

/// Bilinear interpolation of a 2D field at a physical point.
pub fn bilinear(u: &ScalarField, p: [f64; 2]) -> f64 {
    let g = u.grid();
    let h = g.spacing();
    let n = g.points_per_axis;
    let fx = ((p[0] + g.half_width) / h).clamp(0.0, (n - 1) as f64 - 1e-12);
    let fy = ((p[1] + g.half_width) / h).clamp(0.0, (n - 1) as f64 - 1e-12);
    let i = fx.floor() as usize;
    let j = fy.floor() as usize;
    let tx = fx - i as f64;
    let ty = fy - j as f64;
    let f = |a: usize, b: usize| u.values()[g.flat(&[a, b])];
    f(i, j) * (1.0 - tx) * (1.0 - ty)
        + f(i + 1, j) * tx * (1.0 - ty)
        + f(i, j + 1) * (1.0 - tx) * ty
        + f(i + 1, j + 1) * tx * ty
}

/// Sample a scalar field at every segment midpoint.
pub fn sample_at_midpoints(c: &Contour, field: &ScalarField) -> Vec<f64> {
    c.segments.iter().map(|s| bilinear(field, s.midpoint())).collect()
}

/// Sample a vector field at every segment midpoint.
pub fn sample_vector_at_midpoints(c: &Contour, field: &VectorField) -> Vec<[f64; 2]> {
    let g = field.grid();
    let comp: Vec<ScalarField> = (0..2)
        .map(|a| ScalarField::new(*g, field.component(a).to_vec()).expect("same grid"))
        .collect();
    c.segments
        .iter()
        .map(|s| {
            let m = s.midpoint();
            [bilinear(&comp[0], m), bilinear(&comp[1], m)]
        })
        .collect()
}

/// Midpoint-rule line integral: sum of per-segment value times length.
pub fn contour_integral(c: &Contour, integrand: &[f64]) -> f64 {
    assert_eq!(integrand.len(), c.segments.len(), "integrand/segment mismatch");
    c.segments
        .iter()
        .zip(integrand)
        .map(|(s, v)| v * s.length())
        .sum()
}

fn shoelace(poly: &[[f64; 2]]) -> f64 {
    let mut a = 0.0;
    for k in 0..poly.len() {
        let p = poly[k];
        let q = poly[(k + 1) % poly.len()];
        a += p[0] * q[1] - q[0] * p[1];
    }
    0.5 * a.abs()
}

/// Volume (area in 2D) of the super level set {u > s}. In 2D each cell is
/// clipped exactly against the linear interpolant; in 3D the corner fraction
/// is used, a documented first-order approximation.
pub fn superlevel_volume(u: &ScalarField, s: f64) -> f64 {
    let g = u.grid();
    if s <= u.min() {
        return (2.0 * g.half_width).powi(g.dimension as i32);
    }
    if s >= u.max() {
        return 0.0;
    }
    match g.dimension {
        2 => superlevel_area_2d(u, s),
        3 => {
            let n = g.points_per_axis;
            let cell = g.spacing().powi(3);
            let vol: f64 = (0..(n - 1) * (n - 1) * (n - 1))
                .into_par_iter()
                .map(|c| {
                    let i = c / ((n - 1) * (n - 1));
                    let j = (c / (n - 1)) % (n - 1);
                    let k = c % (n - 1);
                    let mut inside = 0;
                    for (di, dj, dk) in [
                        (0, 0, 0),
                        (0, 0, 1),
                        (0, 1, 0),
                        (0, 1, 1),
                        (1, 0, 0),
                        (1, 0, 1),
                        (1, 1, 0),
                        (1, 1, 1),
                    ] {
                        if u.values()[g.flat(&[i + di, j + dj, k + dk])] > s {
                            inside += 1;
                        }
                    }
                    inside as f64 / 8.0 * cell
                })
                .sum();
            vol
        }
        _ => unreachable!(),
    }
}

fn superlevel_area_2d(u: &ScalarField, s: f64) -> f64 {
    let g = u.grid();
    let n = g.points_per_axis;
    (0..(n - 1) * (n - 1))
        .into_par_iter()
        .map(|cell| {
            let i = cell / (n - 1);
            let j = cell % (n - 1);
            cell_superlevel_area(u, s, i, j)
        })
        .sum()
}

fn cell_superlevel_area(u: &ScalarField, s: f64, i: usize, j: usize) -> f64 {
    let g = u.grid();
    let (x0, x1) = (g.axis_coord(i), g.axis_coord(i + 1));
    let (y0, y1) = (g.axis_coord(j), g.axis_coord(j + 1));
    let corners = [[x0, y0], [x1, y0], [x1, y1], [x0, y1]];
    let vals = [
        u.values()[g.flat(&[i, j])] - s,
        u.values()[g.flat(&[i + 1, j])] - s,
        u.values()[g.flat(&[i + 1, j + 1])] - s,
        u.values()[g.flat(&[i, j + 1])] - s,
    ];
    let inside: Vec<bool> = vals.iter().map(|&v| v > 0.0).collect();
    let count = inside.iter().filter(|&&b| b).count();
    if count == 0 {
        return 0.0;
    }
    let cell_area = (x1 - x0) * (y1 - y0);
    if count == 4 {
        return cell_area;
    }
    // saddle with the two inside corners diagonal and the center outside:
    // two disjoint corner triangles, which the single boundary walk below
    // would merge
    let diagonal = count == 2 && inside[0] == inside[2];
    if diagonal && (vals[0] + vals[1] + vals[2] + vals[3]) * 0.25 <= 0.0 {
        let mut area = 0.0;
        for k in [0usize, 1, 2, 3] {
            if inside[k] {
                let prev = (k + 3) % 4;
                let next = (k + 1) % 4;
                let a = edge_point(corners[k], vals[k], corners[prev], vals[prev]);
                let b = edge_point(corners[k], vals[k], corners[next], vals[next]);
                area += shoelace(&[corners[k], a, b]);
            }
        }
        return area;
    }
    // walk the cell boundary, keeping inside corners and all edge crossings
    let mut poly: Vec<[f64; 2]> = Vec::with_capacity(6);
    for k in 0..4 {
        if inside[k] {
            poly.push(corners[k]);
        }
        let next = (k + 1) % 4;
        if inside[k] != inside[next] {
            poly.push(edge_point(corners[k], vals[k], corners[next], vals[next]));
        }
    }
    shoelace(&poly)
}

/// Integral of f over the super level set {u > s} (2D): exact per-cell area
/// of the clipped linear interpolant times f at the cell center.
pub fn superlevel_weighted(
    u: &ScalarField,
    s: f64,
    f: impl Fn([f64; 2]) -> f64 + Sync,
) -> f64 {
    let g = u.grid();
    assert_eq!(g.dimension, 2, "weighted super level integral is 2D");
    let n = g.points_per_axis;
    (0..(n - 1) * (n - 1))
        .into_par_iter()
        .map(|cell| {
            let i = cell / (n - 1);
            let j = cell % (n - 1);
            let a = cell_superlevel_area(u, s, i, j);
            if a == 0.0 {
                return 0.0;
            }
            let cx = 0.5 * (g.axis_coord(i) + g.axis_coord(i + 1));
            let cy = 0.5 * (g.axis_coord(j) + g.axis_coord(j + 1));
            a * f([cx, cy])
        })
        .sum()
}

/// Volume of the symmetric difference of the super level sets {u0 > s} and
/// {u1 > s}, accumulated cellwise so that locally cancelling changes do not
/// hide each other.
pub fn symmetric_difference_volume(u0: &ScalarField, u1: &ScalarField, s: f64) -> f64 {
    let g = u0.grid();
    assert_eq!(g, u1.grid(), "fields must share a grid");
    let n = g.points_per_axis;
    match g.dimension {
        2 => (0..(n - 1) * (n - 1))
            .into_par_iter()
            .map(|cell| {
                let i = cell / (n - 1);
                let j = cell % (n - 1);
                (cell_superlevel_area(u0, s, i, j) - cell_superlevel_area(u1, s, i, j))
                    .abs()
            })
            .sum(),
        3 => {
            let cell = g.spacing().powi(3);
            (0..(n - 1) * (n - 1) * (n - 1))
                .into_par_iter()
                .map(|c| {
                    let i = c / ((n - 1) * (n - 1));
                    let j = (c / (n - 1)) % (n - 1);
                    let k = c % (n - 1);
                    let frac = |u: &ScalarField| {
                        let mut inside = 0;
                        for di in 0..2 {
                            for dj in 0..2 {
                                for dk in 0..2 {
                                    if u.values()[g.flat(&[i + di, j + dj, k + dk])] > s {
                                        inside += 1;
                                    }
                                }
                            }
                        }
                        inside as f64 / 8.0
                    };
                    (frac(u0) - frac(u1)).abs() * cell
                })
                .sum()
        }
        _ => unreachable!(),
    }
}

/// Band-averaged perimeter densities: for each level s,
/// (1/ds) * integral |grad u| over {s - ds/2 < u < s + ds/2}.
/// The sharp indicator is mollified over one grid cell in value space
/// (width h |grad u|), which removes the staircase quantization error of
/// point sampling. Independent of contour extraction; works in 2D and 3D.
pub fn coarea_density(u: &ScalarField, levels: &[f64], ds: f64) -> Vec<f64> {
    assert!(ds > 0.0, "band width must be positive");
    let norm = grid::gradient(u).norm();
    let h = u.grid().spacing();
    levels
        .iter()
        .map(|&s| {
            grid::integrate_with(u.grid(), |idx| {
                let gn = norm.values()[idx];
                let w = h * gn;
                let excess = (u.values()[idx] - s).abs() - 0.5 * ds;
                let weight = if w > 1e-14 {
                    (0.5 - excess / w).clamp(0.0, 1.0)
                } else if excess < 0.0 {
                    1.0
                } else {
                    0.0
                };
                gn * weight
            }) / ds
        })
        .collect()
}

/// Level radius along an axis ray from `center`: first linear-interpolated
/// crossing of u through `s`, averaged over the 2d axis directions. Used for
/// radially symmetric data (including 3D, where no contours are extracted).
pub fn ray_crossing_radius(u: &ScalarField, center: &[f64], s: f64) -> Option<f64> {
    let g = u.grid();
    let d = g.dimension;
    let n = g.points_per_axis;
    let h = g.spacing();
    let mut ci = vec![0usize; d];
    for a in 0..d {
        ci[a] = ((center[a] + g.half_width) / h).round() as usize;
    }
    let mut radii = Vec::new();
    for axis in 0..d {
        for dir in [-1i64, 1] {
            let mut prev_idx = g.flat(&ci);
            let mut prev = u.values()[prev_idx];
            let mut k = 1i64;
            loop {
                let pos = ci[axis] as i64 + dir * k;
                if pos < 0 || pos >= n as i64 {
                    break;
                }
                let mut ij = ci.clone();
                ij[axis] = pos as usize;
                let idx = g.flat(&ij);
                let cur = u.values()[idx];
                if (prev - s) * (cur - s) <= 0.0 && prev != cur {
                    let t = (prev - s) / (prev - cur);
                    radii.push(((k - 1) as f64 + t) * h);
                    break;
                }
                prev = cur;
                prev_idx = idx;
                k += 1;
            }
            let _ = prev_idx;
        }
    }
    if radii.is_empty() {
        None
    } else {
        Some(radii.iter().sum::<f64>() / radii.len() as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use crate::grid::{BoundaryRegime, GridSpec};
    use std::f64::consts::PI;

    fn grid2(n: usize) -> GridSpec {
        GridSpec::new(2, 1.0, n, BoundaryRegime::FarFieldConstant).unwrap()
    }

    fn cone(n: usize) -> ScalarField {
        ScalarField::from_fn(grid2(n), |p| -(p[0] * p[0] + p[1] * p[1]).sqrt())
    }

    #[test]
    fn planar_level_set_is_a_straight_line() {
        let g = grid2(129);
        let u = ScalarField::from_fn(g, |p| p[0]);
        let c = extract_contour(&u, 0.0, 0.0).unwrap();
        assert!((c.total_length() - 2.0).abs() <= g.spacing());
        for s in &c.segments {
            assert_abs_diff_eq!(s.a[0], 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(s.b[0], 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn cone_contour_is_a_circle() {
        let u = cone(257);
        let c = extract_contour(&u, -0.25, 0.0).unwrap();
        let want = 2.0 * PI * 0.25;
        assert!((c.total_length() - want).abs() / want < 0.01);
        assert!((c.mean_radius([0.0, 0.0]) - 0.25).abs() < 0.01 * 0.25);
    }

    #[test]
    fn out_of_range_level_is_empty() {
        let u = cone(65);
        match extract_contour(&u, 0.5, 0.0) {
            Err(Error::EmptyLevelSet { .. }) => {}
            other => panic!("expected EmptyLevelSet, got {other:?}"),
        }
    }

    #[test]
    fn contour_closure_every_endpoint_shared_twice() {
        let u = cone(129);
        let c = extract_contour(&u, -0.3, 0.0).unwrap();
        let mut endpoints: Vec<[f64; 2]> = Vec::new();
        for s in &c.segments {
            endpoints.push(s.a);
            endpoints.push(s.b);
        }
        for (k, p) in endpoints.iter().enumerate() {
            let matches = endpoints
                .iter()
                .enumerate()
                .filter(|(m, q)| {
                    *m != k && (q[0] - p[0]).abs() < 1e-9 && (q[1] - p[1]).abs() < 1e-9
                })
                .count();
            assert_eq!(matches, 1, "endpoint {p:?} shared {matches} times");
        }
    }

    #[test]
    fn contour_integral_basics() {
        let u = cone(257);
        let c = extract_contour(&u, -0.25, 0.0).unwrap();
        let ones = vec![1.0; c.segments.len()];
        let want = 2.0 * PI * 0.25;
        assert!((contour_integral(&c, &ones) - want).abs() / want < 0.01);
        let zeros = vec![0.0; c.segments.len()];
        assert_eq!(contour_integral(&c, &zeros), 0.0);
    }

    #[test]
    fn superlevel_volume_2d() {
        let u = cone(257);
        assert_abs_diff_eq!(superlevel_volume(&u, -3.0), 4.0, epsilon = 1e-12);
        assert_eq!(superlevel_volume(&u, 1.0), 0.0);
        let disc = superlevel_volume(&u, -0.25);
        let want = PI * 0.25 * 0.25;
        assert!((disc - want).abs() / want < 0.01, "disc area {disc} vs {want}");
    }

    #[test]
    fn coarea_density_matches_circumference() {
        let u = cone(257);
        let ds = 2.0 * u.grid().spacing();
        let dens = coarea_density(&u, &[-0.25], ds);
        let want = 2.0 * PI * 0.25;
        assert!((dens[0] - want).abs() / want < 0.03, "density {} vs {want}", dens[0]);
        let flat = ScalarField::constant(*u.grid(), 1.0);
        assert_eq!(coarea_density(&flat, &[-0.25, 0.9], ds), vec![0.0, 0.0]);
    }

    #[test]
    fn coarea_and_contour_lengths_agree_across_levels() {
        let u = cone(257);
        let ds = 2.0 * u.grid().spacing();
        let levels = [-0.5, -0.4, -0.3, -0.2, -0.15];
        let dens = coarea_density(&u, &levels, ds);
        for (&s, &d) in levels.iter().zip(&dens) {
            let len = extract_contour(&u, s, 0.0).unwrap().total_length();
            assert!((d - len).abs() / len < 0.03, "level {s}: {d} vs {len}");
        }
    }

    #[test]
    fn velocity_field_cutoff_and_shrinking_circle() {
        let g = grid2(257);
        // u(x) = -(|x| - R(t)) near the interface: u_t = Rdot = -1/R at R = 0.2
        let u = cone(257);
        let grad = grid::gradient(&u);
        let u_t = ScalarField::constant(g, -5.0); // u_t for R = 0.2 shrinking circle
        let v = velocity_field(&u_t, &grad, 0.01);
        // on the contour band the gradient has norm 1, so V = u_t
        let c = extract_contour(&u, -0.2, 0.0).unwrap();
        let vals = sample_at_midpoints(&c, &v);
        for val in vals {
            assert!((val + 5.0).abs() < 0.25, "V = {val}, want -5");
        }
        // stationary field
        let zero = ScalarField::constant(g, 0.0);
        let v0 = velocity_field(&zero, &grad, 0.01);
        assert_eq!(v0.sup_norm(), 0.0);
        // plateau points are exactly zero by the cutoff
        let flat_grad = grid::gradient(&ScalarField::constant(g, 1.0));
        let vcut = velocity_field(&u_t, &flat_grad, 0.01);
        assert_eq!(vcut.sup_norm(), 0.0);
    }

    #[test]
    fn ray_crossing_radius_on_cone() {
        let u = cone(257);
        let r = ray_crossing_radius(&u, &[0.0, 0.0], -0.25).unwrap();
        assert!((r - 0.25).abs() < 2.0 * u.grid().spacing());
    }

    #[test]
    fn superlevel_volume_3d_sphere() {
        let g = GridSpec::new(3, 1.0, 65, BoundaryRegime::FarFieldConstant).unwrap();
        let u = ScalarField::from_fn(g, |p| {
            -(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt()
        });
        let vol = superlevel_volume(&u, -0.4);
        let want = 4.0 / 3.0 * PI * 0.4_f64.powi(3);
        assert!((vol - want).abs() / want < 0.05, "ball volume {vol} vs {want}");
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(16))]

            #[test]
            fn superlevel_volume_monotone_in_level(s1 in -0.9f64..-0.1, ds in 0.01f64..0.3) {
                let u = cone(65);
                let v1 = superlevel_volume(&u, s1);
                let v2 = superlevel_volume(&u, s1 + ds);
                prop_assert!(v2 <= v1 + 1e-12);
            }

            #[test]
            fn contour_length_positive_in_range(s in -0.8f64..-0.1) {
                let u = cone(65);
                let c = extract_contour(&u, s, 0.0).unwrap();
                prop_assert!(c.total_length() > 0.0);
            }
        }
    }
}
