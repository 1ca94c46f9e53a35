//! Uniform Cartesian grids on the box [-L, L]^d and the discrete calculus
//! (gradient, Hessian, divergence, box integrals) shared by every other module.
//!
//! Fields are flat row-major arrays: the first axis is the slowest, so in 2D
//! `idx = ix * n + iy` and in 3D `idx = (ix * n + iy) * n + iz`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How derivative stencils treat the box faces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryRegime {
    /// Emulates R^d: fields are constant near the faces, one-sided stencils
    /// at the faces, and the solver re-freezes face values each step.
    FarFieldConstant,
    /// Homogeneous Neumann box: even-reflection ghost values, so the normal
    /// derivative vanishes exactly on the faces.
    NeumannBox,
}

/// Description of the uniform grid on [-L, L]^d.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dimension: usize,
    pub half_width: f64,
    pub points_per_axis: usize,
    pub boundary_regime: BoundaryRegime,
}

impl GridSpec {
    pub fn new(
        dimension: usize,
        half_width: f64,
        points_per_axis: usize,
        boundary_regime: BoundaryRegime,
    ) -> Result<Self> {
        if dimension != 2 && dimension != 3 {
            return Err(Error::Spec(format!("dimension must be 2 or 3, got {dimension}")));
        }
        if !(half_width > 0.0) {
            return Err(Error::Spec(format!("half_width must be positive, got {half_width}")));
        }
        if points_per_axis < 16 {
            return Err(Error::Spec(format!(
                "points_per_axis must be >= 16, got {points_per_axis}"
            )));
        }
        Ok(Self { dimension, half_width, points_per_axis, boundary_regime })
    }

    /// Grid spacing h = 2L/(n-1), always derived.
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.points_per_axis - 1) as f64
    }

    /// Total number of samples n^d.
    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.dimension as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Stride of `axis` in the flat array.
    pub fn stride(&self, axis: usize) -> usize {
        self.points_per_axis.pow((self.dimension - 1 - axis) as u32)
    }

    /// Axis index of a flat index along `axis`.
    pub fn axis_index(&self, idx: usize, axis: usize) -> usize {
        (idx / self.stride(axis)) % self.points_per_axis
    }

    /// Physical coordinate of axis index `i`.
    pub fn axis_coord(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.spacing()
    }

    /// Physical position of a flat index (first `dimension` entries valid).
    pub fn position(&self, idx: usize) -> [f64; 3] {
        let mut p = [0.0; 3];
        for axis in 0..self.dimension {
            p[axis] = self.axis_coord(self.axis_index(idx, axis));
        }
        p
    }

    /// Flat index from per-axis indices.
    pub fn flat(&self, ij: &[usize]) -> usize {
        let mut idx = 0;
        for axis in 0..self.dimension {
            idx = idx * self.points_per_axis + ij[axis];
        }
        idx
    }

    /// True if the sample lies on any box face.
    pub fn on_face(&self, idx: usize) -> bool {
        (0..self.dimension).any(|a| {
            let i = self.axis_index(idx, a);
            i == 0 || i == self.points_per_axis - 1
        })
    }

    /// Trapezoid-consistent quadrature weight (product of per-axis 1/2 factors
    /// on faces), excluding the h^d volume factor.
    pub fn quad_weight(&self, idx: usize) -> f64 {
        let mut w = 1.0;
        for axis in 0..self.dimension {
            let i = self.axis_index(idx, axis);
            if i == 0 || i == self.points_per_axis - 1 {
                w *= 0.5;
            }
        }
        w
    }
}

/// A real-valued function sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Spec(format!(
                "value count {} does not match grid size {}",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: GridSpec, c: f64) -> Self {
        let len = grid.len();
        Self { grid, values: vec![c; len] }
    }

    /// Sample a closure at every grid position.
    pub fn from_fn(grid: GridSpec, f: impl Fn(&[f64]) -> f64 + Sync) -> Self {
        let values = (0..grid.len())
            .into_par_iter()
            .map(|idx| {
                let p = grid.position(idx);
                f(&p[..grid.dimension])
            })
            .collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// First derivative along `axis` (central second order; boundary per regime).
    pub fn derive_axis(&self, axis: usize) -> ScalarField {
        let g = self.grid;
        let n = g.points_per_axis;
        let s = g.stride(axis);
        let h = g.spacing();
        let f = &self.values;
        let values: Vec<f64> = (0..f.len())
            .into_par_iter()
            .map(|idx| {
                let i = g.axis_index(idx, axis);
                if i > 0 && i < n - 1 {
                    (f[idx + s] - f[idx - s]) / (2.0 * h)
                } else {
                    match g.boundary_regime {
                        // even reflection: ghost equals the interior mirror
                        BoundaryRegime::NeumannBox => 0.0,
                        BoundaryRegime::FarFieldConstant => {
                            if i == 0 {
                                (-3.0 * f[idx] + 4.0 * f[idx + s] - f[idx + 2 * s]) / (2.0 * h)
                            } else {
                                (3.0 * f[idx] - 4.0 * f[idx - s] + f[idx - 2 * s]) / (2.0 * h)
                            }
                        }
                    }
                }
            })
            .collect();
        ScalarField { grid: g, values }
    }

    /// Second derivative along `axis`.
    pub fn second_axis(&self, axis: usize) -> ScalarField {
        let g = self.grid;
        let n = g.points_per_axis;
        let s = g.stride(axis);
        let h2 = g.spacing() * g.spacing();
        let f = &self.values;
        let values: Vec<f64> = (0..f.len())
            .into_par_iter()
            .map(|idx| {
                let i = g.axis_index(idx, axis);
                if i > 0 && i < n - 1 {
                    (f[idx + s] - 2.0 * f[idx] + f[idx - s]) / h2
                } else {
                    match g.boundary_regime {
                        BoundaryRegime::NeumannBox => {
                            if i == 0 {
                                2.0 * (f[idx + s] - f[idx]) / h2
                            } else {
                                2.0 * (f[idx - s] - f[idx]) / h2
                            }
                        }
                        BoundaryRegime::FarFieldConstant => {
                            if i == 0 {
                                (2.0 * f[idx] - 5.0 * f[idx + s] + 4.0 * f[idx + 2 * s]
                                    - f[idx + 3 * s])
                                    / h2
                            } else {
                                (2.0 * f[idx] - 5.0 * f[idx - s] + 4.0 * f[idx - 2 * s]
                                    - f[idx - 3 * s])
                                    / h2
                            }
                        }
                    }
                }
            })
            .collect();
        ScalarField { grid: g, values }
    }
}

/// A grid-sampled vector quantity (d component arrays).
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    grid: GridSpec,
    components: Vec<Vec<f64>>,
}

impl VectorField {
    pub fn new(grid: GridSpec, components: Vec<Vec<f64>>) -> Result<Self> {
        if components.len() != grid.dimension {
            return Err(Error::Spec(format!(
                "component count {} does not match dimension {}",
                components.len(),
                grid.dimension
            )));
        }
        for c in &components {
            if c.len() != grid.len() {
                return Err(Error::Spec("component length mismatch".into()));
            }
        }
        Ok(Self { grid, components })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn component(&self, axis: usize) -> &[f64] {
        &self.components[axis]
    }

    pub fn into_components(self) -> Vec<Vec<f64>> {
        self.components
    }

    /// Pointwise Euclidean norm.
    pub fn norm(&self) -> ScalarField {
        let values: Vec<f64> = (0..self.grid.len())
            .into_par_iter()
            .map(|idx| {
                self.components
                    .iter()
                    .map(|c| c[idx] * c[idx])
                    .sum::<f64>()
                    .sqrt()
            })
            .collect();
        ScalarField { grid: self.grid, values }
    }

    pub fn max_norm(&self) -> f64 {
        self.norm().max()
    }
}

/// Symmetric-matrix field holding the d(d+1)/2 distinct Hessian entries.
#[derive(Debug, Clone)]
pub struct HessianField {
    grid: GridSpec,
    // order: (0,0),(0,1),(1,1) in 2D; (0,0),(0,1),(0,2),(1,1),(1,2),(2,2) in 3D
    entries: Vec<ScalarField>,
}

impl HessianField {
    fn slot(&self, a: usize, b: usize) -> usize {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        let d = self.grid.dimension;
        // entries before row a: sum_{r<a} (d - r)
        (0..a).map(|r| d - r).sum::<usize>() + (b - a)
    }

    pub fn get(&self, a: usize, b: usize, idx: usize) -> f64 {
        self.entries[self.slot(a, b)].values()[idx]
    }

    pub fn entry(&self, a: usize, b: usize) -> &ScalarField {
        &self.entries[self.slot(a, b)]
    }
}

/// Central second-order gradient with per-regime face handling.
pub fn gradient(f: &ScalarField) -> VectorField {
    let d = f.grid().dimension;
    let components = (0..d).map(|a| f.derive_axis(a).values).collect();
    VectorField { grid: *f.grid(), components }
}

/// Discrete Hessian: 3-point second differences on the diagonal, composed
/// first differences off the diagonal.
pub fn hessian(f: &ScalarField) -> HessianField {
    let g = *f.grid();
    let d = g.dimension;
    let mut entries = Vec::with_capacity(d * (d + 1) / 2);
    let firsts: Vec<ScalarField> = (0..d).map(|a| f.derive_axis(a)).collect();
    for a in 0..d {
        for b in a..d {
            if a == b {
                entries.push(f.second_axis(a));
            } else {
                entries.push(firsts[a].derive_axis(b));
            }
        }
    }
    HessianField { grid: g, entries }
}

/// Divergence: sum of each component's derivative along its own axis.
pub fn divergence(v: &VectorField) -> ScalarField {
    let g = *v.grid();
    let d = g.dimension;
    let parts: Vec<ScalarField> = (0..d)
        .map(|a| {
            ScalarField { grid: g, values: v.components[a].clone() }.derive_axis(a)
        })
        .collect();
    let values: Vec<f64> = (0..g.len())
        .into_par_iter()
        .map(|idx| parts.iter().map(|p| p.values[idx]).sum())
        .collect();
    ScalarField { grid: g, values }
}

/// Box integral by the trapezoid-consistent rectangle rule, optionally
/// against a weight field on the same grid.
pub fn integrate(f: &ScalarField, weight: Option<&ScalarField>) -> f64 {
    let g = f.grid();
    let hv = g.spacing().powi(g.dimension as i32);
    let sum: f64 = (0..g.len())
        .into_par_iter()
        .map(|idx| {
            let w = match weight {
                Some(wf) => wf.values()[idx],
                None => 1.0,
            };
            f.values()[idx] * w * g.quad_weight(idx)
        })
        .sum();
    sum * hv
}

/// Integrate a pointwise closure of the flat index (avoids materializing
/// intermediate fields).
pub fn integrate_with(g: &GridSpec, f: impl Fn(usize) -> f64 + Sync) -> f64 {
    let hv = g.spacing().powi(g.dimension as i32);
    let sum: f64 = (0..g.len())
        .into_par_iter()
        .map(|idx| f(idx) * g.quad_weight(idx))
        .sum();
    sum * hv
}
