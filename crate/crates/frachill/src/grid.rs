//! Collocation grids and scalar fields.
//!
//! The spatial domain is a rectangle `Ω = (0,L₀) × (0,L₁)` (or an interval in
//! one dimension) sampled at the midpoints of a uniform grid. The discrete
//! inner product
//!
//! ```text
//! (u, v)_h = w · Σᵢ uᵢ vᵢ,      w = |Ω| / N,
//! ```
//!
//! with one node per cell, is the quadrature rule against which all
//! eigenbases are orthonormalized, so Parseval-type identities hold exactly
//! at the discrete level.

use crate::error::{Error, Result};

/// Maximum supported spatial dimension.
pub const MAX_DIM: usize = 2;

/// A uniform midpoint collocation grid on a rectangle.
///
/// Nodes along axis `a` sit at `x_i = (i + 1/2)·L_a/n_a`. Fields are stored
/// row-major with axis 0 slowest: in two dimensions the flat index of node
/// `(i₀, i₁)` is `i₀·n₁ + i₁`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    dim: usize,
    extents: [f64; MAX_DIM],
    points: [usize; MAX_DIM],
}

impl GridSpec {
    /// One-dimensional grid on `(0, extent)` with `n` nodes.
    pub fn dim1(extent: f64, n: usize) -> Result<Self> {
        Self::new(1, [extent, 1.0], [n, 1])
    }

    /// Two-dimensional grid on `(0,L₀)×(0,L₁)` with `n₀×n₁` nodes.
    pub fn dim2(extents: [f64; 2], points: [usize; 2]) -> Result<Self> {
        Self::new(2, extents, points)
    }

    fn new(dim: usize, extents: [f64; MAX_DIM], points: [usize; MAX_DIM]) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(Error::config(format!("unsupported dimension {dim}")));
        }
        for a in 0..dim {
            if extents[a] <= 0.0 || !extents[a].is_finite() {
                return Err(Error::config(format!(
                    "extent along axis {a} must be positive and finite, got {}",
                    extents[a]
                )));
            }
            if points[a] < 2 {
                return Err(Error::config(format!(
                    "need at least 2 points along axis {a}, got {}",
                    points[a]
                )));
            }
        }
        Ok(GridSpec {
            dim,
            extents,
            points,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    /// Side length along `axis` (axes ≥ `dimension()` report 1).
    pub fn extent(&self, axis: usize) -> f64 {
        self.extents[axis]
    }

    /// Node count along `axis` (axes ≥ `dimension()` report 1).
    pub fn points(&self, axis: usize) -> usize {
        self.points[axis]
    }

    /// Total number of collocation nodes.
    pub fn len(&self) -> usize {
        self.points[0] * self.points[1]
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Measure of the domain, `|Ω|`.
    pub fn volume(&self) -> f64 {
        self.extents[0] * self.extents[1]
    }

    /// Quadrature weight `|Ω| / N` of the discrete inner product.
    pub fn quadrature_weight(&self) -> f64 {
        self.volume() / self.len() as f64
    }

    /// Coordinate of the `i`-th node along `axis`.
    pub fn node(&self, axis: usize, i: usize) -> f64 {
        (i as f64 + 0.5) * self.extents[axis] / self.points[axis] as f64
    }

    /// Iterate flat indices together with their `(i₀, i₁)` multi-index.
    pub fn multi_indices(&self) -> impl Iterator<Item = (usize, [usize; MAX_DIM])> + '_ {
        let n1 = self.points[1];
        (0..self.len()).map(move |flat| (flat, [flat / n1, flat % n1]))
    }
}

/// A real scalar field sampled on the collocation nodes of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: GridSpec,
    values: Vec<f64>,
}

impl Field {
    /// Field with all nodes set to `value`.
    pub fn constant(grid: GridSpec, value: f64) -> Self {
        Field {
            grid,
            values: vec![value; grid.len()],
        }
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self::constant(grid, 0.0)
    }

    /// Wrap raw nodal values; the length must match the grid.
    pub fn from_values(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::config(format!(
                "field has {} values but grid has {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(Field { grid, values })
    }

    /// Sample `f(x)` (or `f(x, y)` via the coordinate array) at every node.
    pub fn from_fn(grid: GridSpec, mut f: impl FnMut(&[f64]) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        let mut coords = [0.0; MAX_DIM];
        for (_, idx) in grid.multi_indices() {
            for a in 0..grid.dimension() {
                coords[a] = grid.node(a, idx[a]);
            }
            values.push(f(&coords[..grid.dimension()]));
        }
        Field { grid, values }
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

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Apply `f` pointwise, producing a new field.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_with(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Field {
        debug_assert_eq!(self.grid, other.grid);
        Field {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// Discrete inner product `(u, v)_h`.
    pub fn inner(&self, other: &Field) -> f64 {
        debug_assert_eq!(self.grid, other.grid);
        let dot: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| a * b)
            .sum();
        self.grid.quadrature_weight() * dot
    }

    /// Discrete L² norm `‖v‖_h = (v, v)_h^{1/2}`.
    pub fn norm(&self) -> f64 {
        self.inner(self).sqrt()
    }

    /// Maximum absolute nodal value.
    pub fn norm_inf(&self) -> f64 {
        self.values.iter().fold(0.0, |m, &v| m.max(v.abs()))
    }

    /// Integral mean `(1/|Ω|) ∫ v`.
    pub fn mean(&self) -> f64 {
        let sum: f64 = self.values.iter().sum();
        sum / self.values.len() as f64
    }

    /// Collocation quadrature `∫ f(v)` over the domain.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        let sum: f64 = self.values.iter().map(|&v| f(v)).sum();
        self.grid.quadrature_weight() * sum
    }

    /// `self + scale · other`.
    pub fn axpy(&self, scale: f64, other: &Field) -> Field {
        self.zip_with(other, |a, b| a + scale * b)
    }

    /// `self - other`.
    pub fn sub(&self, other: &Field) -> Field {
        self.zip_with(other, |a, b| a - b)
    }

    /// `scale · self`.
    pub fn scale(&self, scale: f64) -> Field {
        self.map(|v| scale * v)
    }

    /// In-place `self += scale · other`.
    pub fn axpy_mut(&mut self, scale: f64, other: &Field) {
        debug_assert_eq!(self.grid, other.grid);
        for (a, &b) in self.values.iter_mut().zip(&other.values) {
            *a += scale * b;
        }
    }

    /// True when every nodal value is finite.
    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}
