//! Spectral realization of the fractional operators.
//!
//! Each operator is `-Δ` on the rectangle with homogeneous Neumann or
//! Dirichlet conditions, truncated to as many eigenmodes as there are grid
//! nodes. On the midpoint grid the continuous eigenfunctions
//!
//! * Neumann:   `cos(kπx/L)`, `k = 0, …, n-1`,
//! * Dirichlet: `sin(kπx/L)`, `k = 1, …, n`,
//!
//! are exactly orthogonal in the discrete inner product, so the discrete
//! eigenbasis is orthonormal to rounding and every fractional power
//!
//! ```text
//! A^ρ v = Σⱼ λⱼ^ρ (v, eⱼ)_h eⱼ,        0^ρ := 0,
//! ```
//!
//! acts diagonally with the *exact continuous* eigenvalues
//! `λ_k = Σ_a (k_a π / L_a)²`. Shifted solves `(a·I + A^ρ)⁻¹` invert the
//! same diagonal, which realizes the isomorphism `εI + A^ρ : V_A^ρ → H`
//! at the discrete level.

use crate::error::{Error, Result};
use crate::grid::{Field, GridSpec, MAX_DIM};

/// Homogeneous boundary condition selecting the trigonometric eigenbasis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bc {
    /// Cosine basis; the constant is an eigenfunction with eigenvalue 0.
    Neumann,
    /// Sine basis; the smallest eigenvalue `(π/L)²` is positive.
    Dirichlet,
}

impl std::fmt::Display for Bc {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Bc::Neumann => write!(f, "neumann"),
            Bc::Dirichlet => write!(f, "dirichlet"),
        }
    }
}

/// Orthonormal eigenbasis along one axis.
///
/// `basis` is mode-major: `basis[k*n + i]` is the k-th eigenfunction at the
/// i-th node, normalized so that `(L/n)·Σᵢ eₖ(xᵢ)eₘ(xᵢ) = δₖₘ`.
#[derive(Debug, Clone)]
struct AxisBasis {
    n: usize,
    basis: Vec<f64>,
    eigenvalues: Vec<f64>,
    /// Physical frequency index per basis row (k ≥ 0 Neumann, k ≥ 1 Dirichlet).
    frequencies: Vec<usize>,
}

impl AxisBasis {
    fn trivial() -> Self {
        AxisBasis {
            n: 1,
            basis: vec![1.0],
            eigenvalues: vec![0.0],
            frequencies: vec![0],
        }
    }

    fn build(extent: f64, n: usize, bc: Bc) -> Self {
        let mut basis = Vec::with_capacity(n * n);
        let mut eigenvalues = Vec::with_capacity(n);
        let mut frequencies = Vec::with_capacity(n);
        for row in 0..n {
            let k = match bc {
                Bc::Neumann => row,
                Bc::Dirichlet => row + 1,
            };
            let freq = k as f64 * std::f64::consts::PI / extent;
            eigenvalues.push(freq * freq);
            frequencies.push(k);
            // Rows with a squared sum of n (k=0 cosine, k=n sine) normalize
            // with 1/√L, the rest with √(2/L).
            let full_weight = match bc {
                Bc::Neumann => k == 0,
                Bc::Dirichlet => k == n,
            };
            let scale = if full_weight {
                (1.0 / extent).sqrt()
            } else {
                (2.0 / extent).sqrt()
            };
            for i in 0..n {
                let x = (i as f64 + 0.5) * extent / n as f64;
                let value = match bc {
                    Bc::Neumann => (freq * x).cos(),
                    Bc::Dirichlet => (freq * x).sin(),
                };
                basis.push(scale * value);
            }
        }
        AxisBasis {
            n,
            basis,
            eigenvalues,
            frequencies,
        }
    }
}

/// Coefficients of a field in an operator's eigenbasis.
///
/// `coeffs[j] = (v, eⱼ)_h` where `j` indexes eigenvalues sorted
/// nondecreasing. Parseval holds exactly: `Σ cⱼ² = ‖v‖_h²` to rounding.
#[derive(Debug, Clone)]
pub struct ModeCoeffs {
    grid: GridSpec,
    bc: Bc,
    coeffs: Vec<f64>,
}

impl ModeCoeffs {
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }
}

/// Eigen-decomposition of one operator (`A`, `B`, or `C`) on a grid.
#[derive(Debug, Clone)]
pub struct SpectralOperator {
    grid: GridSpec,
    bc: Bc,
    axes: [AxisBasis; MAX_DIM],
    /// Eigenvalue per tensor-order mode (same layout as the grid).
    eig_tensor: Vec<f64>,
    /// Eigenvalues sorted nondecreasing (ties broken by tensor index).
    eig_sorted: Vec<f64>,
    /// Tensor index of the j-th sorted mode.
    tensor_of_sorted: Vec<usize>,
    /// Sorted position of each tensor mode.
    sorted_of_tensor: Vec<usize>,
}

/// Build the spectral operator for `-Δ` on the grid's rectangle.
pub fn build_operator(grid: GridSpec, bc: Bc) -> SpectralOperator {
    let mut axes = [AxisBasis::trivial(), AxisBasis::trivial()];
    for (a, axis) in axes.iter_mut().enumerate().take(grid.dimension()) {
        *axis = AxisBasis::build(grid.extent(a), grid.points(a), bc);
    }
    let n1 = axes[1].n;
    let len = grid.len();
    let mut eig_tensor = vec![0.0; len];
    for k0 in 0..axes[0].n {
        for k1 in 0..n1 {
            eig_tensor[k0 * n1 + k1] = axes[0].eigenvalues[k0] + axes[1].eigenvalues[k1];
        }
    }
    let mut order: Vec<usize> = (0..len).collect();
    order.sort_by(|&a, &b| {
        eig_tensor[a]
            .partial_cmp(&eig_tensor[b])
            .unwrap()
            .then(a.cmp(&b))
    });
    let eig_sorted: Vec<f64> = order.iter().map(|&t| eig_tensor[t]).collect();
    let mut sorted_of_tensor = vec![0usize; len];
    for (j, &t) in order.iter().enumerate() {
        sorted_of_tensor[t] = j;
    }
    SpectralOperator {
        grid,
        bc,
        axes,
        eig_tensor,
        eig_sorted,
        tensor_of_sorted: order,
        sorted_of_tensor,
    }
}

impl SpectralOperator {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn bc(&self) -> Bc {
        self.bc
    }

    /// Eigenvalues sorted nondecreasing, one per retained mode.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eig_sorted
    }

    /// Frequency multi-index `(k₀, k₁)` of the j-th sorted mode.
    pub fn mode_multi_index(&self, j: usize) -> [usize; MAX_DIM] {
        let t = self.tensor_of_sorted[j];
        let n1 = self.axes[1].n;
        [
            self.axes[0].frequencies[t / n1],
            self.axes[1].frequencies[t % n1],
        ]
    }

    /// The j-th eigenfunction (sorted order) sampled on the grid.
    pub fn eigenfunction(&self, j: usize) -> Field {
        let mut coeffs = vec![0.0; self.grid.len()];
        coeffs[j] = 1.0;
        self.from_modes(&ModeCoeffs {
            grid: self.grid,
            bc: self.bc,
            coeffs,
        })
        .expect("own grid")
    }

    fn check_grid(&self, grid: &GridSpec) -> Result<()> {
        if *grid != self.grid {
            return Err(Error::config(
                "field grid does not match the operator's grid",
            ));
        }
        Ok(())
    }

    /// Separable analysis without the quadrature weight: `Σᵢ v_i e_k(x_i)`.
    fn analysis_tensor(&self, values: &[f64]) -> Vec<f64> {
        let (n0, n1) = (self.axes[0].n, self.axes[1].n);
        if self.grid.dimension() == 1 || n1 == 1 {
            let b0 = &self.axes[0].basis;
            let mut out = vec![0.0; n0];
            for k in 0..n0 {
                let row = &b0[k * n0..(k + 1) * n0];
                out[k] = row.iter().zip(values).map(|(&e, &v)| e * v).sum();
            }
            return out;
        }
        // axis 1 first: T[i0][k1] = Σ_{i1} v[i0][i1] e_{k1}(x_{i1})
        let b1 = &self.axes[1].basis;
        let mut t = vec![0.0; n0 * n1];
        for i0 in 0..n0 {
            let v_row = &values[i0 * n1..(i0 + 1) * n1];
            for k1 in 0..n1 {
                let row = &b1[k1 * n1..(k1 + 1) * n1];
                t[i0 * n1 + k1] = row.iter().zip(v_row).map(|(&e, &v)| e * v).sum();
            }
        }
        // axis 0: C[k0][k1] = Σ_{i0} T[i0][k1] e_{k0}(x_{i0})
        let b0 = &self.axes[0].basis;
        let mut out = vec![0.0; n0 * n1];
        for k0 in 0..n0 {
            let row = &b0[k0 * n0..(k0 + 1) * n0];
            let out_row = &mut out[k0 * n1..(k0 + 1) * n1];
            for (i0, &e) in row.iter().enumerate() {
                let t_row = &t[i0 * n1..(i0 + 1) * n1];
                for (o, &tv) in out_row.iter_mut().zip(t_row) {
                    *o += e * tv;
                }
            }
        }
        out
    }

    /// Separable synthesis: `v_i = Σ_k c_k e_k(x_i)` (tensor-order coeffs).
    fn synthesis_tensor(&self, coeffs: &[f64]) -> Vec<f64> {
        let (n0, n1) = (self.axes[0].n, self.axes[1].n);
        if self.grid.dimension() == 1 || n1 == 1 {
            let b0 = &self.axes[0].basis;
            let mut out = vec![0.0; n0];
            for k in 0..n0 {
                let c = coeffs[k];
                if c == 0.0 {
                    continue;
                }
                let row = &b0[k * n0..(k + 1) * n0];
                for (o, &e) in out.iter_mut().zip(row) {
                    *o += c * e;
                }
            }
            return out;
        }
        let b0 = &self.axes[0].basis;
        let b1 = &self.axes[1].basis;
        // axis 0: T[i0][k1] = Σ_{k0} C[k0][k1] e_{k0}(x_{i0})
        let mut t = vec![0.0; n0 * n1];
        for k0 in 0..n0 {
            let row = &b0[k0 * n0..(k0 + 1) * n0];
            let c_row = &coeffs[k0 * n1..(k0 + 1) * n1];
            for (i0, &e) in row.iter().enumerate() {
                let t_row = &mut t[i0 * n1..(i0 + 1) * n1];
                for (o, &c) in t_row.iter_mut().zip(c_row) {
                    *o += e * c;
                }
            }
        }
        // axis 1: v[i0][i1] = Σ_{k1} T[i0][k1] e_{k1}(x_{i1})
        let mut out = vec![0.0; n0 * n1];
        for i0 in 0..n0 {
            let t_row = &t[i0 * n1..(i0 + 1) * n1];
            let out_row = &mut out[i0 * n1..(i0 + 1) * n1];
            for k1 in 0..n1 {
                let c = t_row[k1];
                if c == 0.0 {
                    continue;
                }
                let row = &b1[k1 * n1..(k1 + 1) * n1];
                for (o, &e) in out_row.iter_mut().zip(row) {
                    *o += c * e;
                }
            }
        }
        out
    }

    /// Expand a field over the eigenbasis: `cⱼ = (v, eⱼ)_h`.
    pub fn to_modes(&self, v: &Field) -> Result<ModeCoeffs> {
        self.check_grid(v.grid())?;
        let w = self.grid.quadrature_weight();
        let tensor = self.analysis_tensor(v.values());
        let mut coeffs = vec![0.0; tensor.len()];
        for (t, &c) in tensor.iter().enumerate() {
            coeffs[self.sorted_of_tensor[t]] = w * c;
        }
        Ok(ModeCoeffs {
            grid: self.grid,
            bc: self.bc,
            coeffs,
        })
    }

    /// Reconstruct a field from eigenbasis coefficients.
    pub fn from_modes(&self, c: &ModeCoeffs) -> Result<Field> {
        if c.grid != self.grid || c.bc != self.bc {
            return Err(Error::config("mode coefficients belong to another operator"));
        }
        let mut tensor = vec![0.0; c.coeffs.len()];
        for (j, &v) in c.coeffs.iter().enumerate() {
            tensor[self.tensor_of_sorted[j]] = v;
        }
        Field::from_values(self.grid, self.synthesis_tensor(&tensor))
    }

    fn check_exponent(exponent: f64) -> Result<()> {
        if exponent <= 0.0 || !exponent.is_finite() {
            return Err(Error::config(format!(
                "fractional exponent must be positive and finite, got {exponent}"
            )));
        }
        Ok(())
    }

    /// Apply the mode-space diagonal `cⱼ ← g(λⱼ)·cⱼ` and resynthesize.
    fn apply_diagonal(&self, v: &Field, g: impl Fn(f64) -> f64) -> Result<Field> {
        self.check_grid(v.grid())?;
        let mut tensor = self.analysis_tensor(v.values());
        let w = self.grid.quadrature_weight();
        for (c, &lambda) in tensor.iter_mut().zip(&self.eig_tensor) {
            *c *= w * g(lambda);
        }
        Field::from_values(self.grid, self.synthesis_tensor(&tensor))
    }

    /// `A^ρ v = Σⱼ λⱼ^ρ (v,eⱼ)_h eⱼ` with `0^ρ := 0`.
    pub fn apply_fractional(&self, exponent: f64, v: &Field) -> Result<Field> {
        Self::check_exponent(exponent)?;
        self.apply_diagonal(v, |lambda| frac_pow(lambda, exponent))
    }

    /// Solve `(a·I + A^ρ) u = rhs` exactly in mode space. Requires `a > 0`.
    pub fn solve_shifted(&self, exponent: f64, a: f64, rhs: &Field) -> Result<Field> {
        Self::check_exponent(exponent)?;
        if a <= 0.0 || !a.is_finite() {
            return Err(Error::config(format!(
                "shift must be positive and finite, got {a}"
            )));
        }
        self.apply_diagonal(rhs, |lambda| 1.0 / (a + frac_pow(lambda, exponent)))
    }

    /// Graph norm `‖v‖_{A,ρ} = (‖v‖_h² + ‖A^ρ v‖_h²)^{1/2}`.
    pub fn graph_norm(&self, exponent: f64, v: &Field) -> Result<f64> {
        Self::check_exponent(exponent)?;
        let c = self.to_modes(v)?;
        let sum: f64 = c
            .coeffs
            .iter()
            .zip(&self.eig_sorted)
            .map(|(&c, &lambda)| {
                let s = frac_pow(lambda, exponent);
                (1.0 + s * s) * c * c
            })
            .sum();
        Ok(sum.sqrt())
    }

    /// Dual norm of `V_A^{-ρ}` under the identification `⟨v,w⟩ = (v,w)_h`:
    /// the supremum of `(v,w)_h / ‖w‖_{A,ρ}` over nonzero `w`.
    pub fn dual_norm(&self, exponent: f64, v: &Field) -> Result<f64> {
        Self::check_exponent(exponent)?;
        let c = self.to_modes(v)?;
        let sum: f64 = c
            .coeffs
            .iter()
            .zip(&self.eig_sorted)
            .map(|(&c, &lambda)| {
                let s = frac_pow(lambda, exponent);
                c * c / (1.0 + s * s)
            })
            .sum();
        Ok(sum.sqrt())
    }
}

/// `λ^ρ` with the convention `0^ρ := 0` (the λⱼ = 0 term of the series vanishes).
#[inline]
pub fn frac_pow(lambda: f64, exponent: f64) -> f64 {
    if lambda == 0.0 {
        0.0
    } else {
        lambda.powf(exponent)
    }
}

/// The three operators of the system, sharing one grid.
#[derive(Debug, Clone)]
pub struct Operators {
    pub a: SpectralOperator,
    pub b: SpectralOperator,
    pub c: SpectralOperator,
}

impl Operators {
    pub fn new(a: SpectralOperator, b: SpectralOperator, c: SpectralOperator) -> Result<Self> {
        if a.grid() != b.grid() || a.grid() != c.grid() {
            return Err(Error::config("operators A, B, C must share one grid"));
        }
        Ok(Operators { a, b, c })
    }

    /// All three realized as the same boundary condition on one grid.
    pub fn uniform(grid: GridSpec, bc: Bc) -> Self {
        Operators {
            a: build_operator(grid, bc),
            b: build_operator(grid, bc),
            c: build_operator(grid, bc),
        }
    }

    pub fn grid(&self) -> &GridSpec {
        self.a.grid()
    }
}
