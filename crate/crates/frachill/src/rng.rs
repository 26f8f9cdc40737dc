//! Seeded random numbers for initial data and probes.
//!
//! Deterministic 64-bit generator (splitmix64) so that runs agree bit-for-bit
//! across platforms and implementations. The update is
//!
//! ```text
//! state += 0x9E3779B97F4A7C15
//! z = state; z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//! z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//! output = z ^ (z >> 31)
//! ```
//!
//! and uniform doubles take the top 53 bits: `(output >> 11) · 2⁻⁵³`.

use crate::grid::{Field, GridSpec};

/// splitmix64 generator.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[-amp, amp)`.
    pub fn next_symmetric(&mut self, amp: f64) -> f64 {
        (2.0 * self.next_f64() - 1.0) * amp
    }
}

/// Field of iid uniform values in `[-amp, amp)`, drawn in row-major node order.
pub fn random_field(grid: GridSpec, seed: u64, amp: f64) -> Field {
    let mut rng = SplitMix64::new(seed);
    let values = (0..grid.len()).map(|_| rng.next_symmetric(amp)).collect();
    Field::from_values(grid, values).expect("length matches by construction")
}

/// Band-limited random field: uniform coefficients on the `modes` lowest
/// eigenmodes of `op`, then synthesized on the grid. Smooth probes of this
/// kind emulate the fields the solver actually produces.
pub fn random_smooth_field(
    op: &crate::spectral::SpectralOperator,
    seed: u64,
    amp: f64,
    modes: usize,
) -> Field {
    let mut rng = SplitMix64::new(seed);
    let mut field = Field::zeros(*op.grid());
    for j in 0..modes.min(op.grid().len()) {
        let c = rng.next_symmetric(amp);
        field.axpy_mut(c, &op.eigenfunction(j));
    }
    field
}
