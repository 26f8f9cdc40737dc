//! Spectral-Galerkin simulator for a fractional Cahn–Hilliard tumor-growth
//! system, together with an executable analysis harness.
//!
//! The system couples a chemical potential `μ`, a tumor fraction `φ`, and a
//! nutrient concentration `S` through fractional powers of three monotone
//! selfadjoint operators:
//!
//! ```text
//! α ∂t μ + ∂t φ + A^{2ρ} μ = P(φ)(S − μ),
//! μ = β ∂t φ + B^{2σ} φ + f(φ),
//! ∂t S + C^{2τ} S = −P(φ)(S − μ),
//! ```
//!
//! where `f` derives from a double-well potential split into a convex part
//! plus a smooth perturbation. The solver discretizes in time with a
//! semi-implicit Euler scheme, regularizes the convex part à la
//! Moreau–Yosida, and resolves every step through a contraction fixed
//! point. The [`harness`] module turns the scheme's structural guarantees
//! (energy dissipation, mass conservation, contraction rates, obstacle
//! complementarity, refinement behavior) into runnable checks.
//!
//! See the `book/` guide for a narrative walkthrough; the `frachill` CLI
//! wraps the drivers in [`driver`].

pub mod config;
pub mod driver;
pub mod error;
pub mod grid;
pub mod harness;
pub mod potential;
pub mod rng;
pub mod snapshot;
pub mod spectral;
pub mod stepper;
pub mod trajectory;

pub use error::{Error, Result};
pub use grid::{Field, GridSpec};
pub use potential::{PotentialKind, PotentialSpec, Proliferation, YosidaParams};
pub use spectral::{build_operator, Bc, ModeCoeffs, Operators, SpectralOperator};
pub use stepper::{Forcing, Problem, SimConfig, SimState, StepReport};
pub use trajectory::{FieldKind, InterpolantKind, Trajectory};


