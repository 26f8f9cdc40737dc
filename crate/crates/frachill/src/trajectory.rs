//! Stored time sequences and their interpolants.
//!
//! A run produces sequences `(z⁰, …, z^N)` per field on the uniform time
//! grid `t_n = n·h`. Three reconstructions link them to function-space
//! norms:
//!
//! * `bar`: piecewise constant, right endpoint — `z̄(t) = zⁿ` on `I_n`;
//! * `underline`: piecewise constant, left endpoint — `z(t) = zⁿ⁻¹` on `I_n`;
//! * `hat`: piecewise linear through the nodal values.
//!
//! The summary-type identities (`‖z̄‖²_{L²(Z)} = hΣ‖zⁿ‖²_Z`,
//! `‖z̄ − ẑ‖²_{L²(Z)} = (h/3)Σ‖zⁿ⁺¹−zⁿ‖²_Z = (h²/3)‖∂tẑ‖²_{L²(Z)}`, …)
//! are finite algebraic facts about the stored sequence; [`interpolant_summary`]
//! evaluates both routes so they can be asserted against quadrature.

use crate::error::{Error, Result};
use crate::grid::Field;
use crate::stepper::SimState;

/// Which unknown of the system.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    Mu,
    Phi,
    S,
}

impl FieldKind {
    pub const ALL: [FieldKind; 3] = [FieldKind::Mu, FieldKind::Phi, FieldKind::S];

    pub fn name(&self) -> &'static str {
        match self {
            FieldKind::Mu => "mu",
            FieldKind::Phi => "phi",
            FieldKind::S => "s",
        }
    }
}

/// Which reconstruction in time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InterpolantKind {
    /// Right-endpoint piecewise constant `z̄`.
    Bar,
    /// Left-endpoint piecewise constant.
    Underline,
    /// Piecewise linear `ẑ`.
    Hat,
}

/// Full history of a run: one sequence per field plus the step size.
#[derive(Debug, Clone)]
pub struct Trajectory {
    h: f64,
    mu: Vec<Field>,
    phi: Vec<Field>,
    s: Vec<Field>,
}

impl Trajectory {
    pub fn new(h: f64) -> Self {
        Trajectory {
            h,
            mu: Vec::new(),
            phi: Vec::new(),
            s: Vec::new(),
        }
    }

    pub fn push(&mut self, state: &SimState) {
        self.mu.push(state.mu.clone());
        self.phi.push(state.phi.clone());
        self.s.push(state.s.clone());
    }

    /// Assemble a trajectory from raw sequences (equal lengths required).
    pub fn from_sequences(
        h: f64,
        mu: Vec<Field>,
        phi: Vec<Field>,
        s: Vec<Field>,
    ) -> Result<Self> {
        if mu.len() != phi.len() || mu.len() != s.len() {
            return Err(Error::config("field sequences have different lengths"));
        }
        Ok(Trajectory { h, mu, phi, s })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Number of steps `N` (stored states minus one).
    pub fn n_steps(&self) -> usize {
        self.mu.len().saturating_sub(1)
    }

    pub fn final_time(&self) -> f64 {
        self.n_steps() as f64 * self.h
    }

    pub fn sequence(&self, kind: FieldKind) -> &[Field] {
        match kind {
            FieldKind::Mu => &self.mu,
            FieldKind::Phi => &self.phi,
            FieldKind::S => &self.s,
        }
    }

    pub fn state(&self, n: usize) -> SimState {
        SimState {
            time_index: n,
            mu: self.mu[n].clone(),
            phi: self.phi[n].clone(),
            s: self.s[n].clone(),
        }
    }

    /// Evaluate an interpolant at `t ∈ [0, T]`.
    pub fn eval(&self, kind: FieldKind, interp: InterpolantKind, t: f64) -> Result<Field> {
        let seq = self.sequence(kind);
        if seq.is_empty() {
            return Err(Error::config("empty trajectory"));
        }
        let n_steps = self.n_steps();
        let t_final = self.final_time();
        if !(0.0..=t_final + 1e-12 * (1.0 + t_final)).contains(&t) {
            return Err(Error::config(format!(
                "time {t} outside the trajectory range [0, {t_final}]"
            )));
        }
        if n_steps == 0 {
            return Ok(seq[0].clone());
        }
        // interval I_n = ((n-1)h, nh] containing t, with t = 0 mapped to
        // n = 1; times within rounding of a node snap onto that node
        let s = t / self.h;
        let nearest = s.round();
        let n = if (s - nearest).abs() < 1e-9 * (1.0 + nearest.abs()) {
            nearest as usize
        } else {
            s.ceil() as usize
        }
        .clamp(1, n_steps);
        match interp {
            InterpolantKind::Bar => Ok(seq[n].clone()),
            InterpolantKind::Underline => Ok(seq[n - 1].clone()),
            InterpolantKind::Hat => {
                let theta = (t - (n - 1) as f64 * self.h) / self.h;
                Ok(seq[n - 1].zip_with(&seq[n], |a, b| a + theta * (b - a)))
            }
        }
    }
}

/// Both routes through the interpolant identities for one field sequence,
/// in an arbitrary (Hilbert) norm supplied as a closure.
#[derive(Debug, Clone, Default)]
pub struct InterpolantSummary {
    /// `max_{n=1..N} ‖zⁿ‖` — the L∞ norm of `z̄`.
    pub bar_linf: f64,
    /// `max_{n=0..N-1} ‖zⁿ‖`.
    pub underline_linf: f64,
    /// `max(‖z⁰‖, bar_linf)` — the L∞ norm of `ẑ`.
    pub hat_linf: f64,
    /// `max_n ‖(zⁿ⁺¹−zⁿ)/h‖`.
    pub dt_hat_linf: f64,
    /// `h Σ_{n=1..N} ‖zⁿ‖²`.
    pub bar_l2_sq: f64,
    /// `h Σ_{n=0..N-1} ‖zⁿ‖²`.
    pub underline_l2_sq: f64,
    /// `h Σ ‖(zⁿ⁺¹−zⁿ)/h‖²`.
    pub dt_hat_l2_sq: f64,
    /// `max_n ‖zⁿ⁺¹−zⁿ‖` (equals `h · dt_hat_linf`).
    pub bar_minus_hat_linf: f64,
    /// `(h/3) Σ ‖zⁿ⁺¹−zⁿ‖²` (equals `(h²/3) · dt_hat_l2_sq`).
    pub bar_minus_hat_l2_sq: f64,
    /// `h Σ ‖zⁿ⁺¹−zⁿ‖²`.
    pub bar_minus_underline_l2_sq: f64,
}

/// Evaluate the summary identities for a stored sequence.
pub fn interpolant_summary(
    seq: &[Field],
    h: f64,
    norm: impl Fn(&Field) -> f64,
) -> InterpolantSummary {
    let mut out = InterpolantSummary::default();
    if seq.is_empty() {
        return out;
    }
    let norms: Vec<f64> = seq.iter().map(&norm).collect();
    let diffs: Vec<f64> = seq.windows(2).map(|w| norm(&w[1].sub(&w[0]))).collect();
    out.bar_linf = norms[1..].iter().fold(0.0f64, |m, &v| m.max(v));
    out.underline_linf = norms[..norms.len() - 1].iter().fold(0.0f64, |m, &v| m.max(v));
    out.hat_linf = out.bar_linf.max(norms[0]);
    out.dt_hat_linf = diffs.iter().fold(0.0f64, |m, &v| m.max(v)) / h;
    out.bar_l2_sq = h * norms[1..].iter().map(|v| v * v).sum::<f64>();
    out.underline_l2_sq = h * norms[..norms.len() - 1].iter().map(|v| v * v).sum::<f64>();
    out.dt_hat_l2_sq = diffs.iter().map(|d| (d / h) * (d / h)).sum::<f64>() * h;
    out.bar_minus_hat_linf = diffs.iter().fold(0.0f64, |m, &v| m.max(v));
    out.bar_minus_hat_l2_sq = h / 3.0 * diffs.iter().map(|d| d * d).sum::<f64>();
    out.bar_minus_underline_l2_sq = h * diffs.iter().map(|d| d * d).sum::<f64>();
    out
}

/// Exact `L²(0,T;H)` distance between the piecewise-linear interpolants of
/// one field in two trajectories over their common time range.
///
/// The difference is piecewise linear on the merged time grid, so its
/// squared norm is piecewise quadratic and Simpson quadrature per segment
/// is exact.
pub fn hat_l2_distance(a: &Trajectory, b: &Trajectory, kind: FieldKind) -> Result<f64> {
    let t_final = a.final_time().min(b.final_time());
    let mut breaks: Vec<f64> = Vec::new();
    for traj in [a, b] {
        for n in 0..=traj.n_steps() {
            let t = n as f64 * traj.h();
            if t <= t_final + 1e-12 {
                breaks.push(t.min(t_final));
            }
        }
    }
    breaks.sort_by(|x, y| x.partial_cmp(y).unwrap());
    breaks.dedup_by(|x, y| (*x - *y).abs() < 1e-12 * (1.0 + t_final));
    let mut total = 0.0;
    for w in breaks.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        let dt = t1 - t0;
        if dt <= 0.0 {
            continue;
        }
        let tm = 0.5 * (t0 + t1);
        let d0 = a
            .eval(kind, InterpolantKind::Hat, t0)?
            .sub(&b.eval(kind, InterpolantKind::Hat, t0)?);
        let dm = a
            .eval(kind, InterpolantKind::Hat, tm)?
            .sub(&b.eval(kind, InterpolantKind::Hat, tm)?);
        let d1 = a
            .eval(kind, InterpolantKind::Hat, t1)?
            .sub(&b.eval(kind, InterpolantKind::Hat, t1)?);
        let (n0, nm, n1) = (d0.inner(&d0), dm.inner(&dm), d1.inner(&d1));
        total += dt / 6.0 * (n0 + 4.0 * nm + n1);
    }
    Ok(total.sqrt())
}
