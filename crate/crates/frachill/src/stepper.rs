//! Semi-implicit time stepping with a per-step contraction fixed point.
//!
//! One step advances `(μⁿ, φⁿ, Sⁿ)` to the unique solution of
//!
//! ```text
//! α(μⁿ⁺¹−μⁿ)/h + (φⁿ⁺¹−φⁿ)/h + A^{2ρ}μⁿ⁺¹ + P(φⁿ)μⁿ⁺¹ = P(φⁿ)Sⁿ⁺¹
//! β(φⁿ⁺¹−φⁿ)/h + B^{2σ}φⁿ⁺¹ + (f^λ + L·I)(φⁿ⁺¹)        = Lφⁿ + μⁿ⁺¹
//! (Sⁿ⁺¹−Sⁿ)/h + C^{2τ}Sⁿ⁺¹ + P(φⁿ)Sⁿ⁺¹                = P(φⁿ)μⁿ⁺¹
//! ```
//!
//! with `P(φⁿ)` frozen at the old phase, `f^λ = f₁^λ + f₂` the
//! Yosida-regularized derivative, and `L > Lip f₂` making the implicit
//! nonlinearity monotone. Introducing
//!
//! ```text
//! A_h v = (α/h)v + A^{2ρ}v + P(φⁿ)v,
//! ```
//!
//! which is invertible with `‖A_h⁻¹‖ ≤ h/α`, the step splits into three
//! maps — `μ̄ ↦ Sⁿ⁺¹` (nutrient solve), `Sⁿ⁺¹ ↦ φⁿ⁺¹` (monotone phase
//! solve), `(φⁿ⁺¹, Sⁿ⁺¹) ↦ μⁿ⁺¹` (`A_h⁻¹` application) — whose composition
//! `Φ` contracts on `H` with ratio bounded by `K·h`. The stepper iterates
//! `Φ` to its fixed point, measures the contraction ratio, and can halve
//! the step on observed non-contraction.

use crate::error::{Error, Result};
use crate::grid::Field;
use crate::potential::{PotentialKind, PotentialSpec, Proliferation, YosidaParams};
use crate::spectral::Operators;
use crate::trajectory::Trajectory;

/// Absolute floor added to relative stopping criteria.
pub const TOL_FLOOR: f64 = 1e-14;

/// Time-stepping and solver parameters.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub alpha: f64,
    pub beta: f64,
    /// Half-exponents: the equations contain `A^{2ρ}`, `B^{2σ}`, `C^{2τ}`.
    pub rho: f64,
    pub sigma: f64,
    pub tau: f64,
    /// Time step.
    pub h: f64,
    /// Number of steps; the final time is `n_steps · h`.
    pub n_steps: usize,
    /// Yosida regularization level λ.
    pub lambda: f64,
    /// Stabilization constant `L > Lip f₂`.
    pub stabilization: f64,
    pub tol_outer: f64,
    pub tol_cg: f64,
    pub tol_newton: f64,
    pub max_outer: usize,
    pub max_cg: usize,
    pub max_newton: usize,
    /// Retry a stalled step as halved sub-steps.
    pub adapt_h: bool,
}

impl SimConfig {
    /// Defaults for everything but the step size and count. The
    /// stabilization constant starts at 0; set it from the potential with
    /// [`SimConfig::with_stabilization_for`].
    pub fn new(h: f64, n_steps: usize) -> Self {
        SimConfig {
            alpha: 1.0,
            beta: 1.0,
            rho: 0.5,
            sigma: 0.5,
            tau: 0.5,
            h,
            n_steps,
            lambda: 1e-3,
            stabilization: 0.0,
            tol_outer: 1e-10,
            tol_cg: 1e-12,
            tol_newton: 1e-11,
            max_outer: 60,
            max_cg: 500,
            max_newton: 50,
            adapt_h: false,
        }
    }

    /// Set `L = Lip f₂ · (1 + margin)` from the potential's recorded constant.
    pub fn with_stabilization_for(mut self, spec: &PotentialSpec, margin: f64) -> Self {
        self.stabilization = spec.stabilization_l(margin);
        self
    }

    pub fn yosida(&self) -> Result<YosidaParams> {
        YosidaParams::new(self.lambda)
    }

    pub fn validate(&self, spec: &PotentialSpec) -> Result<()> {
        for (name, v) in [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("rho", self.rho),
            ("sigma", self.sigma),
            ("tau", self.tau),
            ("h", self.h),
            ("lambda", self.lambda),
            ("tol.outer", self.tol_outer),
            ("tol.cg", self.tol_cg),
            ("tol.newton", self.tol_newton),
        ] {
            if v <= 0.0 || !v.is_finite() {
                return Err(Error::config(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        let lip = spec.lip_f2();
        if lip > 0.0 && (self.stabilization <= lip || self.stabilization.is_nan()) {
            return Err(Error::config(format!(
                "stabilization L = {} must exceed Lip f₂ = {lip}",
                self.stabilization
            )));
        }
        if self.stabilization < 0.0 {
            return Err(Error::config("stabilization L must be nonnegative"));
        }
        Ok(())
    }
}

/// Known forcing fields added to the right-hand sides of the three
/// equations, constant in time.
#[derive(Debug, Clone)]
pub struct Forcing {
    pub u_mu: Field,
    pub u_phi: Field,
    pub u_s: Field,
}

/// The unknowns `(μⁿ, φⁿ, Sⁿ)` at one time level.
#[derive(Debug, Clone)]
pub struct SimState {
    pub time_index: usize,
    pub mu: Field,
    pub phi: Field,
    pub s: Field,
}

impl SimState {
    pub fn initial(mu: Field, phi: Field, s: Field) -> Result<Self> {
        if mu.grid() != phi.grid() || mu.grid() != s.grid() {
            return Err(Error::config("initial fields live on different grids"));
        }
        for (name, f) in [("mu", &mu), ("phi", &phi), ("s", &s)] {
            if !f.all_finite() {
                return Err(Error::config(format!(
                    "initial {name} has non-finite values"
                )));
            }
        }
        Ok(SimState {
            time_index: 0,
            mu,
            phi,
            s,
        })
    }
}

/// Per-step diagnostics.
#[derive(Debug, Clone, Default)]
pub struct StepReport {
    /// Applications of the fixed-point map `Φ`.
    pub outer_iters: usize,
    /// Conjugate-gradient iterations across all linear solves of the step.
    pub cg_iters: usize,
    /// Newton iterations across the phase solves of the step.
    pub newton_iters: usize,
    /// Largest measured ratio `‖Φμ̄ₖ − Φμ̄ₖ₋₁‖ / ‖μ̄ₖ − μ̄ₖ₋₁‖`
    /// (0 when the map converged before a ratio could be measured).
    pub outer_ratio: f64,
    /// Running contraction-constant estimate `K̂ = outer_ratio / h`.
    pub k_hat: f64,
    /// Residual norms of the three equations for the accepted triple.
    pub residual_mu: f64,
    pub residual_phi: f64,
    pub residual_s: f64,
    /// Step halvings that were needed (0 when the nominal step converged).
    pub halvings: usize,
    /// `max |f₁^λ(φⁿ⁺¹)|`; for the obstacle the constraint overshoot is
    /// exactly λ times this value.
    pub f1_sup: f64,
}

#[derive(Debug, Default)]
struct Counters {
    cg: usize,
    newton: usize,
}

/// A fully assembled problem: parameters, operators, nonlinearities, and
/// optional forcing.
#[derive(Debug, Clone)]
pub struct Problem {
    pub config: SimConfig,
    pub ops: Operators,
    pub potential: PotentialSpec,
    pub proliferation: Proliferation,
    pub forcing: Option<Forcing>,
}

impl Problem {
    pub fn new(
        config: SimConfig,
        ops: Operators,
        potential: PotentialSpec,
        proliferation: Proliferation,
    ) -> Result<Self> {
        config.validate(&potential)?;
        Ok(Problem {
            config,
            ops,
            potential,
            proliferation,
            forcing: None,
        })
    }

    pub fn with_forcing(mut self, forcing: Forcing) -> Self {
        self.forcing = Some(forcing);
        self
    }

    /// Pointwise proliferation values `P(φⁿ)`.
    pub fn proliferation_at(&self, phi_n: &Field) -> Field {
        phi_n.map(|v| self.proliferation.eval(v))
    }

    fn f2_derivative(&self, _r: f64) -> f64 {
        match self.potential.kind() {
            PotentialKind::Regular => -1.0,
            PotentialKind::Logarithmic { c1 } => -2.0 * c1,
            PotentialKind::DoubleObstacle { c2 } => -2.0 * c2,
            PotentialKind::Polynomial {
                smooth_quadratic, ..
            } => smooth_quadratic,
        }
    }

    /// `A_h v = (α/h)v + A^{2ρ}v + P(φⁿ)v` for the frozen phase `φⁿ`.
    pub fn apply_ah(&self, phi_n: &Field, v: &Field) -> Result<Field> {
        self.apply_ah_with(&self.proliferation_at(phi_n), v, self.config.h)
    }

    fn apply_ah_with(&self, p_n: &Field, v: &Field, h: f64) -> Result<Field> {
        let mut out = self.ops.a.apply_fractional(2.0 * self.config.rho, v)?;
        let shift = self.config.alpha / h;
        let (o, vv, pp) = (out.values_mut(), v.values(), p_n.values());
        for i in 0..vv.len() {
            o[i] += (shift + pp[i]) * vv[i];
        }
        Ok(out)
    }

    /// Solve `A_h v = rhs` by preconditioned conjugate gradients.
    ///
    /// The preconditioner inverts `(α/h)I + A^{2ρ}` exactly in mode space,
    /// leaving only the bounded multiplication by `P(φⁿ)` to CG. The result
    /// inherits the monotone bound `‖v‖ ≤ (h/α)‖rhs‖` up to the tolerance.
    pub fn solve_ah(&self, phi_n: &Field, rhs: &Field) -> Result<Field> {
        let mut counters = Counters::default();
        self.solve_ah_with(
            &self.proliferation_at(phi_n),
            rhs,
            None,
            self.config.h,
            &mut counters,
        )
    }

    fn solve_ah_with(
        &self,
        p_n: &Field,
        rhs: &Field,
        start: Option<&Field>,
        h: f64,
        counters: &mut Counters,
    ) -> Result<Field> {
        let shift = self.config.alpha / h;
        let two_rho = 2.0 * self.config.rho;
        pcg(
            |v| self.apply_ah_with(p_n, v, h),
            |r| self.ops.a.solve_shifted(two_rho, shift, r),
            rhs,
            start,
            self.config.tol_cg,
            self.config.max_cg,
            "cg(A_h)",
            counters,
        )
    }

    /// Nutrient update `Φ₃`: solve
    /// `(1/h + C^{2τ} + P(φⁿ)) Sⁿ⁺¹ = Sⁿ/h + P(φⁿ)μ̄ (+ u_S)`.
    pub fn solve_nutrient(&self, phi_n: &Field, s_n: &Field, mu_bar: &Field) -> Result<Field> {
        let mut counters = Counters::default();
        self.solve_nutrient_with(
            &self.proliferation_at(phi_n),
            s_n,
            mu_bar,
            None,
            self.config.h,
            &mut counters,
        )
    }

    fn solve_nutrient_with(
        &self,
        p_n: &Field,
        s_n: &Field,
        mu_bar: &Field,
        start: Option<&Field>,
        h: f64,
        counters: &mut Counters,
    ) -> Result<Field> {
        let two_tau = 2.0 * self.config.tau;
        let mut rhs = s_n.scale(1.0 / h);
        {
            let (r, pp, mm) = (rhs.values_mut(), p_n.values(), mu_bar.values());
            for i in 0..pp.len() {
                r[i] += pp[i] * mm[i];
            }
        }
        if let Some(f) = &self.forcing {
            rhs.axpy_mut(1.0, &f.u_s);
        }
        pcg(
            |v| {
                let mut out = self.ops.c.apply_fractional(two_tau, v)?;
                let (o, vv, pp) = (out.values_mut(), v.values(), p_n.values());
                for i in 0..vv.len() {
                    o[i] += (1.0 / h + pp[i]) * vv[i];
                }
                Ok(out)
            },
            |r| self.ops.c.solve_shifted(two_tau, 1.0 / h, r),
            &rhs,
            start,
            self.config.tol_cg,
            self.config.max_cg,
            "cg(nutrient)",
            counters,
        )
    }

    /// Potential update `Φ₁`:
    /// `μⁿ⁺¹ = A_h⁻¹((α/h)μⁿ − (φⁿ⁺¹−φⁿ)/h + P(φⁿ)Sⁿ⁺¹ (+ u_μ))`.
    pub fn apply_potential_update(
        &self,
        state: &SimState,
        phi_next: &Field,
        s_next: &Field,
    ) -> Result<Field> {
        let mut counters = Counters::default();
        self.potential_update_with(
            &self.proliferation_at(&state.phi),
            state,
            phi_next,
            s_next,
            None,
            self.config.h,
            &mut counters,
        )
    }

    #[allow(clippy::too_many_arguments)]
    fn potential_update_with(
        &self,
        p_n: &Field,
        state: &SimState,
        phi_next: &Field,
        s_next: &Field,
        start: Option<&Field>,
        h: f64,
        counters: &mut Counters,
    ) -> Result<Field> {
        let mut rhs = state.mu.scale(self.config.alpha / h);
        rhs.axpy_mut(-1.0 / h, phi_next);
        rhs.axpy_mut(1.0 / h, &state.phi);
        {
            let (r, pp, ss) = (rhs.values_mut(), p_n.values(), s_next.values());
            for i in 0..pp.len() {
                r[i] += pp[i] * ss[i];
            }
        }
        if let Some(f) = &self.forcing {
            rhs.axpy_mut(1.0, &f.u_mu);
        }
        self.solve_ah_with(p_n, &rhs, start, h, counters)
    }

    /// Phase update `Φ₂`: solve the monotone system
    ///
    /// ```text
    /// (β/h + L)φ + B^{2σ}φ + f^λ(φ) + (1/h)A_h⁻¹φ
    ///   = (β/h + L)φⁿ + A_h⁻¹((α/h)μⁿ + (1/h)φⁿ + P(φⁿ)Sⁿ⁺¹ (+ u_μ)) (+ u_φ)
    /// ```
    ///
    /// by semismooth Newton with backtracking; on stagnation a damped
    /// fixed-point sweep with the frozen nonlinearity takes over.
    pub fn solve_phase(&self, state: &SimState, s_next: &Field) -> Result<Field> {
        let mut counters = Counters::default();
        self.solve_phase_with(
            &self.proliferation_at(&state.phi),
            state,
            s_next,
            None,
            self.config.h,
            &mut counters,
        )
    }

    fn phase_rhs(
        &self,
        p_n: &Field,
        state: &SimState,
        s_next: &Field,
        h: f64,
        counters: &mut Counters,
    ) -> Result<Field> {
        let cfg = &self.config;
        let shift = cfg.beta / h + cfg.stabilization;
        let mut inner = state.mu.scale(cfg.alpha / h);
        inner.axpy_mut(1.0 / h, &state.phi);
        {
            let (r, pp, ss) = (inner.values_mut(), p_n.values(), s_next.values());
            for i in 0..pp.len() {
                r[i] += pp[i] * ss[i];
            }
        }
        if let Some(f) = &self.forcing {
            inner.axpy_mut(1.0, &f.u_mu);
        }
        let mut rhs = self.solve_ah_with(p_n, &inner, None, h, counters)?;
        rhs.axpy_mut(shift, &state.phi);
        if let Some(f) = &self.forcing {
            rhs.axpy_mut(1.0, &f.u_phi);
        }
        Ok(rhs)
    }

    /// Residual of the rewritten phase equation at `phi`.
    fn phase_residual(
        &self,
        p_n: &Field,
        phi: &Field,
        rhs: &Field,
        h: f64,
        counters: &mut Counters,
    ) -> Result<Field> {
        let cfg = &self.config;
        let yosida = cfg.yosida()?;
        let shift = cfg.beta / h + cfg.stabilization;
        let mut r = self.ops.b.apply_fractional(2.0 * cfg.sigma, phi)?;
        {
            let (rv, pv) = (r.values_mut(), phi.values());
            for i in 0..pv.len() {
                rv[i] += shift * pv[i]
                    + self.potential.yosida_f1(&yosida, pv[i])?
                    + self.potential.eval_f2(pv[i]);
            }
        }
        let smoothed = self.solve_ah_with(p_n, phi, None, h, counters)?;
        r.axpy_mut(1.0 / h, &smoothed);
        r.axpy_mut(-1.0, rhs);
        Ok(r)
    }

    fn solve_phase_with(
        &self,
        p_n: &Field,
        state: &SimState,
        s_next: &Field,
        start: Option<&Field>,
        h: f64,
        counters: &mut Counters,
    ) -> Result<Field> {
        let cfg = &self.config;
        let yosida = cfg.yosida()?;
        let two_sigma = 2.0 * cfg.sigma;
        let shift = cfg.beta / h + cfg.stabilization;

        let rhs = self.phase_rhs(p_n, state, s_next, h, counters)?;
        let tol = cfg.tol_newton * (1.0 + rhs.norm()) + TOL_FLOOR;

        let mut phi = start.cloned().unwrap_or_else(|| state.phi.clone());
        let mut res = self.phase_residual(p_n, &phi, &rhs, h, counters)?;
        let mut res_norm = res.norm();

        let mut stagnant = 0usize;
        for _ in 0..cfg.max_newton {
            if res_norm <= tol {
                return Ok(phi);
            }
            counters.newton += 1;

            // pointwise Jacobian offsets (f₁^λ)'(φ) + f₂'(φ)
            let mut dvec = Vec::with_capacity(phi.values().len());
            for &pv in phi.values() {
                dvec.push(self.potential.yosida_f1_derivative(&yosida, pv)? + self.f2_derivative(pv));
            }
            let dmean = dvec.iter().sum::<f64>() / dvec.len() as f64;
            let precond_shift = (shift + dmean).max(0.5 * cfg.beta / h);

            // Inexact Jacobian: the exact A_h⁻¹ of the residual is replaced
            // by its mode-space preconditioner, which keeps every part SPD
            // and one application cheap. The mismatch is O(sup P · h/α) and
            // only affects the convergence path, not the solution.
            let jacobian = |v: &Field| -> Result<Field> {
                let mut out = self.ops.b.apply_fractional(two_sigma, v)?;
                {
                    let (o, vv) = (out.values_mut(), v.values());
                    for i in 0..vv.len() {
                        o[i] += (shift + dvec[i]) * vv[i];
                    }
                }
                let smoothed = self
                    .ops
                    .a
                    .solve_shifted(2.0 * cfg.rho, cfg.alpha / h, v)?;
                out.axpy_mut(1.0 / h, &smoothed);
                Ok(out)
            };
            let neg_res = res.scale(-1.0);
            let delta = pcg(
                jacobian,
                |r| self.ops.b.solve_shifted(two_sigma, precond_shift, r),
                &neg_res,
                None,
                cfg.tol_cg,
                cfg.max_cg,
                "cg(phase jacobian)",
                counters,
            )?;

            // backtracking keeps the semismooth iteration monotone
            let mut damping = 1.0;
            let mut accepted = false;
            for _ in 0..25 {
                let candidate = phi.axpy(damping, &delta);
                let cres = self.phase_residual(p_n, &candidate, &rhs, h, counters)?;
                let cnorm = cres.norm();
                if cnorm <= tol || cnorm < res_norm * (1.0 - 0.25 * damping) {
                    phi = candidate;
                    res = cres;
                    res_norm = cnorm;
                    accepted = true;
                    break;
                }
                damping *= 0.5;
            }
            if accepted {
                stagnant = 0;
            } else {
                stagnant += 1;
                if stagnant >= 2 {
                    break;
                }
            }
        }
        if res_norm <= tol {
            return Ok(phi);
        }

        // Fallback: damped fixed point with the nonlinearity frozen at the
        // previous iterate and the SPD linear part solved exactly.
        for _ in 0..300 {
            counters.newton += 1;
            let mut frozen = rhs.clone();
            {
                let (fv, pv) = (frozen.values_mut(), phi.values());
                for i in 0..pv.len() {
                    fv[i] -= self.potential.yosida_f1(&yosida, pv[i])?
                        + self.potential.eval_f2(pv[i]);
                }
            }
            let smoothed = self.solve_ah_with(p_n, &phi, None, h, counters)?;
            frozen.axpy_mut(-1.0 / h, &smoothed);
            let solved = pcg(
                |v| {
                    let mut out = self.ops.b.apply_fractional(two_sigma, v)?;
                    let (o, vv) = (out.values_mut(), v.values());
                    for i in 0..vv.len() {
                        o[i] += shift * vv[i];
                    }
                    Ok(out)
                },
                |r| self.ops.b.solve_shifted(two_sigma, shift, r),
                &frozen,
                Some(&phi),
                cfg.tol_cg,
                cfg.max_cg,
                "cg(phase relaxation)",
                counters,
            )?;
            let damped = phi.scale(0.5).axpy(0.5, &solved);
            let cres = self.phase_residual(p_n, &damped, &rhs, h, counters)?;
            let cnorm = cres.norm();
            phi = damped;
            if cnorm <= tol {
                return Ok(phi);
            }
            if cnorm >= res_norm {
                break;
            }
            res_norm = cnorm;
        }
        Err(Error::solver(
            "phase solve",
            format!(
                "Newton and damped fixed point stalled at residual {res_norm:.3e} \
                 (tolerance {tol:.3e})"
            ),
        ))
    }

    /// One application of the fixed-point map `Φ`, returning
    /// `(Φ₁(Φ₂(Φ₃ μ̄), Φ₃ μ̄), Φ₂(Φ₃ μ̄), Φ₃ μ̄)`.
    pub fn fixed_point_map(
        &self,
        state: &SimState,
        mu_bar: &Field,
    ) -> Result<(Field, Field, Field)> {
        let p_n = self.proliferation_at(&state.phi);
        let mut counters = Counters::default();
        self.fixed_point_map_with(&p_n, state, mu_bar, None, self.config.h, &mut counters)
    }

    fn fixed_point_map_with(
        &self,
        p_n: &Field,
        state: &SimState,
        mu_bar: &Field,
        warm: Option<&(Field, Field, Field)>,
        h: f64,
        counters: &mut Counters,
    ) -> Result<(Field, Field, Field)> {
        let (mu_start, phi_start, s_start) = match warm {
            Some((m, f, s)) => (Some(m), Some(f), Some(s)),
            None => (None, None, None),
        };
        let s_next = self.solve_nutrient_with(p_n, &state.s, mu_bar, s_start, h, counters)?;
        let phi_next = self.solve_phase_with(p_n, state, &s_next, phi_start, h, counters)?;
        let mu_next =
            self.potential_update_with(p_n, state, &phi_next, &s_next, mu_start, h, counters)?;
        Ok((mu_next, phi_next, s_next))
    }

    /// Residual norms of the three discrete equations for a candidate triple.
    pub fn equation_residuals(
        &self,
        state: &SimState,
        mu: &Field,
        phi: &Field,
        s: &Field,
        h: f64,
    ) -> Result<(f64, f64, f64)> {
        let cfg = &self.config;
        let p_n = self.proliferation_at(&state.phi);
        let yosida = cfg.yosida()?;
        let n = mu.values().len();

        let mut r1 = self.ops.a.apply_fractional(2.0 * cfg.rho, mu)?;
        {
            let rv = r1.values_mut();
            let (m1, m0) = (mu.values(), state.mu.values());
            let (f1, f0) = (phi.values(), state.phi.values());
            let (pp, sv) = (p_n.values(), s.values());
            for i in 0..n {
                rv[i] += cfg.alpha * (m1[i] - m0[i]) / h
                    + (f1[i] - f0[i]) / h
                    + pp[i] * (m1[i] - sv[i]);
            }
        }
        if let Some(f) = &self.forcing {
            r1.axpy_mut(-1.0, &f.u_mu);
        }

        let mut r2 = self.ops.b.apply_fractional(2.0 * cfg.sigma, phi)?;
        {
            let rv = r2.values_mut();
            let (f1, f0) = (phi.values(), state.phi.values());
            let m1 = mu.values();
            for i in 0..n {
                rv[i] += cfg.beta * (f1[i] - f0[i]) / h
                    + self.potential.yosida_f1(&yosida, f1[i])?
                    + self.potential.eval_f2(f1[i])
                    + cfg.stabilization * (f1[i] - f0[i])
                    - m1[i];
            }
        }
        if let Some(f) = &self.forcing {
            r2.axpy_mut(-1.0, &f.u_phi);
        }

        let mut r3 = self.ops.c.apply_fractional(2.0 * cfg.tau, s)?;
        {
            let rv = r3.values_mut();
            let (s1, s0) = (s.values(), state.s.values());
            let (pp, m1) = (p_n.values(), mu.values());
            for i in 0..n {
                rv[i] += (s1[i] - s0[i]) / h + pp[i] * (s1[i] - m1[i]);
            }
        }
        if let Some(f) = &self.forcing {
            r3.axpy_mut(-1.0, &f.u_s);
        }

        Ok((r1.norm(), r2.norm(), r3.norm()))
    }

    /// Advance one step of size `config.h`.
    pub fn step(&self, state: &SimState) -> Result<(SimState, StepReport)> {
        self.step_sized(state, self.config.h, 0)
    }

    fn step_sized(&self, state: &SimState, h: f64, depth: usize) -> Result<(SimState, StepReport)> {
        match self.attempt_step(state, h) {
            Ok(ok) => Ok(ok),
            Err(err) => {
                if !self.config.adapt_h || depth >= 10 || !matches!(err, Error::Solver { .. }) {
                    return Err(err);
                }
                // cover the same interval with two half-steps
                let (mid, r1) = self.step_sized(state, 0.5 * h, depth + 1)?;
                let (end, r2) = self.step_sized(&mid, 0.5 * h, depth + 1)?;
                let report = StepReport {
                    outer_iters: r1.outer_iters + r2.outer_iters,
                    cg_iters: r1.cg_iters + r2.cg_iters,
                    newton_iters: r1.newton_iters + r2.newton_iters,
                    outer_ratio: r1.outer_ratio.max(r2.outer_ratio),
                    k_hat: r1.k_hat.max(r2.k_hat),
                    residual_mu: r1.residual_mu.max(r2.residual_mu),
                    residual_phi: r1.residual_phi.max(r2.residual_phi),
                    residual_s: r1.residual_s.max(r2.residual_s),
                    halvings: 1 + r1.halvings.max(r2.halvings),
                    f1_sup: r2.f1_sup,
                };
                Ok((
                    SimState {
                        time_index: state.time_index + 1,
                        mu: end.mu,
                        phi: end.phi,
                        s: end.s,
                    },
                    report,
                ))
            }
        }
    }

    fn attempt_step(&self, state: &SimState, h: f64) -> Result<(SimState, StepReport)> {
        let cfg = &self.config;
        let p_n = self.proliferation_at(&state.phi);
        let mut counters = Counters::default();

        let decoupled = p_n.values().iter().all(|&v| v == 0.0);
        let mut mu_bar = state.mu.clone();
        let mut outer_iters = 0usize;
        let mut outer_ratio = 0.0f64;
        let mut prev_diff: Option<f64> = None;
        let mut warm: Option<(Field, Field, Field)> = None;

        let (mu, phi, s) = loop {
            let triple =
                self.fixed_point_map_with(&p_n, state, &mu_bar, warm.as_ref(), h, &mut counters)?;
            outer_iters += 1;

            // With P ≡ 0 the map does not depend on μ̄, so a single
            // application already is the fixed point.
            if decoupled {
                break triple;
            }

            let diff = triple.0.sub(&mu_bar).norm();
            let scale = 1.0 + triple.0.norm();
            if let Some(pd) = prev_diff {
                if pd > 1e3 * TOL_FLOOR * scale {
                    let ratio = diff / pd;
                    outer_ratio = outer_ratio.max(ratio);
                    if ratio >= 1.0 && diff > 10.0 * cfg.tol_outer * scale {
                        return Err(Error::solver(
                            format!("outer fixed point at step {}", state.time_index),
                            format!("non-contraction observed: ratio {ratio:.3} at h = {h:.3e}"),
                        ));
                    }
                }
            }
            if diff <= cfg.tol_outer * scale + TOL_FLOOR {
                break triple;
            }
            if outer_iters >= cfg.max_outer {
                return Err(Error::solver(
                    format!("outer fixed point at step {}", state.time_index),
                    format!(
                        "no convergence within {} iterations; last diff {diff:.3e}",
                        cfg.max_outer
                    ),
                ));
            }
            prev_diff = Some(diff);
            mu_bar = triple.0.clone();
            warm = Some(triple);
        };

        let (residual_mu, residual_phi, residual_s) =
            self.equation_residuals(state, &mu, &phi, &s, h)?;
        let yosida = cfg.yosida()?;
        let mut f1_sup = 0.0f64;
        for &v in phi.values() {
            f1_sup = f1_sup.max(self.potential.yosida_f1(&yosida, v)?.abs());
        }
        let report = StepReport {
            outer_iters,
            cg_iters: counters.cg,
            newton_iters: counters.newton,
            outer_ratio,
            k_hat: outer_ratio / h,
            residual_mu,
            residual_phi,
            residual_s,
            halvings: 0,
            f1_sup,
        };
        Ok((
            SimState {
                time_index: state.time_index + 1,
                mu,
                phi,
                s,
            },
            report,
        ))
    }

    /// Admissibility gate for initial data: `F₁(φ₀)` must be integrable,
    /// which for the obstacle and logarithmic variants means `‖φ₀‖∞ ≤ 1`.
    pub fn check_initial(&self, initial: &SimState) -> Result<()> {
        if initial.mu.grid() != self.ops.grid() {
            return Err(Error::config(
                "initial data grid does not match the operators",
            ));
        }
        let bounded_domain = matches!(
            self.potential.kind(),
            PotentialKind::Logarithmic { .. } | PotentialKind::DoubleObstacle { .. }
        );
        if bounded_domain {
            let sup = initial.phi.norm_inf();
            if sup > 1.0 {
                return Err(Error::config(format!(
                    "initial phi violates the admissibility gate ‖φ₀‖∞ ≤ 1 (found {sup}); \
                     F₁(φ₀) would not be integrable"
                )));
            }
        }
        Ok(())
    }

    /// Run `n_steps` steps from the initial state, recording the full
    /// trajectory and the per-step diagnostics.
    pub fn run(&self, initial: SimState) -> Result<(Trajectory, Vec<StepReport>)> {
        self.check_initial(&initial)?;
        let mut reports = Vec::with_capacity(self.config.n_steps);
        let mut traj = Trajectory::new(self.config.h);
        let mut state = initial;
        traj.push(&state);
        for _ in 0..self.config.n_steps {
            let (next, report) = self.step(&state)?;
            traj.push(&next);
            reports.push(report);
            state = next;
        }
        Ok((traj, reports))
    }
}

/// Matrix-free preconditioned conjugate gradients for SPD systems.
#[allow(clippy::too_many_arguments)]
fn pcg(
    apply: impl Fn(&Field) -> Result<Field>,
    precond: impl Fn(&Field) -> Result<Field>,
    rhs: &Field,
    start: Option<&Field>,
    tol: f64,
    max_iters: usize,
    context: &str,
    counters: &mut Counters,
) -> Result<Field> {
    let rhs_norm = rhs.norm();
    if rhs_norm == 0.0 && start.is_none() {
        return Ok(Field::zeros(*rhs.grid()));
    }
    let target = tol * rhs_norm + TOL_FLOOR;

    let mut x = match start {
        Some(s) => s.clone(),
        None => precond(rhs)?,
    };
    let mut r = rhs.sub(&apply(&x)?);
    let mut r_norm = r.norm();
    if r_norm <= target {
        return Ok(x);
    }
    let mut z = precond(&r)?;
    let mut p = z.clone();
    let mut rz = r.inner(&z);
    let mut history = Vec::new();

    for _ in 0..max_iters {
        counters.cg += 1;
        let ap = apply(&p)?;
        let pap = p.inner(&ap);
        if pap <= 0.0 {
            return Err(Error::solver(
                context,
                format!("operator lost positive definiteness (pᵀAp = {pap:.3e})"),
            ));
        }
        let step = rz / pap;
        x.axpy_mut(step, &p);
        r.axpy_mut(-step, &ap);
        r_norm = r.norm();
        history.push(r_norm);
        if r_norm <= target {
            return Ok(x);
        }
        z = precond(&r)?;
        let rz_next = r.inner(&z);
        let beta = rz_next / rz;
        rz = rz_next;
        p = z.axpy(beta, &p);
    }
    let tail: Vec<String> = history
        .iter()
        .rev()
        .take(5)
        .map(|v| format!("{v:.3e}"))
        .collect();
    Err(Error::solver(
        context,
        format!(
            "no convergence within {max_iters} iterations; target {target:.3e}, \
             last residuals [{}]",
            tail.join(", ")
        ),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use crate::rng::{random_field, random_smooth_field};
    use crate::spectral::Bc;

    fn small_problem(potential: PotentialSpec, prolif: Proliferation, h: f64) -> Problem {
        let grid = GridSpec::dim1(std::f64::consts::PI, 32).unwrap();
        let ops = Operators::uniform(grid, Bc::Neumann);
        let cfg = SimConfig::new(h, 4).with_stabilization_for(&potential, 0.1);
        Problem::new(cfg, ops, potential, prolif).unwrap()
    }

    fn zeros(p: &Problem) -> Field {
        Field::zeros(*p.ops.grid())
    }

    #[test]
    fn apply_ah_constant_and_eigenmode() {
        let p = small_problem(PotentialSpec::regular(), Proliferation::zero(), 0.1);
        let grid = *p.ops.grid();
        // P ≡ 0, v constant, Neumann: A_h v = (α/h) v
        let c = Field::constant(grid, 2.0);
        let out = p.apply_ah(&zeros(&p), &c).unwrap();
        assert!(out.sub(&c.scale(1.0 / 0.1)).norm_inf() < 1e-10);

        // constant P = p₀ on an eigenmode: (α/h + λ^{2ρ} + p₀)·e
        let p = small_problem(
            PotentialSpec::regular(),
            Proliferation::constant(0.7).unwrap(),
            0.1,
        );
        let e = p.ops.a.eigenfunction(3);
        let lam = p.ops.a.eigenvalues()[3];
        let out = p.apply_ah(&zeros(&p), &e).unwrap();
        let factor = 1.0 / 0.1 + lam.powf(2.0 * p.config.rho) + 0.7;
        assert!(out.sub(&e.scale(factor)).norm_inf() < 1e-9);
    }

    #[test]
    fn apply_ah_is_symmetric() {
        let p = small_problem(
            PotentialSpec::regular(),
            Proliferation::smooth_clamp(1.0, 1.0).unwrap(),
            0.05,
        );
        let phi_n = random_field(*p.ops.grid(), 7, 0.5);
        let u = random_field(*p.ops.grid(), 8, 1.0);
        let v = random_field(*p.ops.grid(), 9, 1.0);
        let au = p.apply_ah(&phi_n, &u).unwrap();
        let av = p.apply_ah(&phi_n, &v).unwrap();
        let lhs = au.inner(&v);
        let rhs = u.inner(&av);
        assert!((lhs - rhs).abs() < 1e-12 * (1.0 + lhs.abs()));
    }

    #[test]
    fn solve_ah_matches_diagonal_solve_when_p_vanishes() {
        let p = small_problem(PotentialSpec::regular(), Proliferation::zero(), 0.1);
        let rhs = random_field(*p.ops.grid(), 11, 1.0);
        let by_cg = p.solve_ah(&zeros(&p), &rhs).unwrap();
        let direct = p
            .ops
            .a
            .solve_shifted(2.0 * p.config.rho, p.config.alpha / p.config.h, &rhs)
            .unwrap();
        assert!(by_cg.sub(&direct).norm_inf() < 1e-12 * (1.0 + direct.norm_inf()));
    }

    #[test]
    fn solve_ah_residual_and_norm_bound() {
        let p = small_problem(
            PotentialSpec::regular(),
            Proliferation::smooth_clamp(1.0, 1.0).unwrap(),
            0.05,
        );
        let phi_n = random_field(*p.ops.grid(), 3, 0.8);
        for seed in 0..20 {
            let rhs = random_field(*p.ops.grid(), 100 + seed, 1.0);
            let v = p.solve_ah(&phi_n, &rhs).unwrap();
            let residual = p.apply_ah(&phi_n, &v).unwrap().sub(&rhs).norm();
            assert!(residual <= 10.0 * p.config.tol_cg * rhs.norm() + 1e-13);
            // monotone bound ‖A_h⁻¹‖ ≤ h/α
            let bound = p.config.h / p.config.alpha * rhs.norm() * (1.0 + 10.0 * p.config.tol_cg);
            assert!(v.norm() <= bound);
        }
    }

    #[test]
    fn nutrient_constants_are_steady() {
        // Sⁿ = μ̄ = c with Neumann C and constant P: Sⁿ⁺¹ = c exactly
        let p = small_problem(
            PotentialSpec::regular(),
            Proliferation::constant(0.9).unwrap(),
            0.1,
        );
        let c = Field::constant(*p.ops.grid(), 1.7);
        let out = p.solve_nutrient(&zeros(&p), &c, &c).unwrap();
        assert!(out.sub(&c).norm_inf() < 1e-10);
    }

    #[test]
    fn nutrient_is_lipschitz_in_mu_with_constant_sup_p_h() {
        let p = small_problem(
            PotentialSpec::regular(),
            Proliferation::smooth_clamp(1.3, 0.8).unwrap(),
            0.02,
        );
        let phi_n = random_field(*p.ops.grid(), 21, 0.5);
        let s_n = random_field(*p.ops.grid(), 22, 1.0);
        let bound = p.proliferation.sup() * p.config.h;
        for seed in 0..10 {
            let m1 = random_field(*p.ops.grid(), 300 + seed, 1.0);
            let m2 = random_field(*p.ops.grid(), 400 + seed, 1.0);
            let s1 = p.solve_nutrient(&phi_n, &s_n, &m1).unwrap();
            let s2 = p.solve_nutrient(&phi_n, &s_n, &m2).unwrap();
            let ratio = s1.sub(&s2).norm() / m1.sub(&m2).norm();
            assert!(ratio <= bound * (1.0 + 1e-6), "ratio {ratio} > {bound}");
        }
    }

    #[test]
    fn nutrient_ignores_mu_when_p_vanishes() {
        let p = small_problem(PotentialSpec::regular(), Proliferation::zero(), 0.1);
        let s_n = random_field(*p.ops.grid(), 5, 1.0);
        let m1 = random_field(*p.ops.grid(), 6, 1.0);
        let m2 = random_field(*p.ops.grid(), 7, 1.0);
        let s1 = p.solve_nutrient(&zeros(&p), &s_n, &m1).unwrap();
        let s2 = p.solve_nutrient(&zeros(&p), &s_n, &m2).unwrap();
        assert!(s1.sub(&s2).norm_inf() < 1e-13);
    }

    #[test]
    fn phase_zero_is_a_fixed_point() {
        // φⁿ = μⁿ = Sⁿ⁺¹ = 0 and f^λ(0) = 0 keep the phase at zero
        let p = small_problem(PotentialSpec::regular(), Proliferation::zero(), 0.1);
        let state = SimState::initial(zeros(&p), zeros(&p), zeros(&p)).unwrap();
        let phi = p.solve_phase(&state, &zeros(&p)).unwrap();
        assert!(phi.norm_inf() < 1e-11);
    }

    #[test]
    fn phase_reduces_to_linear_solve_without_nonlinearity() {
        // f ≡ 0, L = 0: the rewritten equation is linear and SPD; compare
        // the Newton path against a plain CG oracle on the same operator
        let p = small_problem(PotentialSpec::zero(), Proliferation::zero(), 0.1);
        let grid = *p.ops.grid();
        let state = SimState::initial(
            random_field(grid, 31, 0.5),
            random_field(grid, 32, 0.5),
            random_field(grid, 33, 0.5),
        )
        .unwrap();
        let s_next = random_field(grid, 34, 0.5);
        let phi = p.solve_phase(&state, &s_next).unwrap();

        let mut counters = Counters::default();
        let p_n = p.proliferation_at(&state.phi);
        let rhs = p
            .phase_rhs(&p_n, &state, &s_next, p.config.h, &mut counters)
            .unwrap();
        let shift = p.config.beta / p.config.h;
        let oracle = pcg(
            |v| {
                let mut out = p.ops.b.apply_fractional(2.0 * p.config.sigma, v)?;
                {
                    let (o, vv) = (out.values_mut(), v.values());
                    for i in 0..vv.len() {
                        o[i] += shift * vv[i];
                    }
                }
                let smoothed = p
                    .ops
                    .a
                    .solve_shifted(2.0 * p.config.rho, p.config.alpha / p.config.h, v)?;
                out.axpy_mut(1.0 / p.config.h, &smoothed);
                Ok(out)
            },
            |r| p.ops.b.solve_shifted(2.0 * p.config.sigma, shift, r),
            &rhs,
            None,
            1e-13,
            2000,
            "oracle",
            &mut counters,
        )
        .unwrap();
        assert!(phi.sub(&oracle).norm() < 1e-9 * (1.0 + oracle.norm()));
    }

    #[test]
    fn phase_residual_small_on_random_data() {
        for potential in [
            PotentialSpec::regular(),
            PotentialSpec::logarithmic(2.0).unwrap(),
            PotentialSpec::double_obstacle(1.0).unwrap(),
        ] {
            let p = small_problem(potential, Proliferation::smooth_clamp(1.0, 1.0).unwrap(), 0.05);
            let grid = *p.ops.grid();
            let state = SimState::initial(
                random_field(grid, 41, 0.4),
                random_field(grid, 42, 0.6),
                random_field(grid, 43, 0.4),
            )
            .unwrap();
            let s_next = random_field(grid, 44, 0.4);
            let phi = p.solve_phase(&state, &s_next).unwrap();
            let p_n = p.proliferation_at(&state.phi);
            let mut counters = Counters::default();
            let rhs = p
                .phase_rhs(&p_n, &state, &s_next, p.config.h, &mut counters)
                .unwrap();
            let res = p
                .phase_residual(&p_n, &phi, &rhs, p.config.h, &mut counters)
                .unwrap();
            assert!(res.norm() <= p.config.tol_newton * (1.0 + rhs.norm()) + 1e-13);
        }
    }

    #[test]
    fn potential_update_is_a_fractional_heat_step_without_p() {
        // P ≡ 0 and φ unchanged: μⁿ⁺¹ solves ((α/h) + A^{2ρ})μ = (α/h)μⁿ
        let p = small_problem(PotentialSpec::regular(), Proliferation::zero(), 0.1);
        let grid = *p.ops.grid();
        let mu_n = random_field(grid, 205, 0.7);
        let phi = random_field(grid, 206, 0.5);
        let state = SimState::initial(mu_n.clone(), phi.clone(), Field::zeros(grid)).unwrap();
        let mu_next = p
            .apply_potential_update(&state, &phi, &Field::zeros(grid))
            .unwrap();
        let shift = p.config.alpha / p.config.h;
        let direct = p
            .ops
            .a
            .solve_shifted(2.0 * p.config.rho, shift, &mu_n.scale(shift))
            .unwrap();
        assert!(mu_next.sub(&direct).norm_inf() < 1e-11 * (1.0 + direct.norm_inf()));
    }

    #[test]
    fn potential_update_on_constant_data() {
        // constants solve the discrete equation: μⁿ = Sⁿ⁺¹ = c, φ unchanged
        let p = small_problem(
            PotentialSpec::regular(),
            Proliferation::constant(0.8).unwrap(),
            0.1,
        );
        let grid = *p.ops.grid();
        let c = Field::constant(grid, 1.3);
        let phi = Field::constant(grid, 0.2);
        let state = SimState::initial(c.clone(), phi.clone(), c.clone()).unwrap();
        let mu = p.apply_potential_update(&state, &phi, &c).unwrap();
        assert!(mu.sub(&c).norm_inf() < 1e-10);
    }

    #[test]
    fn decoupled_step_converges_in_one_outer_iteration() {
        let p = small_problem(PotentialSpec::regular(), Proliferation::zero(), 0.05);
        let grid = *p.ops.grid();
        let state = SimState::initial(
            random_field(grid, 51, 0.3),
            random_field(grid, 52, 0.3),
            random_field(grid, 53, 0.3),
        )
        .unwrap();
        let (_, report) = p.step(&state).unwrap();
        assert_eq!(report.outer_iters, 1);
        assert_eq!(report.outer_ratio, 0.0);
    }

    #[test]
    fn constant_equilibrium_is_preserved() {
        // φ₀ constant, μ₀ = S₀ = f^λ(φ₀): the state is a discrete steady
        // state; one step must reproduce it within solver tolerances.
        let p = small_problem(
            PotentialSpec::regular(),
            Proliferation::smooth_clamp(1.0, 1.0).unwrap(),
            0.05,
        );
        let grid = *p.ops.grid();
        let yosida = p.config.yosida().unwrap();
        let phi0 = 0.3;
        let mu0 = p.potential.yosida_f1(&yosida, phi0).unwrap() + p.potential.eval_f2(phi0);
        let state = SimState::initial(
            Field::constant(grid, mu0),
            Field::constant(grid, phi0),
            Field::constant(grid, mu0),
        )
        .unwrap();
        let (next, report) = p.step(&state).unwrap();
        assert!(next.mu.sub(&state.mu).norm_inf() < 1e-8);
        assert!(next.phi.sub(&state.phi).norm_inf() < 1e-8);
        assert!(next.s.sub(&state.s).norm_inf() < 1e-8);
        assert!(report.outer_ratio < 1.0);
    }

    #[test]
    fn step_residuals_within_budget() {
        let p = small_problem(
            PotentialSpec::regular(),
            Proliferation::smooth_clamp(1.0, 1.0).unwrap(),
            0.02,
        );
        let grid = *p.ops.grid();
        let state = SimState::initial(
            random_field(grid, 61, 0.4),
            random_field(grid, 62, 0.4),
            random_field(grid, 63, 0.4),
        )
        .unwrap();
        let (next, report) = p.step(&state).unwrap();
        let budget = 10.0
            * (p.config.tol_outer + p.config.tol_cg + p.config.tol_newton)
            * (1.0 + next.mu.norm() + next.phi.norm() + next.s.norm());
        assert!(report.residual_mu <= budget, "{} > {budget}", report.residual_mu);
        assert!(report.residual_phi <= budget);
        assert!(report.residual_s <= budget);
    }

    #[test]
    fn contraction_ratio_bounded_and_pairwise_stable() {
        // ‖Φ(μ̄₁)−Φ(μ̄₂)‖ ≤ K̂h‖μ̄₁−μ̄₂‖ with K̂ independent of the pair
        // within a factor 2
        let p = small_problem(
            PotentialSpec::regular(),
            Proliferation::smooth_clamp(1.0, 1.0).unwrap(),
            0.02,
        );
        let grid = *p.ops.grid();
        let state = SimState::initial(
            random_field(grid, 71, 0.4),
            random_field(grid, 72, 0.4),
            random_field(grid, 73, 0.4),
        )
        .unwrap();
        let mut k_hats = Vec::new();
        for seed in 0..20 {
            let m1 = random_smooth_field(&p.ops.a, 1000 + seed, 1.0, 4);
            let m2 = random_smooth_field(&p.ops.a, 2000 + seed, 1.0, 4);
            let f1 = p.fixed_point_map(&state, &m1).unwrap().0;
            let f2 = p.fixed_point_map(&state, &m2).unwrap().0;
            let ratio = f1.sub(&f2).norm() / m1.sub(&m2).norm();
            assert!(ratio < 1.0, "map failed to contract: {ratio}");
            k_hats.push(ratio / p.config.h);
        }
        let lo = k_hats.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = k_hats.iter().cloned().fold(0.0f64, f64::max);
        assert!(
            hi <= 2.0 * lo,
            "pairwise K̂ spread exceeds a factor 2: [{lo}, {hi}]"
        );
        for &k in &k_hats {
            // the per-pair ratio obeys the K̂·h bound by construction of K̂
            assert!(k * p.config.h <= hi * p.config.h * (1.0 + 1e-3));
        }
    }

    #[test]
    fn obstacle_overshoot_bounded_by_lambda_times_force() {
        let potential = PotentialSpec::double_obstacle(1.0).unwrap();
        let grid = GridSpec::dim1(std::f64::consts::PI, 48).unwrap();
        let ops = Operators::uniform(grid, Bc::Neumann);
        let mut cfg = SimConfig::new(0.01, 30).with_stabilization_for(&potential, 0.1);
        cfg.lambda = 0.05;
        let p = Problem::new(cfg, ops, potential, Proliferation::smooth_clamp(1.0, 1.0).unwrap())
            .unwrap();
        let state = SimState::initial(
            Field::from_fn(grid, |x| 1.5 * x[0].cos()),
            Field::from_fn(grid, |x| 0.9 * (2.0 * x[0]).cos()),
            Field::constant(grid, 0.5),
        )
        .unwrap();
        let (traj, reports) = p.run(state).unwrap();
        for (n, report) in reports.iter().enumerate() {
            let phi = &traj.sequence(crate::trajectory::FieldKind::Phi)[n + 1];
            let overshoot = phi
                .values()
                .iter()
                .fold(0.0f64, |m, &v| m.max(v.abs() - 1.0));
            assert!(
                overshoot <= p.config.lambda * report.f1_sup * (1.0 + 1e-9) + 1e-12,
                "overshoot {overshoot} exceeds λ·sup|f₁^λ| = {}",
                p.config.lambda * report.f1_sup
            );
        }
    }

    #[test]
    fn inadmissible_initial_data_is_rejected() {
        let p = small_problem(
            PotentialSpec::double_obstacle(1.0).unwrap(),
            Proliferation::zero(),
            0.1,
        );
        let grid = *p.ops.grid();
        let state = SimState::initial(
            Field::zeros(grid),
            Field::constant(grid, 2.0),
            Field::zeros(grid),
        )
        .unwrap();
        let err = p.run(state).unwrap_err();
        assert!(err.to_string().contains("φ₀"));
    }

    #[test]
    fn zero_steps_returns_initial_state_only() {
        let potential = PotentialSpec::regular();
        let grid = GridSpec::dim1(1.0, 16).unwrap();
        let cfg = SimConfig::new(0.1, 0).with_stabilization_for(&potential, 0.1);
        let p = Problem::new(
            cfg,
            Operators::uniform(grid, Bc::Neumann),
            potential,
            Proliferation::zero(),
        )
        .unwrap();
        let state = SimState::initial(
            Field::constant(grid, 1.0),
            Field::constant(grid, 0.5),
            Field::zeros(grid),
        )
        .unwrap();
        let (traj, reports) = p.run(state).unwrap();
        assert_eq!(traj.n_steps(), 0);
        assert!(reports.is_empty());
    }

    #[test]
    fn runs_are_deterministic() {
        let p = small_problem(
            PotentialSpec::regular(),
            Proliferation::smooth_clamp(1.0, 1.0).unwrap(),
            0.05,
        );
        let grid = *p.ops.grid();
        let init = || {
            SimState::initial(
                random_field(grid, 81, 0.4),
                random_field(grid, 82, 0.4),
                random_field(grid, 83, 0.4),
            )
            .unwrap()
        };
        let (t1, _) = p.run(init()).unwrap();
        let (t2, _) = p.run(init()).unwrap();
        for kind in crate::trajectory::FieldKind::ALL {
            for (a, b) in t1.sequence(kind).iter().zip(t2.sequence(kind)) {
                assert_eq!(a.values(), b.values());
            }
        }
    }

    #[test]
    fn mass_identity_on_a_short_run() {
        // Neumann A and C: the weighted mean of αμ + φ + S is conserved
        let p = small_problem(
            PotentialSpec::regular(),
            Proliferation::smooth_clamp(1.0, 1.0).unwrap(),
            0.02,
        );
        let grid = *p.ops.grid();
        let state = SimState::initial(
            random_field(grid, 91, 0.4),
            random_field(grid, 92, 0.4),
            random_field(grid, 93, 0.4),
        )
        .unwrap();
        let mass = |s: &SimState| {
            s.mu.scale(p.config.alpha).axpy(1.0, &s.phi).axpy(1.0, &s.s).mean()
        };
        let m0 = mass(&state);
        let (traj, _) = p.run(state).unwrap();
        for n in 0..=traj.n_steps() {
            let m = mass(&traj.state(n));
            assert!((m - m0).abs() <= 1e-10 * (1.0 + m0.abs()));
        }
    }

    #[test]
    fn two_dimensional_smoke_run() {
        let potential = PotentialSpec::regular();
        let grid = GridSpec::dim2([1.0, 1.5], [12, 10]).unwrap();
        let cfg = SimConfig::new(0.05, 3).with_stabilization_for(&potential, 0.1);
        let p = Problem::new(
            cfg,
            Operators::uniform(grid, Bc::Neumann),
            potential,
            Proliferation::smooth_clamp(1.0, 1.0).unwrap(),
        )
        .unwrap();
        let state = SimState::initial(
            random_field(grid, 101, 0.3),
            random_field(grid, 102, 0.3),
            random_field(grid, 103, 0.3),
        )
        .unwrap();
        let (traj, reports) = p.run(state).unwrap();
        assert_eq!(traj.n_steps(), 3);
        assert!(reports.iter().all(|r| r.outer_ratio < 1.0));
        assert!(traj.sequence(crate::trajectory::FieldKind::Phi)[3].all_finite());
    }
}
