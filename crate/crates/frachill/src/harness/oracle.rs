//! Independent reference computations used by the verification suite.
//!
//! Everything here deliberately avoids the code paths it is used to check:
//! the Moreau envelope is evaluated by brute-force grid minimization instead
//! of the resolvent, and the linear (`P ≡ 0`, `f ≡ 0`) benchmark is solved
//! in closed form per eigenmode instead of through the stepper.

use crate::potential::PotentialSpec;

/// `min_s { |s−r|²/(2λ) + F₁(s) }` by scanning a uniform grid over the
/// effective domain of `F₁` intersected with a window around `0` and `r`,
/// then shrinking the winning bracket by golden-section search (the
/// objective is strictly convex, so the bracket refinement is exact). The
/// refinement matters for the logarithmic potential, whose minimizer can
/// sit within `e^{−|r|/λ}` of ±1 — closer than any uniform grid resolves.
pub fn yosida_by_minimization(
    spec: &PotentialSpec,
    lambda: f64,
    r: f64,
    grid_points: usize,
) -> f64 {
    let objective = |s: f64| {
        let f1 = spec.eval_f1_convex(s);
        if f1.is_finite() {
            (s - r) * (s - r) / (2.0 * lambda) + f1
        } else {
            f64::INFINITY
        }
    };
    let (dlo, dhi) = spec.f1_domain();
    let lo = (r.min(0.0) - 0.5).max(dlo);
    let hi = (r.max(0.0) + 0.5).min(dhi);
    let mut best = f64::INFINITY;
    let mut best_index = 0usize;
    for i in 0..grid_points {
        let s = lo + (hi - lo) * i as f64 / (grid_points - 1) as f64;
        let value = objective(s);
        if value < best {
            best = value;
            best_index = i;
        }
    }
    // golden-section refinement on the bracket around the winning point
    let spacing = (hi - lo) / (grid_points - 1) as f64;
    let mut a = (lo + (best_index as f64 - 1.0) * spacing).max(lo);
    let mut b = (lo + (best_index as f64 + 1.0) * spacing).min(hi);
    let inv_phi = 0.5 * (5.0f64.sqrt() - 1.0);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (objective(c), objective(d));
    for _ in 0..120 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = objective(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = objective(d);
        }
        best = best.min(fc.min(fd));
    }
    best
}

/// Exact solution at time `t` of the coupled linear mode system
///
/// ```text
/// α m' + p' + a m = 0,
/// β p' + b p     = m,
/// ```
///
/// which is what the full scheme reduces to per eigenmode when `P ≡ 0` and
/// `f ≡ 0` with shared eigenbases (`a = λ_A^{2ρ}`, `b = λ_B^{2σ}`).
/// Eliminating `m = βp' + bp` gives `αβ p'' + (αb + 1 + aβ) p' + ab p = 0`,
/// whose discriminant `(αb − aβ)² + 2(αb + aβ) + 1 ≥ 1` guarantees two
/// distinct real roots.
#[allow(clippy::too_many_arguments)]
pub fn linear_mode_exact(alpha: f64, beta: f64, a: f64, b: f64, m0: f64, p0: f64, t: f64) -> (f64, f64) {
    let qa = alpha * beta;
    let qb = alpha * b + 1.0 + a * beta;
    let qc = a * b;
    let disc = (qb * qb - 4.0 * qa * qc).sqrt();
    let s1 = (-qb + disc) / (2.0 * qa);
    let s2 = (-qb - disc) / (2.0 * qa);
    let dp0 = (m0 - b * p0) / beta;
    // p = c1·e^{s1 t} + c2·e^{s2 t} with p(0) = p0, p'(0) = dp0
    let c1 = (dp0 - s2 * p0) / (s1 - s2);
    let c2 = p0 - c1;
    let p = c1 * (s1 * t).exp() + c2 * (s2 * t).exp();
    let dp = c1 * s1 * (s1 * t).exp() + c2 * s2 * (s2 * t).exp();
    let m = beta * dp + b * p;
    (m, p)
}

/// The semi-implicit recursion the scheme performs on one mode of the same
/// linear system: `n` steps of
///
/// ```text
/// α(m⁺−m)/h + (p⁺−p)/h + a m⁺ = 0,
/// β(p⁺−p)/h + b p⁺           = m⁺.
/// ```
#[allow(clippy::too_many_arguments)]
pub fn linear_mode_recursion(
    alpha: f64,
    beta: f64,
    a: f64,
    b: f64,
    m0: f64,
    p0: f64,
    h: f64,
    n: usize,
) -> (f64, f64) {
    let mut m = m0;
    let mut p = p0;
    // per step solve the 2×2 system
    //   (α/h + a) m⁺ + (1/h) p⁺ = (α m + p)/h
    //   −m⁺ + (β/h + b) p⁺      = (β/h) p
    let a11 = alpha / h + a;
    let a12 = 1.0 / h;
    let a21 = -1.0;
    let a22 = beta / h + b;
    let det = a11 * a22 - a12 * a21;
    for _ in 0..n {
        let r1 = (alpha * m + p) / h;
        let r2 = beta / h * p;
        let m_next = (r1 * a22 - a12 * r2) / det;
        let p_next = (a11 * r2 - a21 * r1) / det;
        m = m_next;
        p = p_next;
    }
    (m, p)
}

/// Implicit-Euler decay of one nutrient mode: `n` steps of
/// `(s⁺−s)/h + c s⁺ = 0`, i.e. `s ↦ s/(1 + hc)`.
pub fn nutrient_mode_recursion(c: f64, s0: f64, h: f64, n: usize) -> f64 {
    s0 / (1.0 + h * c).powi(n as i32)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_mode_solution_satisfies_the_ode() {
        // finite-difference check of both equations at a handful of times
        let (alpha, beta, a, b) = (0.8, 1.3, 2.0, 0.7);
        let (m0, p0) = (0.9, -0.4);
        let eps = 1e-6;
        for &t in &[0.1, 0.5, 1.5] {
            let (m, p) = linear_mode_exact(alpha, beta, a, b, m0, p0, t);
            let (mp, pp) = linear_mode_exact(alpha, beta, a, b, m0, p0, t + eps);
            let (mm, pm) = linear_mode_exact(alpha, beta, a, b, m0, p0, t - eps);
            let dm = (mp - mm) / (2.0 * eps);
            let dp = (pp - pm) / (2.0 * eps);
            assert!((alpha * dm + dp + a * m).abs() < 1e-6);
            assert!((beta * dp + b * p - m).abs() < 1e-6);
        }
        // initial data reproduced
        let (m, p) = linear_mode_exact(alpha, beta, a, b, m0, p0, 0.0);
        assert!((m - m0).abs() < 1e-12 && (p - p0).abs() < 1e-12);
    }

    #[test]
    fn recursion_converges_to_exact_at_first_order() {
        let (alpha, beta, a, b) = (1.0, 1.0, 3.0, 1.5);
        let (m0, p0) = (1.0, 0.5);
        let t = 0.5;
        let mut errors = Vec::new();
        for &n in &[50usize, 100, 200] {
            let h = t / n as f64;
            let (m, p) = linear_mode_recursion(alpha, beta, a, b, m0, p0, h, n);
            let (me, pe) = linear_mode_exact(alpha, beta, a, b, m0, p0, t);
            errors.push(((m - me).powi(2) + (p - pe).powi(2)).sqrt());
        }
        let order1 = (errors[0] / errors[1]).log2();
        let order2 = (errors[1] / errors[2]).log2();
        assert!((order1 - 1.0).abs() < 0.1, "observed order {order1}");
        assert!((order2 - 1.0).abs() < 0.1, "observed order {order2}");
    }

    #[test]
    fn minimization_matches_clamp_for_the_obstacle() {
        let obs = PotentialSpec::double_obstacle(1.0).unwrap();
        // F₁^λ(1.5) at λ = 0.1 is 0.5²/0.2 = 1.25
        let value = yosida_by_minimization(&obs, 0.1, 1.5, 100_000);
        assert!((value - 1.25).abs() < 1e-6);
    }
}
