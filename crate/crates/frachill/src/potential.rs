//! Double-well potentials, their convex/smooth splits, and the
//! Moreau–Yosida regularization.
//!
//! Every potential is handled as `F = F₁ + F₂` with `F₁ ≥ 0` convex,
//! `F₁(0) = 0`, and `f₂ = F₂'` globally Lipschitz. The canonical splits are
//!
//! * regular: `F₁ = r⁴/4`, `F₂ = 1/4 − r²/2`, so `F = ¼(r²−1)²`;
//! * logarithmic: `F₁ = (1+r)ln(1+r) + (1−r)ln(1−r)`, `F₂ = −c₁r²`;
//! * double obstacle: `F₁ = indicator of [−1,1]`, `F₂ = c₂(1−r²)`;
//!
//! plus a polynomial hook (`F₁ = a·r⁴/4`, `F₂ = b·r²/2`) whose zero setting
//! switches the nonlinearity off entirely.
//!
//! The regularization is computed through the resolvent
//! `J_λ(r) = (I + λf₁)⁻¹(r)`:
//!
//! ```text
//! f₁^λ(r) = (r − J_λ(r)) / λ,
//! F₁^λ(r) = F₁(J_λ(r)) + |J_λ(r) − r|² / (2λ)
//!         = min_s { |s − r|²/(2λ) + F₁(s) }.
//! ```
//!
//! `J_λ` has a closed form for the obstacle (clamp onto `[−1,1]`); the
//! other variants solve their scalar monotone equation with a safeguarded
//! Newton–bisection iteration.

use crate::error::{Error, Result};

/// Which double-well potential, with its shape parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PotentialKind {
    /// `F(r) = ¼(r²−1)²`.
    Regular,
    /// Logarithmic (Flory–Huggins) potential with quadratic coefficient `c1 > 0`.
    Logarithmic { c1: f64 },
    /// Indicator of `[−1,1]` plus `c2·(1−r²)`, `c2 > 0`.
    DoubleObstacle { c2: f64 },
    /// `F₁ = convex_quartic·r⁴/4`, `F₂ = smooth_quadratic·r²/2`.
    Polynomial {
        convex_quartic: f64,
        smooth_quadratic: f64,
    },
}

/// Parameters of the Yosida regularization and its scalar root solves.
#[derive(Debug, Clone, Copy)]
pub struct YosidaParams {
    pub lambda: f64,
    pub root_tolerance: f64,
    pub max_root_iters: usize,
}

impl YosidaParams {
    pub fn new(lambda: f64) -> Result<Self> {
        if lambda <= 0.0 || !lambda.is_finite() {
            return Err(Error::config(format!(
                "Yosida level must be positive, got {lambda}"
            )));
        }
        Ok(YosidaParams {
            lambda,
            root_tolerance: 1e-14,
            max_root_iters: 200,
        })
    }
}

/// A split potential together with its recorded structural constants.
#[derive(Debug, Clone)]
pub struct PotentialSpec {
    kind: PotentialKind,
    lip_f2: f64,
    lower_bound_c0: f64,
    c0_sample_range: (f64, f64),
    c0_min_lambda: f64,
}

/// Sample range and Yosida levels over which the lower bound `C₀` is recorded.
const C0_RANGE: (f64, f64) = (-4.0, 4.0);
const C0_LAMBDAS: [f64; 3] = [1.0, 0.1, 0.01];

impl PotentialSpec {
    pub fn regular() -> Self {
        Self::with_recorded_bounds(PotentialKind::Regular, 1.0)
    }

    pub fn logarithmic(c1: f64) -> Result<Self> {
        if c1 <= 0.0 || !c1.is_finite() {
            return Err(Error::config(format!(
                "logarithmic potential needs c1 > 0, got {c1}"
            )));
        }
        Ok(Self::with_recorded_bounds(
            PotentialKind::Logarithmic { c1 },
            2.0 * c1,
        ))
    }

    pub fn double_obstacle(c2: f64) -> Result<Self> {
        if c2 <= 0.0 || !c2.is_finite() {
            return Err(Error::config(format!(
                "double obstacle potential needs c2 > 0, got {c2}"
            )));
        }
        Ok(Self::with_recorded_bounds(
            PotentialKind::DoubleObstacle { c2 },
            2.0 * c2,
        ))
    }

    /// Polynomial hook; `convex_quartic ≥ 0` keeps `F₁` convex.
    pub fn polynomial(convex_quartic: f64, smooth_quadratic: f64) -> Result<Self> {
        if convex_quartic < 0.0 || !convex_quartic.is_finite() {
            return Err(Error::config(
                "polynomial potential needs a nonnegative quartic coefficient",
            ));
        }
        Ok(Self::with_recorded_bounds(
            PotentialKind::Polynomial {
                convex_quartic,
                smooth_quadratic,
            },
            smooth_quadratic.abs(),
        ))
    }

    /// No nonlinearity at all (`f ≡ 0`); used by the linear benchmarks.
    pub fn zero() -> Self {
        Self::polynomial(0.0, 0.0).expect("valid coefficients")
    }

    fn with_recorded_bounds(kind: PotentialKind, lip_f2: f64) -> Self {
        let mut spec = PotentialSpec {
            kind,
            lip_f2,
            lower_bound_c0: 0.0,
            c0_sample_range: C0_RANGE,
            c0_min_lambda: *C0_LAMBDAS.last().unwrap(),
        };
        // Record C₀ with F₁^λ + F₂ ≥ −C₀ over the sample range for every
        // recorded λ. The bound cannot hold globally for large λ, so the
        // range and the smallest λ are stored alongside.
        let mut worst = 0.0f64;
        let samples = 2001;
        for &lambda in &C0_LAMBDAS {
            let y = YosidaParams::new(lambda).expect("positive lambda");
            for i in 0..samples {
                let r = C0_RANGE.0 + (C0_RANGE.1 - C0_RANGE.0) * i as f64 / (samples - 1) as f64;
                let value = spec.yosida_f(&y, r).expect("resolvent converges");
                worst = worst.min(value);
            }
        }
        spec.lower_bound_c0 = (-worst).max(0.0) + 1e-9;
        spec
    }

    pub fn kind(&self) -> PotentialKind {
        self.kind
    }

    /// Recorded Lipschitz constant of `f₂`.
    pub fn lip_f2(&self) -> f64 {
        self.lip_f2
    }

    /// Recorded constant with `F₁^λ(s) + F₂(s) ≥ −C₀` on the sample range.
    pub fn lower_bound_c0(&self) -> f64 {
        self.lower_bound_c0
    }

    /// Range of `s` over which `C₀` was recorded.
    pub fn c0_sample_range(&self) -> (f64, f64) {
        self.c0_sample_range
    }

    /// Smallest Yosida level for which `C₀` was recorded.
    pub fn c0_min_lambda(&self) -> f64 {
        self.c0_min_lambda
    }

    /// Stabilization constant `L = Lip f₂ · (1 + margin)`.
    pub fn stabilization_l(&self, margin: f64) -> f64 {
        self.lip_f2 * (1.0 + margin)
    }

    /// Effective domain of `f₁` as a closed interval (±∞ when unbounded).
    pub fn f1_domain(&self) -> (f64, f64) {
        match self.kind {
            PotentialKind::Regular | PotentialKind::Polynomial { .. } => {
                (f64::NEG_INFINITY, f64::INFINITY)
            }
            PotentialKind::Logarithmic { .. } => (-1.0, 1.0),
            PotentialKind::DoubleObstacle { .. } => (-1.0, 1.0),
        }
    }

    /// Convex part `F₁` (infinite outside its effective domain).
    pub fn eval_f1_convex(&self, r: f64) -> f64 {
        match self.kind {
            PotentialKind::Regular => 0.25 * r.powi(4),
            PotentialKind::Logarithmic { .. } => {
                if r.abs() > 1.0 {
                    f64::INFINITY
                } else {
                    // x ln x extended by 0 at x = 0
                    let xlnx = |x: f64| if x <= 0.0 { 0.0 } else { x * x.ln() };
                    xlnx(1.0 + r) + xlnx(1.0 - r)
                }
            }
            PotentialKind::DoubleObstacle { .. } => {
                if r.abs() <= 1.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            PotentialKind::Polynomial { convex_quartic, .. } => 0.25 * convex_quartic * r.powi(4),
        }
    }

    /// Smooth part `F₂`.
    pub fn eval_f2_smooth(&self, r: f64) -> f64 {
        match self.kind {
            PotentialKind::Regular => 0.25 - 0.5 * r * r,
            PotentialKind::Logarithmic { c1 } => -c1 * r * r,
            PotentialKind::DoubleObstacle { c2 } => c2 * (1.0 - r * r),
            PotentialKind::Polynomial {
                smooth_quadratic, ..
            } => 0.5 * smooth_quadratic * r * r,
        }
    }

    /// Derivative `f₂ = F₂'`.
    pub fn eval_f2(&self, r: f64) -> f64 {
        match self.kind {
            PotentialKind::Regular => -r,
            PotentialKind::Logarithmic { c1 } => -2.0 * c1 * r,
            PotentialKind::DoubleObstacle { c2 } => -2.0 * c2 * r,
            PotentialKind::Polynomial {
                smooth_quadratic, ..
            } => smooth_quadratic * r,
        }
    }

    /// Minimal section `f₁°(r)`: the element of `f₁(r)` of smallest modulus.
    ///
    /// Outside the effective domain of `f₁` the value is ±∞.
    pub fn f1_min_modulus(&self, r: f64) -> f64 {
        match self.kind {
            PotentialKind::Regular => r.powi(3),
            PotentialKind::Logarithmic { .. } => {
                if r.abs() < 1.0 {
                    ((1.0 + r) / (1.0 - r)).ln()
                } else {
                    f64::INFINITY.copysign(r)
                }
            }
            PotentialKind::DoubleObstacle { .. } => {
                if r.abs() <= 1.0 {
                    0.0
                } else {
                    f64::INFINITY.copysign(r)
                }
            }
            PotentialKind::Polynomial { convex_quartic, .. } => convex_quartic * r.powi(3),
        }
    }

    /// Resolvent `J_λ(r)`: the unique solution of `J + λ f₁(J) ∋ r`.
    pub fn resolvent(&self, y: &YosidaParams, r: f64) -> Result<f64> {
        match self.kind {
            PotentialKind::DoubleObstacle { .. } => Ok(r.clamp(-1.0, 1.0)),
            PotentialKind::Regular => cubic_resolvent(1.0, y, r),
            PotentialKind::Polynomial { convex_quartic, .. } => {
                cubic_resolvent(convex_quartic, y, r)
            }
            PotentialKind::Logarithmic { .. } => log_resolvent(y, r),
        }
    }

    /// Yosida approximation `f₁^λ(r) = (r − J_λ(r))/λ`.
    pub fn yosida_f1(&self, y: &YosidaParams, r: f64) -> Result<f64> {
        Ok((r - self.resolvent(y, r)?) / y.lambda)
    }

    /// Moreau envelope `F₁^λ(r) = F₁(J_λ r) + |J_λ r − r|²/(2λ)`.
    pub fn yosida_f1_convex(&self, y: &YosidaParams, r: f64) -> Result<f64> {
        let j = self.resolvent(y, r)?;
        let d = j - r;
        Ok(self.eval_f1_convex(j) + d * d / (2.0 * y.lambda))
    }

    /// Regularized potential `F^λ(r) = F₁^λ(r) + F₂(r)`.
    pub fn yosida_f(&self, y: &YosidaParams, r: f64) -> Result<f64> {
        Ok(self.yosida_f1_convex(y, r)? + self.eval_f2_smooth(r))
    }

    /// Regularized derivative `f^λ(r) = f₁^λ(r) + f₂(r)`.
    pub fn yosida_f_derivative_sum(&self, y: &YosidaParams, r: f64) -> Result<f64> {
        Ok(self.yosida_f1(y, r)? + self.eval_f2(r))
    }

    /// A.e. derivative `(f₁^λ)'(r) = (1 − J_λ'(r))/λ ∈ [0, 1/λ]`,
    /// right-continuous at the obstacle kinks (semismooth Newton convention).
    pub fn yosida_f1_derivative(&self, y: &YosidaParams, r: f64) -> Result<f64> {
        match self.kind {
            PotentialKind::DoubleObstacle { .. } => {
                Ok(if (-1.0..1.0).contains(&r) { 0.0 } else { 1.0 / y.lambda })
            }
            PotentialKind::Regular => {
                let j = self.resolvent(y, r)?;
                let fp = 3.0 * j * j;
                Ok(fp / (1.0 + y.lambda * fp))
            }
            PotentialKind::Polynomial { convex_quartic, .. } => {
                let j = self.resolvent(y, r)?;
                let fp = 3.0 * convex_quartic * j * j;
                Ok(fp / (1.0 + y.lambda * fp))
            }
            PotentialKind::Logarithmic { .. } => {
                let j = self.resolvent(y, r)?;
                let fp = 2.0 / (1.0 - j * j).max(f64::MIN_POSITIVE);
                Ok(fp / (1.0 + y.lambda * fp))
            }
        }
    }
}

/// Solve `J + λa·J³ = r` (monotone cubic) by safeguarded Newton.
fn cubic_resolvent(a: f64, y: &YosidaParams, r: f64) -> Result<f64> {
    if a == 0.0 {
        return Ok(r);
    }
    let la = y.lambda * a;
    let g = |j: f64| j + la * j * j * j - r;
    // J lies between 0 and r
    let (mut lo, mut hi) = if r >= 0.0 { (0.0, r) } else { (r, 0.0) };
    let mut j = r / (1.0 + la);
    for _ in 0..y.max_root_iters {
        let gj = g(j);
        if gj.abs() <= y.root_tolerance * (1.0 + r.abs()) {
            return Ok(j);
        }
        if gj > 0.0 {
            hi = j;
        } else {
            lo = j;
        }
        let step = gj / (1.0 + 3.0 * la * j * j);
        let mut next = j - step;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if next == j {
            return Ok(j);
        }
        j = next;
    }
    Err(Error::solver(
        "cubic resolvent",
        format!("no convergence within {} iterations; bracket [{lo}, {hi}]", y.max_root_iters),
    ))
}

/// Solve `J + λ·ln((1+J)/(1−J)) = r` on `(−1, 1)` by Newton with a
/// bisection safeguard. `f₁` blows up at ±1, so the bracket never escapes.
fn log_resolvent(y: &YosidaParams, r: f64) -> Result<f64> {
    const EDGE: f64 = 1e-12;
    let g = |j: f64| j + y.lambda * ((1.0 + j) / (1.0 - j)).ln() - r;
    let mut lo = -1.0 + f64::EPSILON / 2.0;
    let mut hi = 1.0 - f64::EPSILON / 2.0;
    // If even the closest representable points don't bracket, the true root
    // is beyond f64 resolution; saturate at the edge.
    if g(hi) <= 0.0 {
        return Ok(hi);
    }
    if g(lo) >= 0.0 {
        return Ok(lo);
    }
    let mut j = r.clamp(-1.0 + EDGE, 1.0 - EDGE);
    for _ in 0..y.max_root_iters {
        let gj = g(j);
        if gj.abs() <= y.root_tolerance * (1.0 + r.abs()) {
            return Ok(j);
        }
        if gj > 0.0 {
            hi = j;
        } else {
            lo = j;
        }
        let slope = 1.0 + y.lambda * 2.0 / (1.0 - j * j);
        let mut next = j - gj / slope;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if next == j {
            return Ok(j);
        }
        j = next;
    }
    Err(Error::solver(
        "logarithmic resolvent",
        format!("no convergence within {} iterations; bracket [{lo}, {hi}]", y.max_root_iters),
    ))
}

/// Proliferation function `P : ℝ → [0, sup P]`, bounded and Lipschitz,
/// with the two constants recorded at construction.
#[derive(Debug, Clone)]
pub struct Proliferation {
    kind: ProliferationKind,
    sup: f64,
    lip: f64,
}

#[derive(Debug, Clone)]
pub enum ProliferationKind {
    Constant { p0: f64 },
    /// `P(s) = p0·(1 + tanh(s/width))/2`.
    SmoothClamp { p0: f64, width: f64 },
    /// Piecewise-linear table with constant extrapolation.
    Tabulated { xs: Vec<f64>, ys: Vec<f64> },
}

impl Proliferation {
    pub fn constant(p0: f64) -> Result<Self> {
        if p0 < 0.0 || !p0.is_finite() {
            return Err(Error::config(format!("P must be nonnegative, got {p0}")));
        }
        Ok(Proliferation {
            kind: ProliferationKind::Constant { p0 },
            sup: p0,
            lip: 0.0,
        })
    }

    pub fn zero() -> Self {
        Self::constant(0.0).expect("zero is admissible")
    }

    pub fn smooth_clamp(p0: f64, width: f64) -> Result<Self> {
        if p0 < 0.0 || !p0.is_finite() || width <= 0.0 || !width.is_finite() {
            return Err(Error::config(format!(
                "smooth clamp needs p0 ≥ 0 and width > 0, got p0={p0}, width={width}"
            )));
        }
        Ok(Proliferation {
            kind: ProliferationKind::SmoothClamp { p0, width },
            sup: p0,
            lip: 0.5 * p0 / width,
        })
    }

    pub fn tabulated(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() || xs.len() < 2 {
            return Err(Error::config("table needs at least two matching points"));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config("table abscissae must be strictly increasing"));
        }
        if ys.iter().any(|&v| v < 0.0 || !v.is_finite()) {
            return Err(Error::config("table values must be nonnegative and finite"));
        }
        let sup = ys.iter().cloned().fold(0.0f64, f64::max);
        let lip = xs
            .windows(2)
            .zip(ys.windows(2))
            .map(|(x, y)| ((y[1] - y[0]) / (x[1] - x[0])).abs())
            .fold(0.0f64, f64::max);
        Ok(Proliferation {
            kind: ProliferationKind::Tabulated { xs, ys },
            sup,
            lip,
        })
    }

    pub fn eval(&self, s: f64) -> f64 {
        match &self.kind {
            ProliferationKind::Constant { p0 } => *p0,
            ProliferationKind::SmoothClamp { p0, width } => {
                0.5 * p0 * (1.0 + (s / width).tanh())
            }
            ProliferationKind::Tabulated { xs, ys } => {
                if s <= xs[0] {
                    return ys[0];
                }
                if s >= *xs.last().unwrap() {
                    return *ys.last().unwrap();
                }
                let k = xs.partition_point(|&x| x <= s) - 1;
                let t = (s - xs[k]) / (xs[k + 1] - xs[k]);
                ys[k] + t * (ys[k + 1] - ys[k])
            }
        }
    }

    /// Recorded bound `sup P`.
    pub fn sup(&self) -> f64 {
        self.sup
    }

    /// Recorded Lipschitz constant.
    pub fn lip(&self) -> f64 {
        self.lip
    }

    pub fn kind(&self) -> &ProliferationKind {
        &self.kind
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_variants() -> Vec<PotentialSpec> {
        vec![
            PotentialSpec::regular(),
            PotentialSpec::logarithmic(2.0).unwrap(),
            PotentialSpec::double_obstacle(1.0).unwrap(),
        ]
    }

    #[test]
    fn canonical_split_values() {
        let reg = PotentialSpec::regular();
        // F(±1) = 0 and f(0) = 0 for the double well
        for r in [-1.0, 1.0] {
            assert!((reg.eval_f1_convex(r) + reg.eval_f2_smooth(r)).abs() < 1e-15);
        }
        assert_eq!(reg.f1_min_modulus(0.0) + reg.eval_f2(0.0), 0.0);
        assert_eq!(reg.lip_f2(), 1.0);

        let log = PotentialSpec::logarithmic(2.0).unwrap();
        assert_eq!(log.eval_f2_smooth(1.5), -2.0 * 1.5 * 1.5);
        assert_eq!(log.eval_f2(1.5), -4.0 * 1.5);
        assert_eq!(log.lip_f2(), 4.0);

        let obs = PotentialSpec::double_obstacle(1.0).unwrap();
        assert_eq!(obs.eval_f2_smooth(0.5), 1.0 - 0.25);
        assert_eq!(obs.eval_f2(0.5), -1.0);
        assert_eq!(obs.lip_f2(), 2.0);
    }

    #[test]
    fn stabilization_margin() {
        assert!((PotentialSpec::regular().stabilization_l(0.1) - 1.1).abs() < 1e-15);
        let log = PotentialSpec::logarithmic(2.0).unwrap();
        assert!((log.stabilization_l(0.1) - 4.4).abs() < 1e-15);
        let obs = PotentialSpec::double_obstacle(1.0).unwrap();
        assert!((obs.stabilization_l(0.1) - 2.2).abs() < 1e-15);
        assert_eq!(PotentialSpec::zero().stabilization_l(0.1), 0.0);
    }

    #[test]
    fn obstacle_resolvent_is_clamp() {
        let obs = PotentialSpec::double_obstacle(1.0).unwrap();
        let y = YosidaParams::new(0.1).unwrap();
        assert_eq!(obs.resolvent(&y, 1.5).unwrap(), 1.0);
        assert_eq!(obs.resolvent(&y, -3.0).unwrap(), -1.0);
        assert_eq!(obs.resolvent(&y, 0.7).unwrap(), 0.7);
        // f₁^λ(1.5) = (1.5 − 1)/0.1 = 5 and F₁^λ(1.5) = 0.5²/0.2 = 1.25
        assert!((obs.yosida_f1(&y, 1.5).unwrap() - 5.0).abs() < 1e-12);
        assert!((obs.yosida_f1_convex(&y, 1.5).unwrap() - 1.25).abs() < 1e-12);
        // inside the constraint set the regularization vanishes
        assert_eq!(obs.yosida_f1(&y, 0.3).unwrap(), 0.0);
        assert_eq!(obs.yosida_f1_convex(&y, -1.0).unwrap(), 0.0);
    }

    #[test]
    fn cubic_resolvent_examples() {
        let reg = PotentialSpec::regular();
        let y = YosidaParams::new(1.0).unwrap();
        // 1 + 1³ = 2
        assert!((reg.resolvent(&y, 2.0).unwrap() - 1.0).abs() < 1e-12);
        // substitution check on random-ish points
        for r in [-3.0, -0.4, 0.9, 5.5] {
            let j = reg.resolvent(&y, r).unwrap();
            assert!((j + y.lambda * j * j * j - r).abs() < 1e-12 * (1.0 + r.abs()));
        }
    }

    #[test]
    fn zero_is_fixed_point_of_every_resolvent() {
        let y = YosidaParams::new(0.5).unwrap();
        for spec in all_variants() {
            assert_eq!(spec.resolvent(&y, 0.0).unwrap(), 0.0);
            assert_eq!(spec.yosida_f1(&y, 0.0).unwrap(), 0.0);
            assert_eq!(spec.yosida_f1_convex(&y, 0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn log_resolvent_odd_and_consistent() {
        let log = PotentialSpec::logarithmic(2.0).unwrap();
        let y = YosidaParams::new(0.1).unwrap();
        for r in [0.0, 0.5, 2.0, -3.5] {
            let j = log.resolvent(&y, r).unwrap();
            assert!(j.abs() < 1.0);
            let back = j + y.lambda * ((1.0 + j) / (1.0 - j)).ln();
            // near ±1 one ulp of J moves g by λ·2/(1−J²); allow that much
            let stiffness = 1.0 + y.lambda * 2.0 / (1.0 - j * j);
            let tol = 1e-10 * (1.0 + r.abs()) + 4.0 * f64::EPSILON * stiffness;
            assert!((back - r).abs() < tol, "r={r}: |{back} - {r}| > {tol}");
            let j_neg = log.resolvent(&y, -r).unwrap();
            assert!((j + j_neg).abs() < 1e-10);
        }
        // far outside the physical range the root is closer to 1 than f64
        // resolves; the solver saturates at the representable edge
        let j = log.resolvent(&y, 40.0).unwrap();
        assert!(j < 1.0 && 1.0 - j <= f64::EPSILON);
    }

    #[test]
    fn yosida_inequalities_sampled() {
        // 0 ≤ F₁^λ ≤ F₁, |f₁^λ| ≤ |f₁°| on D(f₁), monotone f₁^λ
        for spec in all_variants() {
            for &lambda in &[1.0, 0.1, 0.01] {
                let y = YosidaParams::new(lambda).unwrap();
                let mut prev: Option<(f64, f64)> = None;
                for i in 0..501 {
                    let r = -3.0 + 6.0 * i as f64 / 500.0;
                    let envelope = spec.yosida_f1_convex(&y, r).unwrap();
                    assert!(envelope >= 0.0);
                    assert!(envelope <= spec.eval_f1_convex(r) + 1e-10);
                    let slope = spec.yosida_f1(&y, r).unwrap();
                    let minimal = spec.f1_min_modulus(r);
                    let (dlo, dhi) = spec.f1_domain();
                    if r >= dlo && r <= dhi && minimal.is_finite() {
                        assert!(slope.abs() <= minimal.abs() + 1e-10);
                    }
                    if let Some((rp, sp)) = prev {
                        assert!(slope >= sp - 1e-12, "f₁^λ not monotone at {r}");
                        // 1/λ-Lipschitz
                        assert!((slope - sp).abs() <= (r - rp) / lambda + 1e-10);
                    }
                    prev = Some((r, slope));
                }
            }
        }
    }

    #[test]
    fn envelope_increases_as_lambda_shrinks() {
        let reg = PotentialSpec::regular();
        let mut last = -1.0;
        for &lambda in &[1.0, 0.3, 0.1, 0.03, 0.01, 1e-4] {
            let y = YosidaParams::new(lambda).unwrap();
            let value = reg.yosida_f1_convex(&y, 2.0).unwrap();
            assert!(value > last);
            last = value;
        }
        // limit is F₁(2) = 2⁴/4 = 4
        assert!(last <= 4.0 && last > 3.9);
    }

    #[test]
    fn envelope_integrates_its_slope() {
        // F₁^λ(r) = ∫₀^r f₁^λ, checked with Simpson quadrature
        for spec in all_variants() {
            let y = YosidaParams::new(0.1).unwrap();
            let r = 1.8;
            let n = 2000;
            let h = r / n as f64;
            let mut integral = 0.0;
            for i in 0..n {
                let a = i as f64 * h;
                let m = a + 0.5 * h;
                let b = a + h;
                integral += h / 6.0
                    * (spec.yosida_f1(&y, a).unwrap()
                        + 4.0 * spec.yosida_f1(&y, m).unwrap()
                        + spec.yosida_f1(&y, b).unwrap());
            }
            let envelope = spec.yosida_f1_convex(&y, r).unwrap();
            assert!(
                (integral - envelope).abs() < 1e-7 * (1.0 + envelope),
                "{:?}: ∫f₁^λ = {integral} vs F₁^λ = {envelope}",
                spec.kind()
            );
        }
    }

    #[test]
    fn recorded_lower_bound_holds() {
        for spec in all_variants() {
            let c0 = spec.lower_bound_c0();
            let (lo, hi) = spec.c0_sample_range();
            for &lambda in &[1.0, 0.1, 0.01] {
                let y = YosidaParams::new(lambda).unwrap();
                for i in 0..400 {
                    let r = lo + (hi - lo) * i as f64 / 399.0;
                    assert!(spec.yosida_f(&y, r).unwrap() >= -c0);
                }
            }
        }
    }

    #[test]
    fn yosida_derivative_matches_difference_quotient() {
        for spec in all_variants() {
            let y = YosidaParams::new(0.05).unwrap();
            for r in [-2.3, -0.6, 0.0, 0.4, 1.7] {
                let d = spec.yosida_f1_derivative(&y, r).unwrap();
                let eps = 1e-6;
                let quotient = (spec.yosida_f1(&y, r + eps).unwrap()
                    - spec.yosida_f1(&y, r - eps).unwrap())
                    / (2.0 * eps);
                // skip the obstacle kinks where the quotient straddles the jump
                if matches!(spec.kind(), PotentialKind::DoubleObstacle { .. })
                    && (r.abs() - 1.0).abs() < 2.0 * eps
                {
                    continue;
                }
                assert!(
                    (d - quotient).abs() < 1e-4 * (1.0 + d.abs()),
                    "{:?} at {r}: {d} vs {quotient}",
                    spec.kind()
                );
            }
        }
    }

    #[test]
    fn obstacle_derivative_uses_right_continuous_branch() {
        let obs = PotentialSpec::double_obstacle(1.0).unwrap();
        let y = YosidaParams::new(0.1).unwrap();
        assert_eq!(obs.yosida_f1_derivative(&y, 1.0).unwrap(), 10.0);
        assert_eq!(obs.yosida_f1_derivative(&y, -1.0).unwrap(), 0.0);
        assert_eq!(obs.yosida_f1_derivative(&y, 0.0).unwrap(), 0.0);
        assert_eq!(obs.yosida_f1_derivative(&y, 2.0).unwrap(), 10.0);
    }

    #[test]
    fn proliferation_variants() {
        let p = Proliferation::smooth_clamp(1.0, 1.0).unwrap();
        assert!((p.eval(0.0) - 0.5).abs() < 1e-15);
        assert!(p.eval(50.0) <= p.sup());
        assert!(p.eval(-50.0) >= 0.0);
        assert_eq!(p.lip(), 0.5);

        let c = Proliferation::constant(2.0).unwrap();
        assert_eq!(c.eval(-7.0), 2.0);
        assert_eq!(c.lip(), 0.0);

        let t = Proliferation::tabulated(vec![0.0, 1.0, 2.0], vec![0.0, 2.0, 1.0]).unwrap();
        assert_eq!(t.eval(-1.0), 0.0);
        assert_eq!(t.eval(0.5), 1.0);
        assert_eq!(t.eval(3.0), 1.0);
        assert_eq!(t.sup(), 2.0);
        assert_eq!(t.lip(), 2.0);
        assert!(Proliferation::tabulated(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
        assert!(Proliferation::constant(-1.0).is_err());
    }

    #[test]
    fn lipschitz_of_p_holds_on_samples() {
        let specs = [
            Proliferation::smooth_clamp(1.5, 0.7).unwrap(),
            Proliferation::tabulated(vec![-1.0, 0.0, 2.0], vec![0.5, 3.0, 0.0]).unwrap(),
        ];
        for p in &specs {
            for i in 0..200 {
                let s = -4.0 + 8.0 * i as f64 / 199.0;
                let t = s + 0.013;
                assert!(p.eval(s) >= 0.0 && p.eval(s) <= p.sup());
                assert!((p.eval(s) - p.eval(t)).abs() <= p.lip() * (t - s) + 1e-12);
            }
        }
    }
}
