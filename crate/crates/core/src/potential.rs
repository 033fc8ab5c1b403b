//! Single-well Lennard–Jones potential
//!
//! ```text
//! F(r) = -h log(1 - r) - r³/3 - h (r²/2 + r)   for r ∈ [0, 1),   +∞ otherwise
//! ```
//!
//! with `h = 1 - φ̄`, its split `F = F₁ + F₂` into the convex singular part
//! `F₁(r) = -h log(1 - r)` and the smooth non-convex remainder, and the
//! `λ`-regularization `F_λ = F₁,λ + F̄₂` used by the solver. `F₁,λ` is `F₁` on
//! `[0, 1 - λ)`, a cubic penalty below `0` and its second-order Taylor
//! polynomial beyond `1 - λ`; `F̄₂` is `F₂` below `1` and its quadratic
//! continuation above.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest admissible regularization parameter.
pub const LAMBDA_BAR: f64 = 0.5;
/// Regularization used by the solver unless configured otherwise.
pub const DEFAULT_LAMBDA: f64 = 1e-3;
/// Absolute tolerance for branch mismatches at the junctions of `F_λ`.
pub const JUNCTION_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PotentialError {
    #[error("phi_bar must lie in (0, 1), got {0}")]
    PhiBar(f64),
    #[error("lambda must lie in [0, {LAMBDA_BAR}], got {0}")]
    Lambda(f64),
    #[error("the regularized potential needs lambda > 0")]
    Unregularized,
    #[error("F' is only defined on [0, 1), got r = {0}")]
    Domain(f64),
    #[error("quadratic growth at infinity is {0}, the requested parabola cannot be dominated")]
    NoQuadraticBound(f64),
}

/// Extended real used for `F`, which is `+∞` off `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtReal {
    Finite(f64),
    PosInfinity,
}

impl ExtReal {
    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(v) => Some(v),
            ExtReal::PosInfinity => None,
        }
    }

    /// `f64` view; the sentinel maps to `f64::INFINITY`.
    pub fn to_f64(self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }
}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => a.partial_cmp(b),
            (ExtReal::Finite(_), ExtReal::PosInfinity) => Some(Ordering::Less),
            (ExtReal::PosInfinity, ExtReal::Finite(_)) => Some(Ordering::Greater),
            (ExtReal::PosInfinity, ExtReal::PosInfinity) => Some(Ordering::Equal),
        }
    }
}

impl PartialEq<f64> for ExtReal {
    fn eq(&self, other: &f64) -> bool {
        matches!(self, ExtReal::Finite(v) if v == other)
    }
}

impl PartialOrd<f64> for ExtReal {
    fn partial_cmp(&self, other: &f64) -> Option<Ordering> {
        self.partial_cmp(&ExtReal::Finite(*other))
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::Finite(v) => write!(f, "{v}"),
            ExtReal::PosInfinity => f.write_str("inf"),
        }
    }
}

/// `φ̄` (the zero of `F'`) and the regularization parameter `λ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialParams {
    phi_bar: f64,
    lambda: f64,
}

impl PotentialParams {
    pub fn new(phi_bar: f64, lambda: f64) -> Result<Self, PotentialError> {
        if !(phi_bar > 0.0 && phi_bar < 1.0) {
            return Err(PotentialError::PhiBar(phi_bar));
        }
        if !(0.0..=LAMBDA_BAR).contains(&lambda) {
            return Err(PotentialError::Lambda(lambda));
        }
        Ok(Self { phi_bar, lambda })
    }

    /// Parameters from `h = 1 - φ̄` directly.
    pub fn from_h(h: f64, lambda: f64) -> Result<Self, PotentialError> {
        Self::new(1.0 - h, lambda)
    }

    pub fn phi_bar(&self) -> f64 {
        self.phi_bar
    }

    pub fn h(&self) -> f64 {
        1.0 - self.phi_bar
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn with_lambda(self, lambda: f64) -> Result<Self, PotentialError> {
        Self::new(self.phi_bar, lambda)
    }

    /// `c₀ = 2 + h - 3 h^{1/3}`.
    pub fn c0(&self) -> f64 {
        c0_of(self.h())
    }

    /// Where `F''` attains its minimum `-c₀` on `[0, 1)`.
    pub fn curvature_minimizer(&self) -> f64 {
        1.0 - self.h().cbrt()
    }

    pub fn regularized(&self) -> Result<Regularized, PotentialError> {
        if self.lambda > 0.0 {
            Ok(Regularized {
                h: self.h(),
                lambda: self.lambda,
            })
        } else {
            Err(PotentialError::Unregularized)
        }
    }

    /// `F(r)`.
    pub fn f(&self, r: f64) -> ExtReal {
        match (self.f1(r), self.f2(r)) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => ExtReal::Finite(a + b),
            _ => ExtReal::PosInfinity,
        }
    }

    /// Convex singular part `F₁`.
    pub fn f1(&self, r: f64) -> ExtReal {
        if (0.0..1.0).contains(&r) {
            ExtReal::Finite(-self.h() * (-r).ln_1p())
        } else {
            ExtReal::PosInfinity
        }
    }

    /// Non-convex part `F₂`, finite for `r < 1`.
    pub fn f2(&self, r: f64) -> ExtReal {
        if r < 1.0 {
            ExtReal::Finite(f2_poly(self.h(), r))
        } else {
            ExtReal::PosInfinity
        }
    }

    /// `F'(r)` on `[0, 1)`.
    pub fn df(&self, r: f64) -> Result<f64, PotentialError> {
        if !(0.0..1.0).contains(&r) {
            return Err(PotentialError::Domain(r));
        }
        let h = self.h();
        Ok(h / (1.0 - r) - r * r - h * (r + 1.0))
    }

    /// `F''(r)` on `[0, 1)`.
    pub fn ddf(&self, r: f64) -> Result<f64, PotentialError> {
        if !(0.0..1.0).contains(&r) {
            return Err(PotentialError::Domain(r));
        }
        let h = self.h();
        Ok(h / ((1.0 - r) * (1.0 - r)) - 2.0 * r - h)
    }
}

pub fn c0_of(h: f64) -> f64 {
    2.0 + h - 3.0 * h.cbrt()
}

fn f2_poly(h: f64, r: f64) -> f64 {
    -r * r * r / 3.0 - h * (0.5 * r * r + r)
}

pub fn eval_f(r: f64, p: &PotentialParams) -> ExtReal {
    p.f(r)
}

pub fn eval_df(r: f64, p: &PotentialParams) -> Result<f64, PotentialError> {
    p.df(r)
}

pub fn eval_f_lambda(r: f64, p: &PotentialParams) -> Result<f64, PotentialError> {
    Ok(p.regularized()?.f(r))
}

pub fn eval_df_lambda(r: f64, p: &PotentialParams) -> Result<f64, PotentialError> {
    Ok(p.regularized()?.df(r))
}

pub fn eval_ddf_lambda(r: f64, p: &PotentialParams) -> Result<f64, PotentialError> {
    Ok(p.regularized()?.ddf(r))
}

/// `F_λ` with `λ > 0` guaranteed; all branches are total on `ℝ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regularized {
    h: f64,
    lambda: f64,
}

impl Regularized {
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn f1(&self, r: f64) -> f64 {
        let (h, l) = (self.h, self.lambda);
        if r < 0.0 {
            -r * r * r / l + 0.5 * h * r * r + h * r
        } else if r < 1.0 - l {
            -h * (-r).ln_1p()
        } else {
            let s = 1.0 - r;
            -h * l.ln() + 1.5 * h - 2.0 * h * s / l + 0.5 * h * s * s / (l * l)
        }
    }

    pub fn df1(&self, r: f64) -> f64 {
        let (h, l) = (self.h, self.lambda);
        if r < 0.0 {
            -3.0 * r * r / l + h * r + h
        } else if r < 1.0 - l {
            h / (1.0 - r)
        } else {
            2.0 * h / l - h * (1.0 - r) / (l * l)
        }
    }

    pub fn ddf1(&self, r: f64) -> f64 {
        let (h, l) = (self.h, self.lambda);
        if r < 0.0 {
            -6.0 * r / l + h
        } else if r < 1.0 - l {
            h / ((1.0 - r) * (1.0 - r))
        } else {
            h / (l * l)
        }
    }

    pub fn f2(&self, r: f64) -> f64 {
        let h = self.h;
        if r < 1.0 {
            f2_poly(h, r)
        } else {
            let d = r - 1.0;
            -1.0 / 3.0 - 1.5 * h + (-1.0 - 2.0 * h) * d + 0.5 * (-2.0 - h) * d * d
        }
    }

    pub fn df2(&self, r: f64) -> f64 {
        let h = self.h;
        if r < 1.0 {
            -r * r - h * (r + 1.0)
        } else {
            (-1.0 - 2.0 * h) + (-2.0 - h) * (r - 1.0)
        }
    }

    pub fn ddf2(&self, r: f64) -> f64 {
        let h = self.h;
        if r < 1.0 {
            -2.0 * r - h
        } else {
            -2.0 - h
        }
    }

    pub fn f(&self, r: f64) -> f64 {
        self.f1(r) + self.f2(r)
    }

    pub fn df(&self, r: f64) -> f64 {
        self.df1(r) + self.df2(r)
    }

    pub fn ddf(&self, r: f64) -> f64 {
        self.ddf1(r) + self.ddf2(r)
    }

    /// Leading coefficient of `F_λ(r) ~ κ r²` as `r → +∞`.
    pub fn quadratic_growth(&self) -> f64 {
        0.5 * self.h / (self.lambda * self.lambda) - 0.5 * (2.0 + self.h)
    }
}

/// Largest branch mismatches of `F_λ` at its three junctions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JunctionReport {
    /// `F₁,λ` value and slope at `r = 0`.
    pub at_zero: f64,
    /// `F₁,λ` value and slope at `r = 1 - λ`.
    pub at_one_minus_lambda: f64,
    /// `F̄₂` value, slope and curvature at `r = 1`.
    pub at_one: f64,
}

impl JunctionReport {
    pub fn max(&self) -> f64 {
        self.at_zero.max(self.at_one_minus_lambda).max(self.at_one)
    }

    pub fn passes(&self) -> bool {
        self.max() < JUNCTION_TOL
    }
}

/// Compares the closed forms of neighbouring branches at each junction.
pub fn check_junctions(p: &PotentialParams) -> Result<JunctionReport, PotentialError> {
    let reg = p.regularized()?;
    let (h, l) = (reg.h, reg.lambda);

    // r = 0: cubic branch against -h log(1 - r)
    let cubic = |r: f64| -r * r * r / l + 0.5 * h * r * r + h * r;
    let cubic_d = |r: f64| -3.0 * r * r / l + h * r + h;
    let at_zero = (cubic(0.0) - 0.0).abs().max((cubic_d(0.0) - h).abs());

    // r = 1 - λ: log branch against the Taylor branch
    let r = 1.0 - l;
    let log_val = -h * l.ln();
    let log_slope = h / l;
    let s = 1.0 - r;
    let taylor = -h * l.ln() + 1.5 * h - 2.0 * h * s / l + 0.5 * h * s * s / (l * l);
    let taylor_d = 2.0 * h / l - h * s / (l * l);
    let at_one_minus_lambda = (taylor - log_val).abs().max((taylor_d - log_slope).abs());

    // r = 1: F₂ polynomial against its quadratic continuation
    let poly = (f2_poly(h, 1.0), -1.0 - h * 2.0, -2.0 - h);
    let cont = (-1.0 / 3.0 - 1.5 * h, -1.0 - 2.0 * h, -2.0 - h);
    let at_one = (poly.0 - cont.0)
        .abs()
        .max((poly.1 - cont.1).abs())
        .max((poly.2 - cont.2).abs());

    Ok(JunctionReport {
        at_zero,
        at_one_minus_lambda,
        at_one,
    })
}

/// Regular sampling of `r ∈ [-radius, radius]` against `r₀ ∈ [ε, 1 - ε]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingPlan {
    pub radius: f64,
    pub r_samples: usize,
    pub r0_samples: usize,
}

impl Default for SamplingPlan {
    fn default() -> Self {
        Self {
            radius: 3.0,
            r_samples: 100,
            r0_samples: 100,
        }
    }
}

/// Outcome of checking `|F'_λ(r)| ≤ C₁ F'_λ(r)(r - r₀) + C₂`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub c1: f64,
    pub c2: f64,
    pub r_bar: f64,
    /// Whether `λ` is small enough that `F_λ = F` on `[0, r̄]`.
    pub lambda_admissible: bool,
    pub samples: usize,
    pub violations: usize,
    /// Smallest `C₁ F'_λ(r)(r - r₀) + C₂ - |F'_λ(r)|` over the samples.
    pub worst_slack: f64,
}

/// Samples the growth inequality with `C₁ = 2/ε` and
/// `C₂ = max_{[0, r̄]} |F'|`, `r̄ = max{φ̄, 1 - ε/2}`.
pub fn verify_growth_bound(
    p: &PotentialParams,
    eps: f64,
    plan: SamplingPlan,
) -> Result<BoundReport, PotentialError> {
    let reg = p.regularized()?;
    let r_bar = p.phi_bar().max(1.0 - 0.5 * eps);
    let c1 = 2.0 / eps;
    let c2 = max_abs_df(p, r_bar);
    let mut violations = 0;
    let mut worst = f64::INFINITY;
    let nr = plan.r_samples.max(2);
    let nr0 = plan.r0_samples.max(2);
    for i in 0..nr {
        let r = -plan.radius + 2.0 * plan.radius * i as f64 / (nr - 1) as f64;
        let d = reg.df(r);
        for j in 0..nr0 {
            let r0 = eps + (1.0 - 2.0 * eps) * j as f64 / (nr0 - 1) as f64;
            let slack = c1 * d * (r - r0) + c2 - d.abs();
            if slack < 0.0 {
                violations += 1;
            }
            worst = worst.min(slack);
        }
    }
    Ok(BoundReport {
        c1,
        c2,
        r_bar,
        lambda_admissible: reg.lambda < 1.0 - r_bar,
        samples: nr * nr0,
        violations,
        worst_slack: worst,
    })
}

/// `max_{r ∈ [0, r̄]} |F'(r)|`, from the endpoints and the interior critical
/// points of `F'`.
pub fn max_abs_df(p: &PotentialParams, r_bar: f64) -> f64 {
    let df = |r: f64| p.df(r).expect("inside [0,1)");
    let mut best = df(0.0).abs().max(df(r_bar).abs());
    if let Some(rz) = curvature_zero(p) {
        if rz < r_bar {
            best = best.max(df(rz).abs());
        }
    }
    best
}

/// The interior zero of `F''` on `(1 - h^{1/3}, 1)`; `F'` decreases before it
/// and increases after it.
pub fn curvature_zero(p: &PotentialParams) -> Option<f64> {
    let ddf = |r: f64| p.ddf(r).expect("inside [0,1)");
    let mut lo = p.curvature_minimizer();
    if ddf(lo) >= 0.0 {
        return None;
    }
    let mut hi = lo + 0.5 * (1.0 - lo);
    while ddf(hi) < 0.0 {
        hi = hi + 0.5 * (1.0 - hi);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ddf(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-16 {
            break;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Largest `δ ∈ (0, δ̄]` with `F'(r) ≥ bound` on `(1 - δ, 1)`.
///
/// `F'` is decreasing up to the zero of `F''` and increasing after it, so the
/// set `{F' < bound}` is an interval whose right end is found by bisection.
pub fn separation_delta(p: &PotentialParams, bound: f64, delta_bar: f64) -> f64 {
    let df = |r: f64| p.df(r).expect("inside [0,1)");
    let rz = curvature_zero(p).unwrap_or(0.0);
    if df(rz) >= bound {
        return delta_bar;
    }
    let mut lo = rz;
    let mut s = 0.5 * (1.0 - rz);
    while df(1.0 - s) < bound {
        lo = 1.0 - s;
        s *= 0.5;
    }
    let mut hi = 1.0 - s;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if df(mid) < bound {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-16 {
            break;
        }
    }
    delta_bar.min(1.0 - hi)
}

/// Constants of the parabola bound `F_λ(r) ≥ (q₀ + ε̂) r² - c₂`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticBound {
    pub q0: f64,
    pub eps_hat: f64,
    pub c2: f64,
}

/// Computes `ε̂` and `c₂` for a given `q₀ = (a* - a_*)/2` by minimizing
/// `F_λ(r) - (q₀ + ε̂) r²` over `ℝ`.
pub fn quadratic_lower_bound(p: &PotentialParams, q0: f64) -> Result<QuadraticBound, PotentialError> {
    let reg = p.regularized()?;
    let margin = reg.quadratic_growth() - q0;
    if margin <= 0.0 {
        return Err(PotentialError::NoQuadraticBound(reg.quadratic_growth()));
    }
    let eps_hat = (0.5 * margin).min(1.0);
    let q = q0 + eps_hat;
    let g = |r: f64| reg.f(r) - q * r * r;
    // Beyond r = 1 g is a convex parabola; below 0 it is |r|³/λ-dominated.
    let kappa = reg.quadratic_growth() - q;
    let d1 = reg.df(1.0) - 2.0 * q;
    let vertex = 1.0 - d1 / (2.0 * kappa);
    let hi = vertex.max(1.0) + 1.0;
    let lo = -(2.0 * q * reg.lambda).max(1.0) - 1.0;
    let n = 40_000;
    let mut best_r = lo;
    let mut best = g(lo);
    for i in 1..=n {
        let r = lo + (hi - lo) * i as f64 / n as f64;
        let v = g(r);
        if v < best {
            best = v;
            best_r = r;
        }
    }
    let step = (hi - lo) / n as f64;
    let (mut a, mut b) = (best_r - step, best_r + step);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..200 {
        let x1 = b - phi * (b - a);
        let x2 = a + phi * (b - a);
        if g(x1) < g(x2) {
            b = x2;
        } else {
            a = x1;
        }
    }
    best = best.min(g(0.5 * (a + b)));
    Ok(QuadraticBound {
        q0,
        eps_hat,
        c2: (-best).max(0.0) + 1e-12,
    })
}

/// One row of the `potential-table` output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableRow {
    pub r: f64,
    pub f: ExtReal,
    pub f_lambda: f64,
    pub df_lambda: f64,
}

/// Evenly spaced samples of `F`, `F_λ` and `F'_λ` on `[lo, hi]`.
pub fn potential_table(
    p: &PotentialParams,
    lo: f64,
    hi: f64,
    points: usize,
) -> Result<Vec<TableRow>, PotentialError> {
    let reg = p.regularized()?;
    let n = points.max(2);
    Ok((0..n)
        .map(|i| {
            let r = lo + (hi - lo) * i as f64 / (n - 1) as f64;
            TableRow {
                r,
                f: p.f(r),
                f_lambda: reg.f(r),
                df_lambda: reg.df(r),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(h: f64, lambda: f64) -> PotentialParams {
        PotentialParams::from_h(h, lambda).unwrap()
    }

    #[test]
    fn rejects_bad_parameters() {
        assert_eq!(PotentialParams::new(1.0, 0.1), Err(PotentialError::PhiBar(1.0)));
        assert_eq!(PotentialParams::new(0.5, 0.7), Err(PotentialError::Lambda(0.7)));
        assert_eq!(
            p(0.4, 0.0).regularized().unwrap_err(),
            PotentialError::Unregularized
        );
    }

    #[test]
    fn f_values() {
        let q = p(0.4, 0.1);
        assert_eq!(q.f(0.0), ExtReal::Finite(0.0));
        let v = q.f(0.5).finite().unwrap();
        // -0.4 ln 0.5 - 0.125/3 - 0.4 (0.125 + 0.5)
        let want = 0.4 * 2f64.ln() - 0.125 / 3.0 - 0.25;
        assert!((v - want).abs() < 1e-15);
        // quoted reference figure agrees to five decimals
        assert!((v - (-0.014412)).abs() < 5e-6);
        assert_eq!(q.f(1.0), ExtReal::PosInfinity);
        assert_eq!(q.f(-0.1), ExtReal::PosInfinity);
    }

    #[test]
    fn df_values() {
        let q = p(0.4, 0.1);
        assert!(q.df(0.6).unwrap().abs() < 1e-15);
        assert_eq!(q.df(0.0).unwrap(), 0.0);
        assert!((q.df(0.9).unwrap() - 2.43).abs() < 1e-12);
        assert_eq!(q.df(1.0), Err(PotentialError::Domain(1.0)));
        assert_eq!(q.df(-0.2), Err(PotentialError::Domain(-0.2)));
    }

    #[test]
    fn extended_real_ordering() {
        assert!(ExtReal::Finite(1e300) < ExtReal::PosInfinity);
        assert!(ExtReal::PosInfinity > 5.0);
        assert!(ExtReal::Finite(2.0) <= 2.0);
        assert_eq!(ExtReal::PosInfinity.to_string(), "inf");
    }

    #[test]
    fn regularized_branch_values() {
        let reg = p(0.4, 0.1).regularized().unwrap();
        let r = 0.9;
        assert!((reg.f1(r) - (-0.4 * 0.1f64.ln())).abs() < 1e-12);
        assert!((reg.f1(r) - 0.921034).abs() < 1e-6);
        assert!((reg.f1(-0.5) - 1.1).abs() < 1e-12);
        assert!((reg.f2(-0.5) - 0.191667).abs() < 1e-6);
        assert!((reg.f(-0.5) - 1.291667).abs() < 1e-6);
    }

    #[test]
    fn regularized_matches_f_inside() {
        let q = p(0.4, 0.1);
        let reg = q.regularized().unwrap();
        for i in 0..900 {
            let r = i as f64 * 1e-3;
            assert_eq!(reg.f(r), q.f(r).finite().unwrap());
        }
    }

    #[test]
    fn junctions_match() {
        for (h, l) in [(0.4, 0.1), (0.2, 0.01), (0.6, 0.3), (0.4, 1e-3)] {
            let rep = check_junctions(&p(h, l)).unwrap();
            assert!(rep.passes(), "{rep:?}");
        }
    }

    #[test]
    fn c0_and_chi_bound() {
        let q = p(0.4, 0.1);
        assert!((q.c0() - (2.4 - 3.0 * 0.4f64.cbrt())).abs() < 1e-15);
        assert!((q.c0() - 0.189580).abs() < 2e-6);
        assert!(((q.c0() / 2.0).sqrt() - 0.30788).abs() < 1e-5);
    }

    #[test]
    fn separation_delta_brackets_f_prime() {
        let q = p(0.4, 1e-3);
        let d = separation_delta(&q, 3.3, 0.5);
        let r = 1.0 - d;
        assert!((q.df(r).unwrap() - 3.3).abs() < 1e-8);
        for i in 1..100 {
            let s = r + (1.0 - r) * i as f64 / 100.0;
            assert!(q.df(s).unwrap() >= 3.3);
        }
        assert_eq!(separation_delta(&q, -10.0, 0.1), 0.1);
        // bound = 0 puts the right end at φ̄
        assert!((separation_delta(&q, 0.0, 0.9) - 0.4).abs() < 1e-10);
    }

    #[test]
    fn growth_bound_holds() {
        let rep = verify_growth_bound(&p(0.4, 0.01), 0.1, SamplingPlan::default()).unwrap();
        assert_eq!(rep.samples, 10_000);
        assert_eq!(rep.violations, 0, "{rep:?}");
        assert!(rep.lambda_admissible);
        assert!((rep.c1 - 20.0).abs() < 1e-12);
    }

    #[test]
    fn table_has_requested_points() {
        let rows = potential_table(&p(0.4, 0.1), -0.5, 1.5, 11).unwrap();
        assert_eq!(rows.len(), 11);
        assert_eq!(rows[0].f, ExtReal::PosInfinity);
        assert!(rows[5].f.is_finite());
    }
}
