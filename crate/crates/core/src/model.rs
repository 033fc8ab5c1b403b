//! Model parameters, the source `S = -m φ + h₁(φ, σ)`, and validation of the
//! structural assumptions.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{Field, Grid, GridError};
use crate::kernel::{check_a5, DiscreteKernel};
use crate::potential::PotentialParams;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("supply field lives on a different grid")]
    SupplyGrid,
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Built-in source families. Each exposes its supremum and Lipschitz constant
/// in closed form.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum SourceSpec {
    #[default]
    Zero,
    Constant {
        value: f64,
    },
    /// `K (1 + c) p / (1 + c p)` with `p` the product of the arguments
    /// clamped to `[0, 1]`. Rises from 0 at `p = 0` to `K` at `p = 1`.
    SmoothSaturating {
        amplitude: f64,
        steepness: f64,
    },
}

impl SourceSpec {
    fn saturate(amplitude: f64, steepness: f64, p: f64) -> f64 {
        amplitude * (1.0 + steepness) * p / (1.0 + steepness * p)
    }

    /// `h₁(φ, σ)`.
    pub fn eval(&self, phi: f64, sigma: f64) -> f64 {
        match *self {
            SourceSpec::Zero => 0.0,
            SourceSpec::Constant { value } => value,
            SourceSpec::SmoothSaturating {
                amplitude,
                steepness,
            } => Self::saturate(amplitude, steepness, phi.clamp(0.0, 1.0) * sigma.clamp(0.0, 1.0)),
        }
    }

    /// `h₂(φ)`: the same family with a single clamped argument.
    pub fn eval_single(&self, phi: f64) -> f64 {
        self.eval(phi, 1.0)
    }

    /// Exact `sup h`.
    pub fn sup(&self) -> f64 {
        match *self {
            SourceSpec::Zero => 0.0,
            SourceSpec::Constant { value } => value,
            SourceSpec::SmoothSaturating { amplitude, .. } => amplitude.max(0.0),
        }
    }

    /// Exact `inf h`.
    pub fn inf(&self) -> f64 {
        match *self {
            SourceSpec::Zero => 0.0,
            SourceSpec::Constant { value } => value,
            SourceSpec::SmoothSaturating { amplitude, .. } => amplitude.min(0.0),
        }
    }

    /// Lipschitz constant in each argument separately.
    pub fn lipschitz(&self) -> f64 {
        match *self {
            SourceSpec::Zero | SourceSpec::Constant { .. } => 0.0,
            SourceSpec::SmoothSaturating {
                amplitude,
                steepness,
            } => amplitude.abs() * (1.0 + steepness),
        }
    }

    fn well_formed(&self) -> bool {
        match *self {
            SourceSpec::Zero => true,
            SourceSpec::Constant { value } => value.is_finite(),
            SourceSpec::SmoothSaturating {
                amplitude,
                steepness,
            } => amplitude.is_finite() && steepness.is_finite() && steepness >= 0.0,
        }
    }
}

impl fmt::Display for SourceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SourceSpec::Zero => write!(f, "zero"),
            SourceSpec::Constant { value } => write!(f, "constant({value})"),
            SourceSpec::SmoothSaturating {
                amplitude,
                steepness,
            } => write!(f, "smooth-saturating(K={amplitude}, c={steepness})"),
        }
    }
}

/// Time-independent nutrient supply `σ_S`.
#[derive(Debug, Clone, PartialEq)]
pub enum Supply {
    Constant(f64),
    Field(Field),
}

impl Supply {
    pub fn to_field(&self, grid: Grid) -> Result<Field, ModelError> {
        match self {
            Supply::Constant(v) => Ok(Field::constant(grid, *v)),
            Supply::Field(f) if *f.grid() == grid => Ok(f.clone()),
            Supply::Field(_) => Err(ModelError::SupplyGrid),
        }
    }

    pub fn range(&self) -> (f64, f64) {
        match self {
            Supply::Constant(v) => (*v, *v),
            Supply::Field(f) => (f.min(), f.max()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ValidationMode {
    /// Assumption failures are fatal.
    #[default]
    Strict,
    /// Assumption failures are downgraded to warnings.
    Lab,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub tau: f64,
    pub chi: f64,
    pub b: f64,
    pub c: f64,
    pub m: f64,
    pub h1: SourceSpec,
    pub h2: SourceSpec,
    pub sigma_s: Supply,
    pub mode: ValidationMode,
}

impl ModelParams {
    /// `K = sup h₁`.
    pub fn k(&self) -> f64 {
        self.h1.sup()
    }

    pub fn is_strict(&self) -> bool {
        self.mode == ValidationMode::Strict
    }

    /// `S(φ, σ)` at a single point.
    pub fn source(&self, phi: f64, sigma: f64) -> f64 {
        -self.m * phi + self.h1.eval(phi, sigma)
    }
}

/// `S(φ, σ) = -m φ + h₁(φ, σ)` pointwise.
pub fn eval_s(phi: &Field, sigma: &Field, p: &ModelParams) -> Result<Field, ModelError> {
    Ok(phi.zip_map(sigma, |u, s| p.source(u, s))?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    /// Fatal in strict mode, a warning in lab mode.
    Assumption,
    /// Fatal in every mode.
    Hard,
    /// Reported only.
    Advisory,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub severity: Severity,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub mode: ValidationMode,
    pub checks: Vec<Check>,
}

impl ValidationReport {
    /// Failures that stop a run under the report's mode.
    pub fn fatal(&self) -> Vec<&Check> {
        self.checks
            .iter()
            .filter(|c| {
                !c.passed
                    && match c.severity {
                        Severity::Hard => true,
                        Severity::Assumption => self.mode == ValidationMode::Strict,
                        Severity::Advisory => false,
                    }
            })
            .collect()
    }

    pub fn warnings(&self) -> Vec<&Check> {
        let fatal = self.fatal();
        self.checks
            .iter()
            .filter(|c| !c.passed && !fatal.iter().any(|f| std::ptr::eq(*f, *c)))
            .collect()
    }

    pub fn passes(&self) -> bool {
        self.fatal().is_empty()
    }

    /// Passes with every assumption enforced, whatever the mode.
    pub fn passes_strict(&self) -> bool {
        self.checks
            .iter()
            .all(|c| c.passed || c.severity == Severity::Advisory)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let tag = match (c.passed, c.severity) {
                (true, _) => "PASS",
                (false, Severity::Advisory) => "NOTE",
                (false, Severity::Assumption) if self.mode == ValidationMode::Lab => "WARN",
                (false, _) => "FAIL",
            };
            writeln!(f, "{tag} {}: {}", c.name, c.detail)?;
        }
        Ok(())
    }
}

/// Largest `χ` allowed for a `τ = 0` run: `min(√(c₀/2), 1)`.
pub fn chi_bound(pot: &PotentialParams) -> f64 {
    (pot.c0() / 2.0).sqrt().min(1.0)
}

/// Checks every structural assumption; never fails, only reports.
pub fn validate(p: &ModelParams, k: &DiscreteKernel, pot: &PotentialParams) -> ValidationReport {
    let mut checks = Vec::new();
    let mut push = |name, passed, severity, detail: String| {
        checks.push(Check {
            name,
            passed,
            severity,
            detail,
        })
    };

    let finite = [p.tau, p.chi, p.b, p.c, p.m].iter().all(|v| v.is_finite())
        && p.h1.well_formed()
        && p.h2.well_formed();
    push(
        "finite-parameters",
        finite,
        Severity::Hard,
        "all parameters finite and source families well formed".into(),
    );
    push(
        "tau-range",
        (0.0..=1.0).contains(&p.tau),
        Severity::Hard,
        format!("tau = {} in [0, 1]", p.tau),
    );
    push(
        "reaction-rates",
        p.b >= 0.0 && p.c >= 0.0,
        Severity::Hard,
        format!("B = {}, C = {} non-negative", p.b, p.c),
    );
    push(
        "regularization",
        pot.lambda() > 0.0,
        Severity::Hard,
        format!("lambda = {} > 0", pot.lambda()),
    );

    push(
        "chi-positive",
        p.chi > 0.0,
        Severity::Assumption,
        format!("chi = {} > 0", p.chi),
    );
    push(
        "m-positive",
        p.m > 0.0,
        Severity::Assumption,
        format!("m = {} > 0", p.m),
    );
    let k_sup = p.k();
    push(
        "source-bound",
        k_sup < p.m,
        Severity::Assumption,
        format!("sup h1 = K = {k_sup} < m = {}; K - m = {}", p.m, k_sup - p.m),
    );
    push(
        "source-nonnegative",
        p.h1.inf() >= 0.0,
        Severity::Assumption,
        format!("inf h1 = {} >= 0", p.h1.inf()),
    );
    push(
        "consumption-nonnegative",
        p.h2.inf() >= 0.0,
        Severity::Assumption,
        format!("inf h2 = {} >= 0", p.h2.inf()),
    );
    let (lo, hi) = p.sigma_s.range();
    push(
        "supply-range",
        lo >= 0.0 && hi <= 1.0,
        Severity::Assumption,
        format!("sigma_S in [{lo}, {hi}] within [0, 1]"),
    );

    let a5 = check_a5(k, pot);
    push(
        "kernel-mass",
        a5.passes(),
        Severity::Assumption,
        format!("a_star = {} >= c0 = {}", a5.a_star, a5.c0),
    );
    push(
        "kernel-mass-convexity",
        a5.meets_2c0,
        Severity::Advisory,
        format!("a_star = {} >= 2 c0 = {}", a5.a_star, 2.0 * a5.c0),
    );
    if p.tau == 0.0 {
        let bound = chi_bound(pot);
        push(
            "tau-zero-coupling",
            p.chi < bound,
            Severity::Assumption,
            format!("tau = 0 needs chi = {} < min(sqrt(c0/2), 1) = {bound}", p.chi),
        );
    }
    for w in k.warnings() {
        push("kernel-resolution", false, Severity::Advisory, w.clone());
    }

    ValidationReport {
        mode: p.mode,
        checks,
    }
}
