//! Scalar functionals and bounds monitored along a run.

use std::fmt::Write as _;

use thiserror::Error;

use crate::grid::{neumann_laplacian, Field};
use crate::kernel::{DiscreteKernel, KernelError};
use crate::model::{eval_s, ModelError, ModelParams};
use crate::potential::{PotentialError, PotentialParams};
use crate::solver::{Splitting, State};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagnosticsError {
    #[error("mean envelope needs m > 0, K >= 0 and y0 in (0, 1); got m = {m}, K = {k}, y0 = {y0}")]
    EnvelopeDomain { m: f64, k: f64, y0: f64 },
    #[error("source bound violated: K = {k} is not below m = {m}")]
    SourceBound { k: f64, m: f64 },
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Potential(#[from] PotentialError),
}

/// `E(φ) = ¼ ∫∫ J(x-y) |φ(x) - φ(y)|² + ∫ F_λ(φ)`.
///
/// The double integral is evaluated as `½⟨a φ, φ⟩ - ½⟨J∗φ, φ⟩`. With
/// `λ = 0` the singular `F` is used and the result is `+∞` outside `[0, 1)`.
pub fn energy(phi: &Field, k: &DiscreteKernel, pot: &PotentialParams) -> Result<f64, DiagnosticsError> {
    let nonlocal = nonlocal_energy(phi, k)?;
    let vol = phi.grid().cell_volume();
    let local: f64 = if pot.lambda() > 0.0 {
        let reg = pot.regularized()?;
        phi.values().iter().map(|&r| reg.f(r)).sum()
    } else {
        phi.values().iter().map(|&r| pot.f(r).to_f64()).sum()
    };
    Ok(nonlocal + local * vol)
}

/// The interaction part `¼ ∫∫ J(x-y) |φ(x) - φ(y)|²` alone.
pub fn nonlocal_energy(phi: &Field, k: &DiscreteKernel) -> Result<f64, DiagnosticsError> {
    let jphi = k.convolve(phi)?;
    let aphi = phi.zip_map(k.a_field(), |u, a| u * a).map_err(KernelError::from)?;
    let d = aphi.sub(&jphi).map_err(KernelError::from)?;
    Ok(0.5 * d.inner(phi).map_err(KernelError::from)?)
}

/// Two-sided bound on the spatial mean of `φ`:
/// `y0 e^{-mt} ≤ ȳ(t) ≤ y0 e^{-mt} + (1 - e^{-mt}) K / m`.
pub fn mean_envelope(t: f64, y0: f64, m: f64, k: f64) -> Result<(f64, f64), DiagnosticsError> {
    if !(m > 0.0 && k >= 0.0 && y0 > 0.0 && y0 < 1.0) {
        return Err(DiagnosticsError::EnvelopeDomain { m, k, y0 });
    }
    let decay = (-m * t).exp();
    Ok((y0 * decay, y0 * decay - (-m * t).exp_m1() * k / m))
}

/// [`mean_envelope`] extended to `m = 0` by its limit `(y0, y0 + K t)`.
pub fn mean_envelope_or_limit(t: f64, y0: f64, m: f64, k: f64) -> (f64, f64) {
    if m > 0.0 && y0 > 0.0 && y0 < 1.0 {
        if let Ok(e) = mean_envelope(t, y0, m, k) {
            return e;
        }
    }
    (y0 * (-m * t).exp(), y0 * (-m * t).exp() + k * t)
}

/// `δ = min{¼, y0 e^{-mT}, 1 - max{K/m, y0}}`, a uniform margin with
/// `δ ≤ ȳ(t) ≤ 1 - δ` on `[0, T]`.
pub fn delta_for_mean(y0: f64, m: f64, k: f64, t_final: f64) -> Result<f64, DiagnosticsError> {
    if k >= m {
        return Err(DiagnosticsError::SourceBound { k, m });
    }
    if !(m > 0.0 && k >= 0.0 && y0 > 0.0 && y0 < 1.0) {
        return Err(DiagnosticsError::EnvelopeDomain { m, k, y0 });
    }
    Ok(0.25_f64
        .min(y0 * (-m * t_final).exp())
        .min(1.0 - (k / m).max(y0)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lyapunov {
    /// `½‖∇μ‖² - ∫ S μ + (τ/2)‖∂ₜφ‖²`.
    pub value: f64,
    /// `(‖∇μ‖² + ‖∂ₜφ‖²) / (𝒥 + 1)`, or `+∞` when `𝒥 + 1 ≤ 0`.
    pub coercivity_ratio: f64,
}

/// `𝒥` with `∂ₜφ = (φ - φ_prev)/dt`.
pub fn lyapunov_j(s_prev: &State, s: &State, dt: f64, p: &ModelParams) -> Result<Lyapunov, DiagnosticsError> {
    let rate = s
        .phi
        .sub(&s_prev.phi)
        .map_err(ModelError::from)?
        .scale(1.0 / dt);
    lyapunov_with_rate(s, &rate, p)
}

/// `𝒥` for a given `∂ₜφ`.
pub fn lyapunov_with_rate(s: &State, rate: &Field, p: &ModelParams) -> Result<Lyapunov, DiagnosticsError> {
    let grad = s.mu.grad_norm_sq();
    let src = eval_s(&s.phi, &s.sigma, p)?;
    let work = src.inner(&s.mu).map_err(ModelError::from)?;
    let rate_sq = rate.norm_l2().powi(2);
    let value = 0.5 * grad - work + 0.5 * p.tau * rate_sq;
    let coercivity_ratio = if value + 1.0 > 0.0 {
        (grad + rate_sq) / (value + 1.0)
    } else {
        f64::INFINITY
    };
    Ok(Lyapunov {
        value,
        coercivity_ratio,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Residuals {
    pub phi: f64,
    pub sigma: f64,
    pub mu: f64,
    /// Rounding level of the `φ` residual: `8 ε ‖Δ_h‖ max(|μ| + D |φ|)` with
    /// `D` the Newton diagonal. Near `φ = 1` it exceeds any fixed tolerance.
    pub floor: f64,
}

impl Residuals {
    pub fn max(&self) -> f64 {
        self.phi.max(self.sigma).max(self.mu)
    }

    /// Whether some residual exceeds `tol` plus the rounding floor.
    pub fn exceeds(&self, tol: f64) -> bool {
        self.max() > tol + self.floor
    }
}

/// Max-norm residuals of the three discrete identities linking two
/// consecutive states: the `φ` equation, the `σ` equation and the definition
/// of `μ`, in the form used by `splitting`.
pub fn weak_residuals(
    s_prev: &State,
    s: &State,
    dt: f64,
    p: &ModelParams,
    k: &DiscreteKernel,
    pot: &PotentialParams,
    splitting: Splitting,
) -> Result<Residuals, DiagnosticsError> {
    let grid = *s.phi.grid();
    let reg = pot.regularized()?;
    let sigma_s = p.sigma_s.to_field(grid)?;
    let lap_mu = neumann_laplacian(&s.mu);
    let lap_sigma = neumann_laplacian(&s.sigma);
    let src = eval_s(&s_prev.phi, &s.sigma, p)?;
    let a = k.a_field().values();

    let (prev, cur) = (s_prev.phi.values(), s.phi.values());
    let r_phi = (0..grid.len())
        .map(|i| ((cur[i] - prev[i]) / dt - lap_mu.values()[i] - src.values()[i]).abs())
        .fold(0.0, f64::max);

    let (sp, sc, ss) = (s_prev.sigma.values(), s.sigma.values(), sigma_s.values());
    let r_sigma = (0..grid.len())
        .map(|i| {
            ((sc[i] - sp[i]) / dt - lap_sigma.values()[i]
                + p.b * (sc[i] - ss[i])
                + p.c * sc[i] * p.h2.eval_single(prev[i]))
            .abs()
        })
        .fold(0.0, f64::max);

    let (jphi, nonlinear): (Field, Vec<f64>) = match splitting {
        Splitting::ConvexSplit => (
            k.convolve(&s_prev.phi)?,
            (0..grid.len())
                .map(|i| reg.df1(cur[i]) + reg.df2(prev[i]))
                .collect(),
        ),
        Splitting::FullyImplicit => (k.convolve(&s.phi)?, cur.iter().map(|&r| reg.df(r)).collect()),
    };
    let r_mu = (0..grid.len())
        .map(|i| {
            let want = p.tau * (cur[i] - prev[i]) / dt + a[i] * cur[i] - jphi.values()[i] + nonlinear[i]
                - p.chi * sc[i];
            (s.mu.values()[i] - want).abs()
        })
        .fold(0.0, f64::max);

    let h = grid.spacing();
    let lap_norm: f64 = (0..grid.dim()).map(|d| 4.0 / (h[d] * h[d])).sum();
    let scale = (0..grid.len())
        .map(|i| s.mu.values()[i].abs() + (p.tau / dt + a[i] + reg.ddf(cur[i]).abs()) * cur[i].abs())
        .fold(0.0, f64::max);

    Ok(Residuals {
        phi: r_phi,
        sigma: r_sigma,
        mu: r_mu,
        floor: 8.0 * f64::EPSILON * lap_norm * scale,
    })
}

/// `‖μ + χσ + J∗φ‖_∞`, the level that `F'` must exceed for separation.
pub fn separation_level(s: &State, p: &ModelParams, k: &DiscreteKernel) -> Result<f64, DiagnosticsError> {
    let jphi = k.convolve(&s.phi)?;
    Ok((0..s.phi.len())
        .map(|i| (s.mu.values()[i] + p.chi * s.sigma.values()[i] + jphi.values()[i]).abs())
        .fold(0.0, f64::max))
}

/// Monitor flag names written to the `flags` column.
pub mod flag {
    pub const NON_FINITE: &str = "non-finite";
    pub const PHI_BELOW: &str = "phi-below-zero";
    pub const PHI_ABOVE: &str = "phi-above-cap";
    pub const SIGMA_BELOW: &str = "sigma-below-zero";
    pub const SIGMA_ABOVE: &str = "sigma-above-one";
    pub const MEAN_ENVELOPE: &str = "mean-outside-envelope";
    pub const J_BLOWUP: &str = "lyapunov-blowup";
    pub const RESIDUAL: &str = "residual";
    pub const ENERGY_INCREASE: &str = "energy-increase";
}

/// One row of the per-step diagnostics table.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mean_phi: f64,
    pub mean_lo: f64,
    pub mean_hi: f64,
    pub min_phi: f64,
    pub max_phi: f64,
    pub min_sigma: f64,
    pub max_sigma: f64,
    pub energy: f64,
    pub j_functional: f64,
    pub residual_phi_eq: f64,
    pub residual_sigma_eq: f64,
    pub residual_mu_eq: f64,
    pub flags: Vec<String>,
}

impl DiagnosticsRecord {
    pub const CSV_HEADER: &'static str =
        "t,mean_phi,mean_lo,mean_hi,min_phi,max_phi,min_sigma,max_sigma,energy,J,r_phi,r_sigma,r_mu,flags";

    pub fn is_finite(&self) -> bool {
        [
            self.t,
            self.mean_phi,
            self.mean_lo,
            self.mean_hi,
            self.min_phi,
            self.max_phi,
            self.min_sigma,
            self.max_sigma,
            self.energy,
            self.j_functional,
            self.residual_phi_eq,
            self.residual_sigma_eq,
            self.residual_mu_eq,
        ]
        .iter()
        .all(|v| v.is_finite())
    }

    pub fn to_csv_row(&self) -> String {
        let mut s = String::new();
        for v in [
            self.t,
            self.mean_phi,
            self.mean_lo,
            self.mean_hi,
            self.min_phi,
            self.max_phi,
            self.min_sigma,
            self.max_sigma,
            self.energy,
            self.j_functional,
            self.residual_phi_eq,
            self.residual_sigma_eq,
            self.residual_mu_eq,
        ] {
            let _ = write!(s, "{},", crate::io::fmt_float(v));
        }
        s.push_str(&self.flags.join(";"));
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::kernel::{build_kernel, KernelFamily, KernelSpec};
    use crate::model::{SourceSpec, Supply, ValidationMode};

    fn setup(n: usize) -> (Grid, DiscreteKernel, PotentialParams) {
        let g = Grid::new_1d(n, 1.0).unwrap();
        let k = build_kernel(
            KernelSpec {
                family: KernelFamily::Gaussian,
                width: 0.1,
                amplitude: 2.0,
                cutoff_radius: 0.3,
            },
            g,
        )
        .unwrap();
        (g, k, PotentialParams::from_h(0.4, 1e-3).unwrap())
    }

    fn params() -> ModelParams {
        ModelParams {
            tau: 0.5,
            chi: 0.2,
            b: 1.0,
            c: 1.0,
            m: 1.0,
            h1: SourceSpec::Zero,
            h2: SourceSpec::Zero,
            sigma_s: Supply::Constant(0.5),
            mode: ValidationMode::Lab,
        }
    }

    #[test]
    fn constant_field_energy() {
        let (g, k, pot) = setup(32);
        let e = energy(&Field::constant(g, 0.3), &k, &pot).unwrap();
        let want = pot.f(0.3).to_f64();
        assert!((e - want).abs() < 1e-13, "{e} vs {want}");
    }

    #[test]
    fn singular_energy_is_infinite_outside() {
        let (g, k, pot) = setup(16);
        let pot = pot.with_lambda(0.0).unwrap();
        assert_eq!(energy(&Field::constant(g, 1.2), &k, &pot).unwrap(), f64::INFINITY);
    }

    #[test]
    fn envelope_values() {
        assert_eq!(mean_envelope(0.0, 0.5, 1.0, 0.5).unwrap(), (0.5, 0.5));
        let (lo, hi) = mean_envelope(1.0, 0.5, 1.0, 0.5).unwrap();
        assert!((lo - 0.183940).abs() < 1e-6);
        assert!((hi - 0.5).abs() < 1e-15);
        let (lo, hi) = mean_envelope(200.0, 0.5, 1.0, 0.3).unwrap();
        assert!(lo < 1e-80 && (hi - 0.3).abs() < 1e-15);
        assert!(mean_envelope(1.0, 0.5, 0.0, 0.5).is_err());
        assert_eq!(mean_envelope_or_limit(2.0, 0.5, 0.0, 0.1), (0.5, 0.7));
    }

    #[test]
    fn delta_values() {
        let d = delta_for_mean(0.5, 1.0, 0.5, 1.0).unwrap();
        assert!((d - 0.5 * (-1f64).exp()).abs() < 1e-15);
        assert_eq!(delta_for_mean(0.5, 1.0, 0.0, 0.0).unwrap(), 0.25);
        let d = delta_for_mean(0.95, 1.0, 0.1, 0.0).unwrap();
        assert!((d - 0.05).abs() < 1e-15);
        assert!(delta_for_mean(0.5, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn lyapunov_vanishes_at_equilibrium() {
        let (g, _, _) = setup(16);
        let s = State {
            t: 0.0,
            phi: Field::zeros(g),
            mu: Field::zeros(g),
            sigma: Field::constant(g, 0.5),
        };
        let j = lyapunov_j(&s, &s, 0.1, &params()).unwrap();
        assert_eq!(j.value, 0.0);
        assert_eq!(j.coercivity_ratio, 0.0);
    }

    #[test]
    fn record_csv_row() {
        let r = DiagnosticsRecord {
            t: 0.5,
            mean_phi: 0.1,
            mean_lo: 0.0,
            mean_hi: 1.0,
            min_phi: 0.0,
            max_phi: 0.25,
            min_sigma: 0.5,
            max_sigma: 0.5,
            energy: -1e-3,
            j_functional: 2.0,
            residual_phi_eq: 0.0,
            residual_sigma_eq: 0.0,
            residual_mu_eq: 0.0,
            flags: vec!["a".into(), "b".into()],
        };
        assert_eq!(r.to_csv_row(), "0.5,0.1,0,1,0,0.25,0.5,0.5,-0.001,2,0,0,0,a;b");
        assert_eq!(DiagnosticsRecord::CSV_HEADER.split(',').count(), 14);
    }
}
