//! Time integration of the coupled `(φ, μ, σ)` system.
//!
//! Each step updates `σ` first by a linear implicit solve, then `(φ, μ)` with
//! the convex part of the potential implicit and the concave and non-local
//! parts explicit. The pointwise nonlinearity is handled by Newton's method,
//! each iteration reducing to one symmetric positive definite solve.

mod spectral;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagnostics::{
    self, flag, lyapunov_with_rate, mean_envelope_or_limit, DiagnosticsError, DiagnosticsRecord, Residuals,
};
use crate::grid::{neumann_laplacian, solve_shifted, Field, GridError};
use crate::kernel::{DiscreteKernel, KernelError};
use crate::model::{eval_s, validate, ModelError, ModelParams, SourceSpec, ValidationReport};
use crate::potential::{PotentialError, PotentialParams, Regularized};

pub use spectral::{project, spectral_step_1d};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("invalid scheme configuration: {0}")]
    Scheme(String),
    #[error("validation failed:\n{0}")]
    Validation(ValidationReport),
    #[error("Newton failed at t = {t} with dt = {dt} after {iterations} iterations (last update {update:e})")]
    Newton {
        t: f64,
        dt: f64,
        iterations: usize,
        update: f64,
    },
    #[error("non-finite values at t = {t}")]
    NonFinite { t: f64 },
    #[error("spectral step: {0}")]
    Spectral(String),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Potential(#[from] PotentialError),
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub t: f64,
    pub phi: Field,
    pub mu: Field,
    pub sigma: Field,
}

impl State {
    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && self.phi.is_finite() && self.mu.is_finite() && self.sigma.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Splitting {
    /// Convex part implicit, concave and non-local parts explicit.
    #[default]
    ConvexSplit,
    /// Whole potential and convolution implicit; the convolution is lagged
    /// inside the nonlinear iteration.
    FullyImplicit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchemeConfig {
    pub dt: f64,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub splitting: Splitting,
    /// How many times a failed step may halve its time step.
    pub max_halvings: u32,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            newton_tol: 1e-10,
            newton_max_iter: 50,
            splitting: Splitting::ConvexSplit,
            max_halvings: 10,
        }
    }
}

impl SchemeConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(SolverError::Scheme(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.newton_tol > 0.0 && self.newton_tol.is_finite()) {
            return Err(SolverError::Scheme(format!(
                "newton_tol must be positive, got {}",
                self.newton_tol
            )));
        }
        if self.newton_max_iter == 0 {
            return Err(SolverError::Scheme("newton_max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

/// Everything a step needs besides the state.
struct Ctx<'a> {
    p: &'a ModelParams,
    k: &'a DiscreteKernel,
    reg: Regularized,
    sigma_s: Field,
    cfg: &'a SchemeConfig,
}

impl<'a> Ctx<'a> {
    fn new(
        p: &'a ModelParams,
        pot: &PotentialParams,
        k: &'a DiscreteKernel,
        cfg: &'a SchemeConfig,
    ) -> Result<Self, SolverError> {
        cfg.validate()?;
        Ok(Self {
            p,
            k,
            reg: pot.regularized()?,
            sigma_s: p.sigma_s.to_field(*k.grid())?,
            cfg,
        })
    }
}

/// Per-step bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct StepInfo {
    pub newton_iterations: usize,
    /// `|mean(φⁿ⁺¹) - mean(φⁿ) - dt mean(S(φⁿ, σⁿ⁺¹))|`.
    pub mass_defect: f64,
}

fn step_dt(s: &State, ctx: &Ctx, dt: f64) -> Result<(State, StepInfo), SolverError> {
    let p = ctx.p;
    let grid = *s.phi.grid();
    let n = grid.len();
    let phi_n = s.phi.values();

    // σ: (1/dt + B + C h₂(φⁿ) - Δ) σ = σⁿ/dt + B σ_S
    let diag: Vec<f64> = phi_n
        .iter()
        .map(|&u| 1.0 / dt + p.b + p.c * p.h2.eval_single(u))
        .collect();
    let rhs = s
        .sigma
        .zip_map(&ctx.sigma_s, |sig, sup| sig / dt + p.b * sup)?;
    let sigma = solve_shifted(&diag, &rhs)?;

    let src = eval_s(&s.phi, &sigma, p)?;
    let a = ctx.k.a_field().values();
    let reg = &ctx.reg;
    let rate_coef = p.tau / dt;
    let sig = sigma.values();

    // μ(φ) = τ (φ - φⁿ)/dt + a φ + g(φ) + explicit
    let (explicit, implicit_conv) = match ctx.cfg.splitting {
        Splitting::ConvexSplit => {
            let jphi = ctx.k.convolve(&s.phi)?;
            let e: Vec<f64> = (0..n)
                .map(|i| -jphi.values()[i] + reg.df2(phi_n[i]) - p.chi * sig[i])
                .collect();
            (e, false)
        }
        Splitting::FullyImplicit => {
            let e: Vec<f64> = (0..n).map(|i| -p.chi * sig[i]).collect();
            (e, true)
        }
    };
    let nonlinear = |r: f64| if implicit_conv { reg.df(r) } else { reg.df1(r) };
    let curvature = |r: f64| if implicit_conv { reg.ddf(r) } else { reg.ddf1(r) };
    let mu_of = |phi: &Field| -> Result<Field, SolverError> {
        let v = phi.values();
        let conv = if implicit_conv { Some(ctx.k.convolve(phi)?) } else { None };
        let vals = (0..n)
            .map(|i| {
                let c = conv.as_ref().map_or(0.0, |j| j.values()[i]);
                rate_coef * (v[i] - phi_n[i]) + a[i] * v[i] + nonlinear(v[i]) - c + explicit[i]
            })
            .collect();
        Ok(Field::from_values(grid, vals)?)
    };

    let mut phi = s.phi.clone();
    let mut iterations = 0;
    let mut update = f64::INFINITY;
    while iterations < ctx.cfg.newton_max_iter {
        iterations += 1;
        let mu = mu_of(&phi)?;
        let lap = neumann_laplacian(&mu);
        let v = phi.values();
        let neg_residual: Vec<f64> = (0..n)
            .map(|i| -((v[i] - phi_n[i]) / dt - lap.values()[i] - src.values()[i]))
            .collect();
        let d: Vec<f64> = (0..n)
            .map(|i| (rate_coef + a[i] + curvature(v[i])).max(1e-10))
            .collect();
        // with w = D δ the Jacobian I/dt - Δ D becomes D⁻¹/dt - Δ
        let shift: Vec<f64> = d.iter().map(|di| 1.0 / (dt * di)).collect();
        let w = solve_shifted(&shift, &Field::from_values(grid, neg_residual)?)?;
        let delta: Vec<f64> = w.values().iter().zip(&d).map(|(wi, di)| wi / di).collect();
        update = delta.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        if !update.is_finite() {
            break;
        }
        for (pi, di) in phi.values_mut().iter_mut().zip(&delta) {
            *pi += di;
        }
        if update < ctx.cfg.newton_tol {
            break;
        }
    }
    if update.is_nan() || update >= ctx.cfg.newton_tol {
        return Err(SolverError::Newton {
            t: s.t,
            dt,
            iterations,
            update,
        });
    }
    let mu = mu_of(&phi)?;
    let mass_defect = ((phi.mean() - s.phi.mean()) / dt - src.mean()).abs() * dt;
    let next = State {
        t: s.t + dt,
        phi,
        mu,
        sigma,
    };
    if !next.is_finite() {
        return Err(SolverError::NonFinite { t: next.t });
    }
    Ok((
        next,
        StepInfo {
            newton_iterations: iterations,
            mass_defect,
        },
    ))
}

/// One step of size `cfg.dt` without time-step halving.
pub fn step(
    s: &State,
    p: &ModelParams,
    pot: &PotentialParams,
    k: &DiscreteKernel,
    cfg: &SchemeConfig,
) -> Result<State, SolverError> {
    let ctx = Ctx::new(p, pot, k, cfg)?;
    Ok(step_dt(s, &ctx, cfg.dt)?.0)
}

/// Result of advancing by one outer step, possibly through halved sub-steps.
#[derive(Debug, Clone)]
pub struct Advance {
    pub state: State,
    /// Start of the last accepted sub-step.
    pub last_prev: State,
    pub last_dt: f64,
    pub substeps: usize,
    pub newton_iterations: usize,
    pub max_mass_defect: f64,
}

/// Advances by `dt`, halving on Newton failure up to `cfg.max_halvings` times.
pub fn advance(
    s: &State,
    p: &ModelParams,
    pot: &PotentialParams,
    k: &DiscreteKernel,
    cfg: &SchemeConfig,
    dt: f64,
) -> Result<Advance, SolverError> {
    let ctx = Ctx::new(p, pot, k, cfg)?;
    advance_ctx(s, &ctx, dt)
}

fn advance_ctx(s: &State, ctx: &Ctx, dt: f64) -> Result<Advance, SolverError> {
    let mut out = Advance {
        state: s.clone(),
        last_prev: s.clone(),
        last_dt: dt,
        substeps: 0,
        newton_iterations: 0,
        max_mass_defect: 0.0,
    };
    out.state = advance_level(s, ctx, dt, 0, &mut out)?;
    Ok(out)
}

fn advance_level(s: &State, ctx: &Ctx, dt: f64, level: u32, out: &mut Advance) -> Result<State, SolverError> {
    match step_dt(s, ctx, dt) {
        Ok((next, info)) => {
            out.last_prev = s.clone();
            out.last_dt = dt;
            out.substeps += 1;
            out.newton_iterations += info.newton_iterations;
            out.max_mass_defect = out.max_mass_defect.max(info.mass_defect);
            Ok(next)
        }
        Err(SolverError::Newton { .. }) if level < ctx.cfg.max_halvings => {
            let mid = advance_level(s, ctx, 0.5 * dt, level + 1, out)?;
            advance_level(&mid, ctx, 0.5 * dt, level + 1, out)
        }
        Err(e) => Err(e),
    }
}

/// Initial state with `μ⁰` consistent with the `μ` equation, together with
/// the initial rate `∂ₜφ(0)`.
///
/// For `τ > 0` the rate solves `(I - τΔ) φ' = S + Δ g` with
/// `g = a φ - J∗φ + F'_λ(φ) - χσ`, and `μ⁰ = τ φ' + g`.
pub fn initial_state(
    phi0: Field,
    sigma0: Field,
    p: &ModelParams,
    pot: &PotentialParams,
    k: &DiscreteKernel,
) -> Result<(State, Field), SolverError> {
    let reg = pot.regularized()?;
    let jphi = k.convolve(&phi0)?;
    let n = phi0.len();
    let g: Vec<f64> = (0..n)
        .map(|i| {
            let u = phi0.values()[i];
            k.a_field().values()[i] * u - jphi.values()[i] + reg.df(u) - p.chi * sigma0.values()[i]
        })
        .collect();
    let g = Field::from_values(*phi0.grid(), g)?;
    let src = eval_s(&phi0, &sigma0, p)?;
    let (mu, rate) = if p.tau > 0.0 {
        let rhs = src.add(&neumann_laplacian(&g))?.scale(1.0 / p.tau);
        let rate = solve_shifted(&vec![1.0 / p.tau; n], &rhs)?;
        let mu = g.zip_map(&rate, |gi, ri| gi + p.tau * ri)?;
        (mu, rate)
    } else {
        let rate = neumann_laplacian(&g).add(&src)?;
        (g, rate)
    };
    Ok((
        State {
            t: 0.0,
            phi: phi0,
            mu,
            sigma: sigma0,
        },
        rate,
    ))
}

/// A fully specified initial-value problem.
#[derive(Debug, Clone)]
pub struct Problem {
    pub model: ModelParams,
    pub potential: PotentialParams,
    pub kernel: DiscreteKernel,
    pub scheme: SchemeConfig,
    pub t_final: f64,
    pub phi0: Field,
    pub sigma0: Field,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    /// Keep a state every this many steps (0 keeps none besides the ends).
    pub snapshot_every: usize,
    /// Keep every state.
    pub keep_trajectory: bool,
    /// Residual level above which a step is flagged.
    pub residual_tol: f64,
    /// Slack of the range monitors on `φ` and `σ`.
    pub monitor_tol: f64,
    /// The mean envelope is widened by this multiple of `dt`.
    pub envelope_slack: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            snapshot_every: 0,
            keep_trajectory: false,
            residual_tol: 1e-8,
            monitor_tol: 1e-8,
            envelope_slack: 5.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub records: Vec<DiagnosticsRecord>,
    pub snapshots: Vec<State>,
    pub trajectory: Vec<State>,
    pub final_state: State,
    pub validation: ValidationReport,
    /// Step actually used, `T / steps`.
    pub dt: f64,
    pub steps: usize,
    pub substeps: usize,
    pub newton_iterations: usize,
    pub max_residuals: Residuals,
    pub max_mass_defect: f64,
    /// `sup_t ‖μ + χσ + J∗φ‖_∞`.
    pub separation_level: f64,
    /// Largest `(‖∇μ‖² + ‖∂ₜφ‖²) / (𝒥 + 1)` seen.
    pub empirical_m_tau: f64,
    /// `∫₀ᵀ ‖∂ₜφ‖² dt`.
    pub rate_sq_integral: f64,
    pub max_phi: f64,
    pub min_phi: f64,
}

impl RunResult {
    pub fn flags(&self) -> BTreeSet<String> {
        self.records.iter().flat_map(|r| r.flags.iter().cloned()).collect()
    }

    pub fn is_clean(&self) -> bool {
        self.records.iter().all(|r| r.flags.is_empty())
    }
}

/// A failed run, with whatever was computed before the failure.
#[derive(Debug, Clone, Error)]
#[error("{error}")]
pub struct RunError {
    pub error: SolverError,
    pub last_valid: Option<Box<State>>,
    pub records: Vec<DiagnosticsRecord>,
}

impl From<SolverError> for RunError {
    fn from(error: SolverError) -> Self {
        Self {
            error,
            last_valid: None,
            records: Vec::new(),
        }
    }
}

struct Monitor<'a> {
    p: &'a ModelParams,
    pot: &'a PotentialParams,
    opts: RunOptions,
    dt: f64,
    y0: f64,
    j_limit: f64,
    gradient_flow: bool,
}

impl Monitor<'_> {
    fn record(
        &self,
        s: &State,
        j: f64,
        energy: f64,
        prev_energy: Option<f64>,
        res: Residuals,
    ) -> DiagnosticsRecord {
        let (lo, hi) = mean_envelope_or_limit(s.t, self.y0, self.p.m, self.p.k());
        let mean_phi = s.phi.mean();
        let mut r = DiagnosticsRecord {
            t: s.t,
            mean_phi,
            mean_lo: lo,
            mean_hi: hi,
            min_phi: s.phi.min(),
            max_phi: s.phi.max(),
            min_sigma: s.sigma.min(),
            max_sigma: s.sigma.max(),
            energy,
            j_functional: j,
            residual_phi_eq: res.phi,
            residual_sigma_eq: res.sigma,
            residual_mu_eq: res.mu,
            flags: Vec::new(),
        };
        let tol = self.opts.monitor_tol;
        let slack = self.opts.envelope_slack * self.dt;
        let cap = 1.0 - 0.5 * self.pot.lambda();
        let mut flags = Vec::new();
        if !r.is_finite() {
            flags.push(flag::NON_FINITE);
        }
        if r.min_phi < -tol {
            flags.push(flag::PHI_BELOW);
        }
        if r.max_phi > cap + tol {
            flags.push(flag::PHI_ABOVE);
        }
        if r.min_sigma < -tol {
            flags.push(flag::SIGMA_BELOW);
        }
        if r.max_sigma > 1.0 + tol {
            flags.push(flag::SIGMA_ABOVE);
        }
        if mean_phi < lo - slack || mean_phi > hi + slack {
            flags.push(flag::MEAN_ENVELOPE);
        }
        if j.abs() > self.j_limit {
            flags.push(flag::J_BLOWUP);
        }
        if res.exceeds(self.opts.residual_tol) {
            flags.push(flag::RESIDUAL);
        }
        if let (true, Some(e0)) = (self.gradient_flow, prev_energy) {
            if energy > e0 + 1e-12 * e0.abs().max(1.0) {
                flags.push(flag::ENERGY_INCREASE);
            }
        }
        r.flags = flags.into_iter().map(String::from).collect();
        r
    }
}

/// Integrates `problem` from `t = 0` to `t_final`.
pub fn run(problem: &Problem, opts: RunOptions) -> Result<RunResult, RunError> {
    let Problem {
        model: p,
        potential: pot,
        kernel: k,
        scheme,
        t_final,
        phi0,
        sigma0,
    } = problem;
    let validation = validate(p, k, pot);
    if !validation.passes() {
        return Err(SolverError::Validation(validation).into());
    }
    scheme.validate()?;
    if !(t_final.is_finite() && *t_final >= 0.0) {
        return Err(SolverError::Scheme(format!("final time must be non-negative, got {t_final}")).into());
    }
    if phi0.grid() != k.grid() || sigma0.grid() != k.grid() {
        return Err(SolverError::Grid(GridError::ShapeMismatch).into());
    }
    if !(phi0.is_finite() && sigma0.is_finite()) {
        return Err(SolverError::NonFinite { t: 0.0 }.into());
    }
    let ctx = Ctx::new(p, pot, k, scheme)?;

    let steps = if *t_final == 0.0 {
        0
    } else {
        (t_final / scheme.dt - 1e-9).ceil().max(1.0) as usize
    };
    let dt = if steps == 0 { scheme.dt } else { t_final / steps as f64 };

    let (s0, rate0) = initial_state(phi0.clone(), sigma0.clone(), p, pot, k)?;
    let j0 = lyapunov_with_rate(&s0, &rate0, p).map_err(SolverError::from)?;
    let mon = Monitor {
        p,
        pot,
        opts,
        dt,
        y0: phi0.mean(),
        j_limit: 10.0 * (j0.value.abs() + 1.0),
        gradient_flow: p.m == 0.0 && p.h1 == SourceSpec::Zero && p.chi == 0.0,
    };
    let e0 = diagnostics::energy(&s0.phi, k, pot).map_err(SolverError::from)?;

    let mut records = vec![mon.record(&s0, j0.value, e0, None, Residuals::default())];
    let mut snapshots = vec![s0.clone()];
    let mut trajectory = Vec::new();
    if opts.keep_trajectory {
        trajectory.push(s0.clone());
    }
    let mut result_sep = diagnostics::separation_level(&s0, p, k).map_err(SolverError::from)?;
    let mut m_tau = j0.coercivity_ratio;
    let mut max_res = Residuals::default();
    let mut max_mass = 0.0_f64;
    let mut substeps = 0;
    let mut newton = 0;
    let mut rate_sq = 0.0;
    let mut prev_energy = e0;
    let (mut min_phi, mut max_phi) = (s0.phi.min(), s0.phi.max());

    let mut s = s0;
    for n in 1..=steps {
        let adv = match advance_ctx(&s, &ctx, dt) {
            Ok(a) => a,
            Err(error) => {
                return Err(RunError {
                    error,
                    last_valid: Some(Box::new(s)),
                    records,
                })
            }
        };
        let mut next = adv.state;
        // keep the nominal time grid exact
        next.t = n as f64 * dt;
        let fail = |error: SolverError, s: State, records| RunError {
            error,
            last_valid: Some(Box::new(s)),
            records,
        };
        let res = match diagnostics::weak_residuals(&adv.last_prev, &next, adv.last_dt, p, k, pot, scheme.splitting)
        {
            Ok(r) => r,
            Err(e) => return Err(fail(e.into(), s, records)),
        };
        let rate = next.phi.sub(&s.phi).map_err(SolverError::from)?.scale(1.0 / dt);
        let j = match lyapunov_with_rate(&next, &rate, p) {
            Ok(j) => j,
            Err(e) => return Err(fail(e.into(), s, records)),
        };
        let e = match diagnostics::energy(&next.phi, k, pot) {
            Ok(e) => e,
            Err(e) => return Err(fail(e.into(), s, records)),
        };
        let sep = match diagnostics::separation_level(&next, p, k) {
            Ok(v) => v,
            Err(e) => return Err(fail(e.into(), s, records)),
        };
        let rec = mon.record(&next, j.value, e, Some(prev_energy), res);
        if !rec.is_finite() {
            return Err(fail(SolverError::NonFinite { t: next.t }, s, records));
        }
        records.push(rec);
        prev_energy = e;
        result_sep = result_sep.max(sep);
        m_tau = m_tau.max(j.coercivity_ratio);
        max_res = Residuals {
            phi: max_res.phi.max(res.phi),
            sigma: max_res.sigma.max(res.sigma),
            mu: max_res.mu.max(res.mu),
            floor: max_res.floor.max(res.floor),
        };
        max_mass = max_mass.max(adv.max_mass_defect);
        substeps += adv.substeps;
        newton += adv.newton_iterations;
        rate_sq += rate.norm_l2().powi(2) * dt;
        min_phi = min_phi.min(next.phi.min());
        max_phi = max_phi.max(next.phi.max());
        if opts.keep_trajectory {
            trajectory.push(next.clone());
        }
        if opts.snapshot_every > 0 && n % opts.snapshot_every == 0 && n != steps {
            snapshots.push(next.clone());
        }
        s = next;
    }
    if steps > 0 {
        snapshots.push(s.clone());
    }

    Ok(RunResult {
        records,
        snapshots,
        trajectory,
        final_state: s,
        validation,
        dt,
        steps,
        substeps,
        newton_iterations: newton,
        max_residuals: max_res,
        max_mass_defect: max_mass,
        separation_level: result_sep,
        empirical_m_tau: m_tau,
        rate_sq_integral: rate_sq,
        max_phi,
        min_phi,
    })
}
