//! Drivers behind the command-line subcommands.

use std::fmt;

use crate::config::RunConfig;
use crate::error::Error;
use crate::grid::{vprime_norm, Field};
use crate::io::fmt_float;
use crate::kernel::{check_a5, A5Report};
use crate::model::{validate, ValidationReport};
use crate::potential::{
    check_junctions, potential_table, verify_growth_bound, BoundReport, JunctionReport, PotentialParams,
    SamplingPlan,
};
use crate::solver::{run, Problem, RunOptions, RunResult, State};

/// `ε` used by `check` for the growth inequality of `F_λ`.
pub const GROWTH_EPS: f64 = 0.1;

#[derive(Debug, Clone)]
pub struct CheckReport {
    pub junctions: JunctionReport,
    pub growth: BoundReport,
    pub a5: A5Report,
    pub validation: ValidationReport,
}

impl CheckReport {
    /// Potential checks pass and validation passes under the configured mode.
    pub fn passes(&self) -> bool {
        self.junctions.passes() && self.growth.violations == 0 && self.validation.passes()
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = |ok: bool| if ok { "PASS" } else { "FAIL" };
        writeln!(
            f,
            "{} potential-junctions: largest mismatch {:e}",
            tag(self.junctions.passes()),
            self.junctions.max()
        )?;
        writeln!(
            f,
            "{} growth-bound: {} of {} samples violate, C1 = {}, C2 = {}, worst slack {}",
            tag(self.growth.violations == 0),
            self.growth.violations,
            self.growth.samples,
            fmt_float(self.growth.c1),
            fmt_float(self.growth.c2),
            fmt_float(self.growth.worst_slack)
        )?;
        writeln!(
            f,
            "INFO kernel: a_star = {}, a_sup = {}, b_sup = {}",
            fmt_float(self.a5.a_star),
            fmt_float(self.a5.a_sup),
            fmt_float(self.a5.b_sup)
        )?;
        write!(f, "{}", self.validation)?;
        write!(f, "{}", if self.passes() { "check passed" } else { "check failed" })
    }
}

pub fn check(cfg: &RunConfig) -> Result<CheckReport, Error> {
    let problem = cfg.resolve()?;
    let pot = problem.potential;
    let err = |e: crate::potential::PotentialError| Error::Config(format!("potential: {e}"));
    Ok(CheckReport {
        junctions: check_junctions(&pot).map_err(err)?,
        growth: verify_growth_bound(&pot, GROWTH_EPS, SamplingPlan::default()).map_err(err)?,
        a5: check_a5(&problem.kernel, &pot),
        validation: validate(&problem.model, &problem.kernel, &pot),
    })
}

/// Runs `problems` concurrently, one thread each, results in input order.
pub fn run_all(problems: &[Problem], opts: RunOptions) -> Vec<Result<RunResult, Error>> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = problems
            .iter()
            .map(|p| scope.spawn(move || run(p, opts).map_err(Error::from)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("run thread panicked"))
            .collect()
    })
}

fn trajectories(problems: &[Problem]) -> Result<Vec<RunResult>, Error> {
    let opts = RunOptions {
        keep_trajectory: true,
        ..RunOptions::default()
    };
    run_all(problems, opts).into_iter().collect()
}

/// `(Σₙ ‖f(aₙ, bₙ)‖² dt)^{1/2}` over steps `1..=N`.
fn l2_time<F: Fn(&State, &State) -> f64>(a: &[State], b: &[State], dt: f64, f: F) -> f64 {
    a.iter()
        .zip(b)
        .skip(1)
        .map(|(x, y)| f(x, y).powi(2) * dt)
        .sum::<f64>()
        .sqrt()
}

fn diff(a: &Field, b: &Field) -> Field {
    a.sub(b).expect("same grid")
}

/// Norms of the difference of two solutions over `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DifferenceBundle {
    /// `sup_t ‖(φ₁ - mean φ₁) - (φ₂ - mean φ₂)‖_{V'}`.
    pub vprime_sup: f64,
    /// `sup_t ‖φ₁ - φ₂‖`.
    pub phi_sup: f64,
    /// `sup_t ‖σ₁ - σ₂‖`.
    pub sigma_sup: f64,
    /// `‖σ₁ - σ₂‖_{L²(0,T;H¹)}`.
    pub sigma_l2_h1: f64,
}

impl DifferenceBundle {
    pub fn total(&self) -> f64 {
        self.vprime_sup + self.phi_sup + self.sigma_sup + self.sigma_l2_h1
    }
}

/// Norms of the difference of two initial conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialBundle {
    pub vprime: f64,
    pub phi: f64,
    pub sigma: f64,
}

impl InitialBundle {
    pub fn total(&self) -> f64 {
        self.vprime + self.phi + self.sigma
    }
}

#[derive(Debug, Clone)]
pub struct CompareReport {
    pub lhs: DifferenceBundle,
    pub rhs: InitialBundle,
    /// `lhs / rhs`: the empirical stability constant.
    pub ratio: f64,
    pub flags: Vec<String>,
}

impl fmt::Display for CompareReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "lhs_vprime_sup = {}", fmt_float(self.lhs.vprime_sup))?;
        writeln!(f, "lhs_phi_sup = {}", fmt_float(self.lhs.phi_sup))?;
        writeln!(f, "lhs_sigma_sup = {}", fmt_float(self.lhs.sigma_sup))?;
        writeln!(f, "lhs_sigma_l2_h1 = {}", fmt_float(self.lhs.sigma_l2_h1))?;
        writeln!(f, "lhs_total = {}", fmt_float(self.lhs.total()))?;
        writeln!(f, "rhs_vprime = {}", fmt_float(self.rhs.vprime))?;
        writeln!(f, "rhs_phi = {}", fmt_float(self.rhs.phi))?;
        writeln!(f, "rhs_sigma = {}", fmt_float(self.rhs.sigma))?;
        writeln!(f, "rhs_total = {}", fmt_float(self.rhs.total()))?;
        writeln!(f, "empirical_m_tau = {}", fmt_float(self.ratio))?;
        write!(f, "flags = [{}]", self.flags.join(", "))
    }
}

fn same_discretization(a: &Problem, b: &Problem) -> bool {
    a.kernel.grid() == b.kernel.grid()
        && a.kernel.spec() == b.kernel.spec()
        && a.model == b.model
        && a.potential == b.potential
        && a.scheme == b.scheme
        && a.t_final == b.t_final
}

/// Runs both problems and measures how far apart the solutions drift
/// relative to the distance of their initial data.
pub fn compare(a: &Problem, b: &Problem) -> Result<CompareReport, Error> {
    if !same_discretization(a, b) {
        return Err(Error::Config(
            "compare needs identical grids, kernels, parameters and schemes".into(),
        ));
    }
    let runs = trajectories(&[a.clone(), b.clone()])?;
    let (ta, tb) = (&runs[0].trajectory, &runs[1].trajectory);
    let dt = runs[0].dt;
    let vprime = |x: &Field, y: &Field| vprime_norm(&diff(x, y).mean_free()).expect("mean free");
    let mut lhs = DifferenceBundle {
        vprime_sup: 0.0,
        phi_sup: 0.0,
        sigma_sup: 0.0,
        sigma_l2_h1: 0.0,
    };
    for (x, y) in ta.iter().zip(tb) {
        lhs.vprime_sup = lhs.vprime_sup.max(vprime(&x.phi, &y.phi));
        lhs.phi_sup = lhs.phi_sup.max(diff(&x.phi, &y.phi).norm_l2());
        lhs.sigma_sup = lhs.sigma_sup.max(diff(&x.sigma, &y.sigma).norm_l2());
    }
    lhs.sigma_l2_h1 = l2_time(ta, tb, dt, |x, y| diff(&x.sigma, &y.sigma).norm_h1());
    let rhs = InitialBundle {
        vprime: vprime(&a.phi0, &b.phi0),
        phi: diff(&a.phi0, &b.phi0).norm_l2(),
        sigma: diff(&a.sigma0, &b.sigma0).norm_l2(),
    };
    let ratio = match (lhs.total(), rhs.total()) {
        (l, r) if r > 0.0 => l / r,
        (0.0, _) => 0.0,
        _ => f64::INFINITY,
    };
    let mut flags: Vec<String> = runs[0].flags().into_iter().chain(runs[1].flags()).collect();
    flags.sort();
    flags.dedup();
    Ok(CompareReport {
        lhs,
        rhs,
        ratio,
        flags,
    })
}

/// `cfg` and a copy whose `φ₀` carries the configured cosine perturbation.
pub fn perturbed_pair(cfg: &RunConfig) -> Result<(Problem, Problem), Error> {
    let a = cfg.resolve()?;
    let mut b = a.clone();
    let grid = *a.phi0.grid();
    let lx = grid.lengths()[0];
    let (amp, mode) = (cfg.experiment.perturbation, cfg.experiment.perturbation_mode as f64);
    let bump = Field::from_fn(grid, |x, _| amp * (std::f64::consts::PI * mode * x / lx).cos());
    b.phi0 = a.phi0.add(&bump).expect("same grid");
    Ok((a, b))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TauEntry {
    pub tau: f64,
    /// `‖φ_τ - φ₀‖_{L²(Q)}` against the `τ = 0` run.
    pub phi_error: f64,
    pub sigma_error: f64,
    /// `τ ‖∂ₜφ_τ‖²_{L²(Q)}`.
    pub viscous: f64,
    /// `τ^{1/2} sup_t ‖φ_τ‖_{H¹}`.
    pub sqrt_tau_h1: f64,
    pub flags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TauSweepReport {
    pub entries: Vec<TauEntry>,
    /// Errors against the `τ = 0` run strictly decrease along the list.
    pub monotone: bool,
    /// Every viscous term is at most `bound_factor` times the first one.
    pub bounded: bool,
    pub bound_factor: f64,
}

impl TauSweepReport {
    pub fn passes(&self) -> bool {
        self.monotone && self.bounded
    }
}

impl fmt::Display for TauSweepReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "tau,phi_error,sigma_error,viscous,sqrt_tau_h1,flags")?;
        for e in &self.entries {
            writeln!(
                f,
                "{},{},{},{},{},{}",
                fmt_float(e.tau),
                fmt_float(e.phi_error),
                fmt_float(e.sigma_error),
                fmt_float(e.viscous),
                fmt_float(e.sqrt_tau_h1),
                e.flags.join(";")
            )?;
        }
        writeln!(f, "# monotone decrease toward tau = 0: {}", self.monotone)?;
        write!(
            f,
            "# viscous term within {}x of the first entry: {}",
            self.bound_factor, self.bounded
        )
    }
}

/// Runs `base` once per `τ` and compares each run with the `τ = 0` one.
pub fn sweep_tau(base: &Problem, taus: &[f64], bound_factor: f64) -> Result<TauSweepReport, Error> {
    if taus.is_empty() || taus.windows(2).any(|w| w[1] >= w[0]) || *taus.last().unwrap() != 0.0 {
        return Err(Error::Config(format!(
            "tau list must be strictly decreasing and end with 0, got {taus:?}"
        )));
    }
    let problems: Vec<Problem> = taus
        .iter()
        .map(|&tau| {
            let mut p = base.clone();
            p.model.tau = tau;
            p
        })
        .collect();
    let runs = trajectories(&problems)?;
    let reference = &runs.last().unwrap().trajectory;
    let entries: Vec<TauEntry> = taus
        .iter()
        .zip(&runs)
        .map(|(&tau, r)| TauEntry {
            tau,
            phi_error: l2_time(&r.trajectory, reference, r.dt, |x, y| diff(&x.phi, &y.phi).norm_l2()),
            sigma_error: l2_time(&r.trajectory, reference, r.dt, |x, y| diff(&x.sigma, &y.sigma).norm_l2()),
            viscous: tau * r.rate_sq_integral,
            sqrt_tau_h1: tau.sqrt()
                * r.trajectory.iter().map(|s| s.phi.norm_h1()).fold(0.0, f64::max),
            flags: r.flags().into_iter().collect(),
        })
        .collect();
    let monotone = entries.windows(2).all(|w| w[1].phi_error < w[0].phi_error);
    let first = entries[0].viscous;
    let bounded = entries.iter().all(|e| e.viscous <= bound_factor * first);
    Ok(TauSweepReport {
        entries,
        monotone,
        bounded,
        bound_factor,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LambdaEntry {
    pub lambda: f64,
    pub max_phi: f64,
    /// `sup |F_λ(φ) - F(φ)|` along the trajectory (`+∞` once `φ` leaves `[0, 1)`).
    pub f_mismatch: f64,
    pub flags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LambdaSweepReport {
    pub entries: Vec<LambdaEntry>,
    /// `‖φ_{λᵢ} - φ_{λᵢ₊₁}‖_{L²(Q)}`.
    pub distances: Vec<f64>,
    /// Each distance is at most `cauchy_factor` times the previous one.
    pub cauchy: bool,
    pub cauchy_factor: f64,
}

impl fmt::Display for LambdaSweepReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "lambda,max_phi,f_mismatch,distance_to_next,flags")?;
        for (i, e) in self.entries.iter().enumerate() {
            let d = self.distances.get(i).map_or(String::new(), |&d| fmt_float(d));
            writeln!(
                f,
                "{},{},{},{},{}",
                fmt_float(e.lambda),
                fmt_float(e.max_phi),
                fmt_float(e.f_mismatch),
                d,
                e.flags.join(";")
            )?;
        }
        write!(
            f,
            "# successive distances shrink by at least {}: {}",
            self.cauchy_factor, self.cauchy
        )
    }
}

fn f_mismatch(pot: &PotentialParams, traj: &[State]) -> f64 {
    let reg = pot.regularized().expect("validated");
    traj.iter()
        .flat_map(|s| s.phi.values().iter().copied())
        .map(|r| match pot.f(r).finite() {
            Some(f) => (reg.f(r) - f).abs(),
            None => f64::INFINITY,
        })
        .fold(0.0, f64::max)
}

/// Runs `base` once per `λ` and measures successive trajectory distances.
pub fn sweep_lambda(base: &Problem, lambdas: &[f64], cauchy_factor: f64) -> Result<LambdaSweepReport, Error> {
    if lambdas.len() < 2 || lambdas.windows(2).any(|w| w[1] >= w[0]) || lambdas.iter().any(|&l| l <= 0.0) {
        return Err(Error::Config(format!(
            "lambda list must have at least two strictly decreasing positive entries, got {lambdas:?}"
        )));
    }
    let problems = lambdas
        .iter()
        .map(|&l| {
            let mut p = base.clone();
            p.potential = p
                .potential
                .with_lambda(l)
                .map_err(|e| Error::Config(format!("potential: {e}")))?;
            Ok(p)
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let runs = trajectories(&problems)?;
    let entries = lambdas
        .iter()
        .zip(&runs)
        .zip(&problems)
        .map(|((&lambda, r), p)| LambdaEntry {
            lambda,
            max_phi: r.max_phi,
            f_mismatch: f_mismatch(&p.potential, &r.trajectory),
            flags: r.flags().into_iter().collect(),
        })
        .collect();
    let distances: Vec<f64> = runs
        .windows(2)
        .map(|w| l2_time(&w[0].trajectory, &w[1].trajectory, w[0].dt, |x, y| diff(&x.phi, &y.phi).norm_l2()))
        .collect();
    let cauchy = distances.windows(2).all(|w| w[1] <= cauchy_factor * w[0]);
    Ok(LambdaSweepReport {
        entries,
        distances,
        cauchy,
        cauchy_factor,
    })
}

/// CSV with columns `r,F,F_lambda,dF_lambda`; `F` is `inf` off `[0, 1)`.
pub fn potential_table_csv(p: &PotentialParams, lo: f64, hi: f64, points: usize) -> Result<String, Error> {
    let rows = potential_table(p, lo, hi, points).map_err(|e| Error::Config(format!("potential: {e}")))?;
    let mut s = String::from("r,F,F_lambda,dF_lambda\n");
    for r in rows {
        let f = r.f.finite().map_or("inf".to_string(), fmt_float);
        s.push_str(&format!(
            "{},{},{},{}\n",
            fmt_float(r.r),
            f,
            fmt_float(r.f_lambda),
            fmt_float(r.df_lambda)
        ));
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::DEFAULT_CONFIG;

    fn small() -> RunConfig {
        let mut cfg = RunConfig::from_toml_str(DEFAULT_CONFIG).unwrap();
        cfg.t_final = 0.05;
        cfg.grid.cells = vec![64];
        cfg
    }

    #[test]
    fn default_check_passes() {
        let report = check(&RunConfig::from_toml_str(DEFAULT_CONFIG).unwrap()).unwrap();
        assert!(report.passes(), "{report}");
        assert!(report.to_string().ends_with("check passed"));
    }

    #[test]
    fn identical_problems_compare_to_zero() {
        let p = small().resolve().unwrap();
        let r = compare(&p, &p).unwrap();
        assert_eq!(r.lhs.total(), 0.0);
        assert_eq!(r.ratio, 0.0);
    }

    #[test]
    fn compare_rejects_different_discretizations() {
        let a = small().resolve().unwrap();
        let mut cfg = small();
        cfg.scheme.dt = 5e-4;
        let b = cfg.resolve().unwrap();
        assert!(matches!(compare(&a, &b), Err(Error::Config(_))));
    }

    #[test]
    fn perturbation_has_the_configured_size() {
        let mut cfg = small();
        cfg.experiment.perturbation = 1e-3;
        let (a, b) = perturbed_pair(&cfg).unwrap();
        let d = b.phi0.sub(&a.phi0).unwrap();
        assert!((d.norm_linf() - 1e-3).abs() < 1e-4);
        assert!(d.mean().abs() < 1e-15);
    }

    #[test]
    fn sweep_lists_are_validated() {
        let p = small().resolve().unwrap();
        assert!(sweep_tau(&p, &[0.1, 0.05], 2.0).is_err());
        assert!(sweep_tau(&p, &[0.05, 0.1, 0.0], 2.0).is_err());
        assert!(sweep_lambda(&p, &[1e-2], 0.7).is_err());
        assert!(sweep_lambda(&p, &[1e-2, 2e-2], 0.7).is_err());
    }

    #[test]
    fn tau_sweep_reference_entry_is_zero() {
        let p = small().resolve().unwrap();
        let r = sweep_tau(&p, &[0.1, 0.0], 2.0).unwrap();
        assert_eq!(r.entries[1].phi_error, 0.0);
        assert!(r.entries[0].phi_error > 0.0);
        assert!(r.to_string().starts_with("tau,phi_error"));
    }

    #[test]
    fn lambda_sweep_away_from_one_is_exact() {
        // φ stays in [0.3, 0.7], where every F_λ equals F
        let p = small().resolve().unwrap();
        let r = sweep_lambda(&p, &[1e-2, 5e-3], 0.7).unwrap();
        assert_eq!(r.distances, vec![0.0]);
        assert!(r.entries.iter().all(|e| e.f_mismatch == 0.0));
    }

    #[test]
    fn potential_table_marks_the_singular_range() {
        let p = PotentialParams::from_h(0.4, 1e-2).unwrap();
        let csv = potential_table_csv(&p, -0.5, 1.5, 5).unwrap();
        let rows: Vec<&str> = csv.lines().collect();
        assert_eq!(rows.len(), 6);
        assert!(rows[1].split(',').nth(1) == Some("inf"));
        assert!(rows[5].split(',').nth(1) == Some("inf"));
        assert!(rows[3].split(',').nth(1) != Some("inf"));
    }
}
