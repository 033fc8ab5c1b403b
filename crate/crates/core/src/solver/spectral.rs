//! Cosine-Galerkin variant of the step in one dimension.
//!
//! Fields live in the span of the first `n` Neumann cosines; nonlinear terms
//! are evaluated at the cell centers and projected back. The Laplacian acts
//! through the continuous eigenvalues `(π k / L)²`, so this route shares no
//! stencil with the finite-difference step.

use nalgebra::{DMatrix, DVector};

use super::{SchemeConfig, SolverError, State};
use crate::grid::{CosineBasis, Field};
use crate::kernel::DiscreteKernel;
use crate::model::{eval_s, ModelParams};
use crate::potential::PotentialParams;

/// Orthogonal projection onto the first `modes` cosines.
pub fn project(u: &Field, modes: usize) -> Result<Field, SolverError> {
    let grid = *u.grid();
    if grid.dim() != 1 || modes == 0 || modes > grid.nx() {
        return Err(SolverError::Spectral(format!(
            "projection needs a 1-D grid and 1 <= modes <= {}, got {modes}",
            grid.nx()
        )));
    }
    let basis = CosineBasis::new(grid.nx(), grid.lengths()[0]);
    Ok(Field::from_values(grid, basis.synthesize(&basis.analyze(u.values(), modes)))?)
}

/// `Σ_i b_k(i) w_i b_l(i)` for `k, l < modes`.
fn weighted_gram(basis: &CosineBasis, w: &[f64], modes: usize) -> DMatrix<f64> {
    DMatrix::from_fn(modes, modes, |k, l| {
        basis
            .mode(k)
            .iter()
            .zip(basis.mode(l))
            .zip(w)
            .map(|((a, b), wi)| a * wi * b)
            .sum()
    })
}

fn solve(m: DMatrix<f64>, rhs: DVector<f64>) -> Result<DVector<f64>, SolverError> {
    m.lu()
        .solve(&rhs)
        .ok_or_else(|| SolverError::Spectral("singular Galerkin matrix".into()))
}

/// One convex-splitting step in the first `modes` cosine modes.
pub fn spectral_step_1d(
    s: &State,
    p: &ModelParams,
    pot: &PotentialParams,
    k: &DiscreteKernel,
    cfg: &SchemeConfig,
    modes: usize,
) -> Result<State, SolverError> {
    cfg.validate()?;
    let grid = *s.phi.grid();
    if grid.dim() != 1 || modes == 0 || modes > grid.nx() {
        return Err(SolverError::Spectral(format!(
            "needs a 1-D grid and 1 <= modes <= {}, got {modes}",
            grid.nx()
        )));
    }
    let n = grid.nx();
    let dt = cfg.dt;
    let basis = CosineBasis::new(n, grid.lengths()[0]);
    let eig: Vec<f64> = (0..modes).map(|k| basis.continuous_eigenvalue(k)).collect();
    let reg = pot.regularized()?;
    let phi_n = s.phi.values();
    let analyze = |u: &[f64]| DVector::from_vec(basis.analyze(u, modes));
    let synth = |c: &DVector<f64>| -> Result<Field, SolverError> {
        Ok(Field::from_values(grid, basis.synthesize(c.as_slice()))?)
    };

    // σ
    let sigma_s = p.sigma_s.to_field(grid)?;
    let w: Vec<f64> = phi_n
        .iter()
        .map(|&u| 1.0 / dt + p.b + p.c * p.h2.eval_single(u))
        .collect();
    let mut m = weighted_gram(&basis, &w, modes);
    for (kk, e) in eig.iter().enumerate() {
        m[(kk, kk)] += e;
    }
    let rhs = s.sigma.zip_map(&sigma_s, |sig, sup| sig / dt + p.b * sup)?;
    let sigma = synth(&solve(m, analyze(rhs.values()))?)?;

    // φ
    let src = analyze(eval_s(&s.phi, &sigma, p)?.values());
    let a = k.a_field().values();
    let jphi = k.convolve(&s.phi)?;
    let rate_coef = p.tau / dt;
    let explicit: Vec<f64> = (0..n)
        .map(|i| -jphi.values()[i] + reg.df2(phi_n[i]) - p.chi * sigma.values()[i])
        .collect();
    let mu_at = |v: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| rate_coef * (v[i] - phi_n[i]) + a[i] * v[i] + reg.df1(v[i]) + explicit[i])
            .collect()
    };
    let c_n = analyze(phi_n);
    let mut c = c_n.clone();
    let mut update = f64::INFINITY;
    for _ in 0..cfg.newton_max_iter {
        let phi = basis.synthesize(c.as_slice());
        let mu_hat = analyze(&mu_at(&phi));
        let residual = DVector::from_fn(modes, |kk, _| {
            (c[kk] - c_n[kk]) / dt + eig[kk] * mu_hat[kk] - src[kk]
        });
        let d: Vec<f64> = (0..n).map(|i| rate_coef + a[i] + reg.ddf1(phi[i])).collect();
        let mut jac = weighted_gram(&basis, &d, modes);
        for kk in 0..modes {
            for l in 0..modes {
                jac[(kk, l)] *= eig[kk];
            }
            jac[(kk, kk)] += 1.0 / dt;
        }
        let delta = solve(jac, -residual)?;
        update = delta.amax();
        c += delta;
        if !update.is_finite() || update < cfg.newton_tol {
            break;
        }
    }
    if update.is_nan() || update >= cfg.newton_tol {
        return Err(SolverError::Newton {
            t: s.t,
            dt,
            iterations: cfg.newton_max_iter,
            update,
        });
    }
    let phi = synth(&c)?;
    let mu = synth(&analyze(&mu_at(phi.values())))?;
    Ok(State {
        t: s.t + dt,
        phi,
        mu,
        sigma,
    })
}
