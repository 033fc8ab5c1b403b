//! Inverse Neumann Laplacian `𝒩` on mean-free fields, the dual norm it
//! induces, and SPD solves with the shifted operator `diag - Δ_h`.

use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

use super::{neumann_laplacian, CosineBasis, Field, GridError};

/// Relative residual target of the conjugate-gradient route.
pub const CG_TOL: f64 = 1e-10;
/// CG iteration cap is this factor times the number of cells.
pub const CG_MAX_ITER_FACTOR: usize = 10;

const MEAN_FREE_TOL: f64 = 1e-10;
const SHIFTED_CG_TOL: f64 = 1e-13;

thread_local! {
    static BASES: RefCell<HashMap<(usize, u64), Rc<CosineBasis>>> = RefCell::new(HashMap::new());
}

pub(crate) fn cached_basis(n: usize, length: f64) -> Rc<CosineBasis> {
    BASES.with(|cache| {
        cache
            .borrow_mut()
            .entry((n, length.to_bits()))
            .or_insert_with(|| Rc::new(CosineBasis::new(n, length)))
            .clone()
    })
}

fn check_mean_free(f: &Field) -> Result<(), GridError> {
    let m = f.mean();
    if m.abs() >= MEAN_FREE_TOL {
        return Err(GridError::NotMeanFree(m));
    }
    Ok(())
}

/// `𝒩 f`: the mean-free solution of `-Δ_h u = f`.
///
/// 1-D inverts the flux recursion directly; 2-D diagonalizes `-Δ_h` in the
/// discrete cosine basis. Both are exact up to rounding.
pub fn inv_neumann_laplacian(f: &Field) -> Result<Field, GridError> {
    check_mean_free(f)?;
    let grid = *f.grid();
    let v = f.values();
    let out = if grid.dim() == 1 {
        let h = grid.spacing()[0];
        let mut u = vec![0.0; v.len()];
        let mut flux = 0.0;
        for i in 0..v.len() - 1 {
            flux -= h * v[i];
            u[i + 1] = u[i] + h * flux;
        }
        u
    } else {
        let [nx, ny] = grid.cells();
        let [lx, ly] = grid.lengths();
        let bx = cached_basis(nx, lx);
        let by = cached_basis(ny, ly);
        let mut coeffs = forward_2d(v, &bx, &by);
        for l in 0..ny {
            for k in 0..nx {
                let idx = l * nx + k;
                if k == 0 && l == 0 {
                    coeffs[idx] = 0.0;
                } else {
                    coeffs[idx] /= bx.discrete_eigenvalue(k) + by.discrete_eigenvalue(l);
                }
            }
        }
        inverse_2d(&coeffs, &bx, &by)
    };
    let u = Field::from_values(grid, out)?;
    Ok(u.mean_free())
}

fn forward_2d(v: &[f64], bx: &CosineBasis, by: &CosineBasis) -> Vec<f64> {
    let (nx, ny) = (bx.len(), by.len());
    let mut rows = vec![0.0; nx * ny];
    for j in 0..ny {
        let c = bx.analyze(&v[j * nx..(j + 1) * nx], nx);
        rows[j * nx..(j + 1) * nx].copy_from_slice(&c);
    }
    let mut out = vec![0.0; nx * ny];
    let mut col = vec![0.0; ny];
    for k in 0..nx {
        for j in 0..ny {
            col[j] = rows[j * nx + k];
        }
        let c = by.analyze(&col, ny);
        for l in 0..ny {
            out[l * nx + k] = c[l];
        }
    }
    out
}

fn inverse_2d(coeffs: &[f64], bx: &CosineBasis, by: &CosineBasis) -> Vec<f64> {
    let (nx, ny) = (bx.len(), by.len());
    let mut cols = vec![0.0; nx * ny];
    let mut col = vec![0.0; ny];
    for k in 0..nx {
        for l in 0..ny {
            col[l] = coeffs[l * nx + k];
        }
        let s = by.synthesize(&col);
        for j in 0..ny {
            cols[j * nx + k] = s[j];
        }
    }
    let mut out = vec![0.0; nx * ny];
    for j in 0..ny {
        let s = bx.synthesize(&cols[j * nx..(j + 1) * nx]);
        out[j * nx..(j + 1) * nx].copy_from_slice(&s);
    }
    out
}

/// `𝒩 f` by conjugate gradients on `-Δ_h`, iterates kept mean-free.
///
/// Independent of [`inv_neumann_laplacian`]; stops at relative residual `tol`.
pub fn inv_neumann_laplacian_cg(f: &Field, tol: f64, max_iter: usize) -> Result<Field, GridError> {
    check_mean_free(f)?;
    let b = f.mean_free();
    let bnorm = b.norm_l2();
    let mut x = Field::zeros(*f.grid());
    if bnorm == 0.0 {
        return Ok(x);
    }
    let apply = |u: &Field| neumann_laplacian(u).scale(-1.0);
    let mut r = b.clone();
    let mut p = r.clone();
    let mut rr = r.inner(&r)?;
    for it in 0..max_iter {
        let ap = apply(&p);
        let alpha = rr / p.inner(&ap)?;
        x.axpy(alpha, &p)?;
        r.axpy(-alpha, &ap)?;
        r = r.mean_free();
        let rr_new = r.inner(&r)?;
        if rr_new.sqrt() <= tol * bnorm {
            return Ok(x.mean_free());
        }
        let beta = rr_new / rr;
        p = r.zip_map(&p, |ri, pi| ri + beta * pi)?;
        rr = rr_new;
        if it + 1 == max_iter {
            break;
        }
    }
    Err(GridError::NoConvergence {
        iterations: max_iter,
        residual: rr.sqrt() / bnorm,
    })
}

/// `‖f‖_{V'} = ⟨f, 𝒩 f⟩^{1/2}` for mean-free `f`.
pub fn vprime_norm(f: &Field) -> Result<f64, GridError> {
    let u = inv_neumann_laplacian(f)?;
    Ok(f.inner(&u)?.max(0.0).sqrt())
}

/// Solves `(diag - Δ_h) u = rhs` for a strictly positive diagonal.
///
/// 1-D uses the Thomas algorithm; 2-D uses Jacobi-preconditioned CG.
pub fn solve_shifted(diag: &[f64], rhs: &Field) -> Result<Field, GridError> {
    let grid = *rhs.grid();
    if diag.len() != grid.len() {
        return Err(GridError::ValueCount {
            expected: grid.len(),
            got: diag.len(),
        });
    }
    if let Some(&bad) = diag.iter().find(|d| !(**d > 0.0 && d.is_finite())) {
        return Err(GridError::NonPositiveShift(bad));
    }
    if grid.dim() == 1 {
        let n = grid.len();
        let h = grid.spacing()[0];
        let off = -1.0 / (h * h);
        // main diagonal: diag + (number of interior faces) / h²
        let main: Vec<f64> = (0..n)
            .map(|i| {
                let faces = if i == 0 || i == n - 1 { 1.0 } else { 2.0 };
                diag[i] + faces / (h * h)
            })
            .collect();
        let r = rhs.values();
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        c[0] = off / main[0];
        d[0] = r[0] / main[0];
        for i in 1..n {
            let m = main[i] - off * c[i - 1];
            c[i] = off / m;
            d[i] = (r[i] - off * d[i - 1]) / m;
        }
        let mut u = vec![0.0; n];
        u[n - 1] = d[n - 1];
        for i in (0..n - 1).rev() {
            u[i] = d[i] - c[i] * u[i + 1];
        }
        return Field::from_values(grid, u);
    }

    let [hx, hy] = grid.spacing();
    let [nx, ny] = grid.cells();
    let precond: Vec<f64> = (0..grid.len())
        .map(|idx| {
            let i = idx % nx;
            let j = idx / nx;
            let fx = [i > 0, i + 1 < nx].iter().filter(|b| **b).count() as f64;
            let fy = [j > 0, j + 1 < ny].iter().filter(|b| **b).count() as f64;
            1.0 / (diag[idx] + fx / (hx * hx) + fy / (hy * hy))
        })
        .collect();
    let apply = |u: &Field| -> Field {
        let lap = neumann_laplacian(u);
        let vals = u
            .values()
            .iter()
            .zip(lap.values())
            .zip(diag)
            .map(|((ui, li), di)| di * ui - li)
            .collect();
        Field::from_values(grid, vals).expect("same grid")
    };
    let bnorm = rhs.norm_l2();
    let mut x = Field::from_values(
        grid,
        rhs.values().iter().zip(&precond).map(|(b, p)| b * p).collect(),
    )?;
    if bnorm == 0.0 {
        return Ok(Field::zeros(grid));
    }
    let mut r = rhs.sub(&apply(&x))?;
    let precondition = |r: &Field| -> Field {
        Field::from_values(grid, r.values().iter().zip(&precond).map(|(a, p)| a * p).collect())
            .expect("same grid")
    };
    let mut z = precondition(&r);
    let mut p = z.clone();
    let mut rz = r.inner(&z)?;
    let max_iter = CG_MAX_ITER_FACTOR * grid.len();
    for _ in 0..max_iter {
        if r.norm_l2() <= SHIFTED_CG_TOL * bnorm {
            return Ok(x);
        }
        let ap = apply(&p);
        let alpha = rz / p.inner(&ap)?;
        x.axpy(alpha, &p)?;
        r.axpy(-alpha, &ap)?;
        z = precondition(&r);
        let rz_new = r.inner(&z)?;
        let beta = rz_new / rz;
        p = z.zip_map(&p, |zi, pi| zi + beta * pi)?;
        rz = rz_new;
    }
    Err(GridError::NoConvergence {
        iterations: max_iter,
        residual: r.norm_l2() / bnorm,
    })
}
