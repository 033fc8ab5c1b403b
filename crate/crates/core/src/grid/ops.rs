use super::{ordered_sum, Field};

/// Five-point (three-point in 1-D) cell-centered Laplacian with mirror ghost
/// cells, i.e. zero flux through every boundary face.
///
/// Written in flux form so that the cell sum telescopes to zero.
pub fn neumann_laplacian(u: &Field) -> Field {
    let grid = *u.grid();
    let [nx, ny] = grid.cells();
    let [hx, hy] = grid.spacing();
    let v = u.values();
    let mut out = vec![0.0; v.len()];
    let ihx2 = 1.0 / (hx * hx);
    for j in 0..ny {
        let row = j * nx;
        for i in 0..nx - 1 {
            let flux = (v[row + i + 1] - v[row + i]) * ihx2;
            out[row + i] += flux;
            out[row + i + 1] -= flux;
        }
    }
    if grid.dim() == 2 {
        let ihy2 = 1.0 / (hy * hy);
        for j in 0..ny - 1 {
            for i in 0..nx {
                let a = j * nx + i;
                let b = a + nx;
                let flux = (v[b] - v[a]) * ihy2;
                out[a] += flux;
                out[b] -= flux;
            }
        }
    }
    Field::from_values(grid, out).expect("same grid")
}

/// `Σ_faces (D u)(D v) |cell|`, the discrete Dirichlet form that pairs with
/// [`neumann_laplacian`] by summation by parts.
pub(crate) fn grad_inner(u: &Field, w: &Field) -> f64 {
    let grid = *u.grid();
    let [nx, ny] = grid.cells();
    let [hx, hy] = grid.spacing();
    let a = u.values();
    let b = w.values();
    let mut terms = Vec::with_capacity(2 * a.len());
    for j in 0..ny {
        let row = j * nx;
        for i in 0..nx - 1 {
            terms.push((a[row + i + 1] - a[row + i]) * (b[row + i + 1] - b[row + i]) / (hx * hx));
        }
    }
    if grid.dim() == 2 {
        for j in 0..ny - 1 {
            for i in 0..nx {
                let p = j * nx + i;
                let q = p + nx;
                terms.push((a[q] - a[p]) * (b[q] - b[p]) / (hy * hy));
            }
        }
    }
    ordered_sum(terms.into_iter()) * grid.cell_volume()
}
