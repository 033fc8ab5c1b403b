//! Uniform cell-centered grids on rectangles with homogeneous Neumann
//! boundary conditions, and scalar fields living on them.
//!
//! Cells are stored row-major: index `j * nx + i`, with `i` running along x.
//! A 1-D grid is a 2-D grid with a single row whose y-extent does not enter
//! any measure.

mod cosine;
mod inverse;
mod ops;

pub use cosine::CosineBasis;
pub use inverse::{
    inv_neumann_laplacian, inv_neumann_laplacian_cg, solve_shifted, vprime_norm, CG_MAX_ITER_FACTOR,
    CG_TOL,
};
pub use ops::neumann_laplacian;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Smallest admissible number of cells per axis.
pub const MIN_CELLS: usize = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("grid needs at least {MIN_CELLS} cells per axis, got {0}")]
    TooFewCells(usize),
    #[error("domain length must be positive and finite, got {0}")]
    BadLength(f64),
    #[error("field has {got} values but the grid has {expected} cells")]
    ValueCount { expected: usize, got: usize },
    #[error("fields live on different grids")]
    ShapeMismatch,
    #[error("input must be mean-free, mean is {0:e}")]
    NotMeanFree(f64),
    #[error("conjugate gradient did not converge after {iterations} iterations (relative residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("shifted operator needs a strictly positive diagonal, found {0}")]
    NonPositiveShift(f64),
}

/// Rectangular grid in one or two dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    cells: [usize; 2],
    lengths: [f64; 2],
}

impl Grid {
    pub fn new_1d(cells: usize, length: f64) -> Result<Self, GridError> {
        check_axis(cells, length)?;
        Ok(Self {
            dim: 1,
            cells: [cells, 1],
            lengths: [length, 1.0],
        })
    }

    pub fn new_2d(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self, GridError> {
        check_axis(nx, lx)?;
        check_axis(ny, ly)?;
        Ok(Self {
            dim: 2,
            cells: [nx, ny],
            lengths: [lx, ly],
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cells(&self) -> [usize; 2] {
        self.cells
    }

    pub fn lengths(&self) -> [f64; 2] {
        self.lengths
    }

    pub fn nx(&self) -> usize {
        self.cells[0]
    }

    pub fn ny(&self) -> usize {
        self.cells[1]
    }

    /// Total number of cells.
    pub fn len(&self) -> usize {
        self.cells[0] * self.cells[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self) -> [f64; 2] {
        [
            self.lengths[0] / self.cells[0] as f64,
            self.lengths[1] / self.cells[1] as f64,
        ]
    }

    pub fn cell_volume(&self) -> f64 {
        let h = self.spacing();
        if self.dim == 1 {
            h[0]
        } else {
            h[0] * h[1]
        }
    }

    /// Measure of the domain, `|Ω|`.
    pub fn volume(&self) -> f64 {
        if self.dim == 1 {
            self.lengths[0]
        } else {
            self.lengths[0] * self.lengths[1]
        }
    }

    /// Cell-center coordinates of cell `idx`. The y coordinate is `0` in 1-D.
    pub fn center(&self, idx: usize) -> [f64; 2] {
        let h = self.spacing();
        let i = idx % self.cells[0];
        let j = idx / self.cells[0];
        let y = if self.dim == 1 {
            0.0
        } else {
            (j as f64 + 0.5) * h[1]
        };
        [(i as f64 + 0.5) * h[0], y]
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.cells[0] + i
    }

    fn same_as(&self, other: &Grid) -> Result<(), GridError> {
        if self == other {
            Ok(())
        } else {
            Err(GridError::ShapeMismatch)
        }
    }
}

fn check_axis(cells: usize, length: f64) -> Result<(), GridError> {
    if cells < MIN_CELLS {
        return Err(GridError::TooFewCells(cells));
    }
    if !(length.is_finite() && length > 0.0) {
        return Err(GridError::BadLength(length));
    }
    Ok(())
}

/// Cell-centered scalar field.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: Grid, value: f64) -> Self {
        Self {
            grid,
            values: vec![value; grid.len()],
        }
    }

    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self, GridError> {
        if values.len() != grid.len() {
            return Err(GridError::ValueCount {
                expected: grid.len(),
                got: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    /// Samples `f(x, y)` at the cell centers.
    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = (0..grid.len())
            .map(|idx| {
                let [x, y] = grid.center(idx);
                f(x, y)
            })
            .collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Field, GridError> {
        self.grid.same_as(&other.grid)?;
        Ok(Field {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn add(&self, other: &Field) -> Result<Field, GridError> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Field) -> Result<Field, GridError> {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn scale(&self, alpha: f64) -> Field {
        self.map(|v| alpha * v)
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: f64, other: &Field) -> Result<(), GridError> {
        self.grid.same_as(&other.grid)?;
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += alpha * b;
        }
        Ok(())
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Cell average.
    pub fn mean(&self) -> f64 {
        ordered_sum(self.values.iter().copied()) / self.values.len() as f64
    }

    /// The field minus its mean.
    pub fn mean_free(&self) -> Field {
        let m = self.mean();
        self.map(|v| v - m)
    }

    /// Discrete `L²(Ω)` inner product `Σ u v |cell|`.
    pub fn inner(&self, other: &Field) -> Result<f64, GridError> {
        self.grid.same_as(&other.grid)?;
        Ok(ordered_sum(self.values.iter().zip(&other.values).map(|(a, b)| a * b)) * self.grid.cell_volume())
    }

    pub fn norm_l2(&self) -> f64 {
        (ordered_sum(self.values.iter().map(|v| v * v)) * self.grid.cell_volume()).sqrt()
    }

    pub fn norm_linf(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `(‖u‖² + ‖∇u‖²)^{1/2}` with face-centered gradients.
    pub fn norm_h1(&self) -> f64 {
        let g = ops::grad_inner(self, self);
        (self.norm_l2().powi(2) + g).sqrt()
    }

    /// `‖∇u‖²` from face differences; consistent with [`neumann_laplacian`].
    pub fn grad_norm_sq(&self) -> f64 {
        ops::grad_inner(self, self)
    }

    /// `⟨∇u, ∇v⟩` from face differences.
    pub fn grad_inner(&self, other: &Field) -> Result<f64, GridError> {
        self.grid.same_as(&other.grid)?;
        Ok(ops::grad_inner(self, other))
    }
}

/// Plain left-to-right summation; kept in one place so every reduction in the
/// crate has a fixed order.
pub(crate) fn ordered_sum(it: impl Iterator<Item = f64>) -> f64 {
    it.fold(0.0, |acc, v| acc + v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_degenerate_grids() {
        assert_eq!(Grid::new_1d(3, 1.0), Err(GridError::TooFewCells(3)));
        assert!(matches!(Grid::new_1d(8, 0.0), Err(GridError::BadLength(_))));
        assert!(matches!(Grid::new_2d(8, 8, 1.0, f64::NAN), Err(GridError::BadLength(_))));
    }

    #[test]
    fn spacing_times_cells_is_length() {
        let g = Grid::new_2d(10, 7, 2.0, 0.7).unwrap();
        let h = g.spacing();
        assert!((h[0] * 10.0 - 2.0).abs() < 1e-15);
        assert!((h[1] * 7.0 - 0.7).abs() < 1e-15);
        assert!((g.cell_volume() * g.len() as f64 - g.volume()).abs() < 1e-14);
    }

    #[test]
    fn constant_field_mean_and_norm() {
        for g in [Grid::new_1d(16, 2.0).unwrap(), Grid::new_2d(8, 12, 1.5, 0.5).unwrap()] {
            let u = Field::constant(g, 3.0);
            assert!((u.mean() - 3.0).abs() < 1e-15);
            assert!((u.norm_l2() - 3.0 * g.volume().sqrt()).abs() < 1e-13);
            assert!(u.mean_free().mean().abs() < 1e-15);
        }
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let a = Field::zeros(Grid::new_1d(8, 1.0).unwrap());
        let b = Field::zeros(Grid::new_1d(9, 1.0).unwrap());
        assert_eq!(a.inner(&b), Err(GridError::ShapeMismatch));
        assert!(Field::from_values(*a.grid(), vec![0.0; 3]).is_err());
    }
}
