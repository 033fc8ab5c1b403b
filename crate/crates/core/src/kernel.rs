//! Radial convolution kernels restricted to the domain.
//!
//! `(J ∗ u)(x) = ∫_Ω J(x - y) u(y) dy` is discretized with the midpoint rule
//! on the cell centers. There is no periodic wrap: cells outside `Ω` simply do
//! not contribute, so `a = J ∗ 1` drops near the boundary.

use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{Field, Grid, GridError};
use crate::potential::PotentialParams;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("kernel {0} must be positive and finite, got {1}")]
    BadParameter(&'static str, f64),
    #[error("cutoff radius {cutoff} exceeds the smallest domain length {length}")]
    CutoffTooLarge { cutoff: f64, length: f64 },
    #[error(transparent)]
    Grid(#[from] GridError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelFamily {
    /// `A exp(-r² / (2 w²))`, truncated at the cutoff.
    Gaussian,
    /// Wendland C² function `A (1 - r/w)⁴ (4 r/w + 1)` supported on `r < w`.
    WendlandMollifier,
    /// `A` on `r ≤ cutoff`.
    Tophat,
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KernelFamily::Gaussian => "gaussian",
            KernelFamily::WendlandMollifier => "wendland-mollifier",
            KernelFamily::Tophat => "tophat",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub width: f64,
    pub amplitude: f64,
    pub cutoff_radius: f64,
}

impl KernelSpec {
    /// Effective support radius of the samples.
    pub fn support(&self) -> f64 {
        match self.family {
            KernelFamily::WendlandMollifier => self.cutoff_radius.min(self.width),
            _ => self.cutoff_radius,
        }
    }

    /// Kernel profile `J(r)` (zero beyond the support).
    pub fn profile(&self, r: f64) -> f64 {
        if r > self.support() {
            return 0.0;
        }
        let a = self.amplitude;
        match self.family {
            KernelFamily::Gaussian => a * (-r * r / (2.0 * self.width * self.width)).exp(),
            KernelFamily::WendlandMollifier => {
                let s = r / self.width;
                a * (1.0 - s).powi(4) * (4.0 * s + 1.0)
            }
            KernelFamily::Tophat => a,
        }
    }

    /// `dJ/dr` on the open support.
    pub fn radial_derivative(&self, r: f64) -> f64 {
        if r >= self.support() {
            return 0.0;
        }
        let a = self.amplitude;
        match self.family {
            KernelFamily::Gaussian => {
                let w2 = self.width * self.width;
                -a * r / w2 * (-r * r / (2.0 * w2)).exp()
            }
            KernelFamily::WendlandMollifier => {
                let s = r / self.width;
                -20.0 * a * s * (1.0 - s).powi(3) / self.width
            }
            KernelFamily::Tophat => 0.0,
        }
    }

    /// Height of the jump of `J` at the edge of its support.
    fn edge_jump(&self) -> f64 {
        let r = self.support();
        let a = self.amplitude;
        match self.family {
            KernelFamily::Gaussian => a * (-r * r / (2.0 * self.width * self.width)).exp(),
            KernelFamily::WendlandMollifier => {
                let s = r / self.width;
                a * (1.0 - s).powi(4) * (4.0 * s + 1.0)
            }
            KernelFamily::Tophat => a,
        }
    }

    /// Same kernel with the amplitude chosen so that `a(x) = target` at
    /// points whose whole stencil lies inside the domain.
    pub fn with_interior_mass(self, grid: &Grid, target: f64) -> Result<Self, KernelError> {
        let unit = KernelSpec {
            amplitude: 1.0,
            ..self
        };
        unit.validate(grid)?;
        let stencil = Stencil::sample(&unit, grid);
        let mass: f64 = stencil.weights.iter().sum::<f64>() * grid.cell_volume();
        Ok(KernelSpec {
            amplitude: target / mass,
            ..self
        })
    }

    fn validate(&self, grid: &Grid) -> Result<(), KernelError> {
        for (name, v) in [
            ("width", self.width),
            ("amplitude", self.amplitude),
            ("cutoff_radius", self.cutoff_radius),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(KernelError::BadParameter(name, v));
            }
        }
        let lengths = grid.lengths();
        let length = if grid.dim() == 1 {
            lengths[0]
        } else {
            lengths[0].min(lengths[1])
        };
        if self.cutoff_radius > length {
            return Err(KernelError::CutoffTooLarge {
                cutoff: self.cutoff_radius,
                length,
            });
        }
        Ok(())
    }
}

/// Samples of `J` on the grid offsets `|dx| ≤ kx hx`, `|dy| ≤ ky hy`.
#[derive(Debug, Clone)]
struct Stencil {
    half: [usize; 2],
    /// Row-major over `(2 ky + 1) × (2 kx + 1)`.
    weights: Vec<f64>,
    /// `|∇J|` at the same offsets.
    grad: Vec<f64>,
}

impl Stencil {
    fn sample(spec: &KernelSpec, grid: &Grid) -> Self {
        let h = grid.spacing();
        let r = spec.support();
        let kx = ((r / h[0]).floor() as usize).min(grid.nx() - 1);
        let ky = if grid.dim() == 2 {
            ((r / h[1]).floor() as usize).min(grid.ny() - 1)
        } else {
            0
        };
        let wx = 2 * kx + 1;
        let wy = 2 * ky + 1;
        let mut weights = vec![0.0; wx * wy];
        let mut grad = vec![0.0; wx * wy];
        for dj in 0..wy {
            let dy = (dj as f64 - ky as f64) * h[1];
            let dy = if grid.dim() == 1 { 0.0 } else { dy };
            for di in 0..wx {
                let dx = (di as f64 - kx as f64) * h[0];
                let dist = (dx * dx + dy * dy).sqrt();
                if dist <= r {
                    weights[dj * wx + di] = spec.profile(dist);
                    grad[dj * wx + di] = spec.radial_derivative(dist).abs();
                }
            }
        }
        Self {
            half: [kx, ky],
            weights,
            grad,
        }
    }

    fn width(&self) -> [usize; 2] {
        [2 * self.half[0] + 1, 2 * self.half[1] + 1]
    }
}

/// Which discrete convolution route to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConvolutionMethod {
    Direct,
    #[default]
    Fft,
}

/// Sampled kernel together with `a = J ∗ 1` and the statistics
/// `a_* = inf a`, `a* = sup ∫|J|`, `b* = sup ∫|∇J|`.
#[derive(Clone)]
pub struct DiscreteKernel {
    spec: KernelSpec,
    grid: Grid,
    stencil: Stencil,
    fft: FftConvolver,
    method: ConvolutionMethod,
    a_field: Field,
    a_star: f64,
    a_sup: f64,
    b_sup: f64,
    warnings: Vec<String>,
}

impl fmt::Debug for DiscreteKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DiscreteKernel")
            .field("spec", &self.spec)
            .field("half_width", &self.stencil.half)
            .field("a_star", &self.a_star)
            .field("a_sup", &self.a_sup)
            .field("b_sup", &self.b_sup)
            .finish()
    }
}

/// Samples `spec` on `grid` and computes the kernel statistics.
pub fn build_kernel(spec: KernelSpec, grid: Grid) -> Result<DiscreteKernel, KernelError> {
    spec.validate(&grid)?;
    let mut warnings = Vec::new();
    let h = grid.spacing();
    let hmax = if grid.dim() == 1 { h[0] } else { h[0].max(h[1]) };
    if hmax >= spec.width {
        warnings.push(format!(
            "grid spacing {hmax} does not resolve kernel width {}",
            spec.width
        ));
    }
    let stencil = Stencil::sample(&spec, &grid);
    let fft = FftConvolver::new(&stencil, &grid);
    let mut kernel = DiscreteKernel {
        spec,
        grid,
        stencil,
        fft,
        method: ConvolutionMethod::Fft,
        a_field: Field::zeros(grid),
        a_star: 0.0,
        a_sup: 0.0,
        b_sup: 0.0,
        warnings,
    };
    let ones = Field::constant(grid, 1.0);
    let a_field = kernel.convolve_direct(&ones)?;
    let abs_mass = kernel.quadrature_with(&kernel.stencil.weights.iter().map(|w| w.abs()).collect::<Vec<_>>());
    let grad_mass = kernel.quadrature_with(&kernel.stencil.grad);
    let jump = spec.edge_jump();
    let edge = if grid.dim() == 1 {
        2.0 * jump
    } else {
        2.0 * std::f64::consts::PI * spec.support() * jump
    };
    kernel.a_star = a_field.min();
    kernel.a_sup = abs_mass.max();
    kernel.b_sup = grad_mass.max() + edge;
    kernel.a_field = a_field;
    Ok(kernel)
}

impl DiscreteKernel {
    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// `a(x) = (J ∗ 1)(x)` at the cell centers.
    pub fn a_field(&self) -> &Field {
        &self.a_field
    }

    pub fn a_star(&self) -> f64 {
        self.a_star
    }

    pub fn a_sup(&self) -> f64 {
        self.a_sup
    }

    pub fn b_sup(&self) -> f64 {
        self.b_sup
    }

    /// Stencil half-widths in cells per axis.
    pub fn half_width(&self) -> [usize; 2] {
        self.stencil.half
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn method(&self) -> ConvolutionMethod {
        self.method
    }

    pub fn with_method(mut self, method: ConvolutionMethod) -> Self {
        self.method = method;
        self
    }

    /// `J(x_i - x_j)` for cell indices `i`, `j` (zero outside the stencil).
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        let nx = self.grid.nx();
        let (xi, yi) = ((i % nx) as isize, (i / nx) as isize);
        let (xj, yj) = ((j % nx) as isize, (j / nx) as isize);
        let [kx, ky] = self.stencil.half;
        let dx = xi - xj + kx as isize;
        let dy = yi - yj + ky as isize;
        let [wx, wy] = self.stencil.width();
        if dx < 0 || dy < 0 || dx >= wx as isize || dy >= wy as isize {
            return 0.0;
        }
        self.stencil.weights[dy as usize * wx + dx as usize]
    }

    /// `J ∗ u` by the configured route.
    pub fn convolve(&self, u: &Field) -> Result<Field, KernelError> {
        match self.method {
            ConvolutionMethod::Direct => self.convolve_direct(u),
            ConvolutionMethod::Fft => self.convolve_fft(u),
        }
    }

    /// Reference quadrature, `O(N · stencil)`.
    pub fn convolve_direct(&self, u: &Field) -> Result<Field, KernelError> {
        self.check_grid(u)?;
        Ok(self.direct(u.values(), &self.stencil.weights))
    }

    /// Zero-padded FFT route; agrees with [`Self::convolve_direct`] to rounding.
    pub fn convolve_fft(&self, u: &Field) -> Result<Field, KernelError> {
        self.check_grid(u)?;
        let out = self.fft.apply(u.values(), self.grid.cell_volume());
        Ok(Field::from_values(self.grid, out)?)
    }

    fn check_grid(&self, u: &Field) -> Result<(), KernelError> {
        if u.grid() != &self.grid {
            return Err(GridError::ShapeMismatch.into());
        }
        Ok(())
    }

    fn quadrature_with(&self, weights: &[f64]) -> Field {
        self.direct(&vec![1.0; self.grid.len()], weights)
    }

    fn direct(&self, u: &[f64], weights: &[f64]) -> Field {
        let [nx, ny] = self.grid.cells();
        let [kx, ky] = self.stencil.half;
        let [wx, _] = self.stencil.width();
        let vol = self.grid.cell_volume();
        let mut out = vec![0.0; u.len()];
        for j in 0..ny {
            let j_lo = j.saturating_sub(ky);
            let j_hi = (j + ky).min(ny - 1);
            for i in 0..nx {
                let i_lo = i.saturating_sub(kx);
                let i_hi = (i + kx).min(nx - 1);
                let mut acc = 0.0;
                for jj in j_lo..=j_hi {
                    let srow = (j + ky - jj) * wx;
                    let urow = jj * nx;
                    for ii in i_lo..=i_hi {
                        acc += weights[srow + (i + kx - ii)] * u[urow + ii];
                    }
                }
                out[j * nx + i] = acc * vol;
            }
        }
        Field::from_values(self.grid, out).expect("same grid")
    }
}

/// Report on the kernel hypotheses against the potential constant `c₀`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct A5Report {
    pub a_star: f64,
    pub a_sup: f64,
    pub b_sup: f64,
    pub c0: f64,
    /// `a_* ≥ c₀`.
    pub meets_c0: bool,
    /// `a_* ≥ 2 c₀`, which is what `F'' + a_* ≥ c₀` needs given `min F'' = -c₀`.
    pub meets_2c0: bool,
    pub finite: bool,
}

impl A5Report {
    pub fn passes(&self) -> bool {
        self.meets_c0 && self.finite
    }
}

impl fmt::Display for A5Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "a_star = {}", self.a_star)?;
        writeln!(f, "a_sup = {}", self.a_sup)?;
        writeln!(f, "b_sup = {}", self.b_sup)?;
        writeln!(f, "c0 = {}", self.c0)?;
        writeln!(f, "a_star >= c0: {}", self.meets_c0)?;
        writeln!(f, "a_star >= 2 c0: {}", self.meets_2c0)?;
        write!(f, "a_sup, b_sup finite: {}", self.finite)
    }
}

pub fn check_a5(k: &DiscreteKernel, p: &PotentialParams) -> A5Report {
    let c0 = p.c0();
    A5Report {
        a_star: k.a_star,
        a_sup: k.a_sup,
        b_sup: k.b_sup,
        c0,
        meets_c0: k.a_star >= c0,
        meets_2c0: k.a_star >= 2.0 * c0,
        finite: k.a_sup.is_finite() && k.b_sup.is_finite(),
    }
}

/// Linear convolution through zero-padded FFTs, cropped back to `Ω`.
#[derive(Clone)]
struct FftConvolver {
    cells: [usize; 2],
    half: [usize; 2],
    padded: [usize; 2],
    forward: [Arc<dyn Fft<f64>>; 2],
    inverse: [Arc<dyn Fft<f64>>; 2],
    kernel_hat: Vec<Complex<f64>>,
}

impl FftConvolver {
    fn new(stencil: &Stencil, grid: &Grid) -> Self {
        let cells = grid.cells();
        let half = stencil.half;
        let width = stencil.width();
        // linear convolution length n + 2k; kernel index k is offset 0
        let padded = [cells[0] + 2 * half[0], cells[1] + 2 * half[1]];
        let mut planner = FftPlanner::new();
        let forward = [planner.plan_fft_forward(padded[0]), planner.plan_fft_forward(padded[1])];
        let inverse = [planner.plan_fft_inverse(padded[0]), planner.plan_fft_inverse(padded[1])];
        let mut buf = vec![Complex::new(0.0, 0.0); padded[0] * padded[1]];
        for dj in 0..width[1] {
            for di in 0..width[0] {
                buf[dj * padded[0] + di] = Complex::new(stencil.weights[dj * width[0] + di], 0.0);
            }
        }
        let mut conv = Self {
            cells,
            half,
            padded,
            forward,
            inverse,
            kernel_hat: Vec::new(),
        };
        conv.transform(&mut buf, false);
        conv.kernel_hat = buf;
        conv
    }

    fn transform(&self, buf: &mut [Complex<f64>], inverse: bool) {
        let [px, py] = self.padded;
        let plans = if inverse { &self.inverse } else { &self.forward };
        for row in buf.chunks_exact_mut(px) {
            plans[0].process(row);
        }
        if py > 1 {
            let mut col = vec![Complex::new(0.0, 0.0); py];
            for i in 0..px {
                for j in 0..py {
                    col[j] = buf[j * px + i];
                }
                plans[1].process(&mut col);
                for j in 0..py {
                    buf[j * px + i] = col[j];
                }
            }
        }
    }

    fn apply(&self, u: &[f64], vol: f64) -> Vec<f64> {
        let [nx, ny] = self.cells;
        let [px, py] = self.padded;
        let mut buf = vec![Complex::new(0.0, 0.0); px * py];
        for j in 0..ny {
            for i in 0..nx {
                buf[j * px + i] = Complex::new(u[j * nx + i], 0.0);
            }
        }
        self.transform(&mut buf, false);
        for (b, k) in buf.iter_mut().zip(&self.kernel_hat) {
            *b *= k;
        }
        self.transform(&mut buf, true);
        let scale = vol / (px * py) as f64;
        let [kx, ky] = self.half;
        let mut out = vec![0.0; nx * ny];
        for j in 0..ny {
            for i in 0..nx {
                out[j * nx + i] = buf[(j + ky) * px + (i + kx)].re * scale;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn gaussian(width: f64, cutoff: f64) -> KernelSpec {
        KernelSpec {
            family: KernelFamily::Gaussian,
            width,
            amplitude: 1.0,
            cutoff_radius: cutoff,
        }
    }

    fn random_field(grid: Grid, seed: u64) -> Field {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Field::from_values(grid, (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn rejects_oversized_cutoff() {
        let g = Grid::new_1d(32, 1.0).unwrap();
        let err = build_kernel(gaussian(0.1, 1.5), g).unwrap_err();
        assert!(matches!(err, KernelError::CutoffTooLarge { .. }));
        let err = build_kernel(gaussian(-0.1, 0.5), g).unwrap_err();
        assert_eq!(err, KernelError::BadParameter("width", -0.1));
    }

    #[test]
    fn warns_on_underresolved_width() {
        let g = Grid::new_1d(8, 1.0).unwrap();
        let k = build_kernel(gaussian(0.1, 0.5), g).unwrap();
        assert_eq!(k.warnings().len(), 1);
    }

    #[test]
    fn tophat_interior_mass() {
        let g = Grid::new_1d(100, 1.0).unwrap();
        let spec = KernelSpec {
            family: KernelFamily::Tophat,
            width: 0.05,
            amplitude: 2.5,
            cutoff_radius: 0.105,
        };
        let k = build_kernel(spec, g).unwrap();
        let a = k.a_field();
        let want = 2.5 * 2.0 * 0.105;
        assert!((a.values()[50] - want).abs() < 1e-12);
        assert!((k.a_sup() - want).abs() < 1e-12);
        // only half the stencil survives at the wall
        assert!(a.values()[0] < a.values()[50]);
    }

    #[test]
    fn corners_see_less_mass_than_the_center() {
        let g = Grid::new_2d(24, 24, 1.0, 1.0).unwrap();
        let k = build_kernel(gaussian(0.08, 0.3), g).unwrap();
        let a = k.a_field();
        assert!(a.values()[0] < a.values()[g.index(12, 12)]);
        assert!((k.a_star() - a.values()[0]).abs() < 1e-15);
    }

    #[test]
    fn statistics_scale_with_amplitude() {
        let g = Grid::new_2d(16, 12, 1.0, 0.8).unwrap();
        let base = KernelSpec {
            family: KernelFamily::WendlandMollifier,
            width: 0.3,
            amplitude: 1.0,
            cutoff_radius: 0.4,
        };
        let k1 = build_kernel(base, g).unwrap();
        let k2 = build_kernel(KernelSpec { amplitude: 2.0, ..base }, g).unwrap();
        for (x, y) in [(k2.a_star(), k1.a_star()), (k2.a_sup(), k1.a_sup()), (k2.b_sup(), k1.b_sup())] {
            assert!((x - 2.0 * y).abs() < 1e-14 * x);
        }
    }

    #[test]
    fn interior_normalization() {
        let g = Grid::new_1d(200, 1.0).unwrap();
        let spec = gaussian(0.03, 0.15).with_interior_mass(&g, 1.0).unwrap();
        let k = build_kernel(spec, g).unwrap();
        assert!((k.a_field().values()[100] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_input_gives_a() {
        let g = Grid::new_1d(64, 1.0).unwrap();
        let k = build_kernel(gaussian(0.05, 0.2), g).unwrap();
        let c = k.convolve(&Field::constant(g, 3.0)).unwrap();
        let want = k.a_field().scale(3.0);
        assert!(c.sub(&want).unwrap().norm_linf() < 1e-12);
    }

    #[test]
    fn indicator_gives_a_column() {
        let g = Grid::new_2d(10, 9, 1.0, 0.9).unwrap();
        let k = build_kernel(gaussian(0.1, 0.4), g).unwrap();
        let y0 = g.index(3, 4);
        let mut e = Field::zeros(g);
        e.values_mut()[y0] = 1.0;
        let col = k.convolve_direct(&e).unwrap();
        for x in 0..g.len() {
            let want = k.weight(x, y0) * g.cell_volume();
            assert!((col.values()[x] - want).abs() < 1e-15);
        }
    }

    #[test]
    fn fft_matches_direct() {
        for (s, g) in [Grid::new_1d(64, 1.0).unwrap(), Grid::new_2d(20, 16, 1.0, 0.8).unwrap()]
            .into_iter()
            .enumerate()
        {
            for family in [KernelFamily::Gaussian, KernelFamily::WendlandMollifier, KernelFamily::Tophat] {
                let spec = KernelSpec {
                    family,
                    width: 0.12,
                    amplitude: 1.3,
                    cutoff_radius: 0.3,
                };
                let k = build_kernel(spec, g).unwrap();
                let u = random_field(g, s as u64);
                let d = k.convolve_direct(&u).unwrap();
                let f = k.convolve_fft(&u).unwrap();
                let rel = d.sub(&f).unwrap().norm_linf() / d.norm_linf();
                assert!(rel < 1e-12, "{family} rel {rel}");
            }
        }
    }

    #[test]
    fn a5_report_thresholds() {
        let g = Grid::new_1d(64, 1.0).unwrap();
        let p = PotentialParams::from_h(0.4, 1e-3).unwrap();
        let spec = gaussian(0.05, 0.2).with_interior_mass(&g, 1.0).unwrap();
        let rep = check_a5(&build_kernel(spec, g).unwrap(), &p);
        assert!(rep.meets_c0 && rep.meets_2c0 && rep.finite);
        let tiny = KernelSpec { amplitude: 1e-6, ..spec };
        let rep = check_a5(&build_kernel(tiny, g).unwrap(), &p);
        assert!(!rep.meets_c0 && !rep.passes());
    }
}
