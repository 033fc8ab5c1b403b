use std::f64::consts::PI;

/// Orthonormal (in `ℓ²`) cosine basis on `n` cell centers of an interval of
/// length `length`: `b_k(i) = c_k cos(π k (i + ½) / n)`.
///
/// These vectors are exact eigenvectors of the three-point Neumann Laplacian
/// and samples of the continuous Neumann eigenfunctions `cos(π k x / L)`.
#[derive(Debug, Clone)]
pub struct CosineBasis {
    n: usize,
    length: f64,
    /// Row `k` holds `b_k`.
    table: Vec<f64>,
}

impl CosineBasis {
    pub fn new(n: usize, length: f64) -> Self {
        let mut table = vec![0.0; n * n];
        let c0 = (1.0 / n as f64).sqrt();
        let ck = (2.0 / n as f64).sqrt();
        for k in 0..n {
            let c = if k == 0 { c0 } else { ck };
            for i in 0..n {
                table[k * n + i] = c * (PI * k as f64 * (i as f64 + 0.5) / n as f64).cos();
            }
        }
        Self { n, length, table }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn mode(&self, k: usize) -> &[f64] {
        &self.table[k * self.n..(k + 1) * self.n]
    }

    /// Coefficients `⟨u, b_k⟩_{ℓ²}` for `k < modes`.
    pub fn analyze(&self, u: &[f64], modes: usize) -> Vec<f64> {
        (0..modes)
            .map(|k| self.mode(k).iter().zip(u).fold(0.0, |s, (a, b)| s + a * b))
            .collect()
    }

    /// `Σ_k coeffs[k] b_k`.
    pub fn synthesize(&self, coeffs: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (k, &c) in coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            for (o, b) in out.iter_mut().zip(self.mode(k)) {
                *o += c * b;
            }
        }
        out
    }

    /// Eigenvalue of `-Δ_h` (three-point, mirror ghosts) for mode `k`.
    pub fn discrete_eigenvalue(&self, k: usize) -> f64 {
        let h = self.length / self.n as f64;
        let s = (PI * k as f64 / (2.0 * self.n as f64)).sin();
        4.0 * s * s / (h * h)
    }

    /// Eigenvalue `(π k / L)²` of the continuous Neumann Laplacian.
    pub fn continuous_eigenvalue(&self, k: usize) -> f64 {
        (PI * k as f64 / self.length).powi(2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_is_orthonormal() {
        let b = CosineBasis::new(12, 1.0);
        for k in 0..12 {
            for l in 0..12 {
                let d: f64 = b.mode(k).iter().zip(b.mode(l)).map(|(x, y)| x * y).sum();
                let want = if k == l { 1.0 } else { 0.0 };
                assert!((d - want).abs() < 1e-13, "({k},{l}) -> {d}");
            }
        }
    }

    #[test]
    fn analyze_synthesize_roundtrip() {
        let b = CosineBasis::new(10, 2.0);
        let u: Vec<f64> = (0..10).map(|i| (i as f64 * 0.37).sin() + 0.1 * i as f64).collect();
        let back = b.synthesize(&b.analyze(&u, 10));
        for (a, c) in u.iter().zip(&back) {
            assert!((a - c).abs() < 1e-13);
        }
    }
}
