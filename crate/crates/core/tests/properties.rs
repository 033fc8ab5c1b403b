use proptest::prelude::*;

use nlch::diagnostics::{delta_for_mean, energy, mean_envelope};
use nlch::grid::{Field, Grid};
use nlch::kernel::{build_kernel, DiscreteKernel, KernelFamily, KernelSpec};
use nlch::model::SourceSpec;
use nlch::potential::{ExtReal, PotentialParams};

fn family() -> impl Strategy<Value = KernelFamily> {
    prop_oneof![
        Just(KernelFamily::Gaussian),
        Just(KernelFamily::WendlandMollifier),
        Just(KernelFamily::Tophat),
    ]
}

/// A 1-D kernel on `n` cells together with two fields on it.
fn kernel_and_fields() -> impl Strategy<Value = (DiscreteKernel, Field, Field)> {
    (8usize..40, family(), 0.05f64..0.4, 0.5f64..2.0).prop_flat_map(|(n, fam, width, amp)| {
        let grid = Grid::new_1d(n, 1.0).unwrap();
        let spec = KernelSpec {
            family: fam,
            width,
            amplitude: amp,
            cutoff_radius: width.min(0.9),
        };
        let k = build_kernel(spec, grid).unwrap();
        let vals = prop::collection::vec(-1.0f64..1.0, n);
        (Just(k), vals.clone(), vals).prop_map(move |(k, u, v)| {
            (k, Field::from_values(grid, u).unwrap(), Field::from_values(grid, v).unwrap())
        })
    })
}

proptest! {
    #[test]
    fn convolution_is_self_adjoint((k, u, v) in kernel_and_fields()) {
        let lhs = k.convolve(&u).unwrap().inner(&v).unwrap();
        let rhs = u.inner(&k.convolve(&v).unwrap()).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
    }

    #[test]
    fn convolution_obeys_young((k, u, _v) in kernel_and_fields()) {
        let ju = k.convolve(&u).unwrap();
        prop_assert!(ju.norm_l2() <= k.a_sup() * u.norm_l2() * (1.0 + 1e-12) + 1e-15);
    }

    #[test]
    fn convolution_is_linear((k, u, v) in kernel_and_fields(), s in -3.0f64..3.0) {
        let mut combo = u.clone();
        combo.axpy(s, &v).unwrap();
        let lhs = k.convolve(&combo).unwrap();
        let mut rhs = k.convolve(&u).unwrap();
        rhs.axpy(s, &k.convolve(&v).unwrap()).unwrap();
        prop_assert!(lhs.sub(&rhs).unwrap().norm_linf() <= 1e-12);
    }

    #[test]
    fn fft_matches_direct((k, u, _v) in kernel_and_fields()) {
        let a = k.convolve_fft(&u).unwrap();
        let b = k.convolve_direct(&u).unwrap();
        prop_assert!(a.sub(&b).unwrap().norm_linf() <= 1e-12 * b.norm_linf().max(1.0));
    }

    #[test]
    fn regularization_stays_below_f(h in 0.05f64..0.95, lambda in 1e-4f64..0.4, r in -3.0f64..3.0) {
        let p = PotentialParams::from_h(h, lambda).unwrap();
        let reg = p.regularized().unwrap();
        match p.f(r) {
            ExtReal::Finite(f) => prop_assert!(reg.f(r) <= f + 1e-12 * f.abs().max(1.0)),
            ExtReal::PosInfinity => {}
        }
    }

    #[test]
    fn regularized_derivatives_match_differences(h in 0.05f64..0.95, lambda in 1e-3f64..0.4, r in -2.0f64..2.0) {
        let p = PotentialParams::from_h(h, lambda).unwrap();
        let reg = p.regularized().unwrap();
        let e = 1e-6;
        // keep the stencil inside one branch
        let junctions = [0.0, 1.0 - lambda, 1.0];
        prop_assume!(junctions.iter().all(|j| (r - j).abs() > 2.0 * e));
        let df = (reg.f(r + e) - reg.f(r - e)) / (2.0 * e);
        let ddf = (reg.df(r + e) - reg.df(r - e)) / (2.0 * e);
        prop_assert!((df - reg.df(r)).abs() <= 1e-5 * reg.df(r).abs().max(1.0));
        prop_assert!((ddf - reg.ddf(r)).abs() <= 1e-5 * reg.ddf(r).abs().max(1.0));
    }

    #[test]
    fn regularized_curvature_is_bounded_below(h in 0.05f64..0.95, lambda in 1e-4f64..0.05, r in -3.0f64..3.0) {
        let p = PotentialParams::from_h(h, lambda).unwrap();
        let reg = p.regularized().unwrap();
        prop_assert!(reg.ddf(r) >= -p.c0() - 1e-12);
    }

    #[test]
    fn mean_envelope_contains_every_constant_rate(
        y0 in 0.01f64..0.99, m in 0.1f64..5.0, frac in 0.0f64..0.99, theta in 0.0f64..1.0,
        t1 in 0.0f64..5.0, dt in 0.0f64..5.0,
    ) {
        let k = frac * m;
        let (lo1, hi1) = mean_envelope(t1, y0, m, k).unwrap();
        let (lo2, hi2) = mean_envelope(t1 + dt, y0, m, k).unwrap();
        prop_assert!(lo2 <= lo1 && lo1 <= hi1);
        // the upper bound moves monotonically toward K/m
        prop_assert!((hi2 - hi1) * (k / m - y0) >= -1e-15);
        let e = (-m * t1).exp();
        let y = y0 * e + theta * k / m * (1.0 - e);
        prop_assert!(lo1 - 1e-15 <= y && y <= hi1 + 1e-15);
    }

    #[test]
    fn mean_margin_is_positive_and_at_most_a_quarter(
        y0 in 0.01f64..0.99, m in 0.1f64..5.0, frac in 0.0f64..0.99, t in 0.0f64..5.0,
    ) {
        let d = delta_for_mean(y0, m, frac * m, t).unwrap();
        prop_assert!(d > 0.0 && d <= 0.25);
        let (lo, hi) = mean_envelope(t, y0, m, frac * m).unwrap();
        prop_assert!(lo >= d - 1e-15 && hi <= 1.0 - d + 1e-15);
    }

    #[test]
    fn sources_stay_within_their_bounds(
        amp in 0.0f64..2.0, steep in 0.0f64..10.0, phi in -2.0f64..2.0, sigma in -2.0f64..2.0,
    ) {
        for s in [SourceSpec::Constant { value: amp }, SourceSpec::SmoothSaturating { amplitude: amp, steepness: steep }] {
            let v = s.eval(phi, sigma);
            prop_assert!(v >= s.inf() - 1e-15 && v <= s.sup() + 1e-15);
        }
    }

    #[test]
    fn energy_matches_the_pairwise_sum((k, u, _v) in kernel_and_fields(), lambda in 1e-3f64..0.1) {
        let pot = PotentialParams::from_h(0.4, lambda).unwrap();
        let grid = *u.grid();
        let phi = u.map(|x| 0.5 + 0.45 * x);
        let spec = *k.spec();
        let h = grid.cell_volume();
        let x: Vec<f64> = (0..grid.len()).map(|i| grid.center(i)[0]).collect();
        let v = phi.values();
        let reg = pot.regularized().unwrap();
        let mut oracle = 0.0;
        for i in 0..v.len() {
            for j in 0..v.len() {
                let d = (x[i] - x[j]).abs();
                if d <= spec.support() {
                    oracle += 0.25 * spec.profile(d) * (v[i] - v[j]).powi(2) * h * h;
                }
            }
            oracle += reg.f(v[i]) * h;
        }
        let e = energy(&phi, &k, &pot).unwrap();
        prop_assert!((e - oracle).abs() <= 1e-12 * oracle.abs().max(1.0));
    }
}
