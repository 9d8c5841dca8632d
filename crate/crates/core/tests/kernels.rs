use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mixhom_core::kernel::{
    catalog_kernel, enforce_cancellation, eval_kernel, spherical_mean, spherical_mean_with, ProductKernel, Profile,
    Regime, SphereMeasure,
};
use mixhom_core::quadrature::Rule;
use mixhom_core::testfields::smooth_bump;
use mixhom_core::truncation::{
    kernel_mass, log_slope, truncated_apply, truncated_apply_with, truncated_multiplier, truncation_sweep,
    TruncationMethod, TruncationOptions,
};
use mixhom_core::{lp_norm, Geometry, GridField, Metric};

const PROFILES: &[&str] = &["constant", "odd-xn", "first-harmonic", "tilted-odd", "random-trig"];

fn para() -> Metric {
    Metric::parabolic(2).unwrap()
}

#[test]
fn factors_are_exactly_homogeneous() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for name in PROFILES {
        let k = ProductKernel::new(2, 0.25, 2.75, Profile::from_name(name, 5).unwrap(), Profile::from_name(name, 6).unwrap())
            .unwrap()
            .with_cutoff(false);
        for _ in 0..100 {
            let x = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
            let d: f64 = rng.gen_range(0.1..10.0);
            let e0 = k.eval_e(&x);
            let e1 = k.eval_e(&[d * x[0], d * x[1]]);
            assert!((e1 - d.powf(-k.k) * e0).abs() <= 1e-12 * e0.abs().max(1e-300) + 1e-300, "{name} E");
            let h0 = k.eval_h(&x);
            let h1 = k.eval_h(&[d * x[0], d * d * x[1]]);
            assert!((h1 - d.powf(-k.l) * h0).abs() <= 1e-12 * h0.abs(), "{name} H");
        }
    }
}

#[test]
fn kernel_mass_grows_logarithmically_without_cancellation() {
    let k = catalog_kernel("caseh-positive").unwrap();
    let xs: Vec<f64> = (3..=7).map(|i| (2f64.powi(i)).ln()).collect();
    let ys: Vec<f64> = (3..=7).map(|i| kernel_mass(&k, 2f64.powi(-i), 1.0).unwrap()).collect();
    let (slope, _, r2) = mixhom_core::calderon::linear_fit(&xs, &ys);
    assert!(slope > 0.0 && r2 > 0.99, "slope {slope}, R^2 {r2}");
}

#[test]
fn unit_profile_mean_matches_monte_carlo() {
    // parameters: x' = u in (-1, 1), x_n = sigma (1 - u^2)
    let k = catalog_kernel("caseh-positive").unwrap();
    for measure in [SphereMeasure::Invariant, SphereMeasure::Euclidean] {
        let quad = spherical_mean_with(&k, measure, 32).unwrap().mean;
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let samples = 1_000_000;
        let (mut s1, mut s2) = (0.0, 0.0);
        for _ in 0..samples {
            let u: f64 = rng.gen_range(-1.0..1.0);
            let dens = match measure {
                SphereMeasure::Invariant => 2.0,
                SphereMeasure::Euclidean => (1.0 + 4.0 * u * u).sqrt(),
            };
            // two sheets, interval length 2
            let v = 2.0 * 2.0 * dens * u.abs().powf(-k.k);
            s1 += v;
            s2 += v * v;
        }
        let mean = s1 / samples as f64;
        let se = ((s2 / samples as f64 - mean * mean) / samples as f64).sqrt();
        assert!(quad > 0.0);
        assert!((quad - mean).abs() < 3.0 * se, "{measure:?}: {quad} vs {mean} +- {se}");
    }
}

#[test]
fn spherical_quadrature_converges() {
    for name in ["random-trig", "first-harmonic", "tilted-odd"] {
        for (kk, l) in [(0.25, 2.75), (1.5, 1.0)] {
            let k = ProductKernel::new(2, kk, l, Profile::from_name(name, 3).unwrap(), Profile::from_name(name, 4).unwrap())
                .unwrap();
            assert!(matches!(k.regime(), Regime::CaseH | Regime::CaseE));
            let a = spherical_mean_with(&k, SphereMeasure::Invariant, 32).unwrap();
            let b = spherical_mean_with(&k, SphereMeasure::Invariant, 64).unwrap();
            assert!((a.mean - b.mean).abs() < 1e-10, "{name} ({kk},{l})");
            let coarse = spherical_mean_with(&k, SphereMeasure::Euclidean, 4).unwrap();
            let fine = spherical_mean_with(&k, SphereMeasure::Euclidean, 8).unwrap();
            assert!(fine.error_estimate <= coarse.error_estimate, "{name} ({kk},{l})");
        }
    }
    // three dimensions
    let k = ProductKernel::new(3, 0.5, 3.5, Profile::Constant(1.0), Profile::random_trig(1)).unwrap();
    let a = spherical_mean_with(&k, SphereMeasure::Invariant, 32).unwrap();
    let b = spherical_mean_with(&k, SphereMeasure::Invariant, 64).unwrap();
    assert!((a.mean - b.mean).abs() < 1e-10);
}

#[test]
fn spherical_mean_rejects_non_critical_regimes() {
    let k = ProductKernel::new(2, 1.0, 1.0, Profile::Constant(1.0), Profile::Constant(1.0)).unwrap();
    assert!(spherical_mean(&k).is_err());
    assert!(enforce_cancellation(&k).is_err());
}

#[test]
fn enforcement_works_for_every_catalog_profile() {
    for pe in PROFILES {
        for ph in PROFILES {
            for (kk, l) in [(0.25, 2.75), (1.5, 1.0)] {
                for measure in [SphereMeasure::Invariant, SphereMeasure::Euclidean] {
                    let k = ProductKernel::new(2, kk, l, Profile::from_name(pe, 7).unwrap(), Profile::from_name(ph, 8).unwrap())
                        .unwrap()
                        .with_measure(measure);
                    let once = enforce_cancellation(&k).unwrap();
                    assert!(spherical_mean(&once).unwrap().mean.abs() < 1e-9, "{pe}/{ph}");
                    let twice = enforce_cancellation(&once).unwrap();
                    for x in [[0.3, -0.2], [1.1, 0.7], [-0.4, 0.05]] {
                        let a = eval_kernel(&once, &x).unwrap();
                        let b = eval_kernel(&twice, &x).unwrap();
                        assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
                    }
                }
            }
        }
    }
}

#[test]
fn cancellative_kernel_is_a_fixed_point() {
    let k = catalog_kernel("caseh-odd").unwrap();
    let e = enforce_cancellation(&k).unwrap();
    for x in [[0.3, -0.2], [1.1, 0.7]] {
        let a = eval_kernel(&k, &x).unwrap();
        assert!((a - eval_kernel(&e, &x).unwrap()).abs() <= 1e-12 * a.abs());
    }
}

/// `m(xi) = int phi K e^{-i y.xi}` over `|y|_h >= eps` in parabolic polar
/// coordinates, an independent quadrature of the spectral multiplier.
fn polar_multiplier(k: &ProductKernel, eps: f64, xi: [f64; 2]) -> (f64, f64) {
    let mut rho = Rule::default();
    let mut lo = eps;
    while lo < 2.0 {
        let hi = (lo * 1.25).min(2.0);
        rho.push_panel(lo, hi, 24);
        lo = hi;
    }
    let mut s = Rule::default();
    for i in 0..64 {
        s.push_panel(i as f64 / 64.0, (i + 1) as f64 / 64.0, 24);
    }
    let (mut re, mut im) = (0.0, 0.0);
    for (&r, &wr) in rho.nodes.iter().zip(&rho.weights) {
        for (&t, &wt) in s.nodes.iter().zip(&s.weights) {
            for th in [1.0, -1.0] {
                for sg in [1.0, -1.0] {
                    let y = [r * t * th, sg * r * r * (1.0 - t * t)];
                    let v = eval_kernel(k, &y).unwrap() * 2.0 * r * r * wr * wt;
                    let ph = -(y[0] * xi[0] + y[1] * xi[1]);
                    re += v * ph.cos();
                    im += v * ph.sin();
                }
            }
        }
    }
    (re, im)
}

#[test]
fn spectral_multiplier_matches_polar_oracle() {
    let g = Geometry::new(2, 64, 8.0).unwrap();
    for name in ["caseh-cancellative", "caseh-positive"] {
        let k = catalog_kernel(name).unwrap();
        for eps in [0.5, 0.125] {
            let sym = truncated_multiplier(&k, g, eps, para(), &TruncationOptions::default()).unwrap();
            for idx in [0usize, 3, 64 * 5 + 2, 64 * 60 + 9, 64 * 17 + 50] {
                let xi = g.frequency(idx);
                let (re, im) = polar_multiplier(&k, eps, [xi[0], xi[1]]);
                let got = sym.values()[idx];
                let scale = re.abs().max(im.abs()).max(1.0);
                assert!((got.re - re).abs() < 1e-6 * scale && (got.im - im).abs() < 1e-6 * scale,
                    "{name} eps={eps} xi={xi:?}: {got} vs ({re}, {im})");
            }
        }
    }
}

#[test]
fn sampled_and_spectral_truncations_agree_on_a_fine_grid() {
    let g = Geometry::new(2, 512, 8.0).unwrap();
    let f = smooth_bump(g, &[0.0, 0.0], 1.0);
    let k = catalog_kernel("caseh-positive").unwrap();
    let spectral = truncated_apply(&k, &f, 0.5, para()).unwrap();
    let sampled = truncated_apply_with(
        &k,
        &f,
        0.5,
        para(),
        &TruncationOptions { method: Some(TruncationMethod::Sampled), ..Default::default() },
    )
    .unwrap();
    let rel = lp_norm(&spectral.sub(&sampled).unwrap(), 2.0).unwrap() / lp_norm(&spectral, 2.0).unwrap();
    assert!(rel < 0.05, "{rel}");
}

#[test]
fn truncated_operator_is_linear() {
    let g = Geometry::desk();
    let k = catalog_kernel("caseh-cancellative").unwrap();
    let a = smooth_bump(g, &[0.0, 0.0], 1.0);
    let b = smooth_bump(g, &[0.5, -1.0], 0.7);
    let ta = truncated_apply(&k, &a, 0.25, para()).unwrap();
    let tb = truncated_apply(&k, &b, 0.25, para()).unwrap();
    let tc = truncated_apply(&k, &a.combine(1.5, &b, -2.0).unwrap(), 0.25, para()).unwrap();
    let want = ta.combine(1.5, &tb, -2.0).unwrap();
    assert!(tc.sub(&want).unwrap().max_abs() <= 1e-12 * want.max_abs());
    let z = truncated_apply(&k, &GridField::zeros(g), 0.25, para()).unwrap();
    assert_eq!(z.max_abs(), 0.0);
}

#[test]
fn truncation_bounds_and_cauchy_behavior() {
    let g = Geometry::desk();
    let f = smooth_bump(g, &[0.0, 0.0], 1.0);
    let eps: Vec<f64> = (2..=6).map(|i| 2f64.powi(-i)).collect();
    let opts = TruncationOptions::default();

    let canc = truncation_sweep(&catalog_kernel("caseh-cancellative").unwrap(), &f, &eps, para(), &opts).unwrap();
    let ratios: Vec<f64> = canc.iter().map(|r| r.l2_ratio).collect();
    let spread = ratios.iter().cloned().fold(0.0, f64::max) / ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(spread < 2.0, "{ratios:?}");
    let d: Vec<f64> = canc.iter().filter_map(|r| r.cauchy_diff).collect();
    let n = d.len();
    assert!(d[n - 1] < 0.8 * d[n - 2] && d[n - 2] < 0.8 * d[n - 3], "{d:?}");

    let pos = truncation_sweep(&catalog_kernel("caseh-positive").unwrap(), &f, &eps, para(), &opts).unwrap();
    let (slope, r2) = log_slope(&pos);
    assert!(slope > 0.0 && r2 > 0.9, "{slope} {r2}");
    let d: Vec<f64> = pos.iter().filter_map(|r| r.cauchy_diff).collect();
    assert!(d.windows(2).any(|w| w[1] >= 0.8 * w[0]), "{d:?}");
}
