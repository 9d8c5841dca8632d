use mixhom_core::kernel::catalog_kernel;
use mixhom_core::lp::build_generator;
use mixhom_core::spaces::{
    composite_pairs, decay_exponent_fit, decay_exponent_fit_from, lip_norm, lip_norm_com, lip_norm_com_over, lip_norm_lp, lip_norm_over,
    lip_profile, test_norm, TestFunctionParams,
};
use mixhom_core::testfields::{isotropic_decay, parabolic_test_function, smooth_bump, smooth_suite};
use mixhom_core::truncation::{truncated_apply, truncated_apply_with, TruncationMethod, TruncationOptions};
use mixhom_core::{FrequencyField, Geometry, GridField, Metric, MetricKind, ScaleRange};

fn params(gamma: f64, kind: MetricKind) -> TestFunctionParams {
    TestFunctionParams::new(1.0, gamma, 1.0, vec![0.0, 0.0], kind).unwrap()
}

#[test]
fn test_norm_of_generator_is_finite_and_homogeneous() {
    let geom = Geometry::desk();
    let g = build_generator(Metric::isotropic(2).unwrap(), geom).unwrap();
    let psi = g.window().inverse();
    let p = params(1.0, MetricKind::Isotropic);
    let v = test_norm(&psi, &p).unwrap();
    assert!(v.is_finite() && v > 0.0);
    let w = test_norm(&psi.scaled(-3.5), &p).unwrap();
    assert!((w - 3.5 * v).abs() <= 1e-12 * w);
    assert_eq!(test_norm(&GridField::zeros(geom), &p).unwrap(), 0.0);
    let biased = psi.add(&GridField::constant(geom, 1e-3 * psi.max_abs())).unwrap();
    assert!(test_norm(&biased, &p).is_err());
}

#[test]
fn test_norm_grows_with_gamma() {
    let geom = Geometry::new(2, 128, 8.0).unwrap();
    for (name, f) in smooth_suite(geom) {
        let f = f.scaled(1.0 / f.max_abs());
        for kind in [MetricKind::Isotropic, MetricKind::Parabolic] {
            let a = test_norm(&f, &params(0.5, kind)).unwrap();
            let b = test_norm(&f, &params(1.0, kind)).unwrap();
            assert!(b >= a, "{name}: {b} < {a}");
        }
    }
}

#[test]
fn convolution_with_truncated_kernel_is_bounded_on_test_functions() {
    let geom = Geometry::new(2, 128, 8.0).unwrap();
    let k = catalog_kernel("caseh-cancellative").unwrap();
    let m = Metric::parabolic(2).unwrap();
    let p = params(1.0, MetricKind::Parabolic);
    let mut worst = 0.0f64;
    for (_, f) in smooth_suite(geom) {
        let tf = truncated_apply(&k, &f, 0.25, m).unwrap().mean_zero();
        worst = worst.max(test_norm(&tf, &p).unwrap() / test_norm(&f, &p).unwrap());
    }
    assert!(worst.is_finite() && worst < 100.0, "{worst}");
}

#[test]
fn decay_fit_recovers_planted_exponent() {
    let geom = Geometry::new(2, 512, 32.0).unwrap();
    let iso = Metric::isotropic(2).unwrap();
    let fit = decay_exponent_fit(&isotropic_decay(geom, 4.0), iso, &[0.0, 0.0]).unwrap();
    assert!((fit.exponent - 4.0).abs() < 0.05, "{fit:?}");
    let flat = decay_exponent_fit(&GridField::constant(geom, 2.0), iso, &[0.0, 0.0]).unwrap();
    assert!(flat.exponent.abs() < 0.05);
    let growing = GridField::from_fn(geom, |x| x[0] * x[0]);
    assert!(decay_exponent_fit(&growing, iso, &[0.0, 0.0]).is_err());
}

#[test]
fn truncated_operator_decays_like_test_function() {
    let geom = Geometry::new(2, 2048, 128.0).unwrap();
    let k = catalog_kernel("caseh-cancellative").unwrap();
    let m = Metric::parabolic(2).unwrap();
    let f = parabolic_test_function(geom, 1.0);
    assert!(f.integral().abs() < 1e-10);
    let opts = TruncationOptions { method: Some(TruncationMethod::Sampled), ..Default::default() };
    let tf = truncated_apply_with(&k, &f, 0.25, m, &opts).unwrap();
    let planted = decay_exponent_fit_from(&f, m, &[0.0, 0.0], 4.0).unwrap();
    assert!((planted.exponent - 4.0).abs() < 0.05);
    let fit = decay_exponent_fit_from(&tf, m, &[0.0, 0.0], 4.0).unwrap();
    assert!((fit.exponent - 4.0).abs() / 4.0 < 0.15, "{fit:?}");
}

#[test]
fn lip_norm_basics() {
    let geom = Geometry::new(2, 128, 8.0).unwrap();
    let iso = Metric::isotropic(2).unwrap();
    assert_eq!(lip_norm(&GridField::constant(geom, 3.0), 0.5, iso).unwrap(), 0.0);
    assert!(lip_norm(&GridField::zeros(geom), 1.0, iso).is_err());
    let cone = GridField::from_fn(geom, |x| (x[0].hypot(x[1]) - 0.5).abs().min(2.0));
    let a = lip_norm(&cone, 0.5, iso).unwrap();
    let b = lip_norm(&cone.scaled(2.0), 0.5, iso).unwrap();
    assert!(a.is_finite() && (b - 2.0 * a).abs() <= 1e-12 * b);

    let f = smooth_bump(geom, &[0.3, -0.2], 1.5);
    let g = smooth_suite(geom).remove(2).1;
    for m in [iso, Metric::parabolic(2).unwrap()] {
        let nf = lip_norm(&f, 0.5, m).unwrap();
        let shifted = lip_norm(&f.shifted(&[5, -7]), 0.5, m).unwrap();
        assert!((nf - shifted).abs() <= 1e-12 * nf);
        let sum = lip_norm(&f.add(&g).unwrap(), 0.5, m).unwrap();
        assert!(sum <= nf + lip_norm(&g, 0.5, m).unwrap() + 1e-12);
    }
}

#[test]
fn lip_norm_matches_gradient_at_cell_scale() {
    let geom = Geometry::new(2, 256, 8.0).unwrap();
    let h = geom.spacing();
    let iso = Metric::isotropic(2).unwrap();
    let f = smooth_bump(geom, &[0.0, 0.0], 2.0);
    let axes = [[1i64, 0, 0], [0, 1, 0]];
    let got = lip_norm_over(&f, 0.5, iso, &axes).unwrap();
    let n = geom.size();
    let mut grad = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let v = |a: usize, b: usize| f.value_at(&[a % n, b % n]);
            let dx = (v(i + 1, j) - v(i + n - 1, j)) / (2.0 * h);
            let dy = (v(i, j + 1) - v(i, j + n - 1)) / (2.0 * h);
            grad = grad.max(dx.abs()).max(dy.abs());
        }
    }
    let envelope = grad * h.powf(0.5);
    assert!(got / envelope < 2.0 && envelope / got < 2.0, "{got} vs {envelope}");
}

#[test]
fn composite_norm_structure() {
    let geom = Geometry::new(2, 128, 8.0).unwrap();
    let additive = GridField::from_fn(geom, |x| (-x[0] * x[0]).exp() + (0.5 * x[1]).sin());
    assert!(lip_norm_com(&additive, 0.5, 0.5).unwrap() < 1e-12);
    assert_eq!(lip_norm_com(&GridField::zeros(geom), 0.5, 0.5).unwrap(), 0.0);
    assert!(lip_norm_com(&additive, 0.5, 1.0).is_err());

    let a = |t: f64| (-t * t).exp();
    let b = |t: f64| (0.5 * t).sin() * (-0.1 * t * t).exp();
    let product = GridField::from_fn(geom, |x| a(x[0]) * b(x[1]));
    let pairs = composite_pairs(&geom);
    let got = lip_norm_com_over(&product, 0.5, 0.5, &pairs).unwrap();
    let (n, h) = (geom.size(), geom.spacing());
    let sup_diff = |g: &dyn Fn(f64) -> f64, c: i64| {
        (0..n)
            .map(|i| {
                let x = geom.coord(i);
                (g(x - c as f64 * h) - g(x)).abs()
            })
            .fold(0.0, f64::max)
    };
    let mut oracle = 0.0f64;
    for (u, v) in &pairs {
        let du = (geom.wrap_offset(u[0]) as f64 * h).abs();
        let dv = (geom.wrap_offset(v[1]) as f64 * h).abs().sqrt();
        oracle = oracle.max(sup_diff(&a, u[0]) / du.sqrt() * sup_diff(&b, v[1]) / dv.sqrt());
    }
    assert!(got / oracle < 4.0 && oracle / got < 4.0, "{got} vs {oracle}");
}

#[test]
fn lp_characterization() {
    let geom = Geometry::desk();
    let bump = smooth_bump(geom, &[0.0, 0.0], 1.0);
    for m in [Metric::isotropic(2).unwrap(), Metric::parabolic(2).unwrap()] {
        let g = build_generator(m, geom).unwrap();
        let r = g.resolvable_range();
        assert!(lip_norm_lp(&GridField::constant(geom, 4.0), 0.5, &g, &r).unwrap() < 1e-12);
        assert!(lip_norm_lp(&bump, 0.5, &g, &ScaleRange { min: 1, max: 0 }).is_err());

        let j0 = 1;
        let single = FrequencyField::forward(&bump).scale_real(&g.multiplier(j0).unwrap()).inverse();
        let profile = lip_profile(&single, &g, &r).unwrap();
        let top = profile.iter().cloned().fold((0, 0.0), |a, b| if b.1 > a.1 { b } else { a });
        assert!((j0 - 1..=j0 + 1).contains(&top.0), "{profile:?}");

        for (name, f) in smooth_suite(geom) {
            let ratio = lip_norm_lp(&f, 0.5, &g, &r).unwrap() / lip_norm(&f, 0.5, m).unwrap();
            assert!((0.1..=10.0).contains(&ratio), "{name}: {ratio}");
        }
    }
}
