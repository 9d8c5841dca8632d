use proptest::prelude::*;

use mixhom_core::kernel::{enforce_cancellation, spherical_mean, ProductKernel, Profile};
use mixhom_core::maximal::{hl_maximal, strong_maximal};
use mixhom_core::testfields::trig_polynomial;
use mixhom_core::{Geometry, GridField, MaximalConfig, Metric};

const PROFILES: &[&str] = &["constant", "odd-xn", "first-harmonic", "tilted-odd", "random-trig"];

fn metric() -> impl Strategy<Value = Metric> {
    prop_oneof![Just(Metric::isotropic(2).unwrap()), Just(Metric::parabolic(2).unwrap())]
}

fn point() -> impl Strategy<Value = [f64; 2]> {
    [-5.0..5.0f64, -5.0..5.0f64].prop_filter("away from the origin", |x| x[0].abs() + x[1].abs() > 1e-3)
}

fn field(geom: Geometry, seed: u64) -> GridField {
    let all = vec![true; geom.len()];
    trig_polynomial(geom, &[&all], 4, seed).unwrap()
}

fn le(a: &GridField, b: &GridField) -> bool {
    let tol = 1e-12 * b.max_abs().max(1.0);
    a.values().iter().zip(b.values()).all(|(x, y)| *x <= *y + tol)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn metric_norm_is_homogeneous(m in metric(), x in point(), d in 0.05..20.0f64) {
        let y = m.dilate(&x, d).unwrap();
        let lhs = m.norm(&y).unwrap();
        let rhs = d * m.norm(&x).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs);
    }

    #[test]
    fn metric_dilations_compose(m in metric(), x in point(), a in 0.1..10.0f64, b in 0.1..10.0f64) {
        let ab = m.dilate(&m.dilate(&x, a).unwrap(), b).unwrap();
        let direct = m.dilate(&x, a * b).unwrap();
        for (u, v) in ab.iter().zip(&direct) {
            prop_assert!((u - v).abs() <= 1e-12 * v.abs().max(1e-300));
        }
    }

    #[test]
    fn kernel_factors_are_homogeneous(pi in 0..PROFILES.len(), x in point(), d in 0.1..10.0f64,
                                      k in 0.05..1.9f64, l in 0.5..4.0f64) {
        let p = Profile::from_name(PROFILES[pi], 3).unwrap();
        let ker = ProductKernel::new(2, k, l, p.clone(), p).unwrap().with_cutoff(false);
        let e0 = ker.eval_e(&x);
        let e1 = ker.eval_e(&[d * x[0], d * x[1]]);
        prop_assert!((e1 - d.powf(-k) * e0).abs() <= 1e-12 * e0.abs().max(1e-300));
        let h0 = ker.eval_h(&x);
        let h1 = ker.eval_h(&[d * x[0], d * d * x[1]]);
        prop_assert!((h1 - d.powf(-l) * h0).abs() <= 1e-12 * h0.abs().max(1e-300));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn enforcement_is_idempotent(pi in 0..PROFILES.len(), seed in 0u64..1000) {
        let p = Profile::from_name(PROFILES[pi], seed).unwrap();
        let ker = ProductKernel::new(2, 0.25, 2.75, Profile::Constant(1.0), p).unwrap();
        let once = enforce_cancellation(&ker).unwrap();
        let twice = enforce_cancellation(&once).unwrap();
        prop_assert!(spherical_mean(&once).unwrap().mean.abs() < 1e-9);
        prop_assert!((twice.cancellation_shift - once.cancellation_shift).abs() < 1e-12);
    }

    #[test]
    fn maximal_operators_are_sublinear(m in metric(), s1 in 0u64..1000, s2 in 0u64..1000, c in -3.0..3.0f64) {
        let geom = Geometry::new(2, 32, 4.0).unwrap();
        let cfg = MaximalConfig::dyadic(&geom);
        let (f, g) = (field(geom, s1), field(geom, s2));
        let sum = f.add(&g).unwrap();
        let mf = hl_maximal(&f, m, &cfg).unwrap();
        let mg = hl_maximal(&g, m, &cfg).unwrap();
        prop_assert!(le(&hl_maximal(&sum, m, &cfg).unwrap(), &mf.add(&mg).unwrap()));
        let scaled = hl_maximal(&f.scaled(c), m, &cfg).unwrap();
        prop_assert!(le(&scaled, &mf.scaled(c.abs())) && le(&mf.scaled(c.abs()), &scaled));
        let sf = strong_maximal(&f, &cfg).unwrap();
        let sg = strong_maximal(&g, &cfg).unwrap();
        prop_assert!(le(&strong_maximal(&sum, &cfg).unwrap(), &sf.add(&sg).unwrap()));
        prop_assert!(le(&mf, &hl_maximal(&f.abs().add(&g.abs()).unwrap(), m, &cfg).unwrap()));
    }
}
