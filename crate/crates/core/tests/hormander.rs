use mixhom_core::hormander::{hormander_constant, hormander_integral, sample_pairs, HormanderOptions};
use mixhom_core::kernel::catalog_kernel;
use mixhom_core::Metric;

#[test]
fn constant_is_stable_under_refinement() {
    let k = catalog_kernel("caseh-cancellative").unwrap();
    let m = Metric::parabolic(2).unwrap();
    let pairs = sample_pairs(m, &[0.5, 0.1, 0.02], 20, 7);
    assert_eq!(pairs.len(), 60);
    let opts = HormanderOptions::default();
    let c1 = hormander_constant(&k, m, &pairs, &opts).unwrap();
    let c2 = hormander_constant(&k, m, &pairs, &opts.refined()).unwrap();
    assert!(c1.is_finite() && c1 > 0.0);
    assert!((c1 - c2).abs() / c2 < 0.2, "{c1} vs {c2}");
}

#[test]
fn dilation_invariant_without_cutoff() {
    let k = catalog_kernel("caseh-cancellative").unwrap().with_cutoff(false);
    let m = Metric::parabolic(2).unwrap();
    let opts = HormanderOptions::default();
    let (x1, x2) = ([0.3, -0.2], [0.45, 0.1]);
    let base = hormander_integral(&k, m, x1, x2, &opts).unwrap();
    for delta in [0.25, 0.5, 2.0] {
        let a = m.dilate_unchecked(&x1, delta);
        let b = m.dilate_unchecked(&x2, delta);
        let v = hormander_integral(&k, m, [a[0], a[1]], [b[0], b[1]], &opts).unwrap();
        assert!((v - base).abs() / base < 0.05, "delta {delta}: {v} vs {base}");
    }
}

#[test]
fn integrand_vanishes_as_pair_coincides() {
    let k = catalog_kernel("caseh-cancellative").unwrap();
    let x1 = [0.1, 0.05];
    let y = [0.5, 0.3];
    let k1 = k.eval_boundary_cut(&[x1[0] - y[0], x1[1] - y[1]]).unwrap();
    let mut prev = f64::INFINITY;
    for i in 1..8 {
        let d = 0.1 * 0.5f64.powi(i);
        let x2 = [x1[0] + d, x1[1] + d * d];
        let diff = (k.eval_boundary_cut(&[x2[0] - y[0], x2[1] - y[1]]).unwrap() - k1).abs();
        assert!(diff < prev);
        prev = diff;
    }
    assert!(prev < 1e-2 * k1.abs().max(1.0));
}
