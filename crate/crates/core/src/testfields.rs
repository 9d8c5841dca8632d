//! Seeded and closed-form input fields shared by tests, experiments and
//! benches.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result};
use crate::field::{Geometry, GridField};
use crate::metric::{iso_norm, para_norm};

/// Real trigonometric polynomial with `count` random modes, each drawn from
/// dual-lattice frequencies where every mask is set (and so is the mask at
/// the mirrored frequency). Phases and amplitudes are seeded.
pub fn trig_polynomial(geom: Geometry, masks: &[&[bool]], count: usize, seed: u64) -> Result<GridField> {
    let admissible: Vec<usize> = (0..geom.len())
        .filter(|&i| masks.iter().all(|m| m[i]) && masks.iter().all(|m| m[mirror(&geom, i)]))
        .collect();
    if admissible.is_empty() {
        return Err(invalid("no admissible frequency for the requested band"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let modes: Vec<([f64; 3], f64, f64)> = (0..count)
        .map(|_| {
            let i = admissible[rng.gen_range(0..admissible.len())];
            let amp = rng.gen_range(0.5..1.5);
            let phase = rng.gen_range(0.0..std::f64::consts::TAU);
            (geom.frequency(i), amp, phase)
        })
        .collect();
    Ok(GridField::from_fn(geom, move |x| {
        modes
            .iter()
            .map(|(xi, a, ph)| {
                let d: f64 = x.iter().zip(xi).map(|(u, v)| u * v).sum();
                a * (d + ph).cos()
            })
            .sum()
    }))
}

fn mirror(geom: &Geometry, i: usize) -> usize {
    let m = geom.unravel(i);
    let n = geom.size();
    let mut r = [0usize; 3];
    for a in 0..geom.dim() {
        r[a] = (n - m[a]) % n;
    }
    geom.ravel(&r)
}

/// `exp(-1 / (1 - r^2))` in `r = |x - c| / radius`, zero for `r >= 1`.
pub fn smooth_bump(geom: Geometry, center: &[f64], radius: f64) -> GridField {
    let c: Vec<f64> = center.to_vec();
    GridField::from_fn(geom, move |x| {
        let r2: f64 = x.iter().zip(&c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / (radius * radius);
        if r2 >= 1.0 {
            0.0
        } else {
            (-1.0 / (1.0 - r2)).exp()
        }
    })
}

/// Five smooth, rapidly decaying, mean-zero fields of differing shape.
pub fn smooth_suite(geom: Geometry) -> Vec<(&'static str, GridField)> {
    let n = geom.dim();
    let last = n - 1;
    let gauss = |x: &[f64], s: f64| (-x.iter().map(|v| v * v).sum::<f64>() / (s * s)).exp();
    let fields = vec![
        ("gauss-dx1", GridField::from_fn(geom, move |x| x[0] * gauss(x, 1.0))),
        (
            "gauss-dxn-aniso",
            GridField::from_fn(geom, move |x| {
                let p: f64 = x[..last].iter().map(|v| v * v).sum::<f64>() + 0.25 * x[last] * x[last];
                x[last] * (-p).exp()
            }),
        ),
        (
            "mexican-hat",
            GridField::from_fn(geom, move |x| {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                (n as f64 - r2) * (-r2).exp()
            }),
        ),
        ("modulated", GridField::from_fn(geom, move |x| (3.0 * x[0]).cos() * gauss(x, 1.2))),
        (
            "gauss-difference",
            GridField::from_fn(geom, move |x| {
                let shifted: Vec<f64> = x.iter().enumerate().map(|(a, v)| if a == 0 { v - 0.7 } else { *v }).collect();
                gauss(x, 0.8) - gauss(&shifted, 0.8)
            }),
        ),
    ];
    fields.into_iter().map(|(name, f)| (name, f.mean_zero())).collect()
}

/// Parabolic test-function profile `(1 + |x|_h)^{-a}` sampled exactly.
pub fn parabolic_decay(geom: Geometry, a: f64) -> GridField {
    GridField::from_fn(geom, move |x| (1.0 + para_norm(x)).powf(-a))
}

/// Isotropic analogue of [`parabolic_decay`].
pub fn isotropic_decay(geom: Geometry, a: f64) -> GridField {
    GridField::from_fn(geom, move |x| (1.0 + iso_norm(x)).powf(-a))
}

/// `(1 + |x|_h)^{-(Q + gamma)} - c exp(-|x|^2)` with `c` chosen so the grid
/// sum vanishes.
pub fn parabolic_test_function(geom: Geometry, gamma: f64) -> GridField {
    let q = (geom.dim() + 1) as f64;
    let base = parabolic_decay(geom, q + gamma);
    let gauss = GridField::from_fn(geom, |x| (-x.iter().map(|v| v * v).sum::<f64>()).exp());
    let c = base.integral() / gauss.integral();
    base.combine(1.0, &gauss, -c).expect("same geometry")
}
