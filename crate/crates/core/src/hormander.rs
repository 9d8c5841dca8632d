//! The Hormander integral `int_{|y - x1| >= 2|x1 - x2|} |K0(x1 - y) - K0(x2 - y)| dy`
//! for the regime's boundary kernel `K0`, in polar coordinates of the metric
//! centered at `x1` (`n = 2`).

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::kernel::ProductKernel;
use crate::metric::{Metric, MetricKind};
use crate::par;
use crate::quadrature::Rule;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HormanderOptions {
    /// Gauss order per panel.
    pub order: usize,
    /// Panels per dyadic radial shell and per angular sub-interval scale.
    pub density: usize,
    /// Without the cutoff the radial range is `[2d, outer_factor * 2d]`.
    pub outer_factor: f64,
}

impl Default for HormanderOptions {
    fn default() -> Self {
        Self { order: 12, density: 1, outer_factor: 1024.0 }
    }
}

impl HormanderOptions {
    /// Twice the panel density.
    pub fn refined(&self) -> Self {
        Self { density: 2 * self.density, ..*self }
    }
}

/// Rule on `[a, b]` split into `density` equal pieces, each graded toward
/// both of its endpoints; refined rules also raise the Gauss order.
fn graded_both(a: f64, b: f64, order: usize, density: usize) -> Rule {
    let order = if density > 1 { order + order / 2 } else { order };
    let mut r = Rule::default();
    for i in 0..density {
        let lo = a + (b - a) * i as f64 / density as f64;
        let hi = a + (b - a) * (i + 1) as f64 / density as f64;
        let mid = 0.5 * (lo + hi);
        let first = (hi - lo) * 2f64.powi(-20);
        r.extend(Rule::graded_from_left(lo, mid, first, |_| order));
        r.extend(Rule::graded_to_right(mid, hi, first, |_| order));
    }
    r
}

fn angular_rule(breaks: &mut Vec<f64>, lo: f64, hi: f64, order: usize, density: usize) -> Rule {
    breaks.retain(|b| *b > lo && *b < hi);
    breaks.push(lo);
    breaks.push(hi);
    breaks.sort_by(|a, b| a.total_cmp(b));
    breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    let mut r = Rule::default();
    for w in breaks.windows(2) {
        r.extend(graded_both(w[0], w[1], order, density));
    }
    r
}

fn boundary(kernel: &ProductKernel, z: [f64; 2]) -> f64 {
    kernel.eval_boundary_cut(&z).unwrap_or(0.0)
}

/// The constrained integral for one pair.
pub fn hormander_integral(
    kernel: &ProductKernel,
    metric: Metric,
    x1: [f64; 2],
    x2: [f64; 2],
    opts: &HormanderOptions,
) -> Result<f64> {
    if kernel.dim != 2 || metric.dim != 2 {
        return Err(invalid("the Hormander integral is implemented for n = 2"));
    }
    kernel.eval_boundary(&[1.0, 0.5])?;
    let delta = [x2[0] - x1[0], x2[1] - x1[1]];
    let d = metric.norm_unchecked(&delta);
    if d == 0.0 {
        return Err(Error::Precondition("degenerate pair x1 = x2".into()));
    }
    let parabolic = metric.kind == MetricKind::Parabolic;
    let inner = 2.0 * d;
    let outer = if kernel.cutoff {
        // both translates vanish once |z|_h >= 2 + d
        let support = 2.0 + d;
        if parabolic {
            support
        } else {
            // the parabolic ball of radius s sits inside the Euclidean ball of radius s + s^2
            support + support * support
        }
    } else {
        opts.outer_factor * inner
    };
    if outer <= inner {
        return Ok(0.0);
    }
    let mut rho = Rule::default();
    let mut lo = inner;
    while lo < outer {
        let hi = (2.0 * lo).min(outer);
        let pieces = opts.density;
        for i in 0..pieces {
            let a = lo + (hi - lo) * i as f64 / pieces as f64;
            let b = lo + (hi - lo) * (i + 1) as f64 / pieces as f64;
            rho.push_panel(a, b, opts.order);
        }
        lo = hi;
    }
    // z = x1 - y; the integrand is |K0(z) - K0(z + delta)|
    let shells = par::map_range(rho.len(), |i| {
        let (r, wr) = (rho.nodes[i], rho.weights[i]);
        let mut acc = 0.0;
        if parabolic {
            // z' = r u, z_n = sigma r^2 (1 - u^2), dz = 2 r^2 dr du
            for sigma in [1.0, -1.0] {
                let mut breaks = vec![0.0, -delta[0] / r];
                let q = 1.0 + delta[1] / (sigma * r * r);
                if q > 0.0 {
                    breaks.push(q.sqrt());
                    breaks.push(-q.sqrt());
                }
                let ur = angular_rule(&mut breaks, -1.0, 1.0, opts.order, opts.density);
                for (&u, &wu) in ur.nodes.iter().zip(&ur.weights) {
                    let z = [r * u, sigma * r * r * (1.0 - u * u)];
                    let v = boundary(kernel, z) - boundary(kernel, [z[0] + delta[0], z[1] + delta[1]]);
                    acc += wu * 2.0 * r * r * v.abs();
                }
            }
        } else {
            // z = r (cos a, sin a), dz = r dr da
            let mut breaks = vec![-PI / 2.0, PI / 2.0, 0.0];
            let c = -delta[0] / r;
            if c.abs() < 1.0 {
                breaks.push(c.acos());
                breaks.push(-c.acos());
            }
            let s = -delta[1] / r;
            if s.abs() < 1.0 {
                breaks.push(s.asin());
                let other = PI - s.asin();
                breaks.push(if other > PI { other - 2.0 * PI } else { other });
            }
            let ar = angular_rule(&mut breaks, -PI, PI, opts.order, opts.density);
            for (&a, &wa) in ar.nodes.iter().zip(&ar.weights) {
                let z = [r * a.cos(), r * a.sin()];
                let v = boundary(kernel, z) - boundary(kernel, [z[0] + delta[0], z[1] + delta[1]]);
                acc += wa * r * v.abs();
            }
        }
        wr * acc
    });
    Ok(shells.into_iter().sum())
}

/// Max of the constrained integral over the pairs.
pub fn hormander_constant(
    kernel: &ProductKernel,
    metric: Metric,
    pairs: &[([f64; 2], [f64; 2])],
    opts: &HormanderOptions,
) -> Result<f64> {
    if pairs.is_empty() {
        return Err(invalid("no pairs to sample"));
    }
    let mut best = 0.0f64;
    for (a, b) in pairs {
        best = best.max(hormander_integral(kernel, metric, *a, *b, opts)?);
    }
    Ok(best)
}

/// `per_scale` seeded pairs at each separation in `scales`: `x1` uniform in
/// `[-1, 1]^2`, `x2 = x1 + delta_m(s) w` with `w` on the metric unit sphere.
pub fn sample_pairs(metric: Metric, scales: &[f64], per_scale: usize, seed: u64) -> Vec<([f64; 2], [f64; 2])> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(scales.len() * per_scale);
    for &s in scales {
        for _ in 0..per_scale {
            let x1 = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let w = loop {
                let c = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
                let r = metric.norm_unchecked(&c);
                if r > 1e-3 {
                    break metric.dilate_unchecked(&c, 1.0 / r);
                }
            };
            let d = metric.dilate_unchecked(&w, s);
            out.push((x1, [x1[0] + d[0], x1[1] + d[1]]));
        }
    }
    out
}
