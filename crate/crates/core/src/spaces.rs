//! Test-function norms, decay fits of operator outputs and the three
//! Lipschitz norms (difference, double difference and Littlewood-Paley).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::calderon::linear_fit;
use crate::error::{invalid, Error, Result};
use crate::field::{Geometry, GridField};
use crate::lp::{LPGenerator, ScaleRange};
use crate::metric::{Metric, MetricKind};
use crate::par;
use crate::FrequencyField;

/// Seeds for the sampled suprema; fixed so reports are reproducible.
pub const PAIR_SEED: u64 = 0x7e57_f00d;
pub const OFFSET_SEED: u64 = 0x1195_c417;
pub const RANDOM_PAIRS: usize = 10_000;
pub const RANDOM_OFFSETS: usize = 1_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestFunctionParams {
    pub beta: f64,
    pub gamma: f64,
    pub r: f64,
    pub x0: Vec<f64>,
    pub metric: MetricKind,
}

impl TestFunctionParams {
    pub fn new(beta: f64, gamma: f64, r: f64, x0: Vec<f64>, metric: MetricKind) -> Result<Self> {
        let p = Self { beta, gamma, r, x0, metric };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(invalid(format!("beta = {} outside (0, 1]", self.beta)));
        }
        if !(self.gamma > 0.0) {
            return Err(invalid(format!("gamma = {} must be positive", self.gamma)));
        }
        if !(self.r > 0.0) {
            return Err(invalid(format!("r = {} must be positive", self.r)));
        }
        Ok(())
    }

    /// `n + gamma` (isotropic) or `n + 1 + gamma` (parabolic).
    pub fn exponent(&self, dim: usize) -> f64 {
        let q = match self.metric {
            MetricKind::Isotropic => dim,
            MetricKind::Parabolic => dim + 1,
        };
        q as f64 + self.gamma
    }
}

/// Minimal-image displacement `x - y` on the periodic grid.
fn displacement(geom: &Geometry, x: &[f64], y: &[f64]) -> [f64; 3] {
    let period = 2.0 * geom.half_extent();
    let mut d = [0.0; 3];
    for a in 0..geom.dim() {
        let mut v = x[a] - y[a];
        v -= period * (v / period).round();
        d[a] = v;
    }
    d
}

fn offset_vector(geom: &Geometry, cells: &[i64]) -> [f64; 3] {
    let mut u = [0.0; 3];
    for a in 0..geom.dim() {
        u[a] = geom.wrap_offset(cells[a]) as f64 * geom.spacing();
    }
    u
}

fn shifted_index(geom: &Geometry, idx: usize, cells: &[i64]) -> usize {
    let n = geom.size() as i64;
    let m = geom.unravel(idx);
    let mut s = [0usize; 3];
    for a in 0..geom.dim() {
        s[a] = (m[a] as i64 + cells[a]).rem_euclid(n) as usize;
    }
    geom.ravel(&s)
}

/// All `3^n - 1` single-cell offsets.
fn unit_offsets(dim: usize) -> Vec<[i64; 3]> {
    let mut out = Vec::new();
    let total = 3usize.pow(dim as u32);
    for code in 0..total {
        let mut c = [0i64; 3];
        let mut rest = code;
        for slot in c.iter_mut().take(dim) {
            *slot = (rest % 3) as i64 - 1;
            rest /= 3;
        }
        if c.iter().any(|&v| v != 0) {
            out.push(c);
        }
    }
    out
}

/// Test-function norm: size term joined with the sampled smoothness
/// quotient. Cells are compared through minimal-image distances.
pub fn test_norm(f: &GridField, p: &TestFunctionParams) -> Result<f64> {
    p.validate()?;
    let geom = *f.geometry();
    let dim = geom.dim();
    if p.x0.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: p.x0.len() });
    }
    let sup = f.max_abs();
    if sup == 0.0 {
        return Ok(0.0);
    }
    if f.mean().abs() >= 1e-8 * sup {
        return Err(Error::Precondition(format!("grid mean {:e} is not negligible", f.mean())));
    }
    let m = Metric::new(p.metric, dim)?;
    let e = p.exponent(dim);
    let rg = p.r.powf(p.gamma);
    let weight: Vec<f64> = par::map_range(geom.len(), |i| {
        let x = geom.point(i);
        p.r + m.norm_unchecked(&displacement(&geom, &x[..dim], &p.x0)[..dim])
    });
    let vals = f.values();
    let size = par::max_range(geom.len(), |i| vals[i].abs() * weight[i].powf(e) / rg);

    let quotient = |i: usize, cells: &[i64]| -> f64 {
        let u = offset_vector(&geom, cells);
        let du = m.norm_unchecked(&u[..dim]);
        let w = weight[i];
        if du == 0.0 || du > 0.5 * w {
            return 0.0;
        }
        let j = shifted_index(&geom, i, cells);
        (vals[i] - vals[j]).abs() * w.powf(e) / rg * (w / du).powf(p.beta)
    };
    let units = unit_offsets(dim);
    let neighbors = par::max_range(geom.len(), |i| units.iter().map(|c| quotient(i, c)).fold(0.0, f64::max));

    let mut rng = ChaCha8Rng::seed_from_u64(PAIR_SEED);
    let mut pairs = Vec::with_capacity(RANDOM_PAIRS);
    let h = geom.spacing();
    while pairs.len() < RANDOM_PAIRS {
        let i = rng.gen_range(0..geom.len());
        let rad = 0.5 * weight[i];
        let mut c = [0i64; 3];
        for (a, slot) in c.iter_mut().enumerate().take(dim) {
            let ext = rad.powi(m.axis_exponent(a)).min(geom.half_extent());
            let cells = (ext / h).floor() as i64;
            *slot = rng.gen_range(-cells..=cells);
        }
        if c.iter().any(|&v| v != 0) && m.norm_unchecked(&offset_vector(&geom, &c)[..dim]) <= rad {
            pairs.push((i, c));
        }
    }
    let sampled = par::map_slice(&pairs, |(i, c)| quotient(*i, c)).into_iter().fold(0.0, f64::max);
    Ok(size.max(neighbors).max(sampled))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayFit {
    /// Fitted `a` in `|g| ~ C (1 + |x - x0|)^{-a}`.
    pub exponent: f64,
    pub amplitude: f64,
    pub r_squared: f64,
    /// `(radius at the shell max, shell max)` per populated shell.
    pub shells: Vec<(f64, f64)>,
}

/// Fit shell maxima over `[R, 2R)`, `R = 1, 2, 4, ...`, `2R <= L/2`.
pub fn decay_exponent_fit(g: &GridField, m: Metric, x0: &[f64]) -> Result<DecayFit> {
    decay_exponent_fit_from(g, m, x0, 1.0)
}

/// [`decay_exponent_fit`] with shells starting at `inner` instead of 1.
pub fn decay_exponent_fit_from(g: &GridField, m: Metric, x0: &[f64], inner: f64) -> Result<DecayFit> {
    if !(inner > 0.0) {
        return Err(invalid(format!("inner shell radius {inner} must be positive")));
    }
    let geom = *g.geometry();
    let dim = geom.dim();
    if m.dim != dim || x0.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: x0.len().min(m.dim) });
    }
    let half = 0.5 * geom.half_extent();
    let radii: Vec<f64> = par::map_range(geom.len(), |i| {
        let x = geom.point(i);
        m.norm_unchecked(&displacement(&geom, &x[..dim], x0)[..dim])
    });
    let vals = g.values();
    let (mut near, mut far) = (0.0f64, 0.0f64);
    for (r, v) in radii.iter().zip(vals) {
        if *r < half {
            near = near.max(v.abs());
        } else {
            far = far.max(v.abs());
        }
    }
    if far > near {
        return Err(Error::Precondition("field does not decay away from x0".into()));
    }
    let mut shells = Vec::new();
    let mut r = inner;
    while 2.0 * r <= half * (1.0 + 1e-12) {
        let mut best: Option<(f64, f64)> = None;
        for (rad, v) in radii.iter().zip(vals) {
            if *rad >= r && *rad < 2.0 * r && best.is_none_or(|b| v.abs() > b.1) {
                best = Some((*rad, v.abs()));
            }
        }
        if let Some(b) = best {
            if b.1 > 0.0 {
                shells.push(b);
            }
        }
        r *= 2.0;
    }
    if shells.len() < 3 {
        return Err(Error::Degenerate(format!("only {} populated shells", shells.len())));
    }
    let xs: Vec<f64> = shells.iter().map(|s| (1.0 + s.0).ln()).collect();
    let ys: Vec<f64> = shells.iter().map(|s| s.1.ln()).collect();
    let (slope, intercept, r2) = linear_fit(&xs, &ys);
    Ok(DecayFit { exponent: -slope, amplitude: intercept.exp(), r_squared: r2, shells })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LipschitzParams {
    pub alpha: f64,
    pub alpha1: f64,
    pub alpha2: f64,
}

impl LipschitzParams {
    pub fn single(alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Self { alpha, alpha1: alpha, alpha2: alpha })
    }

    pub fn composite(alpha1: f64, alpha2: f64) -> Result<Self> {
        check_alpha(alpha1)?;
        check_alpha(alpha2)?;
        Ok(Self { alpha: alpha1.min(alpha2), alpha1, alpha2 })
    }
}

fn check_alpha(a: f64) -> Result<()> {
    if a > 0.0 && a < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("alpha = {a} outside (0, 1)")))
    }
}

/// Single-cell offsets plus `RANDOM_OFFSETS` seeded offsets with every
/// component up to `L/2`.
pub fn lip_offsets(geom: &Geometry) -> Vec<[i64; 3]> {
    let dim = geom.dim();
    let mut out = unit_offsets(dim);
    let reach = (geom.size() / 4) as i64;
    let mut rng = ChaCha8Rng::seed_from_u64(OFFSET_SEED);
    while out.len() < 3usize.pow(dim as u32) - 1 + RANDOM_OFFSETS {
        let mut c = [0i64; 3];
        for slot in c.iter_mut().take(dim) {
            *slot = rng.gen_range(-reach..=reach);
        }
        if c.iter().any(|&v| v != 0) {
            out.push(c);
        }
    }
    out
}

/// `max_x |f(x - u) - f(x)|`.
fn sup_difference(f: &GridField, cells: &[i64]) -> f64 {
    let geom = f.geometry();
    let v = f.values();
    let back = [-cells[0], -cells[1], -cells[2]];
    par::max_range(geom.len(), |i| (v[shifted_index(geom, i, &back)] - v[i]).abs())
}

/// `max_x |Delta_u Delta_v f(x)|`.
fn sup_double_difference(f: &GridField, u: &[i64; 3], w: &[i64; 3]) -> f64 {
    let geom = f.geometry();
    let v = f.values();
    let bu = [-u[0], -u[1], -u[2]];
    let bw = [-w[0], -w[1], -w[2]];
    let buw = [-u[0] - w[0], -u[1] - w[1], -u[2] - w[2]];
    par::max_range(geom.len(), |i| {
        (v[shifted_index(geom, i, &buw)] - v[shifted_index(geom, i, &bu)] - v[shifted_index(geom, i, &bw)] + v[i])
            .abs()
    })
}

pub fn lip_norm(f: &GridField, alpha: f64, m: Metric) -> Result<f64> {
    check_alpha(alpha)?;
    let geom = *f.geometry();
    if m.dim != geom.dim() {
        return Err(Error::DimensionMismatch { expected: geom.dim(), got: m.dim });
    }
    lip_norm_over(f, alpha, m, &lip_offsets(&geom))
}

/// [`lip_norm`] over an explicit offset set (in cells).
pub fn lip_norm_over(f: &GridField, alpha: f64, m: Metric, offsets: &[[i64; 3]]) -> Result<f64> {
    check_alpha(alpha)?;
    let geom = *f.geometry();
    let dim = geom.dim();
    let best = offsets
        .iter()
        .map(|c| {
            let du = m.norm_unchecked(&offset_vector(&geom, c)[..dim]);
            if du == 0.0 {
                0.0
            } else {
                sup_difference(f, c) / du.powf(alpha)
            }
        })
        .fold(0.0, f64::max);
    Ok(best)
}

/// Group-aligned offset pairs `u = (u', 0)`, `v = (0, v_n)`: all single-cell
/// combinations plus `RANDOM_OFFSETS` seeded pairs with components up to `L/2`.
pub fn composite_pairs(geom: &Geometry) -> Vec<([i64; 3], [i64; 3])> {
    let dim = geom.dim();
    let last = dim - 1;
    let mut out = Vec::new();
    for u in unit_offsets(dim).into_iter().filter(|c| c[last] == 0) {
        for s in [-1i64, 1] {
            let mut v = [0i64; 3];
            v[last] = s;
            out.push((u, v));
        }
    }
    let reach = (geom.size() / 4) as i64;
    let mut rng = ChaCha8Rng::seed_from_u64(OFFSET_SEED ^ 0xc0);
    let target = out.len() + RANDOM_OFFSETS;
    while out.len() < target {
        let mut u = [0i64; 3];
        for slot in u.iter_mut().take(last) {
            *slot = rng.gen_range(-reach..=reach);
        }
        let mut v = [0i64; 3];
        v[last] = rng.gen_range(-reach..=reach);
        if u.iter().any(|&c| c != 0) && v[last] != 0 {
            out.push((u, v));
        }
    }
    out
}

/// Composite norm `max |Delta_u Delta_v f| / (|u|_e^{a1} |v|_h^{a2})`.
pub fn lip_norm_com(f: &GridField, alpha1: f64, alpha2: f64) -> Result<f64> {
    lip_norm_com_over(f, alpha1, alpha2, &composite_pairs(f.geometry()))
}

pub fn lip_norm_com_over(f: &GridField, alpha1: f64, alpha2: f64, pairs: &[([i64; 3], [i64; 3])]) -> Result<f64> {
    check_alpha(alpha1)?;
    check_alpha(alpha2)?;
    let geom = *f.geometry();
    let dim = geom.dim();
    if dim < 2 {
        return Err(invalid("the composite norm needs n >= 2"));
    }
    let (e, h) = (Metric::isotropic(dim)?, Metric::parabolic(dim)?);
    let best = pairs
        .iter()
        .map(|(u, v)| {
            let du = e.norm_unchecked(&offset_vector(&geom, u)[..dim]);
            let dv = h.norm_unchecked(&offset_vector(&geom, v)[..dim]);
            if du == 0.0 || dv == 0.0 {
                0.0
            } else {
                sup_double_difference(f, u, v) / (du.powf(alpha1) * dv.powf(alpha2))
            }
        })
        .fold(0.0, f64::max);
    Ok(best)
}

/// `max_j max_x 2^{-j alpha} |psi_j * f(x)|`.
pub fn lip_norm_lp(f: &GridField, alpha: f64, g: &LPGenerator, r: &ScaleRange) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(lip_profile(f, g, r)?.iter().map(|(j, v)| 2f64.powf(-(*j as f64) * alpha) * v).fold(0.0, f64::max))
}

/// `(j, max |psi_j * f|)` per scale.
pub fn lip_profile(f: &GridField, g: &LPGenerator, r: &ScaleRange) -> Result<Vec<(i32, f64)>> {
    g.geometry().ensure_same(f.geometry())?;
    g.check_range(r)?;
    let fh = FrequencyField::forward(f);
    let scales: Vec<i32> = r.iter().collect();
    let out = par::map_slice(&scales, |&j| {
        let m = g.multiplier(j)?;
        Ok((j, fh.scale_real(&m).inverse().max_abs()))
    });
    out.into_iter().collect()
}
