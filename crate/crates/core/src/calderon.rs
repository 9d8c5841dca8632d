//! Discrete Calderon reconstruction on the anisotropic dyadic lattice and
//! almost-orthogonality probes.

use rustfft::num_complex::Complex64;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::field::{FrequencyField, Geometry, GridField};
use crate::lp::{composite_multiplier, composite_terms, lattice_steps, LPGenerator, LatticeRule, ScaleRange};
use crate::operator::FieldOperator;
use crate::par;

/// Spatial field of `psi_{j,k} = psi^(1)_j * psi^(2)_k`; zero when the two
/// annuli do not meet.
pub fn psi_jk(g1: &LPGenerator, g2: &LPGenerator, j: i32, k: i32) -> Result<GridField> {
    g1.geometry().ensure_same(g2.geometry())?;
    g1.check_range(&ScaleRange { min: j, max: j })?;
    g2.check_range(&ScaleRange { min: k, max: k })?;
    match composite_multiplier(g1, g2, j, k) {
        None => Ok(GridField::zeros(*g1.geometry())),
        Some(m) => Ok(real_multiplier(*g1.geometry(), m).inverse()),
    }
}

fn real_multiplier(geom: Geometry, m: Vec<f64>) -> FrequencyField {
    FrequencyField::from_values(geom, m.into_iter().map(Complex64::from).collect()).expect("same length")
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScaleEnergy {
    pub j: i32,
    pub k: i32,
    /// Lattice spacing along `x'` and `x_n` actually used.
    pub spacing: (f64, f64),
    pub lattice_points: usize,
    /// `sum_l w |(psi_{j,k} * f)(lattice point)|^2`.
    pub energy: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ReconstructionReport {
    pub residual: f64,
    pub input_energy: f64,
    pub scales: Vec<ScaleEnergy>,
    /// Largest `|sum_{j,k} |psi^_{j,k}|^2 - 1|` on the dual-lattice support
    /// of the input: the truncation part of the residual.
    pub band_truncation: f64,
}

impl ReconstructionReport {
    pub fn frame_energy(&self) -> f64 {
        self.scales.iter().map(|s| s.energy).sum()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ReconstructOptions {
    pub rule: LatticeRule,
    /// Coarsen every lattice by this many dyadic levels (0 = the reproducing
    /// lattice).
    pub coarsen: u32,
}

/// `sum_{j,k} sum_l w (psi_{j,k} * f)(p_l) psi_{j,k}(x - p_l)` over the
/// lattice points `p_l` with cell volume `w`, and its residual against `f`.
/// Spacings finer than the grid are clamped to one cell.
pub fn calderon_reconstruct(
    f: &GridField,
    g1: &LPGenerator,
    g2: &LPGenerator,
    r1: &ScaleRange,
    r2: &ScaleRange,
    opts: ReconstructOptions,
) -> Result<(GridField, ReconstructionReport)> {
    g1.check_range(r1)?;
    g2.check_range(r2)?;
    g1.geometry().ensure_same(g2.geometry())?;
    f.geometry().ensure_same(g1.geometry())?;
    let geom = *f.geometry();
    let dim = geom.dim();
    let h = geom.spacing();
    let fh = FrequencyField::forward(f);
    let terms = composite_terms(g1, g2, r1, r2);

    let contributions = par::map_slice(&terms, |(j, k, m)| -> Result<(Vec<Complex64>, ScaleEnergy)> {
        let mut steps = lattice_steps(&geom, opts.rule, *j, *k)?;
        let scale = 1usize << opts.coarsen;
        for s in steps.iter_mut().take(dim) {
            *s *= scale;
            if !geom.size().is_multiple_of(*s) {
                return Err(invalid("coarsened lattice does not divide the grid"));
            }
        }
        let u = fh.scale_real(m).inverse();
        let w: f64 = steps[..dim].iter().map(|&s| s as f64 * h).product();
        let o = geom.origin_index();
        let mut samples = GridField::zeros(geom);
        let mut energy = 0.0;
        let mut count = 0usize;
        for i in 0..geom.len() {
            let idx = geom.unravel(i);
            if (0..dim).all(|a| (idx[a] + geom.size() - o).is_multiple_of(steps[a])) {
                let v = u.values()[i];
                samples.values_mut()[i] = v * w / geom.cell_volume();
                energy += w * v * v;
                count += 1;
            }
        }
        let sh = FrequencyField::forward(&samples);
        let out: Vec<Complex64> = sh.values().iter().zip(m).map(|(a, b)| a * b).collect();
        let stats = ScaleEnergy {
            j: *j,
            k: *k,
            spacing: (steps[0] as f64 * h, steps[dim - 1] as f64 * h),
            lattice_points: count,
            energy,
        };
        Ok((out, stats))
    });

    let mut acc = vec![Complex64::new(0.0, 0.0); geom.len()];
    let mut scales = Vec::with_capacity(terms.len());
    for c in contributions {
        let (spec, stats) = c?;
        for (a, b) in acc.iter_mut().zip(spec) {
            *a += b;
        }
        scales.push(stats);
    }
    let rec = FrequencyField::from_values(geom, acc)?.inverse();

    let mut psum = vec![0.0; geom.len()];
    for (_, _, m) in &terms {
        for (p, v) in psum.iter_mut().zip(m) {
            *p += v * v;
        }
    }
    let peak = fh.values().iter().map(|c| c.norm()).fold(0.0, f64::max);
    let band_truncation = fh
        .values()
        .iter()
        .zip(&psum)
        .filter(|(c, _)| c.norm() > 1e-12 * peak)
        .map(|(_, p)| (p - 1.0).abs())
        .fold(0.0, f64::max);

    let norm = f.values().iter().map(|v| v * v).sum::<f64>().sqrt();
    let diff = rec.values().iter().zip(f.values()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let residual = if norm == 0.0 { diff } else { diff / norm };
    let report = ReconstructionReport {
        residual,
        input_energy: norm * norm * geom.cell_volume(),
        scales,
        band_truncation,
    };
    Ok((rec, report))
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbeRecord {
    pub j: i32,
    pub j_prime: i32,
    pub sup: f64,
    /// `(r, L1 mass in the shell [r, 2r))` in the generator's metric, over
    /// dyadic shells from one cell outward; the first entry is the ball of
    /// radius one cell.
    pub mass_profile: Vec<(f64, f64)>,
}

/// `psi_j * op(psi_{j'})` and its summary record.
pub fn almost_orthogonality_probe(
    op: &dyn FieldOperator,
    g: &LPGenerator,
    j: i32,
    j_prime: i32,
) -> Result<(GridField, ProbeRecord)> {
    let mj = g.multiplier(j)?;
    let mjp = g.multiplier(j_prime)?;
    let geom = *g.geometry();
    let psi_jp = real_multiplier(geom, mjp).inverse();
    let t = op.apply(&psi_jp)?;
    let out = FrequencyField::forward(&t).scale_real(&mj).inverse();
    let sup = out.max_abs();
    let mass_profile = shell_mass(&out, g);
    Ok((out, ProbeRecord { j, j_prime, sup, mass_profile }))
}

fn shell_mass(f: &GridField, g: &LPGenerator) -> Vec<(f64, f64)> {
    let geom = *f.geometry();
    let metric = g.metric();
    let dim = geom.dim();
    let h = geom.spacing();
    let rmax = metric.norm_unchecked(&vec![geom.half_extent(); dim]);
    let mut edges = vec![0.0, h];
    while *edges.last().unwrap() < rmax {
        let e = edges.last().unwrap() * 2.0;
        edges.push(e);
    }
    let mut mass = vec![0.0; edges.len() - 1];
    for (i, v) in f.values().iter().enumerate() {
        let r = metric.norm_unchecked(&geom.point(i)[..dim]);
        let b = edges.partition_point(|&e| e <= r).saturating_sub(1).min(mass.len() - 1);
        mass[b] += v.abs() * geom.cell_volume();
    }
    edges[..edges.len() - 1].iter().copied().zip(mass).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayFit {
    /// Fitted `epsilon` in `sup <= C 2^{-|j - j'| epsilon}`.
    pub epsilon: f64,
    pub log2_amplitude: f64,
    pub r_squared: f64,
    /// `(|j - j'|, normalized sup)` per probe.
    pub points: Vec<(i32, f64)>,
    pub records: Vec<ProbeRecord>,
}

/// Probe `(j0, j0 + d)` for every offset `d` and fit the decay in `|d|` of
/// the sup norms normalized by `2^{Q min(j, j')}`. Values under a roundoff
/// floor of `1e-16` times the largest sup are clamped to it.
pub fn fit_almost_orthogonality(
    op: &dyn FieldOperator,
    g: &LPGenerator,
    j0: i32,
    offsets: &[i32],
) -> Result<DecayFit> {
    let distinct: std::collections::BTreeSet<i32> = offsets.iter().map(|d| d.abs()).collect();
    if distinct.len() < 2 || offsets.len() < 5 {
        return Err(invalid("decay fit needs at least 5 offsets spanning 2 distances"));
    }
    let q = g.metric().homogeneous_dimension() as f64;
    let mut records = Vec::new();
    for &d in offsets {
        records.push(almost_orthogonality_probe(op, g, j0, j0 + d)?.1);
    }
    let normalized: Vec<f64> = records
        .iter()
        .map(|r| r.sup / 2f64.powf(q * r.j.min(r.j_prime) as f64))
        .collect();
    let top = normalized.iter().cloned().fold(0.0, f64::max);
    if top == 0.0 {
        return Err(Error::Degenerate("every probe vanished".into()));
    }
    let floor = 1e-16 * top;
    let points: Vec<(i32, f64)> = offsets.iter().zip(&normalized).map(|(d, v)| (d.abs(), v.max(floor))).collect();
    let xs: Vec<f64> = points.iter().map(|p| p.0 as f64).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.log2()).collect();
    let (slope, intercept, r2) = linear_fit(&xs, &ys);
    Ok(DecayFit { epsilon: -slope, log2_amplitude: intercept, r_squared: r2, points, records })
}

/// Ordinary least squares `y = a x + b`; returns `(a, b, R^2)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let a = if sxx == 0.0 { 0.0 } else { sxy / sxx };
    let b = my - a * mx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    (a, b, r2)
}
