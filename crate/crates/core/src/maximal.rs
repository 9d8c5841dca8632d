//! Dyadic-ladder maximal operators, the maximal truncation and the Cotlar
//! and weak-type probes.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::field::{lp_norm, FrequencyField, Geometry, GridField};
use crate::kernel::ProductKernel;
use crate::metric::Metric;
use crate::operator::FieldOperator;
use crate::par;
use crate::truncation::{TruncatedOperator, TruncationOptions, SUPPORT_RADIUS};

/// Radii (or rectangle sides) of the dyadic ladder; periodic boundary.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MaximalConfig {
    pub radii: Vec<f64>,
}

impl MaximalConfig {
    pub fn new(geom: &Geometry, radii: Vec<f64>) -> Result<Self> {
        if radii.is_empty() {
            return Err(invalid("empty radius ladder"));
        }
        let (h, l) = (geom.spacing(), geom.half_extent());
        if let Some(r) = radii.iter().find(|&&r| r < h * (1.0 - 1e-12) || r > l * (1.0 + 1e-12)) {
            return Err(invalid(format!("radius {r} outside [h, L] = [{h}, {l}]")));
        }
        Ok(Self { radii })
    }

    /// `h 2^i` for every `i` with `h 2^i <= L`.
    pub fn dyadic(geom: &Geometry) -> Self {
        let mut radii = Vec::new();
        let mut r = geom.spacing();
        while r <= geom.half_extent() * (1.0 + 1e-12) {
            radii.push(r);
            r *= 2.0;
        }
        Self { radii }
    }

    /// Largest ratio between consecutive radii: the factor by which the
    /// ladder may under-estimate the continuous supremum's radius.
    pub fn step_ratio(&self) -> f64 {
        self.radii.windows(2).map(|w| w[1] / w[0]).fold(1.0, f64::max)
    }
}

/// Spectrum of the count-normalized indicator of `{x : inside(x)}` scaled so
/// that the spectral convolution returns plain cell averages.
fn averaging_symbol(geom: Geometry, inside: impl Fn(&[f64]) -> bool + Sync + Send) -> (FrequencyField, usize) {
    let ind = GridField::from_fn(geom, |x| if inside(x) { 1.0 } else { 0.0 });
    let count = ind.values().iter().filter(|&&v| v > 0.0).count();
    let scaled = ind.scaled(1.0 / (count as f64 * geom.cell_volume()));
    (FrequencyField::forward(&scaled), count)
}

fn average_with(fh: &FrequencyField, symbol: &FrequencyField) -> GridField {
    fh.mul(symbol).expect("same geometry").inverse()
}

fn pointwise_max(acc: &mut [f64], v: &GridField) {
    for (a, b) in acc.iter_mut().zip(v.values()) {
        *a = a.max(*b);
    }
}

/// Metric ball of radius `r` at the origin, strict inequality.
pub fn ball_count(geom: Geometry, m: Metric, r: f64) -> usize {
    averaging_symbol(geom, |x| m.norm_unchecked(x) < r).1
}

/// Hardy-Littlewood maximal function of `|f|` over metric balls.
pub fn hl_maximal(f: &GridField, m: Metric, cfg: &MaximalConfig) -> Result<GridField> {
    let geom = *f.geometry();
    if m.dim != geom.dim() {
        return Err(Error::DimensionMismatch { expected: geom.dim(), got: m.dim });
    }
    if cfg.radii.is_empty() {
        return Err(invalid("empty radius ladder"));
    }
    let fh = FrequencyField::forward(&f.abs());
    let mut acc = vec![f64::NEG_INFINITY; geom.len()];
    for &r in &cfg.radii {
        let (sym, _) = averaging_symbol(geom, |x| m.norm_unchecked(x) < r);
        pointwise_max(&mut acc, &average_with(&fh, &sym));
    }
    GridField::from_values(geom, acc)
}

fn in_rectangle(x: &[f64], r: f64, s: f64) -> bool {
    let n = x.len();
    let xp: f64 = x[..n - 1].iter().map(|v| v * v).sum::<f64>().sqrt();
    xp < r && x[n - 1].abs() < s
}

/// Cells in the rectangle `|y'| < r`, `|y_n| < s`.
pub fn rectangle_count(geom: Geometry, r: f64, s: f64) -> usize {
    averaging_symbol(geom, |x| in_rectangle(x, r, s)).1
}

/// Strong maximal function: averages over `|y' - x'| < r`, `|y_n - x_n| < s`
/// for every pair of ladder sides.
pub fn strong_maximal(f: &GridField, cfg: &MaximalConfig) -> Result<GridField> {
    let geom = *f.geometry();
    if geom.dim() < 2 {
        return Err(invalid("the strong maximal function needs n >= 2"));
    }
    let fh = FrequencyField::forward(&f.abs());
    let pairs: Vec<(f64, f64)> = cfg.radii.iter().flat_map(|&r| cfg.radii.iter().map(move |&s| (r, s))).collect();
    let mut acc = vec![f64::NEG_INFINITY; geom.len()];
    for (r, s) in pairs {
        let (sym, _) = averaging_symbol(geom, |x| in_rectangle(x, r, s));
        pointwise_max(&mut acc, &average_with(&fh, &sym));
    }
    GridField::from_values(geom, acc)
}

/// Pointwise max over the operators of `|op f|`.
pub fn maximal_truncation(ops: &[&dyn FieldOperator], f: &GridField) -> Result<GridField> {
    if ops.is_empty() {
        return Err(invalid("empty truncation ladder"));
    }
    let outs = par::map_slice(ops, |op| op.apply(f));
    let mut acc = vec![0.0f64; f.geometry().len()];
    for o in outs {
        let o = o?;
        for (a, v) in acc.iter_mut().zip(o.values()) {
            *a = a.max(v.abs());
        }
    }
    GridField::from_values(*f.geometry(), acc)
}

/// Truncated operators for an `eps` ladder, sorted by decreasing radius.
pub fn truncation_ladder(
    kernel: &ProductKernel,
    geom: Geometry,
    eps: &[f64],
    m: Metric,
    opts: &TruncationOptions,
) -> Result<Vec<TruncatedOperator>> {
    if eps.is_empty() {
        return Err(invalid("empty truncation ladder"));
    }
    if let Some(e) = eps.iter().find(|&&e| !(e > 0.0) || e > SUPPORT_RADIUS) {
        return Err(invalid(format!("truncation radius {e} outside (0, {SUPPORT_RADIUS}]")));
    }
    let mut eps = eps.to_vec();
    eps.sort_by(|a, b| b.total_cmp(a));
    let built = par::map_slice(&eps, |&e| TruncatedOperator::new(kernel, geom, e, m, opts));
    built.into_iter().collect()
}

fn as_dyn(ops: &[TruncatedOperator]) -> Vec<&dyn FieldOperator> {
    ops.iter().map(|o| o as &dyn FieldOperator).collect()
}

/// `T* f = max over the ladder of |T_eps f|`.
pub fn maximal_truncation_kernel(
    kernel: &ProductKernel,
    f: &GridField,
    eps: &[f64],
    m: Metric,
    opts: &TruncationOptions,
) -> Result<GridField> {
    let ops = truncation_ladder(kernel, *f.geometry(), eps, m, opts)?;
    maximal_truncation(&as_dyn(&ops), f)
}

#[derive(Clone, Debug, Serialize)]
pub struct CotlarReport {
    /// `max T* f / (M(|Tf|^delta)^{1/delta} + M(|M_S f|^p)^{1/p} + M_S f)`.
    pub constant: f64,
    /// Cells where the denominator clears the floor.
    pub cells: usize,
    /// Sup of each majorant term.
    pub term_sups: [f64; 3],
    pub maximal_truncation_sup: f64,
}

/// Fit the Cotlar constant. `ops` is the truncation ladder ordered by
/// decreasing radius; its last member stands in for `T f`.
pub fn cotlar_fit(
    ops: &[&dyn FieldOperator],
    f: &GridField,
    delta: f64,
    p: f64,
    m: Metric,
    cfg: &MaximalConfig,
) -> Result<CotlarReport> {
    if !(delta > 0.0) {
        return Err(invalid(format!("delta = {delta} must be positive")));
    }
    if !(p > 0.0) {
        return Err(invalid(format!("p = {p} must be positive")));
    }
    let sup_f = f.max_abs();
    let geom = *f.geometry();
    if sup_f == 0.0 {
        return Ok(CotlarReport { constant: 0.0, cells: 0, term_sups: [0.0; 3], maximal_truncation_sup: 0.0 });
    }
    let tstar = maximal_truncation(ops, f)?;
    let tf = ops.last().expect("nonempty").apply(f)?;
    let t1 = hl_maximal(&tf.map(|v| v.abs().powf(delta)), m, cfg)?.map(|v| v.max(0.0).powf(1.0 / delta));
    let ms = strong_maximal(f, cfg)?;
    let t2 = hl_maximal(&ms.map(|v| v.abs().powf(p)), m, cfg)?.map(|v| v.max(0.0).powf(1.0 / p));
    let floor = 1e-12 * sup_f;
    let mut best = 0.0f64;
    let mut cells = 0;
    for i in 0..geom.len() {
        let den = t1.values()[i] + t2.values()[i] + ms.values()[i];
        if den > floor {
            cells += 1;
            best = best.max(tstar.values()[i] / den);
        }
    }
    if cells == 0 {
        return Err(Error::Degenerate("Cotlar denominator negligible everywhere".into()));
    }
    Ok(CotlarReport {
        constant: best,
        cells,
        term_sups: [t1.max_abs(), t2.max_abs(), ms.max_abs()],
        maximal_truncation_sup: tstar.max_abs(),
    })
}

/// Kernel form of [`cotlar_fit`]; the smallest radius stands in for `T f`.
#[allow(clippy::too_many_arguments)]
pub fn cotlar_fit_kernel(
    kernel: &ProductKernel,
    f: &GridField,
    eps: &[f64],
    delta: f64,
    p: f64,
    m: Metric,
    cfg: &MaximalConfig,
    opts: &TruncationOptions,
) -> Result<CotlarReport> {
    let ops = truncation_ladder(kernel, *f.geometry(), eps, m, opts)?;
    cotlar_fit(&as_dyn(&ops), f, delta, p, m, cfg)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WeakTypeRow {
    pub alpha: f64,
    /// `alpha |{|T f| > alpha}| / ||f||_1`.
    pub statistic: f64,
}

/// `sup |T f| 2^{-1/2 - i}` for `i = 0..count`.
pub fn alpha_ladder(tf_sup: f64, count: usize) -> Vec<f64> {
    (0..count).map(|i| tf_sup * 2f64.powf(-0.5 - i as f64)).collect()
}

pub fn weak_type_probe(op: &dyn FieldOperator, f: &GridField, alphas: &[f64]) -> Result<Vec<WeakTypeRow>> {
    let n1 = lp_norm(f, 1.0)?;
    if n1 == 0.0 {
        return Err(Error::Degenerate("||f||_1 = 0".into()));
    }
    let tf = op.apply(f)?;
    alphas
        .iter()
        .map(|&a| {
            Ok(WeakTypeRow { alpha: a, statistic: a * crate::field::weak_distribution(&tf, a)? / n1 })
        })
        .collect()
}

/// `max / min` of the statistic over rows with a nonempty superlevel set.
pub fn weak_type_spread(rows: &[WeakTypeRow]) -> f64 {
    let vals: Vec<f64> = rows.iter().map(|r| r.statistic).filter(|&s| s > 0.0).collect();
    if vals.is_empty() {
        return f64::INFINITY;
    }
    vals.iter().cloned().fold(0.0, f64::max) / vals.iter().cloned().fold(f64::INFINITY, f64::min)
}
