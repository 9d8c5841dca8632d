//! Truncated operators `T_eps f = K_eps * f` with `K_eps = K 1{|y|_m >= eps}`.
//!
//! The default (`n = 2`) realizes `K_eps` through its exact Fourier
//! multiplier `m_eps(xi) = int_{|y|_m >= eps} K(y) e^{-i y.xi} dy`, evaluated
//! by nested graded Gauss quadrature on the compact kernel support, so any
//! `eps > 0` is admissible. The point-sampled kernel (zeroed inside the
//! truncation and on the pole cell) is available for every dimension and
//! requires `eps >= 2h`.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::field::{lp_norm, FrequencyField, Geometry, GridField};
use crate::kernel::{eval_kernel, ProductKernel};
use crate::metric::{Metric, MetricKind};
use crate::operator::{FieldOperator, Multiplier};
use crate::par;
use crate::quadrature::Rule;

/// Parabolic radius of the kernel support when the cutoff is on.
pub const SUPPORT_RADIUS: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TruncationMethod {
    Spectral,
    Sampled,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationOptions {
    /// `None` picks spectral for `n = 2` and sampled otherwise.
    pub method: Option<TruncationMethod>,
    /// Gauss order per panel for the spectral multiplier.
    pub order: usize,
    /// Panel-length multiplier; values below one refine.
    pub panel_scale: f64,
}

impl Default for TruncationOptions {
    fn default() -> Self {
        Self { method: None, order: 16, panel_scale: 1.0 }
    }
}

impl TruncationOptions {
    pub fn resolved_method(&self, dim: usize) -> TruncationMethod {
        self.method.unwrap_or(if dim == 2 { TruncationMethod::Spectral } else { TruncationMethod::Sampled })
    }

    /// Twice the quadrature density.
    pub fn refined(&self) -> Self {
        Self { order: self.order + self.order / 2, panel_scale: self.panel_scale * 0.5, ..*self }
    }
}

fn check(kernel: &ProductKernel, geom: &Geometry, eps: f64, metric: Metric) -> Result<()> {
    if kernel.dim != geom.dim() || metric.dim != geom.dim() {
        return Err(Error::DimensionMismatch { expected: geom.dim(), got: kernel.dim });
    }
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(invalid(format!("truncation radius {eps} must be positive")));
    }
    Ok(())
}

/// Multiplier of `K_eps` on the dual lattice of `geom`.
pub fn truncated_multiplier(
    kernel: &ProductKernel,
    geom: Geometry,
    eps: f64,
    metric: Metric,
    opts: &TruncationOptions,
) -> Result<FrequencyField> {
    check(kernel, &geom, eps, metric)?;
    match opts.resolved_method(geom.dim()) {
        TruncationMethod::Sampled => sampled_multiplier(kernel, geom, eps, metric),
        TruncationMethod::Spectral => spectral_multiplier(kernel, geom, eps, metric, opts),
    }
}

fn sampled_multiplier(kernel: &ProductKernel, geom: Geometry, eps: f64, metric: Metric) -> Result<FrequencyField> {
    let h = geom.spacing();
    if eps < 2.0 * h * (1.0 - 1e-12) {
        return Err(Error::Unresolvable(format!("truncation radius {eps} below two grid cells ({})", 2.0 * h)));
    }
    let kf = GridField::from_fn(geom, |y| {
        if y.iter().all(|&v| v == 0.0) || metric.norm_unchecked(y) < eps {
            0.0
        } else {
            eval_kernel(kernel, y).unwrap_or(0.0)
        }
    });
    Ok(FrequencyField::forward(&kf))
}

fn spectral_multiplier(
    kernel: &ProductKernel,
    geom: Geometry,
    eps: f64,
    metric: Metric,
    opts: &TruncationOptions,
) -> Result<FrequencyField> {
    if geom.dim() != 2 {
        return Err(invalid("the spectral truncation multiplier is implemented for n = 2"));
    }
    if !kernel.cutoff {
        return Err(invalid("the spectral truncation multiplier needs the compact cutoff"));
    }
    let ymax_n = SUPPORT_RADIUS * SUPPORT_RADIUS;
    if geom.half_extent() < ymax_n {
        return Err(invalid(format!(
            "half extent {} cannot hold the kernel support |y_n| <= {ymax_n}",
            geom.half_extent()
        )));
    }
    let n = geom.size();
    let dxi = geom.freq_spacing();
    let max_len = opts.panel_scale * 12.0 / (dxi * (n / 2) as f64);
    let order = opts.order;
    let parabolic = metric.kind == MetricKind::Parabolic;

    // outer rule in y' with breakpoints at 0 and +-eps
    let r = SUPPORT_RADIUS;
    let mut outer = Rule::default();
    if eps < r {
        let right = Rule::graded_capped(eps, r, eps / 32.0, max_len, order);
        let inner = Rule::graded_capped(0.0, eps, eps / 32.0, max_len, order);
        for (x, w) in right.nodes.iter().zip(&right.weights) {
            outer.nodes.push(*x);
            outer.weights.push(*w);
        }
        for (x, w) in inner.nodes.iter().zip(&inner.weights) {
            outer.nodes.push(eps - x);
            outer.weights.push(*w);
        }
    } else {
        outer = Rule::graded_capped(0.0, r, r / 32.0, max_len, order);
    }
    let half: Vec<(f64, f64)> = outer.nodes.iter().copied().zip(outer.weights.iter().copied()).collect();
    let mut ynodes: Vec<(f64, f64)> = half.iter().map(|&(x, w)| (-x, w)).collect();
    ynodes.extend(half);

    // stage 1: G_a(xi_n) = int K(y'_a, y_n) e^{-i y_n xi_n} dy_n
    let stage1: Vec<Vec<Complex64>> = par::map_slice(&ynodes, |&(yp, _)| {
        let mut g = vec![Complex64::new(0.0, 0.0); n];
        let upper = ymax_n - yp * yp;
        let lower = if yp.abs() >= eps {
            0.0
        } else if parabolic {
            eps * eps - yp * yp
        } else {
            (eps * eps - yp * yp).sqrt()
        };
        if lower >= upper {
            return g;
        }
        let first = ((yp * yp + lower) / 16.0).max(1e-14);
        let inner = Rule::graded_capped(lower, upper, first, max_len, order);
        for (&yn, &w) in inner.nodes.iter().zip(&inner.weights) {
            let vp = kernel.cutoff_factor(&[yp, yn]) * kernel.eval_homogeneous(&[yp, yn]);
            let vm = kernel.cutoff_factor(&[yp, -yn]) * kernel.eval_homogeneous(&[yp, -yn]);
            if vp == 0.0 && vm == 0.0 {
                continue;
            }
            let (wp, wm) = (w * vp, w * vm);
            let z = Complex64::from_polar(1.0, -yn * dxi);
            let mut p = Complex64::new(1.0, 0.0);
            for m in 0..=n / 2 {
                let c = p.conj();
                if m < n / 2 {
                    g[m] += wp * p + wm * c;
                }
                if m > 0 {
                    g[n - m] += wp * c + wm * p;
                }
                p *= z;
            }
        }
        g
    });

    // stage 2: m(xi', xi_n) = sum_a w_a e^{-i y'_a xi'} G_a(xi_n)
    let mut values = vec![Complex64::new(0.0, 0.0); n * n];
    par::for_each_chunk_mut(&mut values, n, |row, out| {
        let xi_p = dxi * geom.signed_freq(row) as f64;
        for ((yp, w), g) in ynodes.iter().zip(&stage1) {
            let ph = Complex64::from_polar(*w, -yp * xi_p);
            for (o, gv) in out.iter_mut().zip(g) {
                *o += ph * gv;
            }
        }
    });
    FrequencyField::from_values(geom, values)
}

/// A truncated operator frozen at one `eps`.
#[derive(Clone, Debug)]
pub struct TruncatedOperator {
    pub epsilon: f64,
    pub metric: Metric,
    op: Multiplier,
}

impl TruncatedOperator {
    pub fn new(kernel: &ProductKernel, geom: Geometry, eps: f64, metric: Metric, opts: &TruncationOptions) -> Result<Self> {
        let m = truncated_multiplier(kernel, geom, eps, metric, opts)?;
        Ok(Self { epsilon: eps, metric, op: Multiplier::new(m) })
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { op: self.op.scaled(c), ..self.clone() }
    }
}

impl FieldOperator for TruncatedOperator {
    fn apply(&self, f: &GridField) -> Result<GridField> {
        self.op.apply(f)
    }

    fn multiplier(&self) -> Option<&FrequencyField> {
        Some(self.op.symbol())
    }
}

/// `T_eps f` with default options.
pub fn truncated_apply(kernel: &ProductKernel, f: &GridField, eps: f64, metric: Metric) -> Result<GridField> {
    truncated_apply_with(kernel, f, eps, metric, &TruncationOptions::default())
}

pub fn truncated_apply_with(
    kernel: &ProductKernel,
    f: &GridField,
    eps: f64,
    metric: Metric,
    opts: &TruncationOptions,
) -> Result<GridField> {
    TruncatedOperator::new(kernel, *f.geometry(), eps, metric, opts)?.apply(f)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub l2_ratio: f64,
    /// `||T_eps f - T_eps' f||_2` against the previous (larger) `eps'`.
    pub cauchy_diff: Option<f64>,
}

/// `(eps, ||T_eps f||_2 / ||f||_2, consecutive differences)` over a strictly
/// decreasing list. A zero input yields zero ratios.
pub fn truncation_sweep(
    kernel: &ProductKernel,
    f: &GridField,
    eps_list: &[f64],
    metric: Metric,
    opts: &TruncationOptions,
) -> Result<Vec<SweepRow>> {
    if eps_list.len() < 2 {
        return Err(invalid("a truncation sweep needs at least two radii"));
    }
    if eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(invalid("truncation radii must be strictly decreasing"));
    }
    let nf = lp_norm(f, 2.0)?;
    let mut rows = Vec::with_capacity(eps_list.len());
    let mut prev: Option<GridField> = None;
    for &eps in eps_list {
        let u = truncated_apply_with(kernel, f, eps, metric, opts)?;
        let nu = lp_norm(&u, 2.0)?;
        let cauchy_diff = match &prev {
            Some(p) => Some(lp_norm(&u.sub(p)?, 2.0)?),
            None => None,
        };
        rows.push(SweepRow { epsilon: eps, l2_ratio: if nf == 0.0 { 0.0 } else { nu / nf }, cauchy_diff });
        prev = Some(u);
    }
    Ok(rows)
}

/// Least-squares slope and `R^2` of `l2_ratio` against `log(1/eps)`.
pub fn log_slope(rows: &[SweepRow]) -> (f64, f64) {
    let xs: Vec<f64> = rows.iter().map(|r| (1.0 / r.epsilon).ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.l2_ratio).collect();
    let (a, _, r2) = crate::calderon::linear_fit(&xs, &ys);
    (a, r2)
}

/// `int_{eps <= |y|_h <= outer} |K(y)| dy` in parabolic polar coordinates
/// `y' = rho s theta`, `y_n = sigma rho^2 (1 - s^2)`, `dy = 2 rho^{Q-1}
/// s^{n-2} d rho ds d theta`.
pub fn kernel_mass(kernel: &ProductKernel, eps: f64, outer: f64) -> Result<f64> {
    if !(eps > 0.0 && outer > eps) {
        return Err(invalid("kernel mass needs 0 < eps < outer"));
    }
    let n = kernel.dim;
    let q = (n + 1) as i32;
    let mut rho = Rule::default();
    let mut lo = eps;
    while lo < outer {
        let hi = (2.0 * lo).min(outer);
        rho.push_panel(lo, hi, 16);
        lo = hi;
    }
    let mut s_rule = Rule::default();
    for i in 0..8 {
        s_rule.push_panel(i as f64 / 8.0, (i + 1) as f64 / 8.0, 16);
    }
    let thetas: Vec<([f64; 2], f64)> = if n == 2 {
        vec![([1.0, 0.0], 1.0), ([-1.0, 0.0], 1.0)]
    } else {
        (0..64)
            .map(|i| {
                let a = std::f64::consts::TAU * i as f64 / 64.0;
                ([a.cos(), a.sin()], std::f64::consts::TAU / 64.0)
            })
            .collect()
    };
    let terms = par::map_range(rho.len(), |i| {
        let (r, wr) = (rho.nodes[i], rho.weights[i]);
        let mut acc = 0.0;
        for (&s, &ws) in s_rule.nodes.iter().zip(&s_rule.weights) {
            for (th, wt) in &thetas {
                for sigma in [1.0, -1.0] {
                    let mut y = [0.0; 3];
                    for a in 0..n - 1 {
                        y[a] = r * s * th[a];
                    }
                    y[n - 1] = sigma * r * r * (1.0 - s * s);
                    let v = kernel.eval_homogeneous(&y[..n]).abs();
                    acc += ws * wt * 2.0 * r.powi(q - 1) * s.powi(n as i32 - 2) * v;
                }
            }
        }
        wr * acc
    });
    Ok(terms.into_iter().sum())
}
