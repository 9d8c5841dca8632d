//! Periodic sampled fields, the continuum-normalized transform, and the
//! convolution/norm engine built on it.
//!
//! A grid covers `[-L, L)^n` with `N` samples per axis; axis `n - 1` is `x_n`
//! and is the fastest-varying index. The transform stores samples of the
//! continuum Fourier transform `f^(xi) = int f(x) e^{-i x.xi} dx` on the dual
//! lattice `xi = (pi / L) k`, `k in {-N/2, .., N/2 - 1}`, in FFT order.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{invalid, Error, Result};
use crate::par;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Geometry {
    dim: usize,
    size: usize,
    half_extent: f64,
}

impl Geometry {
    pub fn new(dim: usize, size: usize, half_extent: f64) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(invalid(format!("dimension {dim} outside 1..=3")));
        }
        if size < 4 || !size.is_power_of_two() {
            return Err(invalid(format!("samples per axis {size} must be a power of two >= 4")));
        }
        if !(half_extent > 0.0) || !half_extent.is_finite() {
            return Err(invalid(format!("half extent {half_extent} must be positive")));
        }
        Ok(Self { dim, size, half_extent })
    }

    /// The desk-scale grid: `n = 2`, `N = 256`, `L = 8`.
    pub fn desk() -> Self {
        Self::new(2, 256, 8.0).expect("valid desk geometry")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn half_extent(&self) -> f64 {
        self.half_extent
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_extent / self.size as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    pub fn len(&self) -> usize {
        self.size.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Spacing of the dual lattice, `pi / L`.
    pub fn freq_spacing(&self) -> f64 {
        PI / self.half_extent
    }

    /// Largest non-Nyquist frequency magnitude along one axis.
    pub fn freq_max(&self) -> f64 {
        self.freq_spacing() * (self.size / 2 - 1) as f64
    }

    pub fn coord(&self, m: usize) -> f64 {
        -self.half_extent + m as f64 * self.spacing()
    }

    /// Index along an axis of the sample at coordinate 0.
    pub fn origin_index(&self) -> usize {
        self.size / 2
    }

    /// Signed frequency index for FFT position `k`.
    pub fn signed_freq(&self, k: usize) -> i64 {
        if k < self.size / 2 {
            k as i64
        } else {
            k as i64 - self.size as i64
        }
    }

    pub fn is_nyquist(&self, k: usize) -> bool {
        k == self.size / 2
    }

    pub fn unravel(&self, mut idx: usize) -> [usize; 3] {
        let mut out = [0usize; 3];
        for axis in (0..self.dim).rev() {
            out[axis] = idx % self.size;
            idx /= self.size;
        }
        out
    }

    pub fn ravel(&self, m: &[usize]) -> usize {
        m[..self.dim].iter().fold(0, |acc, &v| acc * self.size + v)
    }

    /// Coordinates of sample `idx`; entries past `dim` are zero.
    pub fn point(&self, idx: usize) -> [f64; 3] {
        let m = self.unravel(idx);
        let mut x = [0.0; 3];
        for axis in 0..self.dim {
            x[axis] = self.coord(m[axis]);
        }
        x
    }

    /// Dual-lattice frequency at FFT position `idx`.
    pub fn frequency(&self, idx: usize) -> [f64; 3] {
        let m = self.unravel(idx);
        let mut xi = [0.0; 3];
        for axis in 0..self.dim {
            xi[axis] = self.freq_spacing() * self.signed_freq(m[axis]) as f64;
        }
        xi
    }

    /// True if any axis of FFT position `idx` sits on the Nyquist index.
    pub fn touches_nyquist(&self, idx: usize) -> bool {
        let m = self.unravel(idx);
        (0..self.dim).any(|a| self.is_nyquist(m[a]))
    }

    /// Minimal-image displacement (in cells) along an axis between grid
    /// indices, in `[-N/2, N/2)`.
    pub fn wrap_offset(&self, d: i64) -> i64 {
        let n = self.size as i64;
        let r = d.rem_euclid(n);
        if r >= n / 2 {
            r - n
        } else {
            r
        }
    }

    pub fn ensure_same(&self, other: &Geometry) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GeometryMismatch)
        }
    }
}

/// A real field sampled on a periodic grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    geom: Geometry,
    values: Vec<f64>,
}

impl GridField {
    pub fn zeros(geom: Geometry) -> Self {
        Self { geom, values: vec![0.0; geom.len()] }
    }

    pub fn constant(geom: Geometry, c: f64) -> Self {
        Self { geom, values: vec![c; geom.len()] }
    }

    pub fn from_values(geom: Geometry, values: Vec<f64>) -> Result<Self> {
        if values.len() != geom.len() {
            return Err(Error::DimensionMismatch { expected: geom.len(), got: values.len() });
        }
        Ok(Self { geom, values })
    }

    /// Sample `f` at every grid point; `f` receives the `dim` coordinates.
    pub fn from_fn<F>(geom: Geometry, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Sync + Send,
    {
        let dim = geom.dim();
        let mut values = vec![0.0; geom.len()];
        par::fill_indexed(&mut values, |i| f(&geom.point(i)[..dim]));
        Self { geom, values }
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geom
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { geom: self.geom, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn abs(&self) -> Self {
        self.map(f64::abs)
    }

    pub fn scaled(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &GridField, b: f64) -> Result<Self> {
        self.geom.ensure_same(&other.geom)?;
        let values = self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect();
        Ok(Self { geom: self.geom, values })
    }

    pub fn sub(&self, other: &GridField) -> Result<Self> {
        self.combine(1.0, other, -1.0)
    }

    pub fn add(&self, other: &GridField) -> Result<Self> {
        self.combine(1.0, other, 1.0)
    }

    /// Pointwise binary operation on two fields of the same geometry.
    pub fn zip_with(&self, other: &GridField, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.geom.ensure_same(&other.geom)?;
        let values = self.values.iter().zip(&other.values).map(|(&x, &y)| f(x, y)).collect();
        Ok(Self { geom: self.geom, values })
    }

    /// Riemann-sum integral `h^n * sum f`.
    pub fn integral(&self) -> f64 {
        self.geom.cell_volume() * self.values.iter().sum::<f64>()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Subtract the grid mean.
    pub fn mean_zero(&self) -> Self {
        let m = self.mean();
        self.map(|v| v - m)
    }

    /// `g(x) = f(x - u)` for a grid offset `u` given in cells (periodic).
    pub fn shifted(&self, cells: &[i64]) -> Self {
        let g = self.geom;
        let n = g.size() as i64;
        let dim = g.dim();
        let mut out = vec![0.0; g.len()];
        par::fill_indexed(&mut out, |i| {
            let m = g.unravel(i);
            let mut src = [0usize; 3];
            for a in 0..dim {
                src[a] = (m[a] as i64 - cells[a]).rem_euclid(n) as usize;
            }
            self.values[g.ravel(&src)]
        });
        Self { geom: g, values: out }
    }

    pub fn value_at(&self, m: &[usize]) -> f64 {
        self.values[self.geom.ravel(m)]
    }
}

/// Samples of the continuum transform on the dual lattice, FFT order.
#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyField {
    geom: Geometry,
    values: Vec<Complex64>,
}

impl FrequencyField {
    pub fn zeros(geom: Geometry) -> Self {
        Self { geom, values: vec![Complex64::new(0.0, 0.0); geom.len()] }
    }

    /// Tabulate a multiplier `m(xi)` on the dual lattice.
    pub fn from_fn<F>(geom: Geometry, f: F) -> Self
    where
        F: Fn(&[f64]) -> Complex64 + Sync + Send,
    {
        let dim = geom.dim();
        let mut values = vec![Complex64::new(0.0, 0.0); geom.len()];
        par::fill_indexed(&mut values, |i| f(&geom.frequency(i)[..dim]));
        Self { geom, values }
    }

    pub fn from_real_fn<F>(geom: Geometry, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Sync + Send,
    {
        Self::from_fn(geom, |xi| Complex64::new(f(xi), 0.0))
    }

    pub fn from_values(geom: Geometry, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != geom.len() {
            return Err(Error::DimensionMismatch { expected: geom.len(), got: values.len() });
        }
        Ok(Self { geom, values })
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geom
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn forward(f: &GridField) -> Self {
        let g = *f.geometry();
        let mut data: Vec<Complex64> = f.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft_nd(&mut data, g.dim(), g.size(), false);
        let w = g.cell_volume();
        par::fill_indexed_from(&mut data, |i, v| v * (w * phase_sign(&g, i)));
        Self { geom: g, values: data }
    }

    /// Inverse transform, complex-valued.
    pub fn inverse_complex(&self) -> Vec<Complex64> {
        let g = self.geom;
        let w = 1.0 / (2.0 * g.half_extent()).powi(g.dim() as i32);
        let mut data = self.values.clone();
        par::fill_indexed_from(&mut data, |i, v| v * (w * phase_sign(&g, i)));
        fft_nd(&mut data, g.dim(), g.size(), true);
        data
    }

    /// Inverse transform, keeping the real part.
    pub fn inverse(&self) -> GridField {
        let values = self.inverse_complex().into_iter().map(|c| c.re).collect();
        GridField { geom: self.geom, values }
    }

    /// Pointwise product.
    pub fn mul(&self, other: &FrequencyField) -> Result<Self> {
        self.geom.ensure_same(&other.geom)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect();
        Ok(Self { geom: self.geom, values })
    }

    pub fn scale_real(&self, m: &[f64]) -> Self {
        let values = self.values.iter().zip(m).map(|(a, &b)| a * b).collect();
        Self { geom: self.geom, values }
    }

    /// Dual-lattice energy `(2L)^{-n} sum |f^|^2`, equal to `||f||_2^2`.
    pub fn energy(&self) -> f64 {
        let w = 1.0 / (2.0 * self.geom.half_extent()).powi(self.geom.dim() as i32);
        w * self.values.iter().map(|c| c.norm_sqr()).sum::<f64>()
    }
}

fn phase_sign(g: &Geometry, idx: usize) -> f64 {
    let m = g.unravel(idx);
    let parity: usize = m[..g.dim()].iter().sum();
    if parity.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

type PlanPair = (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>);

fn plans(n: usize) -> PlanPair {
    static CACHE: OnceLock<Mutex<HashMap<usize, PlanPair>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("fft plan cache poisoned");
    guard
        .entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            (planner.plan_fft_forward(n), planner.plan_fft_inverse(n))
        })
        .clone()
}

/// Unnormalized n-dimensional FFT over a row-major cube of side `n`.
pub(crate) fn fft_nd(data: &mut [Complex64], dim: usize, n: usize, inverse: bool) {
    let (fwd, inv) = plans(n);
    let plan = if inverse { inv } else { fwd };
    let len = data.len();
    let lines = len / n;
    let lines_per_task = (lines / 64).max(1);
    for axis in 0..dim {
        let stride = n.pow((dim - 1 - axis) as u32);
        if stride == 1 {
            par::for_each_chunk_mut(data, n * lines_per_task, |_, chunk| plan.process(chunk));
            continue;
        }
        let mut scratch = vec![Complex64::new(0.0, 0.0); len];
        {
            let src = &*data;
            par::for_each_chunk_mut(&mut scratch, n * lines_per_task, |task, chunk| {
                for (j, line) in chunk.chunks_mut(n).enumerate() {
                    let l = task * lines_per_task + j;
                    let base = (l / stride) * n * stride + l % stride;
                    for (t, v) in line.iter_mut().enumerate() {
                        *v = src[base + t * stride];
                    }
                }
                plan.process(chunk);
            });
        }
        let sc = &scratch;
        par::for_each_chunk_mut(data, n * stride, |outer, block| {
            for inner in 0..stride {
                let line = &sc[(outer * stride + inner) * n..][..n];
                for (t, v) in line.iter().enumerate() {
                    block[inner + t * stride] = *v;
                }
            }
        });
    }
}

/// Periodic convolution `(f * g)(x) = h^n sum_y f(y) g(x - y)`, computed
/// spectrally; approximates the continuum integral.
pub fn convolve(f: &GridField, g: &GridField) -> Result<GridField> {
    f.geometry().ensure_same(g.geometry())?;
    let ff = FrequencyField::forward(f);
    let gg = FrequencyField::forward(g);
    Ok(ff.mul(&gg)?.inverse())
}

/// Apply a frequency multiplier to a field.
pub fn apply_multiplier(f: &GridField, m: &FrequencyField) -> Result<GridField> {
    f.geometry().ensure_same(m.geometry())?;
    Ok(FrequencyField::forward(f).mul(m)?.inverse())
}

/// `(h^n sum |f|^p)^{1/p}`; a quasi-norm for `p < 1`.
pub fn lp_norm(f: &GridField, p: f64) -> Result<f64> {
    if !(p > 0.0) || !p.is_finite() {
        return Err(invalid(format!("exponent p = {p} must be positive and finite")));
    }
    let w = f.geometry().cell_volume();
    let s: f64 = if p == 2.0 {
        f.values().iter().map(|v| v * v).sum()
    } else if p == 1.0 {
        f.values().iter().map(|v| v.abs()).sum()
    } else {
        f.values().iter().map(|v| v.abs().powf(p)).sum()
    };
    Ok((w * s).powf(1.0 / p))
}

/// Measure of the superlevel set `{|f| > alpha}`.
pub fn weak_distribution(f: &GridField, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(invalid(format!("level alpha = {alpha} must be positive")));
    }
    let count = f.values().iter().filter(|v| v.abs() > alpha).count();
    Ok(count as f64 * f.geometry().cell_volume())
}

/// Discrete delta of unit mass at the origin (value `1 / h^n` on one cell).
pub fn discrete_delta(geom: Geometry) -> GridField {
    let mut f = GridField::zeros(geom);
    let o = geom.origin_index();
    let idx = geom.ravel(&[o, o, o]);
    f.values_mut()[idx] = 1.0 / geom.cell_volume();
    f
}
