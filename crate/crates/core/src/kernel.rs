//! Product kernels `K = E_k H_l`: profiles, homogeneous extension, regime
//! classification, spherical means and cancellation enforcement.

use std::f64::consts::{FRAC_PI_2, PI};
use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bump::unit_cutoff;
use crate::error::{invalid, Error, Result};
use crate::metric::{iso_norm, para_norm};
use crate::quadrature::Rule;

/// A function on a unit sphere (isotropic for `E`, parabolic for `H`),
/// evaluated at points of that sphere.
#[derive(Clone, Debug)]
pub enum Profile {
    Constant(f64),
    /// The last coordinate `x_n`.
    OddXn,
    /// The first coordinate of `x'`.
    FirstHarmonic,
    /// `x_n + c |x'|^2`: odd part plus an even tilt.
    TiltedOdd(f64),
    /// `sum_i a_i cos(b_i . x + phi_i)` with seeded coefficients.
    RandomTrig { seed: u64, terms: Arc<Vec<([f64; 3], f64, f64)>> },
    /// Periodic cubic interpolation in an angle parameter (`n = 2` only).
    Tabulated(Arc<TabulatedProfile>),
}

impl Profile {
    pub fn random_trig(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let terms = (0..4)
            .map(|_| {
                let b = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
                (b, rng.gen_range(-1.0..1.0), rng.gen_range(0.0..std::f64::consts::TAU))
            })
            .collect();
        Profile::RandomTrig { seed, terms: Arc::new(terms) }
    }

    /// Catalog lookup: `constant`, `odd-xn`, `first-harmonic`,
    /// `tilted-odd`, `random-trig` (uses `seed`).
    pub fn from_name(name: &str, seed: u64) -> Result<Self> {
        Ok(match name {
            "constant" => Profile::Constant(1.0),
            "odd-xn" => Profile::OddXn,
            "first-harmonic" => Profile::FirstHarmonic,
            "tilted-odd" => Profile::TiltedOdd(0.5),
            "random-trig" => Profile::random_trig(seed),
            other => return Err(invalid(format!("unknown profile '{other}'"))),
        })
    }

    pub fn name(&self) -> String {
        match self {
            Profile::Constant(c) if *c == 1.0 => "constant".into(),
            Profile::Constant(c) => format!("constant({c})"),
            Profile::OddXn => "odd-xn".into(),
            Profile::FirstHarmonic => "first-harmonic".into(),
            Profile::TiltedOdd(c) => format!("tilted-odd({c})"),
            Profile::RandomTrig { seed, .. } => format!("random-trig({seed})"),
            Profile::Tabulated(_) => "tabulated".into(),
        }
    }

    /// Value at a sphere point; `parabolic` says which sphere `w` lies on
    /// (only tabulated profiles need to know).
    pub fn eval(&self, w: &[f64], parabolic: bool) -> f64 {
        let n = w.len();
        match self {
            Profile::Constant(c) => *c,
            Profile::OddXn => w[n - 1],
            Profile::FirstHarmonic => {
                if n >= 2 {
                    w[0]
                } else {
                    0.0
                }
            }
            Profile::TiltedOdd(c) => w[n - 1] + c * w[..n - 1].iter().map(|v| v * v).sum::<f64>(),
            Profile::RandomTrig { terms, .. } => terms
                .iter()
                .map(|(b, a, ph)| a * (w.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() + ph).cos())
                .sum(),
            Profile::Tabulated(t) => {
                let tau = if parabolic {
                    let s = w[1].signum() * w[1].abs().sqrt();
                    s.atan2(w[0])
                } else {
                    w[1].atan2(w[0])
                };
                t.eval(tau)
            }
        }
    }

    pub fn sup_estimate(&self) -> f64 {
        match self {
            Profile::Constant(c) => c.abs(),
            Profile::OddXn | Profile::FirstHarmonic => 1.0,
            Profile::TiltedOdd(c) => 1.0 + c.abs(),
            Profile::RandomTrig { terms, .. } => terms.iter().map(|t| t.1.abs()).sum(),
            Profile::Tabulated(t) => t.values.iter().fold(0.0f64, |m, v| m.max(v.abs())) * 1.25,
        }
    }
}

/// Samples `(tau_i, v_i)` of a profile in an angle `tau in [-pi, pi)`, read
/// on the isotropic circle as `(cos tau, sin tau)` and on the parabolic
/// circle as `(cos tau, sign(sin tau) sin^2 tau)`. Interpolation is periodic
/// cubic Hermite with centered-difference (Catmull-Rom) slopes.
#[derive(Clone, Debug)]
pub struct TabulatedProfile {
    angles: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl TabulatedProfile {
    pub fn new(mut samples: Vec<(f64, f64)>) -> Result<Self> {
        if samples.len() < 4 {
            return Err(invalid("a tabulated profile needs at least 4 samples"));
        }
        for s in samples.iter_mut() {
            s.0 = (s.0 + PI).rem_euclid(2.0 * PI) - PI;
        }
        samples.sort_by(|a, b| a.0.total_cmp(&b.0));
        if samples.windows(2).any(|w| w[1].0 - w[0].0 <= 1e-12) {
            return Err(invalid("tabulated profile angles must be distinct modulo 2 pi"));
        }
        let angles: Vec<f64> = samples.iter().map(|s| s.0).collect();
        let values: Vec<f64> = samples.iter().map(|s| s.1).collect();
        let m = angles.len();
        let slopes = (0..m)
            .map(|i| {
                let (ip, im) = ((i + 1) % m, (i + m - 1) % m);
                let mut dt = angles[ip] - angles[im];
                if dt <= 0.0 {
                    dt += 2.0 * PI;
                }
                (values[ip] - values[im]) / dt
            })
            .collect();
        Ok(Self { angles, values, slopes })
    }

    /// Parse `angle,value` lines; a non-numeric first line is a header and
    /// blank lines or `#` comments are skipped.
    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut samples = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split(',').map(str::trim);
            let (a, v) = (parts.next(), parts.next());
            let parsed = match (a, v) {
                (Some(a), Some(v)) => a.parse::<f64>().ok().zip(v.parse::<f64>().ok()),
                _ => None,
            };
            match parsed {
                Some(p) => samples.push(p),
                None if samples.is_empty() && lineno == 0 => continue,
                None => return Err(invalid(format!("profile CSV line {}: expected 'angle,value'", lineno + 1))),
            }
        }
        Self::new(samples)
    }

    pub fn from_csv_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid(format!("cannot read profile {}: {e}", path.display())))?;
        Self::parse_csv(&text)
    }

    pub fn eval(&self, tau: f64) -> f64 {
        let m = self.angles.len();
        let t = (tau + PI).rem_euclid(2.0 * PI) - PI;
        let i = match self.angles.partition_point(|&a| a <= t) {
            0 => m - 1,
            p => p - 1,
        };
        let ip = (i + 1) % m;
        let mut dt = self.angles[ip] - self.angles[i];
        let mut x = t - self.angles[i];
        if dt <= 0.0 {
            dt += 2.0 * PI;
        }
        if x < 0.0 {
            x += 2.0 * PI;
        }
        let s = x / dt;
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.values[i] + h10 * dt * self.slopes[i] + h01 * self.values[ip] + h11 * dt * self.slopes[ip]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// `k + l = n + 1`, `l > 2`: parabolic singularity dominates.
    CaseH,
    /// `k + l/2 = n`, `l < 2`: isotropic singularity dominates.
    CaseE,
    /// Locally integrable.
    Subcritical,
    Invalid,
}

const DEGREE_TOL: f64 = 1e-12;

/// `true` iff `k + l < n + 1` and `k + l/2 < n`.
pub fn integrable_locally(k: f64, l: f64, n: usize) -> bool {
    let n = n as f64;
    k + l < n + 1.0 && k + 0.5 * l < n
}

pub fn classify(k: f64, l: f64, n: usize) -> Regime {
    let nf = n as f64;
    if (k + l - (nf + 1.0)).abs() <= DEGREE_TOL && l > 2.0 {
        Regime::CaseH
    } else if (k + 0.5 * l - nf).abs() <= DEGREE_TOL && l < 2.0 {
        Regime::CaseE
    } else if integrable_locally(k, l, n) {
        Regime::Subcritical
    } else {
        Regime::Invalid
    }
}

/// Surface measure on the parabolic unit sphere.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SphereMeasure {
    /// The measure `sigma` with `dy = rho^{Q-1} d rho d sigma` in parabolic
    /// polar coordinates.
    #[default]
    Invariant,
    /// Euclidean surface measure of the graph `x_n = +-(1 - |x'|^2)`.
    Euclidean,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sphere {
    ParabolicUnit,
    IsotropicUnit,
}

#[derive(Clone, Debug)]
pub struct ProductKernel {
    pub dim: usize,
    pub k: f64,
    pub l: f64,
    pub profile_e: Profile,
    pub profile_h: Profile,
    pub cutoff: bool,
    /// Multiple of the reference kernel `|x|_e^{-k} |x|_h^{-l}` subtracted
    /// by [`enforce_cancellation`].
    pub cancellation_shift: f64,
    pub measure: SphereMeasure,
}

#[inline]
fn split_norms(x: &[f64]) -> (f64, f64) {
    (iso_norm(x), para_norm(x))
}

impl ProductKernel {
    pub fn new(dim: usize, k: f64, l: f64, profile_e: Profile, profile_h: Profile) -> Result<Self> {
        if !(2..=3).contains(&dim) {
            return Err(invalid(format!("kernel dimension {dim} outside 2..=3")));
        }
        if !(k >= 0.0 && l >= 0.0) {
            return Err(invalid("kernel degrees must be nonnegative"));
        }
        if dim != 2 && (matches!(profile_e, Profile::Tabulated(_)) || matches!(profile_h, Profile::Tabulated(_))) {
            return Err(invalid("tabulated profiles are only defined for n = 2"));
        }
        Ok(Self {
            dim,
            k,
            l,
            profile_e,
            profile_h,
            cutoff: true,
            cancellation_shift: 0.0,
            measure: SphereMeasure::Invariant,
        })
    }

    pub fn regime(&self) -> Regime {
        classify(self.k, self.l, self.dim)
    }

    pub fn with_cutoff(mut self, on: bool) -> Self {
        self.cutoff = on;
        self
    }

    pub fn with_measure(mut self, m: SphereMeasure) -> Self {
        self.measure = m;
        self
    }

    /// The same degrees with both profiles identically one.
    pub fn reference(&self) -> Self {
        Self {
            profile_e: Profile::Constant(1.0),
            profile_h: Profile::Constant(1.0),
            cancellation_shift: 0.0,
            ..self.clone()
        }
    }

    /// `E(x) = |x|_e^{-k} P_E(x / |x|_e)`.
    pub fn eval_e(&self, x: &[f64]) -> f64 {
        let r = iso_norm(x);
        let mut w = [0.0; 3];
        for (a, v) in x.iter().enumerate() {
            w[a] = v / r;
        }
        r.powf(-self.k) * self.profile_e.eval(&w[..x.len()], false)
    }

    /// `H(x) = |x|_h^{-l} P_H(delta_h^{1/|x|_h} x)`.
    pub fn eval_h(&self, x: &[f64]) -> f64 {
        let r = para_norm(x);
        let n = x.len();
        let mut w = [0.0; 3];
        for a in 0..n - 1 {
            w[a] = x[a] / r;
        }
        w[n - 1] = x[n - 1] / (r * r);
        r.powf(-self.l) * self.profile_h.eval(&w[..n], true)
    }

    /// `E(x) H(x) - c |x|_e^{-k} |x|_h^{-l}` without the cutoff.
    pub fn eval_homogeneous(&self, x: &[f64]) -> f64 {
        let (re, rh) = split_norms(x);
        let mut v = self.eval_e(x) * self.eval_h(x);
        if self.cancellation_shift != 0.0 {
            v -= self.cancellation_shift * re.powf(-self.k) * rh.powf(-self.l);
        }
        v
    }

    pub fn cutoff_factor(&self, x: &[f64]) -> f64 {
        if self.cutoff {
            unit_cutoff(para_norm(x))
        } else {
            1.0
        }
    }

    /// Boundary kernel of the regime: `K_h(x) = E(x', 0) H(x)` (CaseH) or
    /// `K_e(x) = E(x) H(0, x_n)` (CaseE), shift applied, no cutoff.
    pub fn eval_boundary(&self, x: &[f64]) -> Result<f64> {
        let n = x.len();
        let mut y = [0.0; 3];
        y[..n].copy_from_slice(x);
        match self.regime() {
            Regime::CaseH => {
                y[n - 1] = 0.0;
                let e = self.eval_e(&y[..n]);
                let ref_e = iso_norm(&y[..n]).powf(-self.k);
                Ok(e * self.eval_h(x) - self.cancellation_shift * ref_e * para_norm(x).powf(-self.l))
            }
            Regime::CaseE => {
                for v in y[..n - 1].iter_mut() {
                    *v = 0.0;
                }
                let h = self.eval_h(&y[..n]);
                let ref_h = para_norm(&y[..n]).powf(-self.l);
                Ok(self.eval_e(x) * h - self.cancellation_shift * iso_norm(x).powf(-self.k) * ref_h)
            }
            r => Err(Error::Precondition(format!("no boundary kernel in regime {r:?}"))),
        }
    }

    pub fn eval_boundary_cut(&self, x: &[f64]) -> Result<f64> {
        Ok(self.cutoff_factor(x) * self.eval_boundary(x)?)
    }
}

/// `phi(x) (E(x) H(x) - c R(x))`; the origin is a pole.
pub fn eval_kernel(kernel: &ProductKernel, x: &[f64]) -> Result<f64> {
    if x.len() != kernel.dim {
        return Err(Error::DimensionMismatch { expected: kernel.dim, got: x.len() });
    }
    if x.iter().all(|&v| v == 0.0) {
        return Err(Error::Precondition("kernel evaluated at its pole".into()));
    }
    let phi = kernel.cutoff_factor(x);
    if phi == 0.0 {
        return Ok(0.0);
    }
    Ok(phi * kernel.eval_homogeneous(x))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CancellationReport {
    pub mean: f64,
    pub error_estimate: f64,
    pub sphere: Sphere,
    pub measure: SphereMeasure,
}

/// Default Gauss order per panel for spherical quadrature.
pub const SPHERE_ORDER: usize = 32;

fn sphere_rule(order: usize) -> Rule {
    // panels graded toward t = 0, where the substituted integrand is least smooth
    Rule::graded_from_left(0.0, 1.0, 2f64.powi(-24), |_| order)
}

fn circle_nodes(dim: usize, order: usize) -> Vec<([f64; 2], f64)> {
    match dim {
        2 => vec![([1.0, 0.0], 1.0), ([-1.0, 0.0], 1.0)],
        _ => {
            let m = 2 * order;
            (0..m)
                .map(|i| {
                    let a = 2.0 * PI * i as f64 / m as f64;
                    ([a.cos(), a.sin()], 2.0 * PI / m as f64)
                })
                .collect()
        }
    }
}

/// Integral of the regime's boundary function against `measure` on its
/// unit sphere, with Gauss order `order` per panel.
fn sphere_integral(kernel: &ProductKernel, measure: SphereMeasure, order: usize) -> Result<f64> {
    let n = kernel.dim;
    let rule = sphere_rule(order);
    let circle = circle_nodes(n, order);
    match kernel.regime() {
        Regime::CaseH => {
            // x' = s theta, x_n = sigma (1 - s^2), s = t^a removes s^{n-2-k}
            let a = 1.0 / (n as f64 - 1.0 - kernel.k);
            let mut total = 0.0;
            for (&t, &wt) in rule.nodes.iter().zip(&rule.weights) {
                let s = t.powf(a);
                let dens = match measure {
                    SphereMeasure::Invariant => 2.0 * a,
                    SphereMeasure::Euclidean => a * (1.0 + 4.0 * s * s).sqrt(),
                };
                for (theta, wth) in &circle {
                    for sigma in [1.0, -1.0] {
                        let mut x = [0.0; 3];
                        let mut xe = [0.0; 3];
                        for i in 0..n - 1 {
                            x[i] = s * theta[i];
                            xe[i] = theta[i];
                        }
                        x[n - 1] = sigma * (1.0 - s * s);
                        let pe = kernel.profile_e.eval(&xe[..n], false);
                        let ph = kernel.profile_h.eval(&x[..n], true);
                        total += wt * wth * dens * (pe * ph - kernel.cancellation_shift);
                    }
                }
            }
            Ok(total)
        }
        Regime::CaseE => {
            // omega_n = sigma sin(beta), beta = (pi/2) t^b removes |sin beta|^{-l/2}
            let b = 1.0 / (1.0 - 0.5 * kernel.l);
            let mut total = 0.0;
            for (&t, &wt) in rule.nodes.iter().zip(&rule.weights) {
                let beta = FRAC_PI_2 * t.powf(b);
                let sinc = if beta == 0.0 { 1.0 } else { beta.sin() / beta };
                let dens = sinc.powf(-0.5 * kernel.l) * FRAC_PI_2.powf(1.0 - 0.5 * kernel.l) * b
                    * beta.cos().powi(n as i32 - 2);
                for (theta, wth) in &circle {
                    for sigma in [1.0, -1.0] {
                        let mut w = [0.0; 3];
                        for i in 0..n - 1 {
                            w[i] = beta.cos() * theta[i];
                        }
                        w[n - 1] = sigma * beta.sin();
                        let mut pole = [0.0; 3];
                        pole[n - 1] = sigma;
                        let pe = kernel.profile_e.eval(&w[..n], false);
                        let ph = kernel.profile_h.eval(&pole[..n], true);
                        total += wt * wth * dens * (pe * ph - kernel.cancellation_shift);
                    }
                }
            }
            Ok(total)
        }
        r => Err(Error::Precondition(format!("spherical mean undefined in regime {r:?}"))),
    }
}

/// Spherical mean of the boundary kernel under the kernel's own measure.
pub fn spherical_mean(kernel: &ProductKernel) -> Result<CancellationReport> {
    spherical_mean_with(kernel, kernel.measure, SPHERE_ORDER)
}

/// Spherical mean with an explicit measure and Gauss order; the error
/// estimate is the change under doubling the order.
pub fn spherical_mean_with(kernel: &ProductKernel, measure: SphereMeasure, order: usize) -> Result<CancellationReport> {
    let coarse = sphere_integral(kernel, measure, order)?;
    let fine = sphere_integral(kernel, measure, 2 * order)?;
    let sphere = match kernel.regime() {
        Regime::CaseH => Sphere::ParabolicUnit,
        _ => Sphere::IsotropicUnit,
    };
    Ok(CancellationReport { mean: fine, error_estimate: (fine - coarse).abs(), sphere, measure })
}

/// Subtract the multiple of the reference kernel that zeroes the spherical
/// mean under the kernel's measure.
pub fn enforce_cancellation(kernel: &ProductKernel) -> Result<ProductKernel> {
    let m = spherical_mean(kernel)?.mean;
    let m_ref = spherical_mean(&kernel.reference())?.mean;
    if m_ref == 0.0 {
        return Err(Error::Degenerate("reference kernel has zero spherical mean".into()));
    }
    let mut out = kernel.clone();
    out.cancellation_shift += m / m_ref;
    Ok(out)
}

/// Named kernels used across experiments.
///
/// * `caseh-cancellative`: `n = 2`, `k = 1/4`, `l = 11/4`, `P_E = 1`,
///   `P_H = x_n + |x'|^2 / 2`, cancellation enforced.
/// * `caseh-positive`: same degrees with both profiles one.
/// * `caseh-odd`: same degrees, `P_H = x_n`.
/// * `casee-odd`: `n = 2`, `k = 3/2`, `l = 1`, `P_E = 1`, `P_H = x_n`.
pub fn catalog_kernel(name: &str) -> Result<ProductKernel> {
    let (k, l) = (0.25, 2.75);
    match name {
        "caseh-cancellative" => enforce_cancellation(&ProductKernel::new(
            2,
            k,
            l,
            Profile::Constant(1.0),
            Profile::TiltedOdd(0.5),
        )?),
        "caseh-positive" => ProductKernel::new(2, k, l, Profile::Constant(1.0), Profile::Constant(1.0)),
        "caseh-odd" => ProductKernel::new(2, k, l, Profile::Constant(1.0), Profile::OddXn),
        "casee-odd" => ProductKernel::new(2, 1.5, 1.0, Profile::Constant(1.0), Profile::OddXn),
        other => Err(invalid(format!("unknown catalog kernel '{other}'"))),
    }
}

pub const CATALOG_KERNELS: &[&str] = &["caseh-cancellative", "caseh-positive", "caseh-odd", "casee-odd"];
