//! Littlewood-Paley generators for both metrics and the square functions
//! and Hardy-type norms built from them.
//!
//! A generator is stored as a radial profile of the metric norm of the
//! frequency; the dilate `psi_j` is the multiplier `xi -> psi^(2^{-j} |xi|_m)`,
//! which carries the `2^{jQ}` spatial normalization implicitly. Entries on
//! a Nyquist row are always zero so every spatial field stays real.

use serde::{Deserialize, Serialize};

use crate::bump::partition_profile;
use crate::error::{invalid, Error, Result};
use crate::field::{lp_norm, FrequencyField, Geometry, GridField};
use crate::metric::{Metric, MetricKind};
use crate::par;

/// Shape of the radial frequency window.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WindowKind {
    /// Compactly supported in `[1/2, 2]`; squared dilates sum to one.
    #[default]
    Bump,
    /// `t^2 exp(-t^2)`: Schwartz, not band limited, no exact partition.
    GaussianDerivative,
}

impl WindowKind {
    pub fn profile(self, t: f64) -> f64 {
        match self {
            WindowKind::Bump => partition_profile(t),
            WindowKind::GaussianDerivative => {
                let s = t * t;
                s * (-s).exp() * std::f64::consts::E
            }
        }
    }
}

/// Inclusive dyadic scale range.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScaleRange {
    pub min: i32,
    pub max: i32,
}

impl ScaleRange {
    pub fn new(min: i32, max: i32) -> Result<Self> {
        if min > max {
            return Err(invalid(format!("empty scale range [{min}, {max}]")));
        }
        Ok(Self { min, max })
    }

    pub fn iter(&self) -> impl Iterator<Item = i32> {
        self.min..=self.max
    }

    pub fn len(&self) -> usize {
        (self.max - self.min + 1).max(0) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.max < self.min
    }

    pub fn contains(&self, j: i32) -> bool {
        (self.min..=self.max).contains(&j)
    }

    /// Frequency norms `t` covered exactly by the partition over this range.
    pub fn band(&self) -> (f64, f64) {
        (2f64.powi(self.min), 2f64.powi(self.max))
    }
}

/// Which value the lattice exponents `j ^ k` and `j ^ 2k` take.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LatticeRule {
    #[default]
    Max,
    Min,
}

impl LatticeRule {
    pub fn meet(self, a: i32, b: i32) -> i32 {
        match self {
            LatticeRule::Max => a.max(b),
            LatticeRule::Min => a.min(b),
        }
    }

    /// Lattice spacings `(a, b)` for the `x'` axes and the `x_n` axis at the
    /// scale pair `(j, k)`, before clamping to the grid.
    pub fn spacings(self, j: i32, k: i32) -> (f64, f64) {
        (2f64.powi(-self.meet(j, k)), 2f64.powi(-self.meet(j, 2 * k)))
    }
}

#[derive(Clone, Debug)]
pub struct LPGenerator {
    metric: Metric,
    geom: Geometry,
    kind: WindowKind,
    norms: Vec<f64>,
    nyquist: Vec<bool>,
    resolvable: ScaleRange,
}

/// Build a generator for `metric` on `geom` with the standard bump window.
pub fn build_generator(metric: Metric, geom: Geometry) -> Result<LPGenerator> {
    build_generator_with(metric, geom, WindowKind::Bump)
}

pub fn build_generator_with(metric: Metric, geom: Geometry, kind: WindowKind) -> Result<LPGenerator> {
    if metric.dim != geom.dim() {
        return Err(Error::DimensionMismatch { expected: geom.dim(), got: metric.dim });
    }
    let dim = geom.dim();
    let norms = par::map_range(geom.len(), |i| metric.norm_unchecked(&geom.frequency(i)[..dim]));
    let nyquist: Vec<bool> = (0..geom.len()).map(|i| geom.touches_nyquist(i)).collect();
    let attained = norms
        .iter()
        .zip(&nyquist)
        .filter(|(&t, &nq)| t > 0.0 && !nq)
        .map(|(&t, _)| t);
    let (lo, hi) = attained.fold((f64::INFINITY, 0.0f64), |(lo, hi), t| (lo.min(t), hi.max(t)));
    // j resolvable iff the open annulus (2^{j-1}, 2^{j+1}) meets [lo, hi]
    let jmin = (lo.log2() - 1.0).floor() as i32 + 1;
    let jmax = (hi.log2() + 1.0).ceil() as i32 - 1;
    if jmax - jmin + 1 < 3 {
        return Err(Error::Unresolvable(format!(
            "grid resolves only {} dyadic annuli, need at least 3",
            (jmax - jmin + 1).max(0)
        )));
    }
    Ok(LPGenerator {
        metric,
        geom,
        kind,
        norms,
        nyquist,
        resolvable: ScaleRange { min: jmin, max: jmax },
    })
}

impl LPGenerator {
    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geom
    }

    pub fn kind(&self) -> WindowKind {
        self.kind
    }

    /// Metric norm of every dual-lattice frequency, in FFT order.
    pub fn frequency_norms(&self) -> &[f64] {
        &self.norms
    }

    pub fn resolvable_range(&self) -> ScaleRange {
        self.resolvable
    }

    pub fn check_range(&self, r: &ScaleRange) -> Result<()> {
        if r.is_empty() {
            return Err(invalid("empty scale range"));
        }
        if r.min < self.resolvable.min || r.max > self.resolvable.max {
            return Err(Error::Unresolvable(format!(
                "scale range [{}, {}] outside resolvable [{}, {}]",
                r.min, r.max, self.resolvable.min, self.resolvable.max
            )));
        }
        Ok(())
    }

    /// The base window `psi^` on the dual lattice.
    pub fn window(&self) -> FrequencyField {
        self.dilated_window(0).expect("scale 0 is always resolvable")
    }

    /// Real multiplier of `psi_j`, unchecked.
    pub(crate) fn multiplier_raw(&self, j: i32) -> Vec<f64> {
        let s = 2f64.powi(-j);
        let kind = self.kind;
        par::map_range(self.norms.len(), |i| {
            if self.nyquist[i] {
                0.0
            } else {
                kind.profile(s * self.norms[i])
            }
        })
    }

    /// Real multiplier of `psi_j` on the dual lattice.
    pub fn multiplier(&self, j: i32) -> Result<Vec<f64>> {
        self.check_range(&ScaleRange { min: j, max: j })?;
        Ok(self.multiplier_raw(j))
    }

    pub fn dilated_window(&self, j: i32) -> Result<FrequencyField> {
        let m = self.multiplier(j)?;
        let values = m.into_iter().map(|v| v.into()).collect();
        FrequencyField::from_values(self.geom, values)
    }

    /// Dual-lattice mask of frequencies where the partition over `r` is
    /// complete: `2^{r.min} <= |xi|_m <= 2^{r.max}` and off the Nyquist rows.
    pub fn in_band(&self, r: &ScaleRange) -> Vec<bool> {
        let (lo, hi) = r.band();
        self.norms
            .iter()
            .zip(&self.nyquist)
            .map(|(&t, &nq)| !nq && t >= lo && t <= hi)
            .collect()
    }

    /// `sum_{j in r} |psi^_j(xi)|^2` at every dual-lattice point.
    pub fn partition_sum(&self, r: &ScaleRange) -> Result<Vec<f64>> {
        self.check_range(r)?;
        let mut acc = vec![0.0; self.norms.len()];
        for j in r.iter() {
            for (a, m) in acc.iter_mut().zip(self.multiplier_raw(j)) {
                *a += m * m;
            }
        }
        Ok(acc)
    }

    /// Max deviation of the partition sum from one over the in-band lattice,
    /// or `None` if no lattice point is in band.
    pub fn partition_deviation(&self, r: &ScaleRange) -> Result<Option<f64>> {
        let sum = self.partition_sum(r)?;
        let band = self.in_band(r);
        Ok(sum
            .iter()
            .zip(&band)
            .filter(|(_, &b)| b)
            .map(|(s, _)| (s - 1.0).abs())
            .reduce(f64::max))
    }
}

/// Spatial field of `psi_j`.
pub fn dilate_generator(g: &LPGenerator, j: i32) -> Result<GridField> {
    Ok(g.dilated_window(j)?.inverse())
}

fn ensure_geometry(f: &GridField, g: &LPGenerator) -> Result<()> {
    f.geometry().ensure_same(g.geometry())
}

fn sqrt_sum_of_squares(geom: Geometry, terms: impl Iterator<Item = GridField>) -> GridField {
    let mut acc = vec![0.0; geom.len()];
    for t in terms {
        for (a, v) in acc.iter_mut().zip(t.values()) {
            *a += v * v;
        }
    }
    GridField::from_values(geom, acc.into_iter().map(f64::sqrt).collect()).expect("matching length")
}

/// The multiplier of `psi_{j,k} = psi^(1)_j * psi^(2)_k`, or `None` when the
/// two annuli do not meet on the lattice.
pub(crate) fn composite_multiplier(g1: &LPGenerator, g2: &LPGenerator, j: i32, k: i32) -> Option<Vec<f64>> {
    let m: Vec<f64> = g1
        .multiplier_raw(j)
        .into_iter()
        .zip(g2.multiplier_raw(k))
        .map(|(a, b)| a * b)
        .collect();
    if m.iter().all(|&v| v == 0.0) {
        None
    } else {
        Some(m)
    }
}

fn check_pair(g1: &LPGenerator, g2: &LPGenerator, r1: &ScaleRange, r2: &ScaleRange) -> Result<()> {
    if g1.metric.kind != MetricKind::Isotropic || g2.metric.kind != MetricKind::Parabolic {
        return Err(invalid("composite square function needs an isotropic then a parabolic generator"));
    }
    g1.geometry().ensure_same(g2.geometry())?;
    g1.check_range(r1)?;
    g2.check_range(r2)
}

/// Non-empty composite scale pairs with their multipliers, in `(j, k)`
/// lexicographic order.
pub(crate) fn composite_terms(
    g1: &LPGenerator,
    g2: &LPGenerator,
    r1: &ScaleRange,
    r2: &ScaleRange,
) -> Vec<(i32, i32, Vec<f64>)> {
    let pairs: Vec<(i32, i32)> = r1.iter().flat_map(|j| r2.iter().map(move |k| (j, k))).collect();
    pairs
        .into_iter()
        .filter_map(|(j, k)| composite_multiplier(g1, g2, j, k).map(|m| (j, k, m)))
        .collect()
}

/// `(sum_{j in r} |psi_j * f|^2)^{1/2}`.
pub fn square_function(f: &GridField, g: &LPGenerator, r: &ScaleRange) -> Result<GridField> {
    ensure_geometry(f, g)?;
    g.check_range(r)?;
    let fh = FrequencyField::forward(f);
    let geom = *f.geometry();
    Ok(sqrt_sum_of_squares(geom, r.iter().map(|j| fh.scale_real(&g.multiplier_raw(j)).inverse())))
}

/// Two-parameter square function over `psi_{j,k}`.
pub fn square_function_com(
    f: &GridField,
    g1: &LPGenerator,
    g2: &LPGenerator,
    r1: &ScaleRange,
    r2: &ScaleRange,
) -> Result<GridField> {
    check_pair(g1, g2, r1, r2)?;
    ensure_geometry(f, g1)?;
    let fh = FrequencyField::forward(f);
    let geom = *f.geometry();
    let terms = composite_terms(g1, g2, r1, r2);
    Ok(sqrt_sum_of_squares(geom, terms.iter().map(|(_, _, m)| fh.scale_real(m).inverse())))
}

/// Lattice spacing in cells along one axis: the requested spacing clamped to
/// at least one cell; must divide the period.
pub(crate) fn lattice_cells(geom: &Geometry, spacing: f64) -> Result<usize> {
    let h = geom.spacing();
    let ratio = spacing / h;
    if ratio <= 1.0 + 1e-12 {
        return Ok(1);
    }
    let cells = ratio.round();
    if (ratio - cells).abs() > 1e-9 * ratio || !geom.size().is_multiple_of(cells as usize) {
        return Err(invalid(format!(
            "lattice spacing {spacing} is not a divisor-compatible multiple of the grid spacing {h}"
        )));
    }
    Ok(cells as usize)
}

/// Per-axis lattice step in cells for the scale pair `(j, k)`.
pub(crate) fn lattice_steps(geom: &Geometry, rule: LatticeRule, j: i32, k: i32) -> Result<[usize; 3]> {
    let (a, b) = rule.spacings(j, k);
    let ca = lattice_cells(geom, a)?;
    let cb = lattice_cells(geom, b)?;
    let mut steps = [1usize; 3];
    let n = geom.dim();
    for s in steps.iter_mut().take(n - 1) {
        *s = ca;
    }
    steps[n - 1] = cb;
    Ok(steps)
}

/// Grid index of the left-lower lattice corner below `m` along one axis.
/// The lattice is anchored at the origin index.
#[inline]
pub(crate) fn corner_index(m: usize, origin: usize, step: usize, size: usize) -> usize {
    let rel = m as i64 - origin as i64;
    let c = rel.div_euclid(step as i64) * step as i64;
    (c + origin as i64).rem_euclid(size as i64) as usize
}

/// Replace each sample of `u` by its value at the lattice corner of its cell.
pub(crate) fn hold_on_lattice(u: &GridField, steps: &[usize; 3]) -> GridField {
    let geom = *u.geometry();
    let o = geom.origin_index();
    let n = geom.size();
    let dim = geom.dim();
    GridField::from_values(
        geom,
        par::map_range(geom.len(), |i| {
            let m = geom.unravel(i);
            let mut c = [0usize; 3];
            for a in 0..dim {
                c[a] = corner_index(m[a], o, steps[a], n);
            }
            u.values()[geom.ravel(&c)]
        }),
    )
    .expect("matching length")
}

/// Discrete two-parameter square function: `psi_{j,k} * f` sampled on the
/// anisotropic dyadic lattice and held constant on each lattice cell.
pub fn discrete_square_function_com(
    f: &GridField,
    g1: &LPGenerator,
    g2: &LPGenerator,
    r1: &ScaleRange,
    r2: &ScaleRange,
    rule: LatticeRule,
) -> Result<GridField> {
    check_pair(g1, g2, r1, r2)?;
    ensure_geometry(f, g1)?;
    let geom = *f.geometry();
    let fh = FrequencyField::forward(f);
    let terms = composite_terms(g1, g2, r1, r2);
    let mut held = Vec::with_capacity(terms.len());
    for (j, k, m) in &terms {
        let steps = lattice_steps(&geom, rule, *j, *k)?;
        held.push(hold_on_lattice(&fh.scale_real(m).inverse(), &steps));
    }
    Ok(sqrt_sum_of_squares(geom, held.into_iter()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HardyVariant {
    Isotropic,
    Parabolic,
    Composite,
}

/// Generators and scale ranges shared by the Hardy-type norms.
#[derive(Clone, Debug)]
pub struct LPSetup {
    pub iso: LPGenerator,
    pub para: LPGenerator,
    pub iso_range: ScaleRange,
    pub para_range: ScaleRange,
    pub rule: LatticeRule,
}

impl LPSetup {
    /// Bump generators on `geom` with the given ranges for both families.
    pub fn new(geom: Geometry, iso_range: ScaleRange, para_range: ScaleRange) -> Result<Self> {
        let dim = geom.dim();
        let iso = build_generator(Metric::isotropic(dim)?, geom)?;
        let para = build_generator(Metric::parabolic(dim)?, geom)?;
        iso.check_range(&iso_range)?;
        para.check_range(&para_range)?;
        Ok(Self { iso, para, iso_range, para_range, rule: LatticeRule::Max })
    }

    pub fn geometry(&self) -> &Geometry {
        self.iso.geometry()
    }

    pub fn square(&self, f: &GridField, variant: HardyVariant) -> Result<GridField> {
        match variant {
            HardyVariant::Isotropic => square_function(f, &self.iso, &self.iso_range),
            HardyVariant::Parabolic => square_function(f, &self.para, &self.para_range),
            HardyVariant::Composite => discrete_square_function_com(
                f,
                &self.iso,
                &self.para,
                &self.iso_range,
                &self.para_range,
                self.rule,
            ),
        }
    }
}

/// `||S f||_p` for the square function `S` of the chosen variant, after
/// projecting `f` to mean zero when its mean is not already negligible.
pub fn hardy_norm(f: &GridField, variant: HardyVariant, p: f64, setup: &LPSetup) -> Result<f64> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(invalid(format!("Hardy exponent p = {p} must lie in (0, 1]")));
    }
    let scale = f.max_abs();
    let f = if f.mean().abs() > 1e-10 * scale.max(f64::MIN_POSITIVE) { f.mean_zero() } else { f.clone() };
    lp_norm(&setup.square(&f, variant)?, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::lp_norm;

    fn desk_pair() -> (LPGenerator, LPGenerator) {
        let g = Geometry::desk();
        (
            build_generator(Metric::isotropic(2).unwrap(), g).unwrap(),
            build_generator(Metric::parabolic(2).unwrap(), g).unwrap(),
        )
    }

    #[test]
    fn resolvable_ranges_cover_desk_family() {
        let (iso, para) = desk_pair();
        let r = ScaleRange::new(-2, 4).unwrap();
        iso.check_range(&r).unwrap();
        para.check_range(&r).unwrap();
        assert!(iso.check_range(&ScaleRange::new(-2, 40).unwrap()).is_err());
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let g = Geometry::new(2, 4, 0.01).unwrap();
        let err = build_generator(Metric::isotropic(2).unwrap(), g);
        assert!(matches!(err, Err(Error::Unresolvable(_))));
    }

    #[test]
    fn partition_of_unity_in_band() {
        let (iso, para) = desk_pair();
        for g in [&iso, &para] {
            let r = g.resolvable_range();
            let dev = g.partition_deviation(&r).unwrap().unwrap();
            assert!(dev < 1e-10, "{:?}: {dev}", g.metric().kind);
        }
    }

    #[test]
    fn window_vanishes_at_zero_and_outside_annulus() {
        let (iso, para) = desk_pair();
        for g in [&iso, &para] {
            let w = g.window();
            assert_eq!(w.values()[0].norm(), 0.0);
            for (v, &t) in w.values().iter().zip(g.frequency_norms()) {
                if !(0.5..=2.0).contains(&t) {
                    assert_eq!(v.norm(), 0.0);
                }
            }
        }
    }

    #[test]
    fn spatial_generator_is_real_and_mean_zero() {
        let (iso, para) = desk_pair();
        for g in [&iso, &para] {
            let c = g.window().inverse_complex();
            let re = c.iter().map(|z| z.re.abs()).fold(0.0, f64::max);
            let im = c.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
            assert!(im <= 1e-10 * re, "{im} vs {re}");
            // direct summation of the grid mean
            let sum: f64 = c.iter().map(|z| z.re).sum();
            assert!((sum / c.len() as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn dilate_zero_is_base_and_norm_scales() {
        // finer dual lattice so the j = -1 annulus is well sampled
        // the parabolic j = 1 annulus reaches |xi_n| = 16
        for (metric, l) in [(Metric::isotropic(2).unwrap(), 256.0), (Metric::parabolic(2).unwrap(), 64.0)] {
            let geom = Geometry::new(2, 1024, l).unwrap();
            let g = build_generator(metric, geom).unwrap();
            let base = g.window().inverse();
            let p0 = dilate_generator(&g, 0).unwrap();
            let d = p0.sub(&base).unwrap().max_abs();
            assert!(d <= 1e-12 * base.max_abs());
            let n0 = lp_norm(&p0, 2.0).unwrap();
            let q = metric.homogeneous_dimension() as f64;
            for j in [-1, 1] {
                let pj = dilate_generator(&g, j).unwrap();
                let nj = lp_norm(&pj, 2.0).unwrap();
                let want = 2f64.powf(j as f64 * q / 2.0) * n0;
                // |xi_n| has a kink on xi_n = 0, so the parabolic lattice sum
                // converges only at second order in the frequency spacing
                let tol = match metric.kind {
                    MetricKind::Isotropic => 1e-8,
                    MetricKind::Parabolic => 5e-4,
                };
                assert!((nj - want).abs() < tol * want, "{:?} j={j}: {nj} vs {want}", metric.kind);
                assert!(pj.mean().abs() < 1e-12 * pj.max_abs());
            }
        }
    }

    #[test]
    fn square_function_of_zero_is_zero() {
        let (iso, _) = desk_pair();
        let z = GridField::zeros(Geometry::desk());
        let r = ScaleRange::new(-2, 4).unwrap();
        assert_eq!(square_function(&z, &iso, &r).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn lattice_rule_spacings() {
        assert_eq!(LatticeRule::Max.spacings(1, 2), (0.25, 2f64.powi(-4)));
        assert_eq!(LatticeRule::Min.spacings(1, 2), (0.5, 0.5));
        let g = Geometry::desk();
        assert_eq!(lattice_steps(&g, LatticeRule::Max, -2, -2).unwrap(), [64, 64, 1]);
        assert_eq!(lattice_steps(&g, LatticeRule::Max, 4, 4).unwrap(), [1, 1, 1]);
    }

    #[test]
    fn corner_convention_is_left_lower() {
        // origin at 8, step 4: indices 8..12 map to 8, 4..8 map to 4
        assert_eq!(corner_index(8, 8, 4, 16), 8);
        assert_eq!(corner_index(11, 8, 4, 16), 8);
        assert_eq!(corner_index(7, 8, 4, 16), 4);
        assert_eq!(corner_index(0, 8, 4, 16), 0);
    }
}
