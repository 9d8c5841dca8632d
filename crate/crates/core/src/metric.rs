//! The isotropic and parabolic norm/dilation pairs on `R^n = R^{n-1} x R`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Isotropic,
    Parabolic,
}

/// A norm together with its dilation group. The last coordinate is `x_n`,
/// the leading `n - 1` coordinates form `x'`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Metric {
    pub kind: MetricKind,
    pub dim: usize,
}

impl Metric {
    pub fn new(kind: MetricKind, dim: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(invalid(format!("dimension {dim} outside 1..=3")));
        }
        Ok(Self { kind, dim })
    }

    pub fn isotropic(dim: usize) -> Result<Self> {
        Self::new(MetricKind::Isotropic, dim)
    }

    pub fn parabolic(dim: usize) -> Result<Self> {
        Self::new(MetricKind::Parabolic, dim)
    }

    /// `Q`: the exponent with `|det d(dilate)| = delta^Q`.
    pub fn homogeneous_dimension(&self) -> usize {
        match self.kind {
            MetricKind::Isotropic => self.dim,
            MetricKind::Parabolic => self.dim + 1,
        }
    }

    /// Scaling exponent of coordinate `axis` under the dilation.
    pub fn axis_exponent(&self, axis: usize) -> i32 {
        match self.kind {
            MetricKind::Parabolic if axis + 1 == self.dim => 2,
            _ => 1,
        }
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn norm(&self, x: &[f64]) -> Result<f64> {
        self.check(x)?;
        Ok(self.norm_unchecked(x))
    }

    /// Norm without the dimension check, for hot loops over grids.
    #[inline]
    pub fn norm_unchecked(&self, x: &[f64]) -> f64 {
        let (head, last) = x.split_at(x.len() - 1);
        let r2: f64 = head.iter().map(|v| v * v).sum();
        match self.kind {
            MetricKind::Isotropic => (r2 + last[0] * last[0]).sqrt(),
            MetricKind::Parabolic => (r2 + last[0].abs()).sqrt(),
        }
    }

    pub fn dilate(&self, x: &[f64], delta: f64) -> Result<Vec<f64>> {
        self.check(x)?;
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(invalid(format!("dilation factor {delta} must be positive")));
        }
        Ok(self.dilate_unchecked(x, delta))
    }

    #[inline]
    pub fn dilate_unchecked(&self, x: &[f64], delta: f64) -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(i, v)| v * delta.powi(self.axis_exponent(i)))
            .collect()
    }

    /// Rescale a nonzero `x` onto the unit sphere of this metric, returning
    /// `(|x|, omega)` with `x = dilate(omega, |x|)`.
    pub fn polar(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let r = self.norm_unchecked(x);
        (r, self.dilate_unchecked(x, 1.0 / r))
    }
}

/// Point-wise helpers for the two metrics, for code that already knows `n`.
pub fn iso_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn para_norm(x: &[f64]) -> f64 {
    let (head, last) = x.split_at(x.len() - 1);
    (head.iter().map(|v| v * v).sum::<f64>() + last[0].abs()).sqrt()
}
