//! Flat experiment configuration. Every key has a default, so a config file
//! only names what differs from the desk setup (`n = 2`, `N = 256`, `L = 8`).

use std::path::{Path, PathBuf};

use mixhom_core::kernel::{catalog_kernel, classify, enforce_cancellation, Profile, ProductKernel, Regime,
    SphereMeasure, TabulatedProfile, CATALOG_KERNELS};
use mixhom_core::truncation::{TruncationMethod, TruncationOptions, SUPPORT_RADIUS};
use mixhom_core::{Geometry, Metric, MetricKind, ScaleRange, WindowKind};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{HarnessError, Result};

pub const EXPERIMENTS: &[&str] = &[
    "calderon-condition",
    "reconstruct",
    "truncation-sweep",
    "cotlar",
    "hormander",
    "weak-type",
    "test-decay",
    "almost-orth",
    "lip-norms",
    "hardy-ratio",
];

/// Environment variable that replaces the output root.
pub const OUTPUT_ROOT_ENV: &str = "MIXHOM_OUTPUT_ROOT";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,

    // grid
    pub dim: usize,
    pub size: usize,
    pub half_extent: f64,
    /// Second resolution for the stability experiments (cotlar: `size / 2`,
    /// hardy-ratio: `2 size` when unset).
    pub compare_size: Option<usize>,

    pub metric: MetricKind,

    // kernel: a catalog name, or "custom" with the fields below
    pub kernel: String,
    pub k: f64,
    pub l: f64,
    pub profile_e: String,
    pub profile_h: String,
    /// CSV table `tau,value` replacing `profile_h` (custom kernels, n = 2).
    pub profile_csv: Option<String>,
    pub enforce_cancellation: bool,
    pub measure: SphereMeasure,
    pub cutoff: bool,
    pub truncation: Option<TruncationMethod>,

    // scale ranges for the isotropic and parabolic families
    pub iso_min: i32,
    pub iso_max: i32,
    pub para_min: i32,
    pub para_max: i32,
    pub window: WindowKind,

    /// Truncation ladder; experiments that need one radius use the smallest.
    pub eps: Vec<f64>,
    pub seed: u64,

    // experiment knobs
    pub coarsen_levels: u32,
    pub delta: f64,
    pub p: f64,
    pub pair_scales: Vec<f64>,
    pub pairs_per_scale: usize,
    pub alpha_count: usize,
    pub bump_radius: f64,
    pub gamma: f64,
    pub decay_inner: f64,
    pub j0: i32,
    pub max_offset: i32,
    pub alpha: f64,

    /// Output directory; empty means `mixhom-out/<experiment>`.
    pub output: String,
    pub svg: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: String::new(),
            dim: 2,
            size: 256,
            half_extent: 8.0,
            compare_size: None,
            metric: MetricKind::Parabolic,
            kernel: "caseh-cancellative".into(),
            k: 0.25,
            l: 2.75,
            profile_e: "constant".into(),
            profile_h: "tilted-odd".into(),
            profile_csv: None,
            enforce_cancellation: true,
            measure: SphereMeasure::Invariant,
            cutoff: true,
            truncation: None,
            iso_min: -2,
            iso_max: 4,
            para_min: -2,
            para_max: 4,
            window: WindowKind::Bump,
            eps: (2..=6).map(|i| 2f64.powi(-i)).collect(),
            seed: 1,
            coarsen_levels: 2,
            delta: 2.0,
            p: 2.0,
            pair_scales: vec![0.5, 0.1, 0.02],
            pairs_per_scale: 20,
            alpha_count: 9,
            bump_radius: 0.5,
            gamma: 1.0,
            decay_inner: 4.0,
            j0: 2,
            max_offset: 4,
            alpha: 0.5,
            output: String::new(),
            svg: true,
        }
    }
}

fn field_err(field: &str) -> impl Fn(mixhom_core::Error) -> HarnessError + '_ {
    move |e| HarnessError::config(field, e.to_string())
}

impl ExperimentConfig {
    pub fn named(experiment: &str) -> Self {
        Self { experiment: experiment.into(), ..Self::default() }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| HarnessError::Parse { what: "config".into(), message: e.to_string() })
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    /// SHA-256 over the canonical JSON serialization (fixed field order).
    pub fn hash(&self) -> String {
        let canon = serde_json::to_string(self).expect("config is always serializable");
        hex::encode(Sha256::digest(canon.as_bytes()))
    }

    pub fn geometry(&self) -> Result<Geometry> {
        Geometry::new(self.dim, self.size, self.half_extent).map_err(field_err("size"))
    }

    pub fn geometry_at(&self, size: usize) -> Result<Geometry> {
        Geometry::new(self.dim, size, self.half_extent).map_err(field_err("compare_size"))
    }

    pub fn metric(&self) -> Result<Metric> {
        Metric::new(self.metric, self.dim).map_err(field_err("metric"))
    }

    pub fn iso_range(&self) -> Result<ScaleRange> {
        ScaleRange::new(self.iso_min, self.iso_max).map_err(field_err("iso_min"))
    }

    pub fn para_range(&self) -> Result<ScaleRange> {
        ScaleRange::new(self.para_min, self.para_max).map_err(field_err("para_min"))
    }

    pub fn truncation_options(&self) -> TruncationOptions {
        TruncationOptions { method: self.truncation, ..TruncationOptions::default() }
    }

    pub fn smallest_eps(&self) -> f64 {
        self.eps.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn build_kernel(&self) -> Result<ProductKernel> {
        let kernel = if self.kernel == "custom" {
            let pe = Profile::from_name(&self.profile_e, self.seed).map_err(field_err("profile_e"))?;
            let ph = match &self.profile_csv {
                Some(path) => Profile::Tabulated(std::sync::Arc::new(
                    TabulatedProfile::from_csv_path(Path::new(path)).map_err(field_err("profile_csv"))?,
                )),
                None => Profile::from_name(&self.profile_h, self.seed).map_err(field_err("profile_h"))?,
            };
            let kernel = ProductKernel::new(self.dim, self.k, self.l, pe, ph)
                .map_err(field_err("k"))?
                .with_measure(self.measure);
            if self.enforce_cancellation {
                enforce_cancellation(&kernel).map_err(field_err("enforce_cancellation"))?
            } else {
                kernel
            }
        } else {
            if !CATALOG_KERNELS.contains(&self.kernel.as_str()) {
                return Err(HarnessError::config(
                    "kernel",
                    format!("unknown kernel '{}' (catalog: {}, or custom)", self.kernel, CATALOG_KERNELS.join(", ")),
                ));
            }
            if self.dim != 2 {
                return Err(HarnessError::config("dim", "catalog kernels are defined for n = 2"));
            }
            catalog_kernel(&self.kernel).map_err(field_err("kernel"))?
        };
        Ok(kernel.with_cutoff(self.cutoff))
    }

    /// Field-level validation; nothing is computed beyond kernel setup.
    pub fn validate(&self) -> Result<()> {
        if !EXPERIMENTS.contains(&self.experiment.as_str()) {
            return Err(HarnessError::config(
                "experiment",
                format!("unknown experiment '{}' (one of: {})", self.experiment, EXPERIMENTS.join(", ")),
            ));
        }
        self.geometry()?;
        if let Some(s) = self.compare_size {
            self.geometry_at(s)?;
        }
        self.metric()?;
        self.iso_range()?;
        self.para_range()?;
        if self.kernel == "custom" {
            match classify(self.k, self.l, self.dim) {
                Regime::CaseH | Regime::CaseE => {}
                r => {
                    return Err(HarnessError::config(
                        "l",
                        format!("(k, l, n) = ({}, {}, {}) is in the {r:?} regime, not a critical case", self.k, self.l, self.dim),
                    ))
                }
            }
        }
        self.build_kernel()?;
        if self.eps.is_empty() {
            return Err(HarnessError::config("eps", "empty truncation ladder"));
        }
        if let Some(e) = self.eps.iter().find(|&&e| !(e > 0.0 && e <= SUPPORT_RADIUS)) {
            return Err(HarnessError::config("eps", format!("radius {e} outside (0, {SUPPORT_RADIUS}]")));
        }
        if self.experiment == "truncation-sweep" {
            if self.eps.len() < 2 {
                return Err(HarnessError::config("eps", "a sweep needs at least two radii"));
            }
            if self.eps.windows(2).any(|w| w[1] >= w[0]) {
                return Err(HarnessError::config("eps", "sweep radii must be strictly decreasing"));
            }
        }
        if self.truncation == Some(TruncationMethod::Sampled) && self.dim == 2 {
            let h = self.half_extent * 2.0 / self.size as f64;
            if self.smallest_eps() < 2.0 * h {
                return Err(HarnessError::config("eps", format!("sampled truncation needs eps >= 2h = {}", 2.0 * h)));
            }
        }
        if !(self.delta > 0.0) {
            return Err(HarnessError::config("delta", "must be positive"));
        }
        if !(self.p > 0.0) {
            return Err(HarnessError::config("p", "must be positive"));
        }
        if self.pair_scales.is_empty() || self.pair_scales.iter().any(|s| !(*s > 0.0)) {
            return Err(HarnessError::config("pair_scales", "need positive separations"));
        }
        if self.pairs_per_scale == 0 {
            return Err(HarnessError::config("pairs_per_scale", "must be at least 1"));
        }
        if self.alpha_count < 2 {
            return Err(HarnessError::config("alpha_count", "need at least two levels"));
        }
        if !(self.bump_radius > 0.0) {
            return Err(HarnessError::config("bump_radius", "must be positive"));
        }
        if !(self.gamma > 0.0) {
            return Err(HarnessError::config("gamma", "must be positive"));
        }
        if !(self.decay_inner > 0.0) {
            return Err(HarnessError::config("decay_inner", "must be positive"));
        }
        if self.max_offset < 2 {
            return Err(HarnessError::config("max_offset", "need offsets up to at least 2"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(HarnessError::config("alpha", "must lie in (0, 1)"));
        }
        Ok(())
    }

    /// Where reports go: `$MIXHOM_OUTPUT_ROOT/<experiment>` when the variable
    /// is set, else `output`, else `mixhom-out/<experiment>`.
    pub fn output_dir(&self) -> PathBuf {
        if let Some(root) = std::env::var_os(OUTPUT_ROOT_ENV) {
            let leaf = if self.output.is_empty() {
                PathBuf::from(&self.experiment)
            } else {
                Path::new(&self.output).file_name().map(PathBuf::from).unwrap_or_else(|| self.experiment.clone().into())
            };
            return PathBuf::from(root).join(leaf);
        }
        if self.output.is_empty() {
            Path::new("mixhom-out").join(&self.experiment)
        } else {
            PathBuf::from(&self.output)
        }
    }
}
