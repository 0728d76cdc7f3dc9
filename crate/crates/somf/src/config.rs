//! Benchmark run configuration, read from a TOML file.
//!
//! Schema (all fields shown; ? marks optional with the default given):
//!
//! ```toml
//! name = "demo"              # run id prefix
//! output_dir = "out"
//! seed = 0                   # ? 0
//! checkpoint_every = 10      # ? 10 iterations
//! parallel_update = false    # ? overlap dictionary / B-bar threads
//! parallel_runs = false      # ? run sweep combinations concurrently
//!
//! [dataset]
//! source = "synthetic"       # "synthetic" | "file" | "image"
//! # synthetic: p, n, true_k, noise_sigma?, dict_sparsity?, code_sparsity?,
//! #            nonnegative?, seed?
//! # file:      path, format = "dmat" | "csv"
//! # image:     path (binary PGM), patch = [h, w], stride = [sh, sw]
//! test_fraction = 0.2        # ? 0.2
//! center = false             # ? per-column centering
//! normalize = false          # ? per-column l2 normalization
//!
//! [fit]
//! k = 16
//! batch_size = 16            # ? k
//! lambda = 0.1               # ? 0
//! nu = 0.0                   # ? code penalty mix
//! mu = 1.0                   # ? dictionary ball mix
//! positive_code = false      # ?
//! positive_dict = false      # ?
//! weight_exponent = 0.917    # ?
//! gamma_exponent = 0.751     # ?
//! epochs = 4                 # or: iterations = N (exactly one)
//! code_tol = 1e-4            # ?
//! code_max_iter = 100        # ?
//! subsample_code = true      # ? false = exact-code configuration
//!
//! [sweep]
//! reductions = [1.0, 4.0]    # r = 1 runs the full-batch algorithm
//! variants = ["masked"]      # "masked" | "averaged" | "exact-gram"
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use somf_core::{Algorithm, Budget, EstimatorVariant, FitConfig};

use crate::data_io::SyntheticSpec;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum DatasetSource {
    Synthetic(SyntheticSpec),
    File { path: PathBuf, format: FileFormat },
    Image { path: PathBuf, patch: [usize; 2], stride: [usize; 2] },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum FileFormat {
    Dmat,
    Csv,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetConfig {
    #[serde(flatten)]
    pub source: DatasetSource,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    #[serde(default)]
    pub center: bool,
    #[serde(default)]
    pub normalize: bool,
}

fn default_test_fraction() -> f64 {
    0.2
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitSection {
    pub k: usize,
    pub batch_size: Option<usize>,
    #[serde(default)]
    pub lambda: f64,
    #[serde(default)]
    pub nu: f64,
    #[serde(default = "default_mu")]
    pub mu: f64,
    #[serde(default)]
    pub positive_code: bool,
    #[serde(default)]
    pub positive_dict: bool,
    #[serde(default = "default_weight_exponent")]
    pub weight_exponent: f64,
    #[serde(default = "default_gamma_exponent")]
    pub gamma_exponent: f64,
    pub epochs: Option<u64>,
    pub iterations: Option<u64>,
    #[serde(default = "default_code_tol")]
    pub code_tol: f64,
    #[serde(default = "default_code_max_iter")]
    pub code_max_iter: usize,
    #[serde(default = "default_true")]
    pub subsample_code: bool,
}

fn default_mu() -> f64 {
    1.0
}
fn default_weight_exponent() -> f64 {
    0.917
}
fn default_gamma_exponent() -> f64 {
    0.751
}
fn default_code_tol() -> f64 {
    1e-4
}
fn default_code_max_iter() -> usize {
    100
}
fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepSection {
    pub reductions: Vec<f64>,
    pub variants: Vec<VariantName>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum VariantName {
    Masked,
    Averaged,
    ExactGram,
}

impl VariantName {
    pub fn to_core(self) -> EstimatorVariant {
        match self {
            VariantName::Masked => EstimatorVariant::Masked,
            VariantName::Averaged => EstimatorVariant::Averaged,
            VariantName::ExactGram => EstimatorVariant::ExactGram,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            VariantName::Masked => "masked",
            VariantName::Averaged => "averaged",
            VariantName::ExactGram => "exact-gram",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub name: String,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_checkpoint_every")]
    pub checkpoint_every: u64,
    #[serde(default)]
    pub parallel_update: bool,
    #[serde(default)]
    pub parallel_runs: bool,
    pub dataset: DatasetConfig,
    pub fit: FitSection,
    pub sweep: SweepSection,
}

fn default_checkpoint_every() -> u64 {
    10
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)?;
        let cfg: RunConfig = toml::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.name.is_empty() {
            return Err(ConfigError::Invalid("name must be nonempty".into()));
        }
        if self.checkpoint_every == 0 {
            return Err(ConfigError::Invalid("checkpoint_every must be >= 1".into()));
        }
        if self.sweep.reductions.is_empty() || self.sweep.variants.is_empty() {
            return Err(ConfigError::Invalid(
                "sweep needs at least one reduction and one variant".into(),
            ));
        }
        if self.sweep.reductions.iter().any(|&r| !(r.is_finite() && r >= 1.0)) {
            return Err(ConfigError::Invalid("reductions must be finite and >= 1".into()));
        }
        match (self.fit.epochs, self.fit.iterations) {
            (Some(_), None) | (None, Some(_)) => {}
            _ => {
                return Err(ConfigError::Invalid(
                    "set exactly one of fit.epochs and fit.iterations".into(),
                ))
            }
        }
        // Build one core config to reuse its own validation.
        self.fit_config(self.sweep.reductions[0], self.sweep.variants[0])
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(())
    }

    /// Core configuration for one sweep combination. r = 1 runs the
    /// full-batch algorithm so the sweep baseline is exact.
    pub fn fit_config(&self, reduction: f64, variant: VariantName) -> FitConfig {
        let mut cfg = FitConfig::new(self.fit.k);
        cfg.algorithm = if reduction == 1.0 { Algorithm::Omf } else { Algorithm::Somf };
        cfg.reduction = reduction;
        cfg.variant = variant.to_core();
        cfg.batch_size = self.fit.batch_size.unwrap_or(self.fit.k.max(1));
        cfg.params.lambda = self.fit.lambda;
        cfg.params.nu = self.fit.nu;
        cfg.params.mu = self.fit.mu;
        cfg.params.positive_code = self.fit.positive_code;
        cfg.params.positive_dict = self.fit.positive_dict;
        cfg.weight_exponent = self.fit.weight_exponent;
        cfg.gamma_exponent = self.fit.gamma_exponent;
        cfg.budget = match (self.fit.epochs, self.fit.iterations) {
            (Some(e), _) => Budget::Epochs(e),
            (None, Some(t)) => Budget::Iterations(t),
            (None, None) => Budget::Epochs(1),
        };
        cfg.seed = self.seed;
        cfg.code_tol = self.fit.code_tol;
        cfg.code_max_iter = self.fit.code_max_iter;
        cfg.subsample_code = self.fit.subsample_code;
        cfg.parallel = self.parallel_update && crate::thread_cap() > 1;
        cfg
    }

    /// Stable per-run identifier, unique within the sweep.
    pub fn run_id(&self, reduction: f64, variant: VariantName) -> String {
        let code_tag = if self.fit.subsample_code { "" } else { "-exactcode" };
        format!("{}-r{}-{}{}", self.name, reduction, variant.label(), code_tag)
    }
}
