//! Experiment configuration.
//!
//! Configs are TOML files. Unknown keys are rejected everywhere, so a typo in
//! `alpha` or `rho_max` fails loudly instead of silently running defaults.
//!
//! ```toml
//! seeds = [0, 1, 2]
//! total_steps = 2000
//! batch_size = 32
//! log_every = 10
//!
//! [objective]
//! kind = "mlp"
//! layer_sizes = [2, 16, 3]
//! activation = "tanh"
//! data = { seed = 7, n_per_class = 40, dim = 2, classes = 3, spread = 1.0 }
//!
//! [optimizer]
//! variant = "gsam"
//! alpha = 0.2
//! rho_max = 0.05
//!
//! [base]
//! kind = "sgd_momentum"
//! momentum = 0.9
//!
//! [lr]
//! shape = "linear_decay"
//! lr_max = 0.1
//! warmup_steps = 100
//!
//! [rho]
//! shape = "linear_with_lr"
//!
//! [eigen]
//! policy = "at_end"
//! ```

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{GsamError, Result};
use crate::objective::{
    default_landscape, Activation, BlobsConfig, Dataset, Landscape2D, MlpClassifier, ObjectiveSpec, Quadratic, Well,
    DEFAULT_SLOPE,
};
use crate::optimizer::{BaseOptimizerKind, GsamConfig, LrSchedule, LrShape, RhoSchedule, Variant};
use crate::rng::{normal_vec, substream, Purpose};
use crate::sharpness::{PowerIterationConfig, SharpnessConfig};
use crate::vector::ParamVector;

/// Objective descriptor; everything needed to rebuild an [`ObjectiveSpec`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObjectiveConfig {
    /// Exactly one of `diagonal`, `hessian` or `spectrum` must be given.
    Quadratic {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        diagonal: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        hessian: Option<Vec<Vec<f64>>>,
        /// Eigenvalues of a randomly rotated Hessian.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        spectrum: Option<Vec<f64>>,
        #[serde(default)]
        spectrum_seed: u64,
    },
    /// Omitting `wells` selects the built-in surface.
    Landscape2d {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        wells: Option<Vec<Well>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        slope: Option<f64>,
    },
    Mlp {
        layer_sizes: Vec<usize>,
        #[serde(default = "default_activation")]
        activation: Activation,
        data: BlobsConfig,
        /// Size of the held-out split (same classes, split index 1).
        #[serde(default, skip_serializing_if = "Option::is_none")]
        test_n_per_class: Option<usize>,
    },
}

fn default_activation() -> Activation {
    Activation::Tanh
}

/// A constructed objective plus its held-out data, if any.
#[derive(Clone, Debug)]
pub struct BuiltObjective {
    pub spec: ObjectiveSpec,
    pub test_set: Option<Arc<Dataset>>,
}

impl ObjectiveConfig {
    pub fn build(&self) -> Result<BuiltObjective> {
        match self {
            ObjectiveConfig::Quadratic {
                diagonal,
                hessian,
                spectrum,
                spectrum_seed,
            } => {
                let q = match (diagonal, hessian, spectrum) {
                    (Some(d), None, None) => Quadratic::diagonal(d.clone())?,
                    (None, Some(h), None) => Quadratic::dense(h.clone())?,
                    (None, None, Some(s)) => Quadratic::from_spectrum(s, *spectrum_seed)?,
                    _ => {
                        return Err(GsamError::Config(
                            "quadratic objective needs exactly one of diagonal, hessian, spectrum".into(),
                        ))
                    }
                };
                Ok(BuiltObjective {
                    spec: ObjectiveSpec::Quadratic(q),
                    test_set: None,
                })
            }
            ObjectiveConfig::Landscape2d { wells, slope } => {
                let l = match wells {
                    None if slope.is_none() => default_landscape(),
                    None => Landscape2D::new(default_landscape().wells().to_vec(), slope.unwrap())?,
                    Some(w) => Landscape2D::new(w.clone(), slope.unwrap_or(DEFAULT_SLOPE))?,
                };
                Ok(BuiltObjective {
                    spec: ObjectiveSpec::Landscape2D(l),
                    test_set: None,
                })
            }
            ObjectiveConfig::Mlp {
                layer_sizes,
                activation,
                data,
                test_n_per_class,
            } => {
                let train = Arc::new(data.generate(0)?);
                let test = match test_n_per_class {
                    Some(n) => Some(Arc::new(data.generate_with(1, *n)?)),
                    None => None,
                };
                Ok(BuiltObjective {
                    spec: ObjectiveSpec::Mlp(MlpClassifier::new(layer_sizes.clone(), *activation, train)?),
                    test_set: test,
                })
            }
        }
    }

    /// Number of training samples (1 for analytic objectives).
    pub fn sample_count(&self) -> usize {
        match self {
            ObjectiveConfig::Mlp { data, .. } => data.n_per_class * data.classes,
            _ => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LrConfig {
    pub shape: LrShape,
    pub lr_max: f64,
    #[serde(default)]
    pub lr_min: f64,
    #[serde(default)]
    pub warmup_steps: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EigenPolicy {
    Off,
    AtEnd,
    EveryK(u64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EigenConfig {
    #[serde(default = "default_policy")]
    pub policy: EigenPolicy,
    /// Ball radius of the `2h/rho^2` proxy.
    #[serde(default = "default_eigen_rho")]
    pub rho: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_stationarity")]
    pub stationarity_tol: f64,
    /// Fraction of the training set used for Hessian products.
    #[serde(default = "default_subset")]
    pub subset_fraction: f64,
}

fn default_policy() -> EigenPolicy {
    EigenPolicy::AtEnd
}
fn default_eigen_rho() -> f64 {
    1e-2
}
fn default_max_iters() -> usize {
    500
}
fn default_tol() -> f64 {
    1e-8
}
fn default_stationarity() -> f64 {
    crate::perturbation::DEFAULT_STATIONARITY_TOL
}
fn default_subset() -> f64 {
    0.1
}

impl Default for EigenConfig {
    fn default() -> Self {
        EigenConfig {
            policy: default_policy(),
            rho: default_eigen_rho(),
            max_iters: default_max_iters(),
            tol: default_tol(),
            stationarity_tol: default_stationarity(),
            subset_fraction: default_subset(),
        }
    }
}

impl EigenConfig {
    pub fn sharpness(&self, seed: u64) -> SharpnessConfig {
        SharpnessConfig {
            rho: self.rho,
            power: PowerIterationConfig {
                max_iters: self.max_iters,
                tol: self.tol,
                seed,
            },
            stationarity_tol: self.stationarity_tol,
        }
    }
}

/// Starting point. `point` fixes it outright; otherwise analytic objectives
/// start at `center + scale * N(0, I)` and MLPs use scaled LeCun-normal
/// weights, drawn from the run's init substream.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<f64>>,
    #[serde(default = "one")]
    pub scale: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for InitConfig {
    fn default() -> Self {
        InitConfig {
            point: None,
            center: None,
            scale: 1.0,
        }
    }
}

impl InitConfig {
    pub fn initial_point(&self, spec: &ObjectiveSpec, seed: u64) -> Result<ParamVector> {
        let dim = spec.dim();
        if let Some(p) = &self.point {
            if p.len() != dim {
                return Err(GsamError::Config(format!("init.point has {} entries, objective has {dim}", p.len())));
            }
            return ParamVector::new(p.clone());
        }
        let mut rng = substream(seed, Purpose::Init, 0);
        let values = match spec {
            ObjectiveSpec::Mlp(m) => {
                if self.center.is_some() {
                    return Err(GsamError::Config("init.center is not supported for MLP objectives".into()));
                }
                m.init_params(&mut rng, self.scale)
            }
            _ => {
                let center = self.center.clone().unwrap_or_else(|| vec![0.0; dim]);
                if center.len() != dim {
                    return Err(GsamError::Config(format!(
                        "init.center has {} entries, objective has {dim}",
                        center.len()
                    )));
                }
                center
                    .iter()
                    .zip(normal_vec(&mut rng, dim))
                    .map(|(c, z)| c + self.scale * z)
                    .collect()
            }
        };
        ParamVector::new(values)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// Vanilla descent with `rho = 0` and twice the step budget.
    Vanilla2x,
}

fn default_rho_schedule() -> RhoSchedule {
    RhoSchedule::LinearWithLr
}

fn default_log_every() -> u64 {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub name: String,
    pub objective: ObjectiveConfig,
    pub optimizer: GsamConfig,
    pub base: BaseOptimizerKind,
    pub lr: LrConfig,
    #[serde(default = "default_rho_schedule")]
    pub rho: RhoSchedule,
    /// Filled in from `epochs` when omitted.
    #[serde(default)]
    pub total_steps: u64,
    /// Convenience alternative to `total_steps`: whole passes over the data.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epochs: Option<u64>,
    /// Minibatch size; omitted means full batch.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<usize>,
    pub seeds: Vec<u64>,
    #[serde(default = "default_log_every")]
    pub log_every: u64,
    #[serde(default)]
    pub eigen: EigenConfig,
    #[serde(default)]
    pub init: InitConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
    /// Applied once at load time, then cleared.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<Preset>,
}

impl ExperimentConfig {
    /// Parses TOML text, applies presets and epoch conversion, and validates.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        Self::from_toml_str_at(text, Path::new("<inline>"))
    }

    fn from_toml_str_at(text: &str, path: &Path) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| GsamError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        cfg.resolve()
    }

    /// Builds from an already-parsed TOML table (used by sweeps).
    pub fn from_toml_table(table: toml::Table) -> Result<Self> {
        let cfg: ExperimentConfig = toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| {
            GsamError::Parse {
                path: "<sweep point>".into(),
                message: e.to_string(),
            }
        })?;
        cfg.resolve()
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| GsamError::Config(format!("cannot serialise config: {e}")))
    }

    /// Applies the preset and the epochs conversion, then validates.
    pub fn resolve(mut self) -> Result<Self> {
        if let Some(Preset::Vanilla2x) = self.preset.take() {
            self.optimizer.variant = Variant::Vanilla;
            self.optimizer.rho_max = 0.0;
            self.optimizer.rho_min = 0.0;
            self.rho = RhoSchedule::Constant;
            self.epochs = self.epochs.map(|e| 2 * e);
            self.total_steps *= 2;
        }
        if let Some(epochs) = self.epochs {
            let steps = epochs * self.steps_per_epoch() as u64;
            if self.total_steps != 0 && self.total_steps != steps {
                return Err(GsamError::Config(format!(
                    "total_steps ({}) disagrees with epochs ({epochs} epochs = {steps} steps)",
                    self.total_steps
                )));
            }
            self.total_steps = steps;
        }
        self.validate()?;
        Ok(self)
    }

    pub fn steps_per_epoch(&self) -> usize {
        let n = self.objective.sample_count();
        match self.batch_size {
            Some(b) if b > 0 && b < n => n.div_ceil(b),
            _ => 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(GsamError::Config("seeds must list at least one seed".into()));
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(GsamError::Config("seeds must be distinct".into()));
        }
        if self.total_steps == 0 {
            return Err(GsamError::Config("total_steps (or epochs) must be positive".into()));
        }
        if self.log_every == 0 {
            return Err(GsamError::Config("log_every must be positive".into()));
        }
        if self.batch_size == Some(0) {
            return Err(GsamError::Config("batch_size must be positive".into()));
        }
        if let RhoSchedule::InverseSqrt { rho0 } = self.rho {
            if !(rho0 >= 0.0 && rho0.is_finite()) {
                return Err(GsamError::Config(format!("rho0 must be non-negative, got {rho0}")));
            }
        }
        if let EigenPolicy::EveryK(0) = self.eigen.policy {
            return Err(GsamError::Config("eigen every_k must be positive".into()));
        }
        let e = &self.eigen;
        if !(e.rho > 0.0) || !(e.tol > 0.0) || e.max_iters == 0 || !(e.stationarity_tol > 0.0) {
            return Err(GsamError::Config("eigen rho, tol, max_iters and stationarity_tol must be positive".into()));
        }
        if !(e.subset_fraction > 0.0 && e.subset_fraction <= 1.0) {
            return Err(GsamError::Config("eigen subset_fraction must lie in (0, 1]".into()));
        }
        self.optimizer.validate()?;
        self.base.validate()?;
        self.lr_schedule().validate()?;
        // Building catches shape errors (layer sizes, asymmetric Hessians, ...).
        let built = self.objective.build()?;
        self.init.initial_point(&built.spec, self.seeds[0])?;
        Ok(())
    }

    pub fn lr_schedule(&self) -> LrSchedule {
        LrSchedule {
            lr_max: self.lr.lr_max,
            lr_min: self.lr.lr_min,
            warmup_steps: self.lr.warmup_steps,
            total_steps: self.total_steps,
            shape: self.lr.shape,
        }
    }

    /// SHA-256 over the canonical JSON form of the resolved config.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_string(self).expect("config serialises to JSON");
        Sha256::digest(json.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Reads, parses and validates a config file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| GsamError::io(path, e))?;
    ExperimentConfig::from_toml_str_at(&text, path)
}
