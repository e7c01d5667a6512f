use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::gmm::BatchPolicy;
use crate::recovery::{EtaPreset, RecoveryBranch, RecoveryConfig, SolverOptions};

/// How the two hidden vectors of a trial are generated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TruthSpec {
    /// Independent uniformly placed supports with magnitudes `+-U[low, high]`.
    RandomKsparse { low: f64, high: f64 },
    /// `beta2 = beta1 + delta` with `delta` on the support of `beta1` and
    /// `||delta||_2 = gap`.
    SharedSupport { low: f64, high: f64, gap: f64 },
    /// `beta2` equals `beta1` except for `offset` added to one support entry.
    Twin { low: f64, high: f64, offset: f64 },
    Explicit { beta1: Vec<f64>, beta2: Vec<f64> },
}

impl Default for TruthSpec {
    fn default() -> Self {
        Self::RandomKsparse { low: 1.0, high: 2.0 }
    }
}

impl TruthSpec {
    fn validate(&self, n: usize) -> Result<(), HarnessError> {
        let range = |low: f64, high: f64| {
            if !(low > 0.0 && high >= low && high.is_finite()) {
                return Err(HarnessError::Config(format!(
                    "magnitude range must satisfy 0 < low <= high, got [{low}, {high}]"
                )));
            }
            Ok(())
        };
        match self {
            Self::RandomKsparse { low, high } => range(*low, *high),
            Self::SharedSupport { low, high, gap } => {
                range(*low, *high)?;
                if !(*gap > 0.0) || !gap.is_finite() {
                    return Err(HarnessError::Config(format!("truth gap must be > 0, got {gap}")));
                }
                Ok(())
            }
            Self::Twin { low, high, offset } => {
                range(*low, *high)?;
                if *offset == 0.0 || !offset.is_finite() {
                    return Err(HarnessError::Config("twin offset must be finite and non-zero".into()));
                }
                Ok(())
            }
            Self::Explicit { beta1, beta2 } => {
                if beta1.len() != n || beta2.len() != n {
                    return Err(HarnessError::Config(format!(
                        "explicit vectors must have length n = {n}"
                    )));
                }
                Ok(())
            }
        }
    }
}

/// Which pipeline each trial runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PipelineChoice {
    /// Noiseless for `sigma = 0`, merged when `gamma` is large relative to the
    /// gap bound, small-gamma otherwise.
    #[default]
    Auto,
    SmallGamma,
    Merged,
    Noiseless,
}

impl PipelineChoice {
    pub fn forced(self) -> Option<RecoveryBranch> {
        match self {
            Self::Auto => None,
            Self::SmallGamma => Some(RecoveryBranch::SmallGamma),
            Self::Merged => Some(RecoveryBranch::Merged),
            Self::Noiseless => Some(RecoveryBranch::Noiseless),
        }
    }
}

impl std::str::FromStr for PipelineChoice {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "auto" => Ok(Self::Auto),
            "small_gamma" => Ok(Self::SmallGamma),
            "merged" => Ok(Self::Merged),
            "noiseless" => Ok(Self::Noiseless),
            other => Err(format!("unknown pipeline {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

impl std::str::FromStr for OutputFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            other => Err(format!("unknown format {other:?}")),
        }
    }
}

/// One experiment: an instance family, the pipeline constants and the trial
/// count. Loaded from a TOML file; every field has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n: usize,
    pub k: usize,
    /// Base query count; `ceil(c_s k ln n)` when absent.
    pub m: Option<usize>,
    pub sigma: f64,
    pub gamma: f64,
    /// Known gap bound handed to the pipelines. When absent each trial uses
    /// the gap of its own generated truth.
    pub gap_bound: Option<f64>,
    pub seed: u64,
    pub trials: usize,
    pub pipeline: PipelineChoice,
    pub eta_preset: EtaPreset,
    pub c_s: f64,
    pub c_em: f64,
    pub c_mom: f64,
    pub c_single: f64,
    pub c_test: f64,
    pub c_batches: f64,
    pub radius_factor: f64,
    pub merged_radius_factor: f64,
    pub noiseless_repeats: Option<usize>,
    pub solver_gap_tol: f64,
    pub solver_max_iter: usize,
    pub truth: TruthSpec,
    pub output: Option<PathBuf>,
    pub format: OutputFormat,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let policy = BatchPolicy::default();
        let rec = RecoveryConfig::default();
        Self {
            n: 100,
            k: 5,
            m: None,
            sigma: 0.025,
            gamma: 0.025,
            gap_bound: None,
            seed: 0,
            trials: 1,
            pipeline: PipelineChoice::Auto,
            eta_preset: rec.eta_preset,
            c_s: rec.c_s,
            c_em: policy.c_em,
            c_mom: policy.c_mom,
            c_single: policy.c_single,
            c_test: policy.c_test,
            c_batches: policy.c_batches,
            radius_factor: rec.radius_factor,
            merged_radius_factor: rec.merged_radius_factor,
            noiseless_repeats: None,
            solver_gap_tol: rec.solver.gap_tol,
            solver_max_iter: rec.solver.max_iter,
            truth: TruthSpec::default(),
            output: None,
            format: OutputFormat::Json,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String, HarnessError> {
        toml::to_string(self).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn policy(&self) -> BatchPolicy {
        BatchPolicy {
            c_em: self.c_em,
            c_mom: self.c_mom,
            c_single: self.c_single,
            c_test: self.c_test,
            c_batches: self.c_batches,
        }
    }

    /// Pipeline configuration for one trial.
    pub fn recovery_config(&self, gap_bound: f64, design_seed: u64) -> RecoveryConfig {
        RecoveryConfig {
            c_s: self.c_s,
            m_override: self.m,
            policy: self.policy(),
            eta_preset: self.eta_preset,
            gap_bound,
            radius_factor: self.radius_factor,
            merged_radius_factor: self.merged_radius_factor,
            noiseless_repeats: self.noiseless_repeats,
            design_seed,
            solver: SolverOptions {
                gap_tol: self.solver_gap_tol,
                max_iter: self.solver_max_iter,
                ..SolverOptions::default()
            },
        }
    }

    /// Checks everything that can be checked before a single query is issued.
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.n == 0 || self.k == 0 || self.k > self.n {
            return Err(HarnessError::Config(format!(
                "need 1 <= k <= n, got k = {}, n = {}",
                self.k, self.n
            )));
        }
        if self.trials == 0 {
            return Err(HarnessError::Config("trials must be >= 1".into()));
        }
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return Err(HarnessError::Config(format!("sigma must be >= 0, got {}", self.sigma)));
        }
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return Err(HarnessError::Config(format!("gamma must be > 0, got {}", self.gamma)));
        }
        if let Some(g) = self.gap_bound {
            if !(g > 0.0) || !g.is_finite() {
                return Err(HarnessError::Config(format!("gap_bound must be > 0, got {g}")));
            }
        }
        if !(self.solver_gap_tol > 0.0) || self.solver_max_iter == 0 {
            return Err(HarnessError::Config("solver tolerances must be > 0".into()));
        }
        if self.pipeline == PipelineChoice::Noiseless && self.sigma != 0.0 {
            return Err(HarnessError::Config("the noiseless pipeline needs sigma = 0".into()));
        }
        self.truth.validate(self.n)?;
        self.recovery_config(self.gap_bound.unwrap_or(1.0), 0)
            .validate()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        if let Some(m) = self.m {
            crate::recovery::check_measurements(m, self.c_s, self.k, self.n)
                .map_err(|e| HarnessError::Config(e.to_string()))?;
        }
        Ok(())
    }

    /// Sets a numeric field by name, as used by sweeps and CLI overrides.
    pub fn set_param(&mut self, name: &str, value: f64) -> Result<(), HarnessError> {
        let count = |v: f64| -> Result<usize, HarnessError> {
            if v >= 0.0 && v.fract() == 0.0 && v.is_finite() {
                Ok(v as usize)
            } else {
                Err(HarnessError::Config(format!("{name} must be a non-negative integer, got {v}")))
            }
        };
        match name {
            "n" => self.n = count(value)?,
            "k" => self.k = count(value)?,
            "m" => self.m = Some(count(value)?),
            "trials" => self.trials = count(value)?,
            "sigma" => self.sigma = value,
            "gamma" => self.gamma = value,
            "gap_bound" => self.gap_bound = Some(value),
            "c_s" => self.c_s = value,
            "c_em" => self.c_em = value,
            "c_mom" => self.c_mom = value,
            "c_single" => self.c_single = value,
            "c_test" => self.c_test = value,
            "c_batches" => self.c_batches = value,
            "radius_factor" => self.radius_factor = value,
            "gap" => match &mut self.truth {
                TruthSpec::SharedSupport { gap, .. } => *gap = value,
                _ => {
                    return Err(HarnessError::Config(
                        "the gap axis needs a shared_support truth".into(),
                    ))
                }
            },
            other => return Err(HarnessError::Config(format!("unknown parameter {other:?}"))),
        }
        Ok(())
    }
}
