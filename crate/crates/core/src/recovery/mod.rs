//! End-to-end recovery of both hidden vectors.
//!
//! Three pipelines share one report type:
//!
//! - [`recover_two_vectors`]: per-query mixture estimates, alignment through
//!   sum/difference queries, then one basis pursuit per vector with radius
//!   `10 gamma`. Needs `sigma > 0` and `gamma` small relative to the gap.
//! - [`recover_merged`]: when `gamma` is comparable to the gap, one quartile
//!   fit per query and a single basis pursuit with radius `gamma`.
//! - [`recover_noiseless`]: `sigma == 0`; repeated queries reveal both
//!   projections exactly and alignment is exact.
//!
//! [`recover`] picks the pipeline from `sigma` and the configured gap bound.

mod basis_pursuit;
mod design;
mod merged;
mod noiseless;
mod two_vectors;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alignment::{AlignError, SMALL_GAMMA_RATIO};
use crate::gmm::{BatchPolicy, EstimatorBranch, GmmError};
use crate::linalg::{dist2, norm2};
use crate::oracle::{MixtureOracle, OracleError, SparseVectorPair};

pub use basis_pursuit::{basis_pursuit, BPSolution, BpError, SolverOptions};
pub use design::{check_measurements, gaussian_design, measurement_count, SensingDesign};
pub use merged::{merged_batch_size, recover_merged};
pub use noiseless::{noiseless_repeats, recover_noiseless};
pub use two_vectors::recover_two_vectors;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RecoveryError {
    #[error("invalid recovery configuration: {0}")]
    InvalidConfig(String),
    #[error("instance belongs to the {0} pipeline")]
    Route(RecoveryBranch),
    #[error("query {query} is inconsistent with the anchor after exact alignment")]
    DuplicateProjection { query: usize },
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Gmm(#[from] GmmError),
    #[error(transparent)]
    Align(#[from] AlignError),
    #[error(transparent)]
    Solver(#[from] BpError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecoveryBranch {
    SmallGamma,
    Merged,
    Noiseless,
}

impl std::fmt::Display for RecoveryBranch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::SmallGamma => "small_gamma",
            Self::Merged => "merged",
            Self::Noiseless => "noiseless",
        })
    }
}

/// How the per-query failure probability is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EtaPreset {
    /// `eta = n^-2`.
    PerQueryN2,
    /// `eta = 1 / (m m' ln n)`, a union bound over every batch.
    ProofPreset,
}

impl std::str::FromStr for EtaPreset {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "per_query_n2" => Ok(Self::PerQueryN2),
            "proof_preset" => Ok(Self::ProofPreset),
            other => Err(format!("unknown eta preset {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecoveryConfig {
    /// `m = ceil(c_s k ln n)` unless `m_override` is set.
    pub c_s: f64,
    pub m_override: Option<usize>,
    pub policy: BatchPolicy,
    pub eta_preset: EtaPreset,
    /// Known bound on `||beta1 - beta2||_2`: a lower bound for the small-gamma
    /// pipeline, an upper bound for the merged one.
    pub gap_bound: f64,
    /// Basis pursuit radius in units of `gamma`.
    pub radius_factor: f64,
    pub merged_radius_factor: f64,
    /// Noiseless repeats per query; default `2 ceil(ln m)`.
    pub noiseless_repeats: Option<usize>,
    pub design_seed: u64,
    pub solver: SolverOptions,
}

impl Default for RecoveryConfig {
    fn default() -> Self {
        Self {
            c_s: 3.0,
            m_override: None,
            policy: BatchPolicy::default(),
            eta_preset: EtaPreset::PerQueryN2,
            gap_bound: 1.0,
            radius_factor: 10.0,
            merged_radius_factor: 1.0,
            noiseless_repeats: None,
            design_seed: 0,
            solver: SolverOptions::default(),
        }
    }
}

impl RecoveryConfig {
    pub fn validate(&self) -> Result<(), RecoveryError> {
        let positive = [
            ("c_s", self.c_s),
            ("gap_bound", self.gap_bound),
            ("radius_factor", self.radius_factor),
            ("merged_radius_factor", self.merged_radius_factor),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(RecoveryError::InvalidConfig(format!("{name} must be > 0, got {v}")));
            }
        }
        if self.m_override == Some(0) || self.noiseless_repeats == Some(0) {
            return Err(RecoveryError::InvalidConfig("counts must be >= 1".into()));
        }
        self.policy.validate()?;
        Ok(())
    }

    /// Number of base queries for dimension `n` and sparsity `k`.
    pub fn measurements(&self, k: usize, n: usize) -> Result<usize, RecoveryError> {
        match self.m_override {
            Some(m) => {
                check_measurements(m, self.c_s, k, n)?;
                Ok(m)
            }
            None => Ok(measurement_count(self.c_s, k, n)),
        }
    }
}

/// Best-permutation distances to the truth (simulation diagnostics).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruthErrors {
    pub error_1: f64,
    pub error_2: f64,
    pub relative_error_1: f64,
    pub relative_error_2: f64,
    /// Whether `beta_hat_1` was matched to `beta2`.
    pub swapped: bool,
}

impl TruthErrors {
    pub fn compute(truth: &SparseVectorPair, hat1: &[f64], hat2: &[f64]) -> Self {
        let (b1, b2) = (truth.beta1(), truth.beta2());
        let straight = [dist2(hat1, b1), dist2(hat2, b2)];
        let crossed = [dist2(hat1, b2), dist2(hat2, b1)];
        let sq = |e: [f64; 2]| e[0] * e[0] + e[1] * e[1];
        let swapped = sq(crossed) < sq(straight);
        let (e, t) = if swapped {
            (crossed, [b2, b1])
        } else {
            (straight, [b1, b2])
        };
        let rel = |err: f64, v: &[f64]| {
            let nv = norm2(v);
            if nv > 0.0 {
                err / nv
            } else {
                err
            }
        };
        Self {
            error_1: e[0],
            error_2: e[1],
            relative_error_1: rel(e[0], t[0]),
            relative_error_2: rel(e[1], t[1]),
            swapped,
        }
    }

    pub fn max_error(&self) -> f64 {
        self.error_1.max(self.error_2)
    }

    pub fn max_relative_error(&self) -> f64 {
        self.relative_error_1.max(self.relative_error_2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverSummary {
    pub iterations: usize,
    pub converged: bool,
    pub residual_l2: f64,
    pub l1_norm: f64,
    pub duality_gap: f64,
}

impl From<&BPSolution> for SolverSummary {
    fn from(s: &BPSolution) -> Self {
        Self {
            iterations: s.solver_iters,
            converged: s.converged,
            residual_l2: s.residual_l2,
            l1_norm: s.l1_norm,
            duality_gap: s.duality_gap(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub branch: RecoveryBranch,
    pub n: usize,
    pub k: usize,
    pub sigma: f64,
    pub gamma: f64,
    pub eta: f64,
    pub m: usize,
    /// Anchor pool size (small-gamma pipeline only).
    pub m_prime: Option<usize>,
    pub anchor_index: Option<usize>,
    pub c_s: f64,
    pub radius: f64,
    pub policy: BatchPolicy,
    pub beta_hat_1: Vec<f64>,
    pub beta_hat_2: Vec<f64>,
    pub errors: TruthErrors,
    pub total_queries: u64,
    pub base_queries: u64,
    pub alignment_queries: u64,
    pub estimator_branch_histogram: BTreeMap<EstimatorBranch, usize>,
    /// Pairs whose alignment was inconclusive and kept their listed order.
    pub alignment_fallbacks: usize,
    pub solver: Vec<SolverSummary>,
    pub realized_snr: f64,
}

/// Runs basis pursuit and keeps the best iterate when the cap is hit.
pub(crate) fn solve_lenient(
    design: &SensingDesign,
    values: &[f64],
    radius: f64,
    opts: &SolverOptions,
) -> Result<BPSolution, RecoveryError> {
    let root_m = (design.m() as f64).sqrt();
    let y: Vec<f64> = values.iter().map(|v| v / root_m).collect();
    match basis_pursuit(design.matrix(), &y, radius, opts) {
        Ok(sol) => Ok(sol),
        Err(BpError::NotConverged { solution, .. }) => Ok(*solution),
        Err(e) => Err(e.into()),
    }
}

pub(crate) fn validate_common(n: usize, k: usize, gamma: f64, oracle: &MixtureOracle) -> Result<(), RecoveryError> {
    if n == 0 || k == 0 || k > n {
        return Err(RecoveryError::InvalidConfig(format!("need 1 <= k <= n, got k = {k}, n = {n}")));
    }
    if oracle.n() != n {
        return Err(RecoveryError::InvalidConfig(format!(
            "oracle dimension {} differs from n = {n}",
            oracle.n()
        )));
    }
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(RecoveryError::InvalidConfig(format!("gamma must be > 0, got {gamma}")));
    }
    Ok(())
}

/// Pipeline that [`recover`] would dispatch to.
pub fn select_branch(sigma: f64, gamma: f64, config: &RecoveryConfig) -> RecoveryBranch {
    if sigma == 0.0 {
        RecoveryBranch::Noiseless
    } else if gamma > SMALL_GAMMA_RATIO * config.gap_bound {
        RecoveryBranch::Merged
    } else {
        RecoveryBranch::SmallGamma
    }
}

/// Dispatches to the pipeline matching `sigma`, `gamma` and the gap bound.
pub fn recover(
    oracle: &mut MixtureOracle,
    n: usize,
    k: usize,
    sigma: f64,
    gamma: f64,
    config: &RecoveryConfig,
) -> Result<RecoveryReport, RecoveryError> {
    match select_branch(sigma, gamma, config) {
        RecoveryBranch::Noiseless => recover_noiseless(oracle, n, k, config),
        RecoveryBranch::Merged => recover_merged(oracle, n, k, sigma, gamma, config),
        RecoveryBranch::SmallGamma => recover_two_vectors(oracle, n, k, sigma, gamma, config),
    }
}
