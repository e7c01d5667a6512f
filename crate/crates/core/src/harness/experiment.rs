use std::path::Path;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ExperimentConfig, HarnessError, TruthSpec};
use crate::linalg::norm2;
use crate::oracle::{MixtureOracle, SparseVectorPair};
use crate::recovery::{
    recover, recover_merged, recover_noiseless, recover_two_vectors, RecoveryBranch,
    RecoveryError, RecoveryReport,
};
use crate::seed::{derive_seed, stream};

fn random_sparse(rng: &mut ChaCha8Rng, n: usize, k: usize, low: f64, high: f64) -> Vec<f64> {
    let mut beta = vec![0.0; n];
    for i in sample(rng, n, k).into_iter() {
        let magnitude = if high > low { rng.random_range(low..high) } else { low };
        beta[i] = if rng.random::<bool>() { magnitude } else { -magnitude };
    }
    beta
}

/// Draws the hidden pair for one trial, deterministic in `seed`.
pub fn generate_truth(spec: &TruthSpec, n: usize, k: usize, seed: u64) -> Result<SparseVectorPair, HarnessError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (beta1, beta2) = match spec {
        TruthSpec::RandomKsparse { low, high } => loop {
            let b1 = random_sparse(&mut rng, n, k, *low, *high);
            let b2 = random_sparse(&mut rng, n, k, *low, *high);
            if b1 != b2 {
                break (b1, b2);
            }
        },
        TruthSpec::SharedSupport { low, high, gap } => {
            let b1 = random_sparse(&mut rng, n, k, *low, *high);
            let support: Vec<usize> = (0..n).filter(|&i| b1[i] != 0.0).collect();
            let mut delta = vec![0.0; n];
            for &i in &support {
                delta[i] = rng.sample(StandardNormal);
            }
            let scale = gap / norm2(&delta);
            let b2 = b1.iter().zip(&delta).map(|(b, d)| b + d * scale).collect();
            (b1, b2)
        }
        TruthSpec::Twin { low, high, offset } => {
            let b1 = random_sparse(&mut rng, n, k, *low, *high);
            let mut b2 = b1.clone();
            let first = b1.iter().position(|&v| v != 0.0).unwrap_or(0);
            b2[first] += offset;
            (b1, b2)
        }
        TruthSpec::Explicit { beta1, beta2 } => (beta1.clone(), beta2.clone()),
    };
    Ok(SparseVectorPair::new(beta1, beta2, k)?)
}

/// Outcome of one trial: a report, or the error that stopped it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub trial: usize,
    pub seed: u64,
    pub report: Option<RecoveryReport>,
    pub error: Option<String>,
}

impl TrialReport {
    pub fn succeeded(&self) -> bool {
        self.report.is_some()
    }
}

/// Runs one trial with sub-seeds derived from the trial seed.
pub fn run_trial(config: &ExperimentConfig, trial: usize) -> TrialReport {
    let trial_seed = derive_seed(config.seed, trial as u64);
    let result = (|| -> Result<RecoveryReport, HarnessError> {
        let truth = generate_truth(&config.truth, config.n, config.k, derive_seed(trial_seed, stream::TRUTH))?;
        let gap_bound = config.gap_bound.unwrap_or_else(|| truth.gap());
        let rc = config.recovery_config(gap_bound, derive_seed(trial_seed, stream::DESIGN));
        let mut oracle = MixtureOracle::new(truth, config.sigma, derive_seed(trial_seed, stream::ORACLE))?;
        let (n, k, s, g) = (config.n, config.k, config.sigma, config.gamma);
        let report: Result<RecoveryReport, RecoveryError> = match config.pipeline.forced() {
            None => recover(&mut oracle, n, k, s, g, &rc),
            Some(RecoveryBranch::SmallGamma) => recover_two_vectors(&mut oracle, n, k, s, g, &rc),
            Some(RecoveryBranch::Merged) => recover_merged(&mut oracle, n, k, s, g, &rc),
            Some(RecoveryBranch::Noiseless) => recover_noiseless(&mut oracle, n, k, &rc),
        };
        Ok(report?)
    })();
    match result {
        Ok(report) => TrialReport {
            trial,
            seed: trial_seed,
            report: Some(report),
            error: None,
        },
        Err(e) => TrialReport {
            trial,
            seed: trial_seed,
            report: None,
            error: Some(e.to_string()),
        },
    }
}

/// Validates `config`, runs every trial (in parallel, results in trial order)
/// and writes the reports as JSON when an output path is configured. Failed
/// trials are recorded, not fatal.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<TrialReport>, HarnessError> {
    config.validate()?;
    let reports: Vec<TrialReport> = (0..config.trials)
        .into_par_iter()
        .map(|t| run_trial(config, t))
        .collect();
    if let Some(path) = &config.output {
        write_reports(&reports, path)?;
    }
    Ok(reports)
}

pub fn write_reports(reports: &[TrialReport], path: &Path) -> Result<(), HarnessError> {
    let mut text = serde_json::to_string_pretty(reports)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}
