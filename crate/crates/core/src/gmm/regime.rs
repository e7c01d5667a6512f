use serde::{Deserialize, Serialize};

use super::{
    em_estimate, fit_single_gaussian, method_of_moments, EmOptions, GmmError, MeanPair,
};
use crate::oracle::{MixtureOracle, QueryTag};

/// Estimator picked for one batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorBranch {
    ExpectationMaximization,
    MethodOfMoments,
    SingleGaussian,
    /// `sigma == 0`: the distinct sample values are the means.
    Noiseless,
}

/// Constants behind every `Theta(.)` batch size.
///
/// With `L = ceil(ln 1/eta)` and `r = sigma / gamma`:
///
/// | batch            | size                               |
/// |------------------|------------------------------------|
/// | pilot            | `c_test * L`                       |
/// | method of moments| `c_mom * ceil(r^4) * L`            |
/// | EM               | `c_em * ceil(r^2) * L`             |
/// | single Gaussian  | `max(4, c_single * ceil(r^2) * L)` |
/// | noiseless        | `max(2, ceil(log2(2 / eta)))`      |
///
/// Median-of-means uses `ceil(c_batches * L)` batches, capped so that every
/// batch holds at least two samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatchPolicy {
    pub c_em: f64,
    pub c_mom: f64,
    pub c_single: f64,
    pub c_test: f64,
    pub c_batches: f64,
}

impl Default for BatchPolicy {
    fn default() -> Self {
        Self {
            c_em: 8.0,
            c_mom: 24.0,
            c_single: 8.0,
            c_test: 512.0,
            c_batches: 1.0,
        }
    }
}

impl BatchPolicy {
    pub fn validate(&self) -> Result<(), GmmError> {
        let all = [
            ("c_em", self.c_em),
            ("c_mom", self.c_mom),
            ("c_single", self.c_single),
            ("c_test", self.c_test),
            ("c_batches", self.c_batches),
        ];
        for (name, v) in all {
            if !(v > 0.0) || !v.is_finite() {
                return Err(GmmError::InvalidParameter(format!("{name} must be > 0")));
            }
        }
        Ok(())
    }

    pub fn log_term(eta: f64) -> f64 {
        (1.0 / eta).ln().ceil().max(1.0)
    }

    fn scaled(c: f64, factor: f64, eta: f64) -> usize {
        (c * factor * Self::log_term(eta)).ceil() as usize
    }

    pub fn pilot_size(&self, eta: f64) -> usize {
        Self::scaled(self.c_test, 1.0, eta).max(2)
    }

    pub fn em_size(&self, sigma: f64, gamma: f64, eta: f64) -> usize {
        Self::scaled(self.c_em, (sigma / gamma).powi(2).ceil(), eta).max(2)
    }

    pub fn mom_size(&self, sigma: f64, gamma: f64, eta: f64) -> usize {
        Self::scaled(self.c_mom, (sigma / gamma).powi(4).ceil(), eta).max(2)
    }

    pub fn single_size(&self, sigma: f64, gamma: f64, eta: f64) -> usize {
        Self::scaled(self.c_single, (sigma / gamma).powi(2).ceil(), eta).max(4)
    }

    pub fn noiseless_size(eta: f64) -> usize {
        ((2.0 / eta).log2().ceil() as usize).max(2)
    }

    /// Median-of-means batch count for `samples` draws.
    pub fn batch_count(&self, eta: f64, samples: usize) -> usize {
        let wanted = (self.c_batches * Self::log_term(eta)).ceil() as usize;
        wanted.clamp(1, (samples / 2).max(1))
    }

    /// Samples drawn after the pilot for a given branch.
    pub fn branch_size(&self, branch: EstimatorBranch, sigma: f64, gamma: f64, eta: f64) -> usize {
        match branch {
            EstimatorBranch::ExpectationMaximization => self.em_size(sigma, gamma, eta),
            EstimatorBranch::MethodOfMoments => self.mom_size(sigma, gamma, eta),
            EstimatorBranch::SingleGaussian => self.single_size(sigma, gamma, eta),
            EstimatorBranch::Noiseless => Self::noiseless_size(eta),
        }
    }

    /// Total samples `test_and_estimate` spends on one query that ends in
    /// `branch` (pilot included; the noiseless path has no pilot).
    pub fn total_for(&self, branch: EstimatorBranch, sigma: f64, gamma: f64, eta: f64) -> usize {
        match branch {
            EstimatorBranch::Noiseless => Self::noiseless_size(eta),
            b => self.pilot_size(eta) + self.branch_size(b, sigma, gamma, eta),
        }
    }
}

/// Mean estimates for one query with the precision they were sized for.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimatePair {
    pub mu_hat_1: f64,
    pub mu_hat_2: f64,
    pub gamma: f64,
    pub branch: EstimatorBranch,
    pub samples_used: usize,
}

impl MeanEstimatePair {
    pub fn new(mu_hat_1: f64, mu_hat_2: f64, gamma: f64) -> Self {
        Self {
            mu_hat_1,
            mu_hat_2,
            gamma,
            branch: EstimatorBranch::Noiseless,
            samples_used: 0,
        }
    }

    pub fn means(&self) -> MeanPair {
        MeanPair::new(self.mu_hat_1, self.mu_hat_2)
    }

    /// Estimate number `p` (1 or 2).
    pub fn get(&self, p: usize) -> f64 {
        match p {
            1 => self.mu_hat_1,
            2 => self.mu_hat_2,
            _ => panic!("mean index must be 1 or 2, got {p}"),
        }
    }

    pub fn gap(&self) -> f64 {
        (self.mu_hat_1 - self.mu_hat_2).abs()
    }

    pub fn swapped(&self) -> Self {
        Self {
            mu_hat_1: self.mu_hat_2,
            mu_hat_2: self.mu_hat_1,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PilotOutcome {
    pub branch: EstimatorBranch,
    pub pilot_gap: f64,
    pub samples: usize,
}

/// Regime decision from the pilot's estimated separation.
pub fn classify_regime(pilot_gap: f64, sigma: f64, gamma: f64) -> EstimatorBranch {
    if sigma > gamma && pilot_gap <= 15.0 * sigma / 32.0 {
        EstimatorBranch::MethodOfMoments
    } else if sigma <= gamma && pilot_gap <= 15.0 * gamma / 32.0 {
        EstimatorBranch::SingleGaussian
    } else {
        EstimatorBranch::ExpectationMaximization
    }
}

fn validate(sigma: f64, gamma: f64, eta: f64) -> Result<(), GmmError> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(GmmError::InvalidParameter(format!("sigma must be >= 0, got {sigma}")));
    }
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(GmmError::InvalidParameter(format!("gamma must be > 0, got {gamma}")));
    }
    if !(eta > 0.0 && eta < 1.0) {
        return Err(GmmError::InvalidParameter(format!("eta must be in (0, 1), got {eta}")));
    }
    Ok(())
}

/// Draws the pilot batch for `x`, estimates the separation with the method of
/// moments and picks the estimator. Requires `sigma > 0`.
pub fn pilot_test(
    oracle: &mut MixtureOracle,
    x: &[f64],
    tag: QueryTag,
    sigma: f64,
    gamma: f64,
    eta: f64,
    policy: &BatchPolicy,
) -> Result<PilotOutcome, GmmError> {
    validate(sigma, gamma, eta)?;
    if sigma == 0.0 {
        return Err(GmmError::DegenerateSigma(sigma));
    }
    let t = policy.pilot_size(eta);
    let ys = oracle.query_batch(x, t, tag)?;
    let pilot = method_of_moments(&ys, sigma, policy.batch_count(eta, t))?;
    Ok(PilotOutcome {
        branch: classify_regime(pilot.gap(), sigma, gamma),
        pilot_gap: pilot.gap(),
        samples: t,
    })
}

/// Estimates both means of query `x` to precision `gamma` (up to label swap),
/// choosing the estimator from a pilot batch. All samples are charged to `tag`.
pub fn test_and_estimate(
    oracle: &mut MixtureOracle,
    x: &[f64],
    tag: QueryTag,
    sigma: f64,
    gamma: f64,
    eta: f64,
    policy: &BatchPolicy,
) -> Result<MeanEstimatePair, GmmError> {
    validate(sigma, gamma, eta)?;
    if sigma == 0.0 {
        let t = BatchPolicy::noiseless_size(eta);
        let ys = oracle.query_batch(x, t, tag)?;
        let lo = ys.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        return Ok(MeanEstimatePair {
            mu_hat_1: lo,
            mu_hat_2: hi,
            gamma,
            branch: EstimatorBranch::Noiseless,
            samples_used: t,
        });
    }

    let pilot = pilot_test(oracle, x, tag, sigma, gamma, eta, policy)?;
    let t = policy.branch_size(pilot.branch, sigma, gamma, eta);
    let ys = oracle.query_batch(x, t, tag)?;
    let means = match pilot.branch {
        EstimatorBranch::MethodOfMoments => {
            method_of_moments(&ys, sigma, policy.batch_count(eta, t))?
        }
        EstimatorBranch::SingleGaussian => {
            let c = fit_single_gaussian(&ys)?;
            MeanPair::new(c, c)
        }
        EstimatorBranch::ExpectationMaximization => {
            em_estimate(&ys, sigma, &EmOptions::default())?.means
        }
        EstimatorBranch::Noiseless => unreachable!("pilot never selects the noiseless path"),
    };
    Ok(MeanEstimatePair {
        mu_hat_1: means.first,
        mu_hat_2: means.second,
        gamma,
        branch: pilot.branch,
        samples_used: pilot.samples + t,
    })
}
