//! Parameter learning for the equal-weight two-component scalar Gaussian
//! mixture `1/2 N(mu1, sigma^2) + 1/2 N(mu2, sigma^2)` with known `sigma`.
//!
//! Three estimators are provided, each suited to a different regime:
//!
//! * [`em_estimate`]: expectation maximization over the two means, best when
//!   the components are well separated;
//! * [`method_of_moments`]: solves for the means from median-of-means
//!   estimates of the mixture mean and variance, used when the separation is
//!   at most of the order of `sigma` and `sigma` exceeds the target precision;
//! * [`fit_single_gaussian`]: midpoint of the first and third quartiles, used
//!   when both the noise and the separation are below the target precision.
//!
//! [`test_and_estimate`] runs a short pilot to decide which one to use.

mod regime;

pub use regime::{
    classify_regime, pilot_test, test_and_estimate, BatchPolicy, EstimatorBranch,
    MeanEstimatePair, PilotOutcome,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::oracle::OracleError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GmmError {
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("batch count must be >= 1")]
    ZeroBatches,
    #[error("sigma must be > 0 for EM (got {0}); use the noiseless path")]
    DegenerateSigma(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// A non-empty list of draws from the mixture.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureSample(Vec<f64>);

impl MixtureSample {
    pub fn new(values: Vec<f64>) -> Result<Self, GmmError> {
        if values.is_empty() {
            return Err(GmmError::TooFewSamples { needed: 1, got: 0 });
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Deref for MixtureSample {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Two estimated component means. The order carries no meaning.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanPair {
    pub first: f64,
    pub second: f64,
}

impl MeanPair {
    pub fn new(first: f64, second: f64) -> Self {
        Self { first, second }
    }

    pub fn gap(&self) -> f64 {
        (self.first - self.second).abs()
    }

    pub fn swapped(&self) -> Self {
        Self::new(self.second, self.first)
    }

    pub fn negated(&self) -> Self {
        Self::new(-self.first, -self.second)
    }

    /// Sorted ascending, for comparisons that ignore labels.
    pub fn sorted(&self) -> (f64, f64) {
        if self.first <= self.second {
            (self.first, self.second)
        } else {
            (self.second, self.first)
        }
    }

    /// Worst per-mean error against `(mu1, mu2)` under the better of the
    /// two label assignments.
    pub fn permutation_error(&self, mu1: f64, mu2: f64) -> f64 {
        let direct = (self.first - mu1).abs().max((self.second - mu2).abs());
        let crossed = (self.first - mu2).abs().max((self.second - mu1).abs());
        direct.min(crossed)
    }

    /// Average per-mean absolute error under the better label assignment.
    pub fn mean_abs_error(&self, mu1: f64, mu2: f64) -> f64 {
        let direct = (self.first - mu1).abs() + (self.second - mu2).abs();
        let crossed = (self.first - mu2).abs() + (self.second - mu1).abs();
        direct.min(crossed) / 2.0
    }
}

/// Median-of-means estimates of `E X` and `var X`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimates {
    pub m1_hat: f64,
    pub m2_hat: f64,
    pub batches: usize,
}

pub(crate) fn median(values: &mut [f64]) -> f64 {
    assert!(!values.is_empty());
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// Splits the samples into `batches` equal consecutive batches (the remainder
/// is dropped) and returns the medians of the per-batch means and unbiased
/// per-batch variances.
pub fn median_of_means(samples: &[f64], batches: usize) -> Result<MomentEstimates, GmmError> {
    if batches == 0 {
        return Err(GmmError::ZeroBatches);
    }
    let needed = 2 * batches;
    if samples.len() < needed {
        return Err(GmmError::TooFewSamples {
            needed,
            got: samples.len(),
        });
    }
    let t = samples.len() / batches;
    let mut means = Vec::with_capacity(batches);
    let mut vars = Vec::with_capacity(batches);
    for chunk in samples.chunks_exact(t).take(batches) {
        let mean = chunk.iter().sum::<f64>() / t as f64;
        let ss: f64 = chunk.iter().map(|y| (y - mean) * (y - mean)).sum();
        means.push(mean);
        vars.push(ss / (t - 1) as f64);
    }
    Ok(MomentEstimates {
        m1_hat: median(&mut means),
        m2_hat: median(&mut vars),
        batches,
    })
}

/// Solves `mu1 + mu2 = 2 m1`, `(mu1 - mu2)^2 = 4 m2 - 4 sigma^2`.
///
/// A negative right-hand side in the second equation is clamped to zero, so
/// both means collapse onto `m1`.
pub fn solve_moment_equations(m1: f64, m2: f64, sigma: f64) -> MeanPair {
    let disc = 4.0 * m2 - 4.0 * sigma * sigma;
    let half_gap = if disc > 0.0 { disc.sqrt() / 2.0 } else { 0.0 };
    MeanPair::new(m1 - half_gap, m1 + half_gap)
}

pub fn method_of_moments(
    samples: &[f64],
    sigma: f64,
    batches: usize,
) -> Result<MeanPair, GmmError> {
    let moments = median_of_means(samples, batches)?;
    Ok(solve_moment_equations(moments.m1_hat, moments.m2_hat, sigma))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmOptions {
    /// Starting means; defaults to the sample quartiles.
    pub init: Option<(f64, f64)>,
    pub max_iter: usize,
    /// Stop once both means move less than this between iterations.
    pub tol: f64,
}

impl Default for EmOptions {
    fn default() -> Self {
        Self {
            init: None,
            max_iter: 500,
            tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmOutcome {
    pub means: MeanPair,
    pub iterations: usize,
    pub converged: bool,
}

#[inline]
fn responsibilities(y: f64, mu1: f64, mu2: f64, inv_two_var: f64) -> (f64, f64) {
    let a = y - mu1;
    let b = y - mu2;
    let d = (b * b - a * a) * inv_two_var;
    (1.0 / (1.0 + (-d).exp()), 1.0 / (1.0 + d.exp()))
}

/// One EM update of both means.
pub fn em_step(samples: &[f64], sigma: f64, mu1: f64, mu2: f64) -> (f64, f64) {
    let inv_two_var = 1.0 / (2.0 * sigma * sigma);
    let (mut s1, mut w1, mut s2, mut w2) = (0.0, 0.0, 0.0, 0.0);
    for &y in samples {
        let (r1, r2) = responsibilities(y, mu1, mu2, inv_two_var);
        s1 += r1 * y;
        w1 += r1;
        s2 += r2 * y;
        w2 += r2;
    }
    let next1 = if w1 > 0.0 { s1 / w1 } else { mu1 };
    let next2 = if w2 > 0.0 { s2 / w2 } else { mu2 };
    (next1, next2)
}

/// Log-likelihood of the samples under the equal-weight mixture, up to the
/// additive constant `-T log(sqrt(2 pi) sigma)`.
pub fn mixture_log_likelihood(samples: &[f64], sigma: f64, mu1: f64, mu2: f64) -> f64 {
    let inv_two_var = 1.0 / (2.0 * sigma * sigma);
    samples
        .iter()
        .map(|&y| {
            let a = -(y - mu1) * (y - mu1) * inv_two_var;
            let b = -(y - mu2) * (y - mu2) * inv_two_var;
            let hi = a.max(b);
            hi + (0.5 * ((a - hi).exp() + (b - hi).exp())).ln()
        })
        .sum()
}

pub fn em_estimate(
    samples: &[f64],
    sigma: f64,
    opts: &EmOptions,
) -> Result<EmOutcome, GmmError> {
    if !(sigma > 0.0) {
        return Err(GmmError::DegenerateSigma(sigma));
    }
    if samples.len() < 2 {
        return Err(GmmError::TooFewSamples {
            needed: 2,
            got: samples.len(),
        });
    }
    let (mut mu1, mut mu2) = match opts.init {
        Some(init) => init,
        None => {
            let mut sorted = samples.to_vec();
            sorted.sort_by(|a, b| a.total_cmp(b));
            (quantile_sorted(&sorted, 0.25), quantile_sorted(&sorted, 0.75))
        }
    };
    for iter in 1..=opts.max_iter {
        let (next1, next2) = em_step(samples, sigma, mu1, mu2);
        let moved = (next1 - mu1).abs().max((next2 - mu2).abs());
        mu1 = next1;
        mu2 = next2;
        if moved < opts.tol {
            return Ok(EmOutcome {
                means: MeanPair::new(mu1, mu2),
                iterations: iter,
                converged: true,
            });
        }
    }
    Ok(EmOutcome {
        means: MeanPair::new(mu1, mu2),
        iterations: opts.max_iter,
        converged: false,
    })
}

/// Linear-interpolation quantile of ascending `sorted` data (the "type 7"
/// convention): position `h = (N - 1) p`, value
/// `(1 - f) x[floor(h)] + f x[floor(h) + 1]`.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let f = h - lo as f64;
    if lo + 1 >= sorted.len() {
        return sorted[sorted.len() - 1];
    }
    (1.0 - f) * sorted[lo] + f * sorted[lo + 1]
}

/// `(Q1 + Q3) / 2` of the samples, as an estimate of `(mu1 + mu2) / 2`.
pub fn fit_single_gaussian(samples: &[f64]) -> Result<f64, GmmError> {
    if samples.len() < 4 {
        return Err(GmmError::TooFewSamples {
            needed: 4,
            got: samples.len(),
        });
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    Ok((quantile_sorted(&sorted, 0.25) + quantile_sorted(&sorted, 0.75)) / 2.0)
}
