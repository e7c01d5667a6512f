//! Simulated mixed linear regression oracle.
//!
//! Every call to [`MixtureOracle::query`] picks one of the two hidden vectors
//! uniformly at random and returns `<x, beta> + N(0, sigma^2)`. The oracle counts
//! every scalar sample it hands out, both in total and per [`QueryTag`].

use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::dot;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("the two hidden vectors must be distinct")]
    DistinctVectorsRequired,
    #[error("noise standard deviation must be >= 0, got {0}")]
    NegativeSigma(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("a batch must contain at least one query")]
    EmptyBatch,
    #[error("invalid sparse pair: {0}")]
    InvalidPair(String),
}

/// Ground truth for a simulation: two distinct vectors in `R^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseVectorPair {
    beta1: Vec<f64>,
    beta2: Vec<f64>,
    k: usize,
}

impl SparseVectorPair {
    pub fn new(beta1: Vec<f64>, beta2: Vec<f64>, k: usize) -> Result<Self, OracleError> {
        if beta1.len() != beta2.len() {
            return Err(OracleError::DimensionMismatch {
                expected: beta1.len(),
                got: beta2.len(),
            });
        }
        if beta1.is_empty() {
            return Err(OracleError::InvalidPair("dimension must be >= 1".into()));
        }
        if beta1.iter().chain(&beta2).any(|v| !v.is_finite()) {
            return Err(OracleError::InvalidPair("non-finite coordinate".into()));
        }
        if beta1 == beta2 {
            return Err(OracleError::DistinctVectorsRequired);
        }
        Ok(Self { beta1, beta2, k })
    }

    pub fn beta1(&self) -> &[f64] {
        &self.beta1
    }

    pub fn beta2(&self) -> &[f64] {
        &self.beta2
    }

    pub fn n(&self) -> usize {
        self.beta1.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// `||beta1 - beta2||_2`.
    pub fn gap(&self) -> f64 {
        self.beta1
            .iter()
            .zip(&self.beta2)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// Largest number of nonzeros in either vector.
    pub fn max_support(&self) -> usize {
        let nnz = |v: &[f64]| v.iter().filter(|x| **x != 0.0).count();
        nnz(&self.beta1).max(nnz(&self.beta2))
    }

    /// The same pair with the roles of the two vectors exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            beta1: self.beta2.clone(),
            beta2: self.beta1.clone(),
            k: self.k,
        }
    }
}

/// Role of a batch in the recovery procedure, used as ledger key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum QueryTag {
    Base(usize),
    Sum(usize, usize),
    Diff(usize, usize),
    /// Anything outside the recovery pipeline (tests, estimator studies).
    Free,
}

impl fmt::Display for QueryTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QueryTag::Base(i) => write!(f, "base:{i}"),
            QueryTag::Sum(i, j) => write!(f, "sum:{i}:{j}"),
            QueryTag::Diff(i, j) => write!(f, "diff:{i}:{j}"),
            QueryTag::Free => write!(f, "free"),
        }
    }
}

/// Per-tag sample counts.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct QueryLedger {
    counts: BTreeMap<QueryTag, u64>,
    total: u64,
}

impl QueryLedger {
    fn record(&mut self, tag: QueryTag, samples: u64) {
        *self.counts.entry(tag).or_insert(0) += samples;
        self.total += samples;
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn get(&self, tag: QueryTag) -> u64 {
        self.counts.get(&tag).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (QueryTag, u64)> + '_ {
        self.counts.iter().map(|(t, c)| (*t, *c))
    }

    /// Samples spent on base queries `x^i`.
    pub fn base_total(&self) -> u64 {
        self.sum_where(|t| matches!(t, QueryTag::Base(_)))
    }

    /// Samples spent on sum and difference queries.
    pub fn alignment_total(&self) -> u64 {
        self.sum_where(|t| matches!(t, QueryTag::Sum(..) | QueryTag::Diff(..)))
    }

    fn sum_where(&self, pred: impl Fn(&QueryTag) -> bool) -> u64 {
        self.counts
            .iter()
            .filter(|(t, _)| pred(t))
            .map(|(_, c)| *c)
            .sum()
    }
}

/// Which hidden vector produced a sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Component {
    First,
    Second,
}

#[derive(Debug, Clone, Default)]
struct LatentLog {
    words: Vec<u64>,
    len: usize,
}

impl LatentLog {
    fn push(&mut self, second: bool) {
        if self.len % 64 == 0 {
            self.words.push(0);
        }
        if second {
            *self.words.last_mut().unwrap() |= 1 << (self.len % 64);
        }
        self.len += 1;
    }

    fn get(&self, idx: usize) -> Component {
        if (self.words[idx / 64] >> (idx % 64)) & 1 == 1 {
            Component::Second
        } else {
            Component::First
        }
    }
}

/// Seeded stochastic answerer of linear queries.
///
/// A single instance is one RNG stream: it may be moved between threads but
/// queries must be serialized. Distinct seeds give independent oracles.
#[derive(Debug, Clone)]
pub struct MixtureOracle {
    truth: SparseVectorPair,
    sigma: f64,
    seed: u64,
    rng: ChaCha8Rng,
    query_count: u64,
    ledger: QueryLedger,
    latents: LatentLog,
    max_base_separation_sq: f64,
}

impl MixtureOracle {
    pub fn new(truth: SparseVectorPair, sigma: f64, seed: u64) -> Result<Self, OracleError> {
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(OracleError::NegativeSigma(sigma));
        }
        if truth.beta1 == truth.beta2 {
            return Err(OracleError::DistinctVectorsRequired);
        }
        Ok(Self {
            truth,
            sigma,
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
            query_count: 0,
            ledger: QueryLedger::default(),
            latents: LatentLog::default(),
            max_base_separation_sq: 0.0,
        })
    }

    pub fn n(&self) -> usize {
        self.truth.n()
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn query_count(&self) -> u64 {
        self.query_count
    }

    pub fn ledger(&self) -> &QueryLedger {
        &self.ledger
    }

    /// A fresh oracle with the same truth, noise and seed.
    pub fn reset(&self) -> Self {
        Self::new(self.truth.clone(), self.sigma, self.seed).expect("validated at construction")
    }

    /// One sample, recorded under [`QueryTag::Free`].
    pub fn query(&mut self, x: &[f64]) -> Result<f64, OracleError> {
        self.check_dim(x)?;
        let (p1, p2) = self.projections(x);
        let y = self.draw(p1, p2);
        self.ledger.record(QueryTag::Free, 1);
        Ok(y)
    }

    /// `batch` independent samples of the same query, charged to `tag`.
    pub fn query_batch(
        &mut self,
        x: &[f64],
        batch: usize,
        tag: QueryTag,
    ) -> Result<Vec<f64>, OracleError> {
        if batch == 0 {
            return Err(OracleError::EmptyBatch);
        }
        self.check_dim(x)?;
        let (p1, p2) = self.projections(x);
        if matches!(tag, QueryTag::Base(_)) {
            let d = p1 - p2;
            self.max_base_separation_sq = self.max_base_separation_sq.max(d * d);
        }
        let out = (0..batch).map(|_| self.draw(p1, p2)).collect();
        self.ledger.record(tag, batch as u64);
        Ok(out)
    }

    /// Realized SNR over the base queries issued so far:
    /// `max_x |<x, beta1 - beta2>|^2 / sigma^2`. Infinite when `sigma == 0`.
    pub fn realized_snr(&self) -> f64 {
        if self.sigma == 0.0 {
            f64::INFINITY
        } else {
            self.max_base_separation_sq / (self.sigma * self.sigma)
        }
    }

    /// Ground truth. Simulation diagnostics only; estimators never see this.
    pub fn debug_truth(&self) -> &SparseVectorPair {
        &self.truth
    }

    /// Hidden component that produced sample number `idx` (0-based, in issue order).
    pub fn debug_latent(&self, idx: usize) -> Option<Component> {
        (idx < self.latents.len).then(|| self.latents.get(idx))
    }

    fn check_dim(&self, x: &[f64]) -> Result<(), OracleError> {
        if x.len() != self.n() {
            return Err(OracleError::DimensionMismatch {
                expected: self.n(),
                got: x.len(),
            });
        }
        Ok(())
    }

    fn projections(&self, x: &[f64]) -> (f64, f64) {
        (dot(x, &self.truth.beta1), dot(x, &self.truth.beta2))
    }

    fn draw(&mut self, p1: f64, p2: f64) -> f64 {
        let second: bool = self.rng.random();
        self.latents.push(second);
        self.query_count += 1;
        let mean = if second { p2 } else { p1 };
        if self.sigma == 0.0 {
            mean
        } else {
            let z: f64 = self.rng.sample(StandardNormal);
            mean + self.sigma * z
        }
    }
}
