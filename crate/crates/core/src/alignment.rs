//! Resolving the per-query label ambiguity.
//!
//! Each query `x^i` yields an unordered pair of mean estimates. To decide
//! whether the estimates of `x^i` and `x^j` are listed in the same order, the
//! oracle is also asked `x^i + x^j` and `x^i - x^j`: the correct pairing
//! `(p, q)` is the one whose sum (or difference) lands within `3 gamma` of an
//! estimated mean of the sum (or difference) query.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gmm::{test_and_estimate, BatchPolicy, EstimatorBranch, GmmError, MeanEstimatePair};
use crate::linalg::{add, sub};
use crate::oracle::{MixtureOracle, OracleError, QueryTag};

/// `sqrt(pi) / (13 sqrt(2))`: alignment needs `gamma` below this times the gap.
pub const SMALL_GAMMA_RATIO: f64 = 0.096_415_020_504_537_42;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlignError {
    #[error("no unique consistent pairing for queries {i} and {j}")]
    NoConsistentMatch { i: usize, j: usize },
    #[error("no anchor among the first {m_prime} queries has estimated gap >= 11 gamma")]
    NoAnchorFound { m_prime: usize },
    #[error("gamma = {gamma} exceeds {SMALL_GAMMA_RATIO:.4} * gap bound ({bound}); use merged recovery")]
    RegimeViolation { gamma: f64, bound: f64 },
    #[error("invalid alignment input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Gmm(#[from] GmmError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Sum,
    Diff,
}

/// The single check that decided a verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Evidence {
    pub check: CheckKind,
    /// Which estimate (1 or 2) of the sum/difference query matched.
    pub component: usize,
    pub p: usize,
    pub q: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairwiseVerdict {
    pub i: usize,
    pub j: usize,
    /// Whether `est_i` and `est_j` list their means in the same order.
    pub same_permutation: bool,
    pub evidence: Evidence,
}

fn unique_match(
    target: f64,
    est_i: &MeanEstimatePair,
    est_j: &MeanEstimatePair,
    sign: f64,
    gamma: f64,
) -> Option<(usize, usize)> {
    let mut found = None;
    let mut count = 0;
    for p in 1..=2 {
        for q in 1..=2 {
            if (target - est_i.get(p) - sign * est_j.get(q)).abs() <= 3.0 * gamma {
                found = Some((p, q));
                count += 1;
            }
        }
    }
    if count == 1 {
        found
    } else {
        None
    }
}

/// Decides whether the estimates of queries `i` and `j` share a labelling.
///
/// Checks run in the order sum-1, sum-2, diff-1, diff-2; the first one with a
/// unique matching `(p, q)` is reported as evidence. If two decisive checks
/// disagree, or none is decisive, the pair is reported as inconsistent.
pub fn align_pair(
    i: usize,
    j: usize,
    est_i: &MeanEstimatePair,
    est_j: &MeanEstimatePair,
    est_sum: &MeanEstimatePair,
    est_diff: &MeanEstimatePair,
    gamma: f64,
) -> Result<PairwiseVerdict, AlignError> {
    let checks = [
        (CheckKind::Sum, 1, est_sum.mu_hat_1, 1.0),
        (CheckKind::Sum, 2, est_sum.mu_hat_2, 1.0),
        (CheckKind::Diff, 1, est_diff.mu_hat_1, -1.0),
        (CheckKind::Diff, 2, est_diff.mu_hat_2, -1.0),
    ];
    let mut decided: Option<PairwiseVerdict> = None;
    for (check, component, target, sign) in checks {
        let Some((p, q)) = unique_match(target, est_i, est_j, sign, gamma) else {
            continue;
        };
        let same = p == q;
        match decided {
            None => {
                decided = Some(PairwiseVerdict {
                    i,
                    j,
                    same_permutation: same,
                    evidence: Evidence {
                        check,
                        component,
                        p,
                        q,
                    },
                })
            }
            Some(v) if v.same_permutation != same => {
                return Err(AlignError::NoConsistentMatch { i, j })
            }
            Some(_) => {}
        }
    }
    decided.ok_or(AlignError::NoConsistentMatch { i, j })
}

/// Mean estimates regrouped so that `u[i]` and `v[i]` follow the same hidden
/// vector for every query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignedMeans {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub anchor_index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlignConfig {
    /// Lower bound on `||beta1 - beta2||_2`, used to size the anchor pool.
    pub gap_l2_bound: f64,
    pub policy: BatchPolicy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentOutcome {
    pub aligned: AlignedMeans,
    /// Verdicts of every query against the anchor (the anchor itself excluded).
    pub anchor_verdicts: Vec<PairwiseVerdict>,
    pub m_prime: usize,
    /// Queries whose pairing with the anchor was inconclusive and kept their
    /// original order.
    pub fallbacks: usize,
    /// Estimator usage over the sum and difference batches.
    pub branch_counts: BTreeMap<EstimatorBranch, usize>,
}

/// Size of the anchor pool:
/// `ceil(ln(1/eta) / ln(sqrt(pi) gap / (13 sqrt(2) gamma)))`.
pub fn anchor_pool_size(eta: f64, gamma: f64, gap_l2_bound: f64) -> Result<usize, AlignError> {
    if !(gamma > 0.0) {
        return Err(AlignError::InvalidInput(format!("gamma must be > 0, got {gamma}")));
    }
    if !(eta > 0.0 && eta < 1.0) {
        return Err(AlignError::InvalidInput(format!("eta must be in (0, 1), got {eta}")));
    }
    let ratio = SMALL_GAMMA_RATIO * gap_l2_bound / gamma;
    if !(ratio > 1.0) {
        return Err(AlignError::RegimeViolation {
            gamma,
            bound: gap_l2_bound,
        });
    }
    Ok(((1.0 / eta).ln() / ratio.ln()).ceil().max(1.0) as usize)
}

/// Aligns all `m` estimate pairs against an anchor chosen among the first
/// `m'` queries, issuing sum and difference batches for every `i in [m]`,
/// `j in [m']`, `i != j`.
pub fn align_all(
    oracle: &mut MixtureOracle,
    queries: &[Vec<f64>],
    estimates: &[MeanEstimatePair],
    sigma: f64,
    gamma: f64,
    eta: f64,
    config: &AlignConfig,
) -> Result<AlignmentOutcome, AlignError> {
    let m = queries.len();
    if m == 0 || estimates.len() != m {
        return Err(AlignError::InvalidInput(format!(
            "{m} queries but {} estimate pairs",
            estimates.len()
        )));
    }
    let m_prime = anchor_pool_size(eta, gamma, config.gap_l2_bound)?.min(m);

    let mut branch_counts = BTreeMap::new();
    let mut verdicts: BTreeMap<(usize, usize), Result<PairwiseVerdict, AlignError>> =
        BTreeMap::new();
    for i in 0..m {
        for j in (0..m_prime).filter(|&j| j != i) {
            let est_sum = test_and_estimate(
                oracle,
                &add(&queries[i], &queries[j]),
                QueryTag::Sum(i, j),
                sigma,
                gamma,
                eta,
                &config.policy,
            )?;
            let est_diff = test_and_estimate(
                oracle,
                &sub(&queries[i], &queries[j]),
                QueryTag::Diff(i, j),
                sigma,
                gamma,
                eta,
                &config.policy,
            )?;
            *branch_counts.entry(est_sum.branch).or_insert(0) += 1;
            *branch_counts.entry(est_diff.branch).or_insert(0) += 1;
            let verdict =
                align_pair(i, j, &estimates[i], &estimates[j], &est_sum, &est_diff, gamma);
            verdicts.insert((i, j), verdict);
        }
    }

    let anchor = (0..m_prime)
        .filter(|&p| estimates[p].gap() >= 11.0 * gamma)
        .max_by(|&a, &b| estimates[a].gap().total_cmp(&estimates[b].gap()))
        .ok_or(AlignError::NoAnchorFound { m_prime })?;

    let mut u = vec![0.0; m];
    let mut v = vec![0.0; m];
    u[anchor] = estimates[anchor].mu_hat_1;
    v[anchor] = estimates[anchor].mu_hat_2;
    let mut anchor_verdicts = Vec::with_capacity(m.saturating_sub(1));
    let mut fallbacks = 0;
    for i in (0..m).filter(|&i| i != anchor) {
        let same = match &verdicts[&(i, anchor)] {
            Ok(verdict) => {
                anchor_verdicts.push(*verdict);
                verdict.same_permutation
            }
            Err(_) => {
                fallbacks += 1;
                true
            }
        };
        let est = if same {
            estimates[i]
        } else {
            estimates[i].swapped()
        };
        u[i] = est.mu_hat_1;
        v[i] = est.mu_hat_2;
    }

    Ok(AlignmentOutcome {
        aligned: AlignedMeans {
            u,
            v,
            anchor_index: anchor,
        },
        anchor_verdicts,
        m_prime,
        fallbacks,
        branch_counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn est(a: f64, b: f64) -> MeanEstimatePair {
        MeanEstimatePair::new(a, b, 0.01)
    }

    #[test]
    fn same_order_decided_by_sum() {
        let v = align_pair(0, 1, &est(1.0, -1.0), &est(1.0, -1.0), &est(2.0, -2.0), &est(0.0, 0.0), 0.01)
            .unwrap();
        assert!(v.same_permutation);
        assert_eq!(
            v.evidence,
            Evidence {
                check: CheckKind::Sum,
                component: 1,
                p: 1,
                q: 1
            }
        );
    }

    #[test]
    fn swapped_order_decided_by_sum() {
        let v = align_pair(0, 1, &est(1.0, -1.0), &est(-1.0, 1.0), &est(2.0, -2.0), &est(0.0, 0.0), 0.01)
            .unwrap();
        assert!(!v.same_permutation);
        assert_eq!((v.evidence.p, v.evidence.q), (1, 2));
    }

    #[test]
    fn opposite_signs_fall_through_to_difference() {
        // <x1, b1> = 1, <x1, b2> = -1, <x2, b1> = -1, <x2, b2> = 1:
        // both sums are 0 (ambiguous), the differences are 2 and -2.
        let sums = est(0.0, 0.0);
        let diffs = est(2.0, -2.0);
        let v = align_pair(0, 1, &est(1.0, -1.0), &est(-1.0, 1.0), &sums, &diffs, 0.01).unwrap();
        assert_eq!(v.evidence.check, CheckKind::Diff);
        assert!(v.same_permutation);
        let v = align_pair(0, 1, &est(1.0, -1.0), &est(1.0, -1.0), &sums, &diffs, 0.01).unwrap();
        assert_eq!(v.evidence.check, CheckKind::Diff);
        assert!(!v.same_permutation);
    }

    #[test]
    fn nothing_decisive() {
        let r = align_pair(3, 4, &est(0.0, 0.0), &est(0.0, 0.0), &est(0.0, 0.0), &est(0.0, 0.0), 0.01);
        assert_eq!(r, Err(AlignError::NoConsistentMatch { i: 3, j: 4 }));
    }

    #[test]
    fn conflicting_checks_are_rejected() {
        // The sum says "same order", the difference says "swapped".
        let r = align_pair(0, 1, &est(1.0, -1.0), &est(1.0, -1.0), &est(2.0, 50.0), &est(2.0, 50.0), 0.01);
        assert_eq!(r, Err(AlignError::NoConsistentMatch { i: 0, j: 1 }));
    }

    #[test]
    fn pool_size_and_regime_boundary() {
        // ratio = 0.0964 * 10 / 0.1 = 9.64; ln(1e4) / ln(9.64) = 4.07 -> 5
        assert_eq!(anchor_pool_size(1e-4, 0.1, 10.0).unwrap(), 5);
        assert!(matches!(
            anchor_pool_size(1e-4, 0.097, 1.0),
            Err(AlignError::RegimeViolation { .. })
        ));
        assert!(anchor_pool_size(1e-4, 0.096, 1.0).is_ok());
    }
}
