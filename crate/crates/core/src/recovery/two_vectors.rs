use std::collections::BTreeMap;

use super::{
    gaussian_design, solve_lenient, validate_common, EtaPreset, RecoveryBranch, RecoveryConfig,
    RecoveryError, RecoveryReport, SolverSummary, TruthErrors,
};
use crate::alignment::{align_all, anchor_pool_size, AlignConfig, AlignError};
use crate::gmm::test_and_estimate;
use crate::oracle::{MixtureOracle, QueryTag};

fn per_query_eta(
    preset: EtaPreset,
    n: usize,
    m: usize,
    gamma: f64,
    gap_bound: f64,
) -> Result<f64, RecoveryError> {
    let n2 = 1.0 / (n.max(2) as f64).powi(2);
    Ok(match preset {
        EtaPreset::PerQueryN2 => n2,
        EtaPreset::ProofPreset => {
            // m' itself depends on eta; size it with the n^-2 value first.
            let m_prime = anchor_pool_size(n2, gamma, gap_bound)?.min(m);
            let denom = m as f64 * m_prime as f64 * (n.max(3) as f64).ln();
            (1.0 / denom).min(0.5)
        }
    })
}

/// Recovers both vectors when `sigma > 0` and `gamma` is below
/// `0.0964 * gap_bound`.
///
/// Issues `m` Gaussian base queries, estimates the two means of each with
/// [`test_and_estimate`], aligns them against an anchor and solves
/// `min ||z||_1  s.t.  ||A z - u / sqrt(m)|| <= radius_factor * gamma` for
/// each aligned vector.
pub fn recover_two_vectors(
    oracle: &mut MixtureOracle,
    n: usize,
    k: usize,
    sigma: f64,
    gamma: f64,
    config: &RecoveryConfig,
) -> Result<RecoveryReport, RecoveryError> {
    config.validate()?;
    validate_common(n, k, gamma, oracle)?;
    if sigma == 0.0 {
        return Err(RecoveryError::Route(RecoveryBranch::Noiseless));
    }
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(RecoveryError::InvalidConfig(format!("sigma must be >= 0, got {sigma}")));
    }
    let m = config.measurements(k, n)?;
    let eta = match per_query_eta(config.eta_preset, n, m, gamma, config.gap_bound) {
        Err(RecoveryError::Align(AlignError::RegimeViolation { .. })) => {
            return Err(RecoveryError::Route(RecoveryBranch::Merged))
        }
        other => other?,
    };
    // Fail on the regime before any query is spent.
    if let Err(AlignError::RegimeViolation { .. }) = anchor_pool_size(eta, gamma, config.gap_bound) {
        return Err(RecoveryError::Route(RecoveryBranch::Merged));
    }

    let design = gaussian_design(m, n, config.design_seed)?;
    let mut histogram = BTreeMap::new();
    let mut estimates = Vec::with_capacity(m);
    for (i, x) in design.rows().iter().enumerate() {
        let est = test_and_estimate(oracle, x, QueryTag::Base(i), sigma, gamma, eta, &config.policy)?;
        *histogram.entry(est.branch).or_insert(0) += 1;
        estimates.push(est);
    }

    let align_config = AlignConfig {
        gap_l2_bound: config.gap_bound,
        policy: config.policy,
    };
    let outcome = align_all(oracle, design.rows(), &estimates, sigma, gamma, eta, &align_config)?;
    for (branch, count) in &outcome.branch_counts {
        *histogram.entry(*branch).or_insert(0) += count;
    }

    let radius = config.radius_factor * gamma;
    let sol_u = solve_lenient(&design, &outcome.aligned.u, radius, &config.solver)?;
    let sol_v = solve_lenient(&design, &outcome.aligned.v, radius, &config.solver)?;

    let ledger = oracle.ledger();
    Ok(RecoveryReport {
        branch: RecoveryBranch::SmallGamma,
        n,
        k,
        sigma,
        gamma,
        eta,
        m,
        m_prime: Some(outcome.m_prime),
        anchor_index: Some(outcome.aligned.anchor_index),
        c_s: config.c_s,
        radius,
        policy: config.policy,
        errors: TruthErrors::compute(oracle.debug_truth(), &sol_u.z, &sol_v.z),
        solver: vec![SolverSummary::from(&sol_u), SolverSummary::from(&sol_v)],
        beta_hat_1: sol_u.z,
        beta_hat_2: sol_v.z,
        total_queries: ledger.total(),
        base_queries: ledger.base_total(),
        alignment_queries: ledger.alignment_total(),
        estimator_branch_histogram: histogram,
        alignment_fallbacks: outcome.fallbacks,
        realized_snr: oracle.realized_snr(),
    })
}
