use std::collections::BTreeMap;

use super::{
    gaussian_design, solve_lenient, validate_common, RecoveryBranch, RecoveryConfig,
    RecoveryError, RecoveryReport, SolverSummary, TruthErrors,
};
use crate::gmm::{fit_single_gaussian, BatchPolicy, EstimatorBranch};
use crate::oracle::{MixtureOracle, QueryTag};

/// Samples per query for the merged pipeline:
/// `max(4, ceil(c_single * ceil(sigma^2 ln k / (gamma' - 0.8 gap)^2)))` with
/// `gamma' = max(gamma, gap)` so the denominator stays positive.
pub fn merged_batch_size(policy: &BatchPolicy, sigma: f64, gamma: f64, gap_bound: f64, k: usize) -> usize {
    let margin = gamma.max(gap_bound) - 0.8 * gap_bound;
    let log_k = (k.max(2) as f64).ln();
    let inner = (sigma * sigma * log_k / (margin * margin)).ceil();
    ((policy.c_single * inner).ceil() as usize).max(4)
}

/// Recovers a single vector within `O(gamma)` of both hidden vectors when
/// `gamma` is comparable to their gap: every query is summarized by the
/// quartile midpoint of its samples and one basis pursuit with radius
/// `merged_radius_factor * gamma` is solved.
pub fn recover_merged(
    oracle: &mut MixtureOracle,
    n: usize,
    k: usize,
    sigma: f64,
    gamma: f64,
    config: &RecoveryConfig,
) -> Result<RecoveryReport, RecoveryError> {
    config.validate()?;
    validate_common(n, k, gamma, oracle)?;
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(RecoveryError::InvalidConfig(format!("sigma must be >= 0, got {sigma}")));
    }
    let m = config.measurements(k, n)?;
    let t = merged_batch_size(&config.policy, sigma, gamma, config.gap_bound, k);
    let design = gaussian_design(m, n, config.design_seed)?;

    let mut centers = Vec::with_capacity(m);
    for (i, x) in design.rows().iter().enumerate() {
        let ys = oracle.query_batch(x, t, QueryTag::Base(i))?;
        centers.push(fit_single_gaussian(&ys)?);
    }

    let radius = config.merged_radius_factor * gamma;
    let sol = solve_lenient(&design, &centers, radius, &config.solver)?;
    let ledger = oracle.ledger();
    Ok(RecoveryReport {
        branch: RecoveryBranch::Merged,
        n,
        k,
        sigma,
        gamma,
        eta: 1.0 / (n.max(2) as f64).powi(2),
        m,
        m_prime: None,
        anchor_index: None,
        c_s: config.c_s,
        radius,
        policy: config.policy,
        errors: TruthErrors::compute(oracle.debug_truth(), &sol.z, &sol.z),
        solver: vec![SolverSummary::from(&sol)],
        beta_hat_2: sol.z.clone(),
        beta_hat_1: sol.z,
        total_queries: ledger.total(),
        base_queries: ledger.base_total(),
        alignment_queries: ledger.alignment_total(),
        estimator_branch_histogram: BTreeMap::from([(EstimatorBranch::SingleGaussian, m)]),
        alignment_fallbacks: 0,
        realized_snr: oracle.realized_snr(),
    })
}
