use std::collections::BTreeMap;

use super::{
    gaussian_design, solve_lenient, validate_common, RecoveryBranch, RecoveryConfig,
    RecoveryError, RecoveryReport, SolverSummary, TruthErrors,
};
use crate::gmm::EstimatorBranch;
use crate::linalg::{add, sub};
use crate::oracle::{MixtureOracle, QueryTag};

fn same(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()))
}

fn distinct(values: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::with_capacity(2);
    for &v in values {
        if !out.iter().any(|&u| same(u, v)) {
            out.push(v);
        }
    }
    out
}

fn contained(observed: &[f64], allowed: [f64; 2]) -> bool {
    observed.iter().all(|&o| allowed.iter().any(|&a| same(o, a)))
}

/// `2 ceil(ln m)` repeats, at least 2.
pub fn noiseless_repeats(m: usize) -> usize {
    (2 * (m.max(1) as f64).ln().ceil() as usize).max(2)
}

/// Labels query `i`'s projections `(c1, c2)` consistently with the anchor's
/// `(a1, a2)`.
///
/// Every sum sample equals `c_j + a_j` and every difference sample `c_j - a_j`
/// for the component `j` that produced it, so candidates for `c_j` come from
/// the base values and from subtracting the anchor. A single consistent
/// labelling is returned; ties that include `c1 == c2` resolve to it.
fn label_against_anchor(
    query: usize,
    base: &[f64],
    sums: &[f64],
    diffs: &[f64],
    anchor: [f64; 2],
) -> Result<[f64; 2], RecoveryError> {
    let candidates = |j: usize| {
        let mut c: Vec<f64> = base.to_vec();
        c.extend(sums.iter().map(|s| s - anchor[j]));
        c.extend(diffs.iter().map(|d| d + anchor[j]));
        distinct(&c)
    };
    let (first, second) = (candidates(0), candidates(1));
    let mut consistent: Vec<[f64; 2]> = Vec::new();
    for &c1 in &first {
        for &c2 in &second {
            let ok = contained(base, [c1, c2])
                && contained(sums, [c1 + anchor[0], c2 + anchor[1]])
                && contained(diffs, [c1 - anchor[0], c2 - anchor[1]])
                && base.iter().any(|&b| same(b, c1) || same(b, c2));
            if ok && !consistent.iter().any(|p| same(p[0], c1) && same(p[1], c2)) {
                consistent.push([c1, c2]);
            }
        }
    }
    match consistent.len() {
        0 => Err(RecoveryError::DuplicateProjection { query }),
        1 => Ok(consistent[0]),
        _ => consistent
            .into_iter()
            .find(|p| same(p[0], p[1]))
            .ok_or(RecoveryError::DuplicateProjection { query }),
    }
}

/// Exact recovery for `sigma == 0`.
///
/// Each of the `m` base queries is repeated `2 ceil(ln m)` times; its distinct
/// values are the two projections. The first query with two distinct values
/// becomes the anchor and every other query is paired with it through
/// repeated sum and difference queries. Two equality-constrained basis
/// pursuits finish the job. Total queries: `m R + 2 (m - 1) R`.
pub fn recover_noiseless(
    oracle: &mut MixtureOracle,
    n: usize,
    k: usize,
    config: &RecoveryConfig,
) -> Result<RecoveryReport, RecoveryError> {
    config.validate()?;
    // gamma plays no role here; pass a placeholder that passes validation.
    validate_common(n, k, 1.0, oracle)?;
    if oracle.sigma() != 0.0 {
        return Err(RecoveryError::InvalidConfig(format!(
            "noiseless recovery needs sigma = 0, oracle has {}",
            oracle.sigma()
        )));
    }
    let m = config.measurements(k, n)?;
    let repeats = config.noiseless_repeats.unwrap_or_else(|| noiseless_repeats(m));
    let design = gaussian_design(m, n, config.design_seed)?;
    let rows = design.rows();

    let mut base = Vec::with_capacity(m);
    for (i, x) in rows.iter().enumerate() {
        let ys = oracle.query_batch(x, repeats, QueryTag::Base(i))?;
        let values = distinct(&ys);
        if values.len() > 2 {
            return Err(RecoveryError::InvalidConfig(format!(
                "query {i} returned {} distinct values; the oracle is not noiseless",
                values.len()
            )));
        }
        base.push(values);
    }

    let (u, v, anchor) = match base.iter().position(|b| b.len() == 2) {
        None => {
            // Every query saw a single value; both vectors share all projections.
            let u: Vec<f64> = base.iter().map(|b| b[0]).collect();
            (u.clone(), u, None)
        }
        Some(a) => {
            let anchor = [base[a][0], base[a][1]];
            let mut u = vec![0.0; m];
            let mut v = vec![0.0; m];
            (u[a], v[a]) = (anchor[0], anchor[1]);
            for i in (0..m).filter(|&i| i != a) {
                let sums = oracle.query_batch(&add(&rows[i], &rows[a]), repeats, QueryTag::Sum(i, a))?;
                let diffs = oracle.query_batch(&sub(&rows[i], &rows[a]), repeats, QueryTag::Diff(i, a))?;
                let [c1, c2] = label_against_anchor(i, &base[i], &distinct(&sums), &distinct(&diffs), anchor)?;
                (u[i], v[i]) = (c1, c2);
            }
            (u, v, Some(a))
        }
    };

    let sol_u = solve_lenient(&design, &u, 0.0, &config.solver)?;
    let sol_v = solve_lenient(&design, &v, 0.0, &config.solver)?;
    let ledger = oracle.ledger();
    Ok(RecoveryReport {
        branch: RecoveryBranch::Noiseless,
        n,
        k,
        sigma: 0.0,
        gamma: 0.0,
        eta: 2f64.powi(1 - repeats as i32),
        m,
        m_prime: anchor.map(|_| 1),
        anchor_index: anchor,
        c_s: config.c_s,
        radius: 0.0,
        policy: config.policy,
        errors: TruthErrors::compute(oracle.debug_truth(), &sol_u.z, &sol_v.z),
        solver: vec![SolverSummary::from(&sol_u), SolverSummary::from(&sol_v)],
        beta_hat_1: sol_u.z,
        beta_hat_2: sol_v.z,
        total_queries: ledger.total(),
        base_queries: ledger.base_total(),
        alignment_queries: ledger.alignment_total(),
        estimator_branch_histogram: BTreeMap::from([(EstimatorBranch::Noiseless, m)]),
        alignment_fallbacks: 0,
        realized_snr: oracle.realized_snr(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn repeats() {
        // ln 70 = 4.25 -> 2 * 5
        assert_eq!(noiseless_repeats(70), 10);
        assert_eq!(noiseless_repeats(1), 2);
    }

    #[test]
    fn labels_two_valued_query() {
        let anchor = [1.0, 5.0];
        // truth: c = (2, -3)
        let got = label_against_anchor(0, &[-3.0, 2.0], &[3.0], &[-8.0], anchor).unwrap();
        assert_eq!(got, [2.0, -3.0]);
    }

    #[test]
    fn corrects_a_query_that_saw_one_component() {
        let anchor = [1.0, 5.0];
        // truth c = (2, -3); base saw only -3; sum saw 3 = 2 + 1
        let got = label_against_anchor(0, &[-3.0], &[3.0, 2.0], &[], anchor).unwrap();
        assert_eq!(got, [2.0, -3.0]);
    }

    #[test]
    fn equal_projections_take_the_trivial_labelling() {
        let got = label_against_anchor(0, &[0.0], &[1.0, 5.0], &[-1.0, -5.0], [1.0, 5.0]).unwrap();
        assert_eq!(got, [0.0, 0.0]);
    }

    #[test]
    fn contradictions_are_reported() {
        let r = label_against_anchor(7, &[0.0, 1.0], &[100.0], &[], [1.0, 5.0]);
        assert_eq!(r, Err(RecoveryError::DuplicateProjection { query: 7 }));
    }
}
