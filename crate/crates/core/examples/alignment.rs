//! Pair up the two means of every query so that each list follows one vector.

use mixsparse::alignment::AlignConfig;
use mixsparse::gmm::MeanEstimatePair;
use mixsparse::{align_all, align_pair, test_and_estimate, BatchPolicy, MixtureOracle, QueryTag, SparseVectorPair};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // One pair by hand: query 0 sees (1, -1), query 1 sees (3, 4) listed the other way round.
    let e = |a: f64, b: f64| MeanEstimatePair::new(a, b, 0.01);
    let v = align_pair(0, 1, &e(1.0, -1.0), &e(4.0, 3.0), &e(4.0, 3.0), &e(-2.0, -5.0), 0.01)?;
    println!("same order: {} (decided by {:?})", v.same_permutation, v.evidence.check);

    // A full run against an oracle.
    let truth = SparseVectorPair::new(vec![2.0, 0.0, 1.0], vec![-1.0, 1.5, 0.0], 2)?;
    let (sigma, gamma, eta) = (0.05, 0.05, 1e-3);
    let mut oracle = MixtureOracle::new(truth.clone(), sigma, 3)?;
    let rows = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0], vec![1.0, 1.0, 1.0]];
    let policy = BatchPolicy::default();
    let estimates = rows
        .iter()
        .enumerate()
        .map(|(i, x)| test_and_estimate(&mut oracle, x, QueryTag::Base(i), sigma, gamma, eta, &policy))
        .collect::<Result<Vec<_>, _>>()?;
    let config = AlignConfig { gap_l2_bound: truth.gap(), policy };
    let out = align_all(&mut oracle, &rows, &estimates, sigma, gamma, eta, &config)?;
    println!("anchor {} (pool of {})", out.aligned.anchor_index, out.m_prime);
    println!("u = {:.3?}", out.aligned.u);
    println!("v = {:.3?}", out.aligned.v);
    Ok(())
}
