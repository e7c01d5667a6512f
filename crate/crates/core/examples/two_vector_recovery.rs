//! Recover both sparse vectors from noisy mixed responses.

use mixsparse::recovery::{recover_two_vectors, RecoveryConfig};
use mixsparse::{MixtureOracle, SparseVectorPair};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (n, k) = (50, 3);
    let mut b1 = vec![0.0; n];
    let mut b2 = vec![0.0; n];
    for (i, v) in [(2, 1.5), (20, -1.0), (41, 2.0)] {
        b1[i] = v;
        b2[i] = -v;
    }
    let truth = SparseVectorPair::new(b1, b2, k)?;
    let (sigma, gamma) = (0.02, 0.02);
    let config = RecoveryConfig { gap_bound: truth.gap(), ..Default::default() };
    let mut oracle = MixtureOracle::new(truth, sigma, 5)?;

    let report = recover_two_vectors(&mut oracle, n, k, sigma, gamma, &config)?;
    println!(
        "m = {}, m' = {:?}, errors {:.4} / {:.4}",
        report.m, report.m_prime, report.errors.error_1, report.errors.error_2
    );
    println!(
        "{} queries ({} base, {} alignment), estimators {:?}",
        report.total_queries, report.base_queries, report.alignment_queries, report.estimator_branch_histogram
    );
    Ok(())
}
