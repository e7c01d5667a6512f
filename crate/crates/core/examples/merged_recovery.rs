//! When the noise floor is comparable to the gap, recover one vector close to both.

use mixsparse::recovery::{recover, RecoveryBranch, RecoveryConfig};
use mixsparse::{MixtureOracle, SparseVectorPair};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (n, k) = (60, 3);
    let mut b1 = vec![0.0; n];
    for (i, v) in [(5, 2.0), (30, -3.0), (44, 2.5)] {
        b1[i] = v;
    }
    let mut b2 = b1.clone();
    b2[30] += 0.04;
    let truth = SparseVectorPair::new(b1, b2, k)?;
    let (sigma, gamma) = (0.05, 0.05);
    let config = RecoveryConfig { gap_bound: truth.gap(), ..Default::default() };
    let mut oracle = MixtureOracle::new(truth, sigma, 9)?;

    let report = recover(&mut oracle, n, k, sigma, gamma, &config)?;
    assert_eq!(report.branch, RecoveryBranch::Merged);
    println!(
        "merged estimate: error {:.4} / {:.4} with {} queries",
        report.errors.error_1, report.errors.error_2, report.total_queries
    );
    Ok(())
}
