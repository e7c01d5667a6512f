//! Exact recovery from noiseless mixed responses.

use mixsparse::recovery::{recover_noiseless, RecoveryConfig};
use mixsparse::{MixtureOracle, SparseVectorPair};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (n, k) = (100, 5);
    let mut b1 = vec![0.0; n];
    let mut b2 = vec![0.0; n];
    for i in 0..k {
        b1[7 * i + 1] = 1.0 + i as f64;
        b2[11 * i + 3] = -2.0 + 0.5 * i as f64;
    }
    let truth = SparseVectorPair::new(b1, b2, k)?;
    let mut oracle = MixtureOracle::new(truth, 0.0, 4)?;

    let report = recover_noiseless(&mut oracle, n, k, &RecoveryConfig::default())?;
    println!(
        "m = {}, anchor {:?}, {} queries, max error {:.2e}",
        report.m,
        report.anchor_index,
        report.total_queries,
        report.errors.max_error()
    );
    Ok(())
}
