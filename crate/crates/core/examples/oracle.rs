//! Query a mixture oracle and inspect its query ledger.

use mixsparse::{MixtureOracle, QueryTag, SparseVectorPair};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let truth = SparseVectorPair::new(vec![1.0, 0.0, -2.0], vec![0.0, 3.0, 0.0], 2)?;
    let mut oracle = MixtureOracle::new(truth, 0.1, 7)?;

    let x = [1.0, 1.0, 1.0];
    let ys = oracle.query_batch(&x, 8, QueryTag::Base(0))?;
    println!("projections are -1 and 3; samples: {ys:.3?}");
    oracle.query_batch(&[1.0, 0.0, 0.0], 4, QueryTag::Sum(1, 0))?;

    for (tag, count) in oracle.ledger().iter() {
        println!("{tag:?}: {count}");
    }
    println!("total {} base {}", oracle.ledger().total(), oracle.ledger().base_total());

    // Same seed, same stream.
    let mut replay = oracle.reset();
    assert_eq!(replay.query_batch(&x, 8, QueryTag::Base(0))?, ys);
    Ok(())
}
