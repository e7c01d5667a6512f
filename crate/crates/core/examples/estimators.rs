//! The three scalar mixture estimators and the regime test that picks one.

use mixsparse::gmm::{em_estimate, fit_single_gaussian, method_of_moments, EmOptions};
use mixsparse::{test_and_estimate, BatchPolicy, MixtureOracle, QueryTag, SparseVectorPair};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (mu1, mu2, sigma) = (-1.0, 2.0, 0.5);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let ys: Vec<f64> = (0..5000)
        .map(|_| if rng.random::<bool>() { mu1 } else { mu2 } + sigma * rng.sample::<f64, _>(StandardNormal))
        .collect();

    let em = em_estimate(&ys, sigma, &EmOptions::default())?;
    println!("EM      {:?} after {} iterations", em.means.sorted(), em.iterations);
    println!("moments {:?}", method_of_moments(&ys, sigma, 10)?.sorted());
    println!("single  {:.4}", fit_single_gaussian(&ys)?);

    // The regime test on a live oracle: projections 0 and 3 with sigma = 0.1.
    let truth = SparseVectorPair::new(vec![0.0, 3.0], vec![0.0, 0.0], 1)?;
    let mut oracle = MixtureOracle::new(truth, 0.1, 2)?;
    let est = test_and_estimate(&mut oracle, &[0.0, 1.0], QueryTag::Base(0), 0.1, 0.05, 1e-3, &BatchPolicy::default())?;
    println!(
        "regime test chose {:?}: ({:.4}, {:.4}) from {} samples",
        est.branch, est.mu_hat_1, est.mu_hat_2, est.samples_used
    );
    Ok(())
}
