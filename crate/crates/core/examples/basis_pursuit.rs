//! Recover a sparse vector from few Gaussian measurements by l1 minimization.

use mixsparse::recovery::{basis_pursuit, gaussian_design, measurement_count, SolverOptions};
use nalgebra::DVector;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (n, k) = (100, 4);
    let m = measurement_count(3.0, k, n);
    let design = gaussian_design(m, n, 11)?;
    let mut beta = DVector::zeros(n);
    for (i, v) in [(3, 1.5), (17, -2.0), (58, 1.0), (90, -1.25)] {
        beta[i] = v;
    }
    let y = design.matrix() * &beta;

    let exact = basis_pursuit(design.matrix(), y.as_slice(), 0.0, &SolverOptions::default())?;
    let err = (DVector::from_column_slice(&exact.z) - &beta).norm();
    println!("m = {m}: error {err:.2e}, {} iterations, gap {:.1e}", exact.solver_iters, exact.duality_gap());

    let noisy = basis_pursuit(design.matrix(), y.as_slice(), 0.1, &SolverOptions::default())?;
    println!("radius 0.1: l1 {:.4} (exact {:.4})", noisy.l1_norm, exact.l1_norm);
    Ok(())
}
