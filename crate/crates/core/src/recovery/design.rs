use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::RecoveryError;

/// `m` i.i.d. standard normal queries in `n` dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct SensingDesign {
    rows: Vec<Vec<f64>>,
    a: DMatrix<f64>,
}

impl SensingDesign {
    /// Builds a design from explicit query rows.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, RecoveryError> {
        let m = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if m == 0 || n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(RecoveryError::InvalidConfig(
                "design needs m, n >= 1 and equal-length rows".into(),
            ));
        }
        let root_m = (m as f64).sqrt();
        let a = DMatrix::from_fn(m, n, |i, j| rows[i][j] / root_m);
        Ok(Self { rows, a })
    }

    pub fn m(&self) -> usize {
        self.rows.len()
    }

    pub fn n(&self) -> usize {
        self.a.ncols()
    }

    /// Unnormalized query vectors, the ones sent to the oracle.
    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// The sensing matrix: row `i` is `x^i / sqrt(m)`.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }
}

/// Draws an `m x n` Gaussian design, deterministic in `seed`.
pub fn gaussian_design(m: usize, n: usize, seed: u64) -> Result<SensingDesign, RecoveryError> {
    if m == 0 || n == 0 {
        return Err(RecoveryError::InvalidConfig(format!("design size {m} x {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = (0..m)
        .map(|_| (0..n).map(|_| StandardNormal.sample(&mut rng)).collect())
        .collect();
    SensingDesign::from_rows(rows)
}

/// `ceil(c_s * k * ln n)`, at least 1.
pub fn measurement_count(c_s: f64, k: usize, n: usize) -> usize {
    (c_s * k as f64 * (n as f64).ln()).ceil().max(1.0) as usize
}

/// Checks `m >= c_s k ln n`.
pub fn check_measurements(m: usize, c_s: f64, k: usize, n: usize) -> Result<(), RecoveryError> {
    let needed = measurement_count(c_s, k, n);
    if m < needed {
        return Err(RecoveryError::InvalidConfig(format!(
            "m = {m} is below c_s k ln n = {needed}"
        )));
    }
    Ok(())
}
