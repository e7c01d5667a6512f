//! Independent reference computations shared by the integration tests.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Mean and variance of `0.5 N(mu1, s^2) + 0.5 N(mu2, s^2)` from the raw
/// moments `E X = (mu1 + mu2)/2`, `E X^2 = s^2 + (mu1^2 + mu2^2)/2`.
pub fn mixture_moments(mu1: f64, mu2: f64, sigma: f64) -> (f64, f64) {
    let ex = 0.5 * (mu1 + mu2);
    let ex2 = sigma * sigma + 0.5 * (mu1 * mu1 + mu2 * mu2);
    (ex, ex2 - ex * ex)
}

pub fn mixture_samples(mu1: f64, mu2: f64, sigma: f64, count: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let mu = if rng.random::<bool>() { mu1 } else { mu2 };
            mu + sigma * rng.sample::<f64, _>(StandardNormal)
        })
        .collect()
}

fn subsets(n: usize, size: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, size: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < size - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, size, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, size, &mut Vec::new(), &mut out);
    out
}

/// Exhaustive optimum of `min ||z||_1 s.t. ||A z - y|| <= r` for tiny problems.
///
/// `r == 0`: every basic solution `A_S z_S = y` with `|S| = m` (vertices of the
/// linear program). `r > 0`: for every support `S` with `|S| <= m` and sign
/// vector `c`, the minimizer of `c^T z` over the ellipsoid
/// `(z - z_ls)^T G (z - z_ls) <= r^2 - e^2` is
/// `z_ls - rho G^-1 c / sqrt(c^T G^-1 c)`; it counts when its signs equal `c`.
pub fn brute_force_bp(a: &DMatrix<f64>, y: &DVector<f64>, r: f64) -> f64 {
    let (m, n) = a.shape();
    if y.norm() <= r {
        return 0.0;
    }
    let mut best = f64::INFINITY;
    if r == 0.0 {
        for s in subsets(n, m) {
            let a_s = a.select_columns(&s);
            if let Some(z) = a_s.lu().solve(y) {
                if (a.select_columns(&s) * &z - y).norm() < 1e-9 * (1.0 + y.norm()) {
                    best = best.min(z.lp_norm(1));
                }
            }
        }
        return best;
    }
    for size in 1..=m.min(n) {
        for s in subsets(n, size) {
            let a_s = a.select_columns(&s);
            let Some(chol) = a_s.tr_mul(&a_s).cholesky() else { continue };
            let z_ls = chol.solve(&a_s.tr_mul(y));
            let e2 = (&a_s * &z_ls - y).norm_squared();
            if e2 > r * r {
                continue;
            }
            let rho = (r * r - e2).sqrt();
            for mask in 0..(1u32 << size) {
                let c = DVector::from_fn(size, |i, _| if mask >> i & 1 == 1 { -1.0 } else { 1.0 });
                let h = chol.solve(&c);
                let z = &z_ls - &h * (rho / c.dot(&h).sqrt());
                if z.iter().zip(c.iter()).all(|(zi, ci)| zi * ci > 0.0) {
                    best = best.min(c.dot(&z));
                }
            }
        }
    }
    best
}

pub fn gaussian_matrix(m: usize, n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(m, n, |_, _| rng.sample::<f64, _>(StandardNormal) / (m as f64).sqrt())
}

/// Two-sided binomial slack: `3 sqrt(p (1 - p) / trials)`.
pub fn binomial_slack(p: f64, trials: usize) -> f64 {
    3.0 * (p * (1.0 - p) / trials as f64).sqrt()
}
