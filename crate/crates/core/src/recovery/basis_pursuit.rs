//! `min ||z||_1  s.t.  ||A z - y||_2 <= radius` by Douglas-Rachford splitting.
//!
//! Each iteration projects onto the residual ball (a secular equation solved
//! in the SVD basis of `A`) and soft-thresholds. Termination needs a duality
//! certificate: a dual point `nu` with `||A^T nu||_inf <= 1` bounds the optimum
//! from below by `<nu, y> - radius ||nu||_2`. Every check also tries to polish
//! the current support in closed form.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Stop once `||z||_1 - dual <= gap_tol * max(1, ||z||_1)`.
    pub gap_tol: f64,
    pub feasibility_tol: f64,
    pub max_iter: usize,
    /// Soft-threshold level; `None` picks one from the least-norm solution.
    pub step: Option<f64>,
    /// Iterations between certificate checks.
    pub check_every: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            gap_tol: 1e-6,
            feasibility_tol: 1e-6,
            max_iter: 100_000,
            step: None,
            check_every: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BPSolution {
    pub z: Vec<f64>,
    pub residual_l2: f64,
    pub l1_norm: f64,
    /// Best certified lower bound on the optimal objective.
    pub dual_bound: f64,
    pub solver_iters: usize,
    pub converged: bool,
}

impl BPSolution {
    pub fn duality_gap(&self) -> f64 {
        self.l1_norm - self.dual_bound
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BpError {
    #[error("invalid basis pursuit input: {0}")]
    InvalidInput(String),
    #[error("no z satisfies ||Az - y|| <= {radius}; the smallest residual is {min_residual}")]
    Infeasible { min_residual: f64, radius: f64 },
    /// The cap was hit without a certificate; the best iterate is attached.
    #[error("basis pursuit did not converge in {iters} iterations")]
    NotConverged { iters: usize, solution: Box<BPSolution> },
}

/// Projection onto `{x : ||A x - y|| <= r}` in the thin SVD basis.
struct BallProjector {
    u: DMatrix<f64>,
    v: DMatrix<f64>,
    s: Vec<f64>,
    /// `U^T y`.
    b: Vec<f64>,
    /// Squared part of `y` that no `x` can reach.
    e2: f64,
    r: f64,
}

impl BallProjector {
    fn new(a: &DMatrix<f64>, y: &DVector<f64>, r: f64) -> Self {
        let svd = a.clone().svd(true, true);
        let (u, v_t) = (svd.u.expect("u requested"), svd.v_t.expect("v_t requested"));
        let s_max = svd.singular_values.max();
        let cut = s_max * 1e-12 * (a.nrows().max(a.ncols()) as f64);
        let keep: Vec<usize> = (0..svd.singular_values.len())
            .filter(|&i| svd.singular_values[i] > cut)
            .collect();
        let u = u.select_columns(&keep);
        let v = v_t.select_rows(&keep).transpose();
        let s: Vec<f64> = keep.iter().map(|&i| svd.singular_values[i]).collect();
        let b_vec = u.tr_mul(y);
        let e2 = (y - &u * &b_vec).norm_squared();
        Self {
            u,
            v,
            s,
            b: b_vec.iter().copied().collect(),
            e2,
            r,
        }
    }

    fn min_residual(&self) -> f64 {
        self.e2.sqrt()
    }

    /// Returns the projection and the multiplier (`inf` for the equality case).
    fn project(&self, p: &DVector<f64>) -> (DVector<f64>, f64) {
        let q = self.v.tr_mul(p);
        let d: Vec<f64> = (0..self.s.len()).map(|i| self.s[i] * q[i] - self.b[i]).collect();
        let g0: f64 = d.iter().map(|x| x * x).sum();
        if g0 + self.e2 <= self.r * self.r {
            return (p.clone(), 0.0);
        }
        let tau = self.r * self.r - self.e2;
        let lambda = if tau <= 0.0 {
            f64::INFINITY
        } else {
            self.secular_root(&d, tau)
        };
        let c = DVector::from_iterator(
            self.s.len(),
            (0..self.s.len()).map(|i| {
                if lambda.is_infinite() {
                    self.b[i] / self.s[i]
                } else {
                    let s2 = self.s[i] * self.s[i];
                    (q[i] + lambda * self.s[i] * self.b[i]) / (1.0 + lambda * s2)
                }
            }),
        );
        let x = p - &self.v * (q - c);
        (x, lambda)
    }

    /// Solves `sum d_i^2 / (1 + lambda s_i^2)^2 = tau` by Newton on
    /// `1/sqrt(g) - 1/sqrt(tau)`, which is concave in `lambda` so the iterates
    /// increase monotonically from zero.
    fn secular_root(&self, d: &[f64], tau: f64) -> f64 {
        let target = 1.0 / tau.sqrt();
        let mut lambda = 0.0_f64;
        for _ in 0..200 {
            let mut g = 0.0;
            let mut dg = 0.0;
            for (di, si) in d.iter().zip(&self.s) {
                let s2 = si * si;
                let den = 1.0 + lambda * s2;
                g += di * di / (den * den);
                dg -= 2.0 * di * di * s2 / (den * den * den);
            }
            let phi = 1.0 / g.sqrt() - target;
            if phi.abs() <= 1e-15 * target {
                break;
            }
            let dphi = -0.5 * dg / (g * g.sqrt());
            if !(dphi > 0.0) {
                break;
            }
            let next = lambda - phi / dphi;
            if !(next > lambda) {
                break;
            }
            lambda = next;
        }
        lambda
    }

    /// `nu` with `A^T nu = w`, for `w` in the row space of `A`.
    fn row_space_preimage(&self, w: &DVector<f64>) -> DVector<f64> {
        let mut c = self.v.tr_mul(w);
        for (ci, si) in c.iter_mut().zip(&self.s) {
            *ci /= si;
        }
        &self.u * c
    }
}

fn soft_threshold(v: &DVector<f64>, t: f64) -> DVector<f64> {
    v.map(|x| x.signum() * (x.abs() - t).max(0.0))
}

struct Certifier<'a> {
    a: &'a DMatrix<f64>,
    y: &'a DVector<f64>,
    r: f64,
}

impl Certifier<'_> {
    fn residual(&self, z: &DVector<f64>) -> f64 {
        (self.a * z - self.y).norm()
    }

    fn dual_value(&self, nu: &DVector<f64>) -> f64 {
        let scale = self.a.tr_mul(nu).amax().max(1.0);
        if !scale.is_finite() {
            return f64::NEG_INFINITY;
        }
        (nu.dot(self.y) - self.r * nu.norm()) / scale
    }

    /// Minimizes `c^T z` over the support of `w` with `c = sign(w)`, inside the
    /// residual ball, using `A_S z - y` expanded around the least-squares point.
    fn polish(&self, w: &DVector<f64>) -> Option<DVector<f64>> {
        let wmax = w.amax();
        if wmax == 0.0 {
            return None;
        }
        let support: Vec<usize> = (0..w.len()).filter(|&i| w[i].abs() > 1e-12 * wmax).collect();
        if support.len() > self.a.nrows() {
            return None;
        }
        let a_s = self.a.select_columns(&support);
        let chol = a_s.tr_mul(&a_s).cholesky()?;
        let z_ls = chol.solve(&a_s.tr_mul(self.y));
        let e2 = (&a_s * &z_ls - self.y).norm_squared();
        let rho2 = self.r * self.r - e2;
        if rho2 < -1e-12 * (1.0 + self.r * self.r) {
            return None;
        }
        let c = DVector::from_iterator(support.len(), support.iter().map(|&i| w[i].signum()));
        let h = chol.solve(&c);
        let denom = c.dot(&h).sqrt();
        let z_s = if rho2 > 0.0 && denom > 0.0 {
            z_ls - h * (rho2.sqrt() / denom)
        } else {
            z_ls
        };
        let mut z = DVector::zeros(w.len());
        for (k, &i) in support.iter().enumerate() {
            z[i] = z_s[k];
        }
        Some(z)
    }
}

fn finish(z: &DVector<f64>, residual: f64, dual: f64, iters: usize, converged: bool) -> BPSolution {
    BPSolution {
        z: z.iter().copied().collect(),
        residual_l2: residual,
        l1_norm: z.lp_norm(1),
        dual_bound: dual,
        solver_iters: iters,
        converged,
    }
}

/// Solves basis pursuit with an `l2` residual ball; `radius = 0` is the
/// equality-constrained problem.
pub fn basis_pursuit(
    a: &DMatrix<f64>,
    y: &[f64],
    radius: f64,
    opts: &SolverOptions,
) -> Result<BPSolution, BpError> {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return Err(BpError::InvalidInput("empty design matrix".into()));
    }
    if y.len() != m {
        return Err(BpError::InvalidInput(format!("A has {m} rows but y has {}", y.len())));
    }
    if !(radius >= 0.0) || !radius.is_finite() {
        return Err(BpError::InvalidInput(format!("radius must be >= 0, got {radius}")));
    }
    if a.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(BpError::InvalidInput("non-finite entry in A or y".into()));
    }
    if opts.check_every == 0 || !(opts.gap_tol > 0.0) || !(opts.feasibility_tol >= 0.0) {
        return Err(BpError::InvalidInput("invalid solver options".into()));
    }

    let y = DVector::from_column_slice(y);
    if y.norm() <= radius {
        return Ok(finish(&DVector::zeros(n), y.norm(), 0.0, 0, true));
    }

    let proj = BallProjector::new(a, &y, radius);
    let min_res = proj.min_residual();
    if min_res > radius + opts.feasibility_tol {
        return Err(BpError::Infeasible {
            min_residual: min_res,
            radius,
        });
    }
    let cert = Certifier { a, y: &y, r: radius };

    // Start from the least-norm point of the ball.
    let (mut z, _) = proj.project(&DVector::zeros(n));
    let t = opts
        .step
        .unwrap_or_else(|| (z.amax() * 0.1).max(f64::MIN_POSITIVE));
    if !(t > 0.0) || !t.is_finite() {
        return Err(BpError::InvalidInput(format!("step must be > 0, got {t}")));
    }

    let mut best = z.clone();
    let mut best_l1 = f64::INFINITY;
    let mut best_res = cert.residual(&z);
    if best_res <= radius + opts.feasibility_tol {
        best_l1 = z.lp_norm(1);
    }
    let mut dual = f64::NEG_INFINITY;

    for iter in 1..=opts.max_iter {
        let (x, lambda) = proj.project(&z);
        let w = soft_threshold(&(2.0 * &x - &z), t);

        if iter % opts.check_every == 0 || iter == opts.max_iter {
            let nu = if lambda.is_infinite() {
                proj.row_space_preimage(&((&x - &z) / t))
            } else {
                (&y - a * &x) * (lambda / t)
            };
            dual = dual.max(cert.dual_value(&nu));

            let mut candidates = vec![x.clone()];
            candidates.extend(cert.polish(&w));
            for cand in candidates {
                let res = cert.residual(&cand);
                let l1 = cand.lp_norm(1);
                if res <= radius + opts.feasibility_tol && l1 < best_l1 {
                    best = cand;
                    best_l1 = l1;
                    best_res = res;
                }
            }
            if best_l1 - dual <= opts.gap_tol * best_l1.max(1.0) {
                return Ok(finish(&best, best_res, dual, iter, true));
            }
        }
        z += w - x;
    }

    let solution = finish(&best, best_res, dual, opts.max_iter, false);
    Err(BpError::NotConverged {
        iters: opts.max_iter,
        solution: Box::new(solution),
    })
}
