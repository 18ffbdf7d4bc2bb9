//! Independent oracles shared by the integration tests. Nothing here calls
//! the solvers or the prox routines under test.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use proxsplit::model::{BlockPartition, Problem, RegularizerSpec};
use proxsplit::prox::ScalarLoss;
use proxsplit::synthetic::{generate, SyntheticSpec};

/// Bisection on a continuous increasing `f` over `[lo, hi]` with
/// `f(lo) <= 0 <= f(hi)`, run until the bracket stops shrinking.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return if f(lo).abs() <= f(hi).abs() { lo } else { hi };
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

/// `gamma / (e^p + 1)` without overflow.
pub fn logistic_tail(gamma: f64, p: f64) -> f64 {
    if p > 0.0 {
        let e = (-p).exp();
        gamma * e / (1.0 + e)
    } else {
        gamma / (1.0 + p.exp())
    }
}

/// Logistic prox by bisection on `p - v - gamma / (e^p + 1)`.
pub fn prox_logistic_oracle(v: f64, gamma: f64) -> f64 {
    bisect(|p| p - v - logistic_tail(gamma, p), v, v + gamma)
}

/// `prox_{sigma h*}(x)` for the logistic loss, where
/// `h*(u) = -u ln(-u) + (1 + u) ln(1 + u)` on `[-1, 0]`.
pub fn prox_logistic_conjugate_oracle(x: f64, sigma: f64) -> f64 {
    let f = |u: f64| {
        let d = if u <= -1.0 {
            f64::NEG_INFINITY
        } else if u >= 0.0 {
            f64::INFINITY
        } else {
            (1.0 + u).ln() - (-u).ln()
        };
        u - x + sigma * d
    };
    bisect(f, -1.0, 0.0)
}

/// Hinge `max(0, 1 - v)` has `h*(u) = u` on `[-1, 0]`.
pub fn prox_hinge_conjugate_oracle(x: f64, sigma: f64) -> f64 {
    (x - sigma).clamp(-1.0, 0.0)
}

/// The Huber-type loss has `h*(u) = u + u^2` on `[-1, 0]`.
pub fn prox_huber_conjugate_oracle(x: f64, sigma: f64) -> f64 {
    ((x - sigma) / (1.0 + 2.0 * sigma)).clamp(-1.0, 0.0)
}

/// Synthetic problem used by several criteria: N = 20, L = 100, B = 4, l1.
pub fn criterion_problem(lambda: f64) -> Problem {
    let spec = SyntheticSpec { n_samples: 100, n_features: 20, support: 6, label_noise: 0.1, seed: 2024, density: 1.0 };
    let (data, _) = generate(&spec).unwrap();
    Problem::new(data, BlockPartition::contiguous(20, 4).unwrap(), RegularizerSpec::l1(lambda), ScalarLoss::Logistic)
        .unwrap()
}

/// Dense `diag(y) X`.
pub fn signed_design(problem: &Problem) -> DMatrix<f64> {
    let data = problem.data();
    let dense = data.x().to_dense();
    DMatrix::from_fn(data.n_samples(), data.n_features(), |l, j| data.y()[l] * dense[l][j])
}

fn logistic(v: f64) -> f64 {
    if v > 0.0 {
        (-v).exp().ln_1p()
    } else {
        -v + v.exp().ln_1p()
    }
}

fn logistic_grad(v: f64) -> f64 {
    -logistic_tail(1.0, v)
}

/// `sum_l log(1 + exp(-a_l^T w)) + lambda ||w||_1`.
pub fn oracle_objective(a: &DMatrix<f64>, lambda: f64, w: &DVector<f64>) -> f64 {
    (a * w).iter().map(|&m| logistic(m)).sum::<f64>() + lambda * w.iter().map(|x| x.abs()).sum::<f64>()
}

pub fn oracle_gradient(a: &DMatrix<f64>, w: &DVector<f64>) -> DVector<f64> {
    let d = (a * w).map(logistic_grad);
    a.transpose() * d
}

/// Largest violation of the l1 optimality conditions.
pub fn oracle_kkt(a: &DMatrix<f64>, lambda: f64, w: &DVector<f64>) -> f64 {
    oracle_kkt_at(a, lambda, w.as_slice(), w.as_slice())
}

/// KKT residual with the gradient taken at `w` and the subdifferential at
/// `support`, a point with the same nonzeros up to rounding.
pub fn oracle_kkt_at(a: &DMatrix<f64>, lambda: f64, w: &[f64], support: &[f64]) -> f64 {
    let g = oracle_gradient(a, &DVector::from_column_slice(w));
    g.iter()
        .zip(support)
        .map(|(&gj, &sj)| if sj == 0.0 { (gj.abs() - lambda).max(0.0) } else { (gj + lambda * sj.signum()).abs() })
        .fold(0.0, f64::max)
}

/// Largest eigenvalue of `A^T A` from a dense symmetric eigendecomposition.
pub fn dense_norm_sq(a: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(a.transpose() * a).eigenvalues.max()
}

/// Accelerated proximal gradient (FISTA with restarts) on the l1 problem,
/// run until the KKT residual is at most `kkt_tol`.
pub fn fista_reference(problem: &Problem, kkt_tol: f64) -> Vec<f64> {
    let a = signed_design(problem);
    let lambda = problem.reg().lambda;
    let step = 1.0 / (0.25 * dense_norm_sq(&a));
    let n = a.ncols();
    let soft = |v: DVector<f64>, t: f64| v.map(|x| x.signum() * (x.abs() - t).max(0.0));
    let mut w = DVector::zeros(n);
    let mut z = w.clone();
    let mut t = 1.0_f64;
    for _ in 0..2_000_000 {
        let w_next = soft(&z - step * oracle_gradient(&a, &z), step * lambda);
        // Gradient restart: drop the momentum when it points uphill.
        if (&z - &w_next).dot(&(&w_next - &w)) > 0.0 {
            t = 1.0;
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        z = &w_next + ((t - 1.0) / t_next) * (&w_next - &w);
        w = w_next;
        t = t_next;
        if oracle_kkt(&a, lambda, &w) <= kkt_tol {
            return w.as_slice().to_vec();
        }
    }
    panic!("reference did not reach KKT {kkt_tol}");
}

/// `lambda` for the criterion problem: the fraction of `||A^T 1 / 2||_inf`
/// on a fixed grid whose reference solution is closest to half zeros.
pub fn half_sparse_lambda() -> f64 {
    let base = criterion_problem(0.0);
    let a = signed_design(&base);
    let lambda_max = (a.transpose() * DVector::from_element(a.nrows(), 0.5)).amax();
    let mut best = (f64::INFINITY, 0.0);
    for k in 1..20 {
        let lambda = lambda_max * k as f64 / 20.0;
        let w = fista_reference(&base.with_reg(RegularizerSpec::l1(lambda)).unwrap(), 1e-8);
        let zeros = w.iter().filter(|&&x| x == 0.0).count() as f64 / w.len() as f64;
        if (zeros - 0.5).abs() < best.0 {
            best = ((zeros - 0.5).abs(), lambda);
        }
    }
    best.1
}
