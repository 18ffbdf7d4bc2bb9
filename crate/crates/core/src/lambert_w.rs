//! Generalized Lambert W function.
//!
//! `W_r(v)` is the inverse of the map `w -> w (exp(w) + r)`, `r > 0`. For
//! `r >= exp(-2)` the map is strictly increasing on the whole line. Below that
//! threshold it has three monotone pieces; only the branch through the origin,
//! which is strictly increasing and takes nonnegative values, is evaluated here,
//! and only at nonnegative arguments.
//!
//! The root is found with Newton's method on `g(w) = w (exp(w) + r) - v`,
//! safeguarded by a bisection bracket.

use crate::error::{Error, Result};

/// Relative residual tolerance of [`eval_w`].
pub const RESIDUAL_RTOL: f64 = 1e-12;

/// Default iteration cap of [`eval_w`].
pub const MAX_ITERATIONS: usize = 200;

/// `exp(-2)`, the threshold below which `W_r` has several branches.
pub const BRANCH_THRESHOLD: f64 = 0.135_335_283_236_612_7;

/// Outcome of a branch evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WBranchResult {
    /// The branch value `w` with `w (exp(w) + r) = v`.
    pub value: f64,
    /// `forward_map(r, value) - v`.
    pub residual: f64,
    pub iterations: usize,
}

/// `w (exp(w) + r)`. Overflows to `+inf` for large `w`.
pub fn forward_map(r: f64, w: f64) -> f64 {
    w * (w.exp() + r)
}

fn forward_derivative(r: f64, w: f64) -> f64 {
    w.exp() * (1.0 + w) + r
}

/// Evaluates `W_r(v)` with the default iteration cap.
pub fn eval_w(r: f64, v: f64) -> Result<WBranchResult> {
    eval_w_with_cap(r, v, MAX_ITERATIONS)
}

pub fn eval_w_with_cap(r: f64, v: f64, max_iterations: usize) -> Result<WBranchResult> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::Domain(format!("W_r needs a finite r > 0, got r = {r}")));
    }
    if !v.is_finite() {
        return Err(Error::Domain(format!("W_r needs a finite argument, got v = {v}")));
    }
    if r < BRANCH_THRESHOLD && v < 0.0 {
        return Err(Error::Domain(format!("r = {r} < exp(-2): only nonnegative arguments are supported, got v = {v}")));
    }
    if v == 0.0 {
        return Ok(WBranchResult { value: 0.0, residual: 0.0, iterations: 0 });
    }

    let tol = RESIDUAL_RTOL * v.abs().max(1.0);
    // g(lo) < 0 < g(hi) on both brackets.
    let (mut lo, mut hi) = if v > 0.0 {
        // w <= v / r because w exp(w) >= 0, and w exp(w) <= v bounds w by ln v
        // (or by 1 when v <= e).
        let log_bound = if v > std::f64::consts::E { v.ln() } else { 1.0 };
        (0.0, (v / r).min(log_bound))
    } else {
        // |w| (exp(w) + r) = |v| with exp(w) + r > r.
        (v / r, 0.0)
    };

    // g is convex on w > -2, so Newton started right of the root descends
    // monotonically for positive arguments.
    let mut x = if v > 0.0 { hi } else { 0.5 * (lo + hi) };
    let mut best = (f64::INFINITY, x);
    for iteration in 1..=max_iterations {
        let gx = forward_map(r, x) - v;
        if gx.abs() < best.0 {
            best = (gx.abs(), x);
        }
        if gx.abs() <= tol {
            return Ok(WBranchResult { value: x, residual: gx, iterations: iteration });
        }
        if gx > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let newton = x - gx / forward_derivative(r, x);
        let next = if newton.is_finite() && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if next == x || hi - lo <= f64::EPSILON * hi.abs().max(lo.abs()) {
            // The bracket cannot shrink any further.
            let residual = forward_map(r, best.1) - v;
            if residual.abs() <= tol {
                return Ok(WBranchResult { value: best.1, residual, iterations: iteration });
            }
            break;
        }
        x = next;
    }
    Err(Error::Convergence { what: format!("W_r(v) with r = {r}, v = {v}"), iterations: max_iterations })
}
