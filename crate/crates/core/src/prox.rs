//! Proximity operators.
//!
//! Scalar proxes of the classification losses (logistic, hinge, Huber), the
//! block proxes of the `l1` and group-`l2` penalties, and the Moreau conjugate
//! construction `prox_{sigma h*}`.
//!
//! All operators use the convention
//! `prox_{gamma psi}(v) = argmin_p 0.5 (p - v)^2 + gamma psi(p)`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::lambert_w;

/// Below this value of `v + gamma` the logistic prox is evaluated with its
/// asymptotic expansion.
pub const ASYMPTOTIC_SWITCH: f64 = -35.0;

const LOGISTIC_MAX_ITERATIONS: usize = 100;

/// Scalar loss `h` applied to the margin `y x^T w`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScalarLoss {
    /// `log(1 + exp(-v))`
    Logistic,
    /// `max(0, 1 - v)`
    HingeQ1,
    /// `max(0, 1 - v)^2`
    HingeQ2,
    /// `0` for `v >= 1`, `-v` for `v <= -1`, `(v - 1)^2 / 4` in between.
    Huber,
}

impl ScalarLoss {
    /// Lipschitz constant of `h'`, or `None` when `h` is not differentiable.
    pub fn gradient_lipschitz(self) -> Option<f64> {
        match self {
            ScalarLoss::Logistic => Some(0.25),
            ScalarLoss::HingeQ1 => None,
            ScalarLoss::HingeQ2 => Some(2.0),
            ScalarLoss::Huber => Some(0.5),
        }
    }

    pub fn is_smooth(self) -> bool {
        self.gradient_lipschitz().is_some()
    }

    pub fn value(self, v: f64) -> f64 {
        loss_value(self, v)
    }

    pub fn grad(self, v: f64) -> f64 {
        loss_grad(self, v)
    }

    /// `prox_{gamma h}(v)`.
    pub fn prox(self, v: f64, gamma: f64) -> Result<f64> {
        match self {
            ScalarLoss::Logistic => prox_logistic(v, gamma),
            ScalarLoss::HingeQ1 => prox_hinge(v, gamma, 1),
            ScalarLoss::HingeQ2 => prox_hinge(v, gamma, 2),
            ScalarLoss::Huber => prox_huber(v, gamma),
        }
    }

    /// `prox_{sigma h*}(v)` through Moreau's decomposition.
    pub fn prox_conjugate(self, v: f64, sigma: f64) -> Result<f64> {
        prox_conjugate(|x, g| self.prox(x, g), v, sigma)
    }

    pub fn name(self) -> &'static str {
        match self {
            ScalarLoss::Logistic => "logistic",
            ScalarLoss::HingeQ1 => "hinge",
            ScalarLoss::HingeQ2 => "squared-hinge",
            ScalarLoss::Huber => "huber",
        }
    }
}

impl fmt::Display for ScalarLoss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScalarLoss {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "logistic" => Ok(ScalarLoss::Logistic),
            "hinge" | "hinge1" => Ok(ScalarLoss::HingeQ1),
            "squared-hinge" | "hinge2" => Ok(ScalarLoss::HingeQ2),
            "huber" => Ok(ScalarLoss::Huber),
            other => Err(Error::InvalidConfig(format!("unknown loss '{other}'"))),
        }
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma.is_finite() && gamma > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("prox step must be finite and > 0, got {gamma}")))
    }
}

fn check_point(v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("prox argument must be finite, got {v}")))
    }
}

/// `gamma / (exp(x) + 1)` without overflow.
#[inline]
fn scaled_logistic_tail(gamma: f64, x: f64) -> f64 {
    if x > 0.0 {
        let e = (-x).exp();
        gamma * e / (1.0 + e)
    } else {
        gamma / (1.0 + x.exp())
    }
}

/// Proximity operator of `gamma * log(1 + exp(-.))`.
///
/// Returns the unique `p` with `p - v = gamma / (exp(p) + 1)`. Far in the left
/// tail (`v + gamma <= -35`) the second-order asymptotic expansion is used; it
/// agrees with the exact root to far below machine precision there.
pub fn prox_logistic(v: f64, gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    check_point(v)?;
    if v + gamma <= ASYMPTOTIC_SWITCH {
        return prox_logistic_asymptotic(v, gamma);
    }
    Ok(v + logistic_prox_shift(v, gamma)?)
}

/// Exact logistic prox by safeguarded Newton, for every finite `v`.
pub fn prox_logistic_newton(v: f64, gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    check_point(v)?;
    Ok(v + logistic_prox_shift(v, gamma)?)
}

/// The shift `d = prox_{gamma h}(v) - v`, the root in `[0, gamma]` of
/// `d - gamma / (exp(v + d) + 1)`.
///
/// Solving for the shift rather than for `p` keeps full relative accuracy when
/// `d` is far below the spacing of doubles around `v`.
pub fn logistic_prox_shift(v: f64, gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    check_point(v)?;
    let phi = |d: f64| d - scaled_logistic_tail(gamma, v + d);

    // One fixed-point step from 0 lands right of the root.
    let mut lo = 0.0_f64;
    let mut hi = scaled_logistic_tail(gamma, v);
    if hi == 0.0 {
        return Ok(0.0);
    }
    let mut d = hi;
    let mut last_step = hi;
    for _ in 0..LOGISTIC_MAX_ITERATIONS {
        let f = phi(d);
        if f == 0.0 {
            return Ok(d);
        }
        if f > 0.0 {
            hi = d;
        } else {
            lo = d;
        }
        if hi - lo <= 2.0 * f64::EPSILON * hi {
            return Ok(if phi(lo).abs() <= f.abs() { lo } else { hi });
        }
        let x = v + d;
        let s = 1.0 / (1.0 + (-x).exp());
        let slope = 1.0 + gamma * s * (1.0 - s);
        let newton = d - f / slope;
        // Near the inflection of the tail Newton can bounce between the ends
        // of the bracket; fall back to bisection unless the step halves.
        let next =
            if newton > lo && newton < hi && (newton - d).abs() <= 0.5 * last_step { newton } else { 0.5 * (lo + hi) };
        if (next - d).abs() <= 2.0 * f64::EPSILON * d.abs() || next == lo || next == hi {
            return Ok(next);
        }
        last_step = (next - d).abs();
        d = next;
    }
    Err(Error::Convergence {
        what: format!("logistic prox at v = {v}, gamma = {gamma}"),
        iterations: LOGISTIC_MAX_ITERATIONS,
    })
}

/// `v + gamma (1 - exp(gamma + v) + (1 + gamma) exp(2 (gamma + v)))`, the
/// expansion of the logistic prox as `v -> -inf`.
pub fn prox_logistic_asymptotic(v: f64, gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    let e = (gamma + v).exp();
    Ok(v + gamma * (1.0 - e + (1.0 + gamma) * e * e))
}

/// Logistic prox through the generalized Lambert W function,
/// `v + W_{exp(-v)}(gamma exp(-v))`.
///
/// Overflows once `exp(-v)` does (`v` below roughly -709); use
/// [`prox_logistic`] in production code.
pub fn prox_logistic_lambert(v: f64, gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    check_point(v)?;
    let r = (-v).exp();
    let w = lambert_w::eval_w(r, gamma * r)?;
    Ok(v + w.value)
}

/// Prox of `gamma * max(0, 1 - .)^q`, `q` in `{1, 2}`.
pub fn prox_hinge(v: f64, gamma: f64, q: u8) -> Result<f64> {
    check_gamma(gamma)?;
    match q {
        1 => Ok(if v > 1.0 {
            v
        } else if v >= 1.0 - gamma {
            1.0
        } else {
            v + gamma
        }),
        2 => Ok(if v >= 1.0 { v } else { (v + 2.0 * gamma) / (1.0 + 2.0 * gamma) }),
        _ => Err(Error::Domain(format!("hinge exponent must be 1 or 2, got {q}"))),
    }
}

/// Prox of `gamma` times the Huber loss.
pub fn prox_huber(v: f64, gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    Ok(if v >= 1.0 {
        v
    } else if v <= -1.0 - gamma {
        v + gamma
    } else {
        (2.0 * v + gamma) / (2.0 + gamma)
    })
}

/// `prox_{sigma h*}(v) = v - sigma prox_{h / sigma}(v / sigma)`.
///
/// `prox_of_h(x, g)` must return `prox_{g h}(x)`.
pub fn prox_conjugate<F>(prox_of_h: F, v: f64, sigma: f64) -> Result<f64>
where
    F: Fn(f64, f64) -> Result<f64>,
{
    check_gamma(sigma)?;
    Ok(v - sigma * prox_of_h(v / sigma, 1.0 / sigma)?)
}

#[inline]
fn soft_threshold(x: f64, theta: f64) -> f64 {
    if x > theta {
        x - theta
    } else if x < -theta {
        x + theta
    } else {
        0.0
    }
}

/// Componentwise soft-thresholding, the prox of `theta * ||.||_1`.
pub fn prox_l1(v: &[f64], theta: f64) -> Vec<f64> {
    let mut out = v.to_vec();
    prox_l1_in_place(&mut out, theta);
    out
}

pub fn prox_l1_in_place(v: &mut [f64], theta: f64) {
    debug_assert!(theta >= 0.0);
    for x in v.iter_mut() {
        *x = soft_threshold(*x, theta);
    }
}

/// Block soft-thresholding `(1 - theta / ||v||_2)_+ v`, the prox of
/// `theta * ||.||_2`.
pub fn prox_group_l2(v: &[f64], theta: f64) -> Vec<f64> {
    let mut out = v.to_vec();
    prox_group_l2_in_place(&mut out, theta);
    out
}

pub fn prox_group_l2_in_place(v: &mut [f64], theta: f64) {
    debug_assert!(theta >= 0.0);
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm <= theta {
        v.iter_mut().for_each(|x| *x = 0.0);
    } else {
        let scale = 1.0 - theta / norm;
        v.iter_mut().for_each(|x| *x *= scale);
    }
}

/// Loss value, evaluated without overflow.
pub fn loss_value(kind: ScalarLoss, v: f64) -> f64 {
    match kind {
        ScalarLoss::Logistic => {
            if v >= 0.0 {
                (-v).exp().ln_1p()
            } else {
                -v + v.exp().ln_1p()
            }
        }
        ScalarLoss::HingeQ1 => (1.0 - v).max(0.0),
        ScalarLoss::HingeQ2 => {
            let m = (1.0 - v).max(0.0);
            m * m
        }
        ScalarLoss::Huber => {
            if v >= 1.0 {
                0.0
            } else if v <= -1.0 {
                -v
            } else {
                0.25 * (v - 1.0) * (v - 1.0)
            }
        }
    }
}

/// Loss derivative. For the hinge loss the subgradient `0` is returned at the
/// kink `v = 1`.
pub fn loss_grad(kind: ScalarLoss, v: f64) -> f64 {
    match kind {
        ScalarLoss::Logistic => -scaled_logistic_tail(1.0, v),
        ScalarLoss::HingeQ1 => {
            if v >= 1.0 {
                0.0
            } else {
                -1.0
            }
        }
        ScalarLoss::HingeQ2 => -2.0 * (1.0 - v).max(0.0),
        ScalarLoss::Huber => {
            if v >= 1.0 {
                0.0
            } else if v <= -1.0 {
                -1.0
            } else {
                0.5 * (v - 1.0)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Bisection on the monotone optimality residual over [v, v + gamma].
    fn bisection_logistic(v: f64, gamma: f64) -> f64 {
        let g = |p: f64| p - v - gamma / (p.exp() + 1.0);
        let (mut lo, mut hi) = (v, v + gamma);
        for _ in 0..400 {
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            if g(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn logistic_prox_at_origin() {
        let p = prox_logistic(0.0, 1.0).unwrap();
        assert!((p - bisection_logistic(0.0, 1.0)).abs() < 1e-14);
        assert!((p - 0.40106).abs() < 1e-5, "{p}");
    }

    #[test]
    fn logistic_prox_large_gamma_near_inflection() {
        // Plain Newton cycles between the ends of the bracket here.
        let (v, gamma) = (-4.932446947329083, 12.015988164070418);
        let p = prox_logistic(v, gamma).unwrap();
        assert!((p - bisection_logistic(v, gamma)).abs() < 1e-13, "{p}");
    }

    #[test]
    fn logistic_prox_right_tail() {
        let p = prox_logistic(10.0, 1.0).unwrap();
        assert!((p - bisection_logistic(10.0, 1.0)).abs() < 1e-13);
        assert!((p - 10.0000454).abs() < 1e-7, "{p}");
    }

    #[test]
    fn logistic_prox_left_tail_matches_expansion() {
        let exact = prox_logistic_newton(-50.0, 1.0).unwrap();
        assert!((exact - bisection_logistic(-50.0, 1.0)).abs() < 1e-12);
        let asym = prox_logistic_asymptotic(-50.0, 1.0).unwrap();
        assert!((exact - asym).abs() <= 1e-12);
        assert_eq!(prox_logistic(-50.0, 1.0).unwrap(), asym);
    }

    #[test]
    fn asymptotic_values() {
        assert_eq!(prox_logistic_asymptotic(-700.0, 1.0).unwrap(), -699.0);
        let e29 = (-29.0f64).exp();
        let expected = -29.0 - e29 + 2.0 * e29 * e29;
        assert!((prox_logistic_asymptotic(-30.0, 1.0).unwrap() - expected).abs() < 1e-14);
        assert!((prox_logistic_asymptotic(-30.0, 1.0).unwrap() - bisection_logistic(-30.0, 1.0)).abs() < 1e-13);
        let e18 = (-18.0f64).exp();
        let expected = -18.0 - 2.0 * e18 + 6.0 * e18 * e18;
        assert!((prox_logistic_asymptotic(-20.0, 2.0).unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn large_gamma_does_not_use_expansion_on_wrong_side() {
        // v alone is far left but v + gamma is not.
        let p = prox_logistic(-40.0, 1000.0).unwrap();
        assert!((p - bisection_logistic(-40.0, 1000.0)).abs() < 1e-10);
    }

    #[test]
    fn lambert_route_agrees() {
        for &v in &[-30.0, -5.0, 0.0, 0.7, 12.0, 30.0] {
            for &gamma in &[0.01, 1.0, 25.0] {
                let a = prox_logistic(v, gamma).unwrap();
                let b = prox_logistic_lambert(v, gamma).unwrap();
                assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0), "v={v} gamma={gamma} {a} {b}");
            }
        }
    }

    #[test]
    fn hinge_examples() {
        assert_eq!(prox_hinge(2.0, 0.5, 1).unwrap(), 2.0);
        assert_eq!(prox_hinge(0.8, 0.5, 1).unwrap(), 1.0);
        assert_eq!(prox_hinge(-1.0, 0.5, 1).unwrap(), -0.5);
        assert!((prox_hinge(0.0, 1.0, 2).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!(prox_hinge(0.0, 1.0, 3).is_err());
        assert!(prox_hinge(0.0, 0.0, 1).is_err());
    }

    #[test]
    fn huber_examples() {
        assert_eq!(prox_huber(3.0, 1.0).unwrap(), 3.0);
        assert_eq!(prox_huber(-5.0, 1.0).unwrap(), -4.0);
        assert_eq!(prox_huber(0.0, 2.0).unwrap(), 0.5);
        assert!(prox_huber(0.0, -1.0).is_err());
    }

    #[test]
    fn huber_prox_solves_stationarity() {
        for i in -60..60 {
            let v = i as f64 * 0.1;
            for &gamma in &[0.3, 1.0, 4.0] {
                let p = prox_huber(v, gamma).unwrap();
                assert!((p + gamma * loss_grad(ScalarLoss::Huber, p) - v).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn soft_threshold_examples() {
        assert_eq!(prox_l1(&[3.0, -0.5], 1.0), vec![2.0, 0.0]);
        assert_eq!(prox_l1(&[1.5, -2.0], 0.0), vec![1.5, -2.0]);
        assert_eq!(prox_l1(&[-2.0], 5.0), vec![0.0]);
    }

    #[test]
    fn group_threshold_examples() {
        assert_eq!(prox_group_l2(&[3.0, 4.0], 5.0), vec![0.0, 0.0]);
        assert_eq!(prox_group_l2(&[3.0, 4.0], 2.5), vec![1.5, 2.0]);
        assert_eq!(prox_group_l2(&[0.0, 0.0], 1.0), vec![0.0, 0.0]);
    }

    #[test]
    fn conjugate_examples() {
        let c = ScalarLoss::Logistic.prox_conjugate(0.0, 1.0).unwrap();
        assert!((c + bisection_logistic(0.0, 1.0)).abs() < 1e-14);
        let c = ScalarLoss::Logistic.prox_conjugate(5.0, 2.0).unwrap();
        assert!((c - (5.0 - 2.0 * bisection_logistic(2.5, 0.5))).abs() < 1e-13);
        assert!(ScalarLoss::Logistic.prox_conjugate(0.0, 0.0).is_err());
    }

    #[test]
    fn loss_examples() {
        let l = ScalarLoss::Logistic;
        assert!((l.value(0.0) - 2f64.ln()).abs() < 1e-16);
        assert_eq!(l.grad(0.0), -0.5);
        assert!(l.value(800.0).abs() < 1e-300);
        assert!(l.grad(800.0).abs() < 1e-300);
        assert!((l.value(-800.0) - 800.0).abs() < 1e-12);
        assert_eq!(l.grad(-800.0), -1.0);
        assert_eq!(ScalarLoss::Huber.value(0.0), 0.25);
        assert_eq!(ScalarLoss::Huber.grad(0.0), -0.5);
        assert_eq!(ScalarLoss::HingeQ1.grad(1.0), 0.0);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let h = 1e-5;
        for kind in [ScalarLoss::Logistic, ScalarLoss::HingeQ2, ScalarLoss::Huber, ScalarLoss::HingeQ1] {
            for i in -40..=40 {
                let v = i as f64 * 0.37 + 0.013;
                // skip kinks
                if (v - 1.0).abs() < 2.0 * h || (v + 1.0).abs() < 2.0 * h {
                    continue;
                }
                let fd = (kind.value(v + h) - kind.value(v - h)) / (2.0 * h);
                assert!((fd - kind.grad(v)).abs() < 1e-6, "{kind} v={v}");
            }
        }
    }

    #[test]
    fn parse_loss_names() {
        assert_eq!("logistic".parse::<ScalarLoss>().unwrap(), ScalarLoss::Logistic);
        assert_eq!("Huber".parse::<ScalarLoss>().unwrap(), ScalarLoss::Huber);
        assert!("square".parse::<ScalarLoss>().is_err());
    }

    fn any_loss() -> impl Strategy<Value = ScalarLoss> {
        prop_oneof![
            Just(ScalarLoss::Logistic),
            Just(ScalarLoss::HingeQ1),
            Just(ScalarLoss::HingeQ2),
            Just(ScalarLoss::Huber),
        ]
    }

    proptest! {
        #[test]
        fn logistic_prox_optimality(v in -700.0f64..700.0, log_gamma in -3.0f64..3.0) {
            let gamma = 10f64.powf(log_gamma);
            let p = prox_logistic(v, gamma).unwrap();
            prop_assert!((p - v - gamma / (p.exp() + 1.0)).abs() <= 1e-10);
            prop_assert!(p >= v && p <= v + gamma);
        }

        #[test]
        fn firmly_nonexpansive(kind in any_loss(), a in -50.0f64..50.0, b in -50.0f64..50.0, gamma in 0.01f64..20.0) {
            let pa = kind.prox(a, gamma).unwrap();
            let pb = kind.prox(b, gamma).unwrap();
            let d = pa - pb;
            prop_assert!(d * (a - b) >= d * d - 1e-12 * (1.0 + d.abs()));
        }

        #[test]
        fn moreau_identity(kind in any_loss(), v in -100.0f64..100.0, sigma in 0.01f64..100.0) {
            let c = kind.prox_conjugate(v, sigma).unwrap();
            let p = kind.prox(v / sigma, 1.0 / sigma).unwrap();
            prop_assert!((c + sigma * p - v).abs() <= 1e-14 * v.abs().max(1.0));
        }
    }
}
