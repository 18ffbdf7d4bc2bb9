// The proximity operator of the logistic loss three ways: safeguarded
// Newton, the closed form through `W_r`, and the left-tail expansion. Then
// the Moreau decomposition with the conjugate.

use std::error::Error;

use proxsplit::prox::{
    prox_logistic, prox_logistic_asymptotic, prox_logistic_lambert, prox_logistic_newton, ScalarLoss,
};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let gamma = 1.0;
    println!("{:>8} {:>22} {:>22} {:>10}", "v", "newton", "lambert", "diff");
    for v in [-20.0, -5.0, -1.0, 0.0, 1.0, 5.0, 20.0] {
        let newton = prox_logistic_newton(v, gamma)?;
        let lambert = prox_logistic_lambert(v, gamma)?;
        println!("{v:>8.1} {newton:>22.15e} {lambert:>22.15e} {:>10.1e}", (newton - lambert).abs());
    }

    // Far in the left tail the expansion is exact to double precision.
    for v in [-30.0, -40.0, -100.0] {
        let exact = prox_logistic_newton(v, gamma)?;
        let approx = prox_logistic_asymptotic(v, gamma)?;
        println!("v = {v}: exact {exact:.15e}, expansion {approx:.15e}");
    }

    // v = prox_{gamma h}(v) + gamma prox_{h*/gamma}(v / gamma)
    for loss in [ScalarLoss::Logistic, ScalarLoss::HingeQ1, ScalarLoss::Huber] {
        let (v, gamma) = (0.7, 2.5);
        let p = loss.prox(v, gamma)?;
        let c = loss.prox_conjugate(v / gamma, 1.0 / gamma)?;
        println!(
            "{:>9}: prox {p:+.6}, conjugate {c:+.6}, reconstruction error {:.1e}",
            loss.name(),
            (p + gamma * c - v).abs()
        );
    }

    let p = prox_logistic(0.0, 1.0)?;
    println!("prox_h(0) = {p:.17}");
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
