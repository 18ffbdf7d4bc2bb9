// Evaluates the generalized Lambert function `W_r`, the root `w` of
// `w (exp(w) + r) = v`, on both sides of the branch threshold.

use std::error::Error;

use proxsplit::lambert_w::{eval_w, forward_map, BRANCH_THRESHOLD};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    println!("{:>10} {:>10} {:>22} {:>10} {:>5}", "r", "v", "W_r(v)", "residual", "iter");
    for r in [1e-3, 0.05, BRANCH_THRESHOLD, 1.0, 50.0] {
        for v in [0.0, 0.5, 3.0, 40.0] {
            let w = eval_w(r, v)?;
            assert!((forward_map(r, w.value) - v).abs() <= 1e-12 * v.abs().max(1.0));
            println!("{r:>10.3e} {v:>10.3} {:>22.15e} {:>10.1e} {:>5}", w.value, w.residual, w.iterations);
        }
    }

    // Negative arguments are only admissible above the threshold.
    let w = eval_w(2.0, -3.0)?;
    println!("W_2(-3) = {:.15}", w.value);
    match eval_w(0.01, -1.0) {
        Ok(w) => println!("unexpected value {}", w.value),
        Err(e) => println!("W_0.01(-1) is rejected: {e}"),
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
