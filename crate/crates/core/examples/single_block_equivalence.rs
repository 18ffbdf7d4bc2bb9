// With one block, no strong convexity shift and `gamma = 1 / tau`, the
// general method and its rescaled single-block form produce the same
// iterates from the same seed.

use std::error::Error;

use proxsplit::dr::{DrConfig, DrSolver, Param, SimplifiedDrSolver};
use proxsplit::driver::IterativeSolver;
use proxsplit::model::{BlockPartition, Problem, RegularizerSpec};
use proxsplit::prox::ScalarLoss;
use proxsplit::synthetic::{generate, SyntheticSpec};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let (data, _) = generate(&SyntheticSpec { n_samples: 50, n_features: 10, seed: 5, ..SyntheticSpec::default() })?;
    let problem = Problem::new(data, BlockPartition::single(10)?, RegularizerSpec::l1(0.5), ScalarLoss::Logistic)?;
    let tau = 2.0;
    let config = DrConfig {
        tau: Param::Uniform(tau),
        gamma: Param::Uniform(1.0 / tau),
        rho: Param::Uniform(0.0),
        batch_size: 20,
        seed: 9,
        ..DrConfig::default()
    };
    let mut full = DrSolver::new(&problem, &config)?;
    let mut simple = SimplifiedDrSolver::new(&problem, &config)?;
    let mut worst = 0.0_f64;
    for i in 1..=100 {
        full.step()?;
        simple.step()?;
        let dev = full.iterate().iter().zip(simple.iterate()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        worst = worst.max(dev);
        if i % 20 == 0 {
            println!("iter {i:>3}: objective {:.10}, deviation {dev:.1e}", problem.objective(&full.solution())?);
        }
    }
    println!("largest deviation over 100 iterations: {worst:.1e}");
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
