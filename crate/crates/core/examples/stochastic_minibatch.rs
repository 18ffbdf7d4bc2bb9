// Random block-coordinate updates: a quarter of the samples and two of the
// five feature blocks are activated per iteration. The convergence trace is
// written as CSV.

use std::error::Error;

use proxsplit::dr::{run_with, DrConfig, PrimalActivation};
use proxsplit::driver::{StoppingRule, TraceOptions};
use proxsplit::model::{BlockPartition, Problem, RegularizerSpec};
use proxsplit::prox::ScalarLoss;
use proxsplit::synthetic::{generate, SyntheticSpec};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let spec = SyntheticSpec { n_samples: 200, n_features: 25, support: 6, seed: 11, ..SyntheticSpec::default() };
    let (data, _) = generate(&spec)?;
    let problem =
        Problem::new(data, BlockPartition::contiguous(25, 5)?, RegularizerSpec::l1(2.0), ScalarLoss::Logistic)?;

    let full = DrConfig { batch_size: usize::MAX, stopping: StoppingRule::iterations(3000), ..DrConfig::default() };
    let reference = run_with(&problem, &full, &TraceOptions { stride: usize::MAX, ..TraceOptions::default() })?;

    let config = DrConfig {
        batch_size: 50,
        primal_activation: PrimalActivation::UniformSubset(2),
        seed: 42,
        stopping: StoppingRule::iterations(8000),
        ..DrConfig::default()
    };
    let options = TraceOptions { stride: 1000, reference: Some(reference.solution.clone()), ..TraceOptions::default() };
    let out = run_with(&problem, &config, &options)?;

    let mut csv = Vec::new();
    out.trace.write_csv(&mut csv)?;
    print!("{}", String::from_utf8(csv)?);

    let f_ref = problem.objective(&reference.solution)?;
    let f = problem.objective(&out.solution)?;
    println!("full batch {f_ref:.10}, mini-batch {f:.10}, relative gap {:.2e}", (f - f_ref).abs() / f_ref);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
