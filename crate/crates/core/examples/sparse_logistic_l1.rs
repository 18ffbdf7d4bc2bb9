// Sparse logistic regression with an `l1` penalty on a planted problem.
// The reported solution has exact zeros; its support is compared to the
// planted one.

use std::error::Error;

use proxsplit::dr::{run_with, DrConfig};
use proxsplit::driver::{StoppingRule, TraceOptions};
use proxsplit::model::{sparsity_degree, BlockPartition, Problem, RegularizerSpec};
use proxsplit::prox::ScalarLoss;
use proxsplit::synthetic::{generate, SyntheticSpec};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let spec = SyntheticSpec {
        n_samples: 400,
        n_features: 40,
        support: 5,
        label_noise: 0.05,
        seed: 7,
        ..SyntheticSpec::default()
    };
    let (data, planted) = generate(&spec)?;
    let partition = BlockPartition::contiguous(40, 4)?;
    let base = Problem::new(data, partition, RegularizerSpec::l1(0.0), ScalarLoss::Logistic)?;
    let lambda = 0.2 * base.lambda_max();
    let problem = base.with_reg(RegularizerSpec::l1(lambda))?;

    let config = DrConfig { batch_size: usize::MAX, stopping: StoppingRule::iterations(3000), ..DrConfig::default() };
    let out = run_with(&problem, &config, &TraceOptions { stride: 500, ..TraceOptions::default() })?;
    for rec in &out.trace.records {
        println!("iter {:>5}  objective {:.10}", rec.iteration, rec.objective);
    }

    let w = &out.solution;
    println!("lambda = {lambda:.4}, KKT residual {:.2e}", problem.kkt_residual(w)?);
    println!("zeros: {:.0}%", 100.0 * sparsity_degree(w, 0.0));
    let found: Vec<usize> = (0..w.len()).filter(|&j| w[j] != 0.0).collect();
    let truth: Vec<usize> = (0..planted.len()).filter(|&j| planted[j] != 0.0).collect();
    println!("recovered support {found:?}");
    println!("planted support   {truth:?}");
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
