// Group-sparse logistic regression: the penalty is the sum of Euclidean
// norms of feature blocks, so whole blocks vanish together.

use std::error::Error;

use proxsplit::dr::{run_with, DrConfig};
use proxsplit::driver::{StoppingRule, TraceOptions};
use proxsplit::model::{BlockPartition, Problem, RegularizerSpec};
use proxsplit::prox::ScalarLoss;
use proxsplit::synthetic::{generate, SyntheticSpec};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    // The planted weights live in the first block only.
    let spec = SyntheticSpec {
        n_samples: 300,
        n_features: 24,
        support: 4,
        label_noise: 0.05,
        seed: 3,
        ..SyntheticSpec::default()
    };
    let (data, _) = generate(&spec)?;
    let partition = BlockPartition::from_offsets(vec![0, 4, 8, 12, 16, 20, 24])?;
    let base = Problem::new(data, partition, RegularizerSpec::group_l2(0.0), ScalarLoss::Logistic)?;
    let lambda = 0.3 * base.lambda_max();
    let problem = base.with_reg(RegularizerSpec::group_l2(lambda))?;

    let config = DrConfig { batch_size: usize::MAX, stopping: StoppingRule::iterations(2000), ..DrConfig::default() };
    let out = run_with(&problem, &config, &TraceOptions { stride: usize::MAX, ..TraceOptions::default() })?;
    let w = &out.solution;
    println!("lambda = {lambda:.4}, objective {:.8}, KKT {:.2e}", problem.objective(w)?, problem.kkt_residual(w)?);
    for b in 0..problem.n_blocks() {
        let block = &w[problem.partition().range(b)];
        let norm = block.iter().map(|x| x * x).sum::<f64>().sqrt();
        let state = if block.iter().all(|&x| x == 0.0) { "zero" } else { "active" };
        println!("block {b}: ||w_b|| = {norm:.6} ({state})");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
