// Runs the splitting method next to the stochastic forward-backward, dual
// averaging and primal-dual baselines on one problem and prints the summary
// table. Pass a directory as the first argument to also get the CSV traces.

use std::error::Error;
use std::path::PathBuf;

use proxsplit::baselines::{BaselineConfig, BaselineKind};
use proxsplit::bench::{compute_reference, format_summary, run_benchmark, BenchEntry, BenchOptions, SolverSpec};
use proxsplit::dr::{DrConfig, InitialPoint};
use proxsplit::driver::StoppingRule;
use proxsplit::model::{BlockPartition, Problem, RegularizerSpec};
use proxsplit::prox::ScalarLoss;
use proxsplit::synthetic::{generate, SyntheticSpec};

fn entries(iters: usize) -> Vec<BenchEntry> {
    let stopping = StoppingRule::iterations(iters);
    let dr = DrConfig { batch_size: 100, stopping, ..DrConfig::default() };
    let mut specs = vec![SolverSpec::Dr(dr)];
    for (kind, constant) in [(BaselineKind::Sfb, 0.01), (BaselineKind::Rda, 0.01), (BaselineKind::Bcpd, 0.1)] {
        let mut c = BaselineConfig {
            batch_size: 100,
            stopping,
            init: InitialPoint::StandardNormal,
            ..BaselineConfig::new(kind)
        };
        if kind == BaselineKind::Bcpd {
            c.tau = constant;
        } else {
            c.step_constant = constant;
        }
        specs.push(SolverSpec::Baseline(c));
    }
    specs.into_iter().map(BenchEntry::new).collect()
}

pub fn run_example() -> Result<(), Box<dyn Error>> {
    run(None)
}

fn run(output_dir: Option<PathBuf>) -> Result<(), Box<dyn Error>> {
    let spec = SyntheticSpec { n_samples: 1000, n_features: 30, support: 8, seed: 5, ..SyntheticSpec::default() };
    let (all, _) = generate(&spec)?;
    let data = all.subset(&(0..500).collect::<Vec<_>>());
    let test = all.subset(&(500..1000).collect::<Vec<_>>());
    let problem = Problem::new(data, BlockPartition::single(30)?, RegularizerSpec::l1(3.0), ScalarLoss::Logistic)?;

    let reference = SolverSpec::Dr(DrConfig { batch_size: usize::MAX, ..DrConfig::default() });
    let options = BenchOptions {
        trace_stride: 100,
        shared_reference: Some(compute_reference(&problem, &reference, 5)?),
        test: Some(test),
        output_dir,
        ..BenchOptions::new()
    };
    let rows = run_benchmark(&problem, &entries(1000), &options)?;
    print!("{}", format_summary(&rows));
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run(std::env::args().nth(1).map(PathBuf::from))
}
