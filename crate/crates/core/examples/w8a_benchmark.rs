// Benchmark on the W8A dataset (LIBSVM binary collection). Expects `w8a`
// and `w8a.t` in the directory named by `PROXSPLIT_W8A_DIR` or by the first
// argument, and exits quietly without them.
//
// `lambda` is chosen per solver on a 20% holdout, then every solver is
// rerun on the full training set and scored on `w8a.t`.

use std::error::Error;
use std::path::PathBuf;

use proxsplit::baselines::{BaselineConfig, BaselineKind};
use proxsplit::bench::{format_summary, run_benchmark, select_lambda, BenchEntry, BenchOptions, SolverSpec};
use proxsplit::data_io::{align_features, binarize, read_libsvm_file};
use proxsplit::dr::DrConfig;
use proxsplit::driver::StoppingRule;
use proxsplit::model::{BlockPartition, Problem, RegularizerSpec};
use proxsplit::prox::ScalarLoss;

const ITERATIONS: usize = 2000;

fn data_dir() -> Option<PathBuf> {
    std::env::args().nth(1).or_else(|| std::env::var("PROXSPLIT_W8A_DIR").ok()).map(PathBuf::from)
}

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let Some(dir) = data_dir().filter(|d| d.join("w8a").exists() && d.join("w8a.t").exists()) else {
        println!("w8a not found; set PROXSPLIT_W8A_DIR or pass the directory");
        return Ok(());
    };
    let (train, test) =
        align_features(read_libsvm_file(dir.join("w8a"), None)?, read_libsvm_file(dir.join("w8a.t"), None)?)?;
    let (train, test) = (binarize(&train, 1.0)?, binarize(&test, 1.0)?);
    let n = train.n_features();
    let problem = Problem::new(train, BlockPartition::single(n)?, RegularizerSpec::l1(1.0), ScalarLoss::Logistic)?;

    let stopping = StoppingRule::iterations(ITERATIONS);
    let specs = [
        SolverSpec::Dr(DrConfig { stopping, ..DrConfig::default() }),
        SolverSpec::Baseline(BaselineConfig { stopping, ..BaselineConfig::new(BaselineKind::Sfb) }),
        SolverSpec::Baseline(BaselineConfig { stopping, ..BaselineConfig::new(BaselineKind::Rda) }),
        SolverSpec::Baseline(BaselineConfig { stopping, ..BaselineConfig::new(BaselineKind::Bcpd) }),
    ];
    let grid = [0.3, 1.0, 3.0, 10.0, 30.0];
    let options = BenchOptions { trace_stride: 100, test: Some(test), ..BenchOptions::new() };
    for spec in specs {
        let (lambda, scores) = select_lambda(&problem, &spec, &grid, 0.2, 0)?;
        for s in &scores {
            println!("{} lambda {:>5}: validation error {:.4}", spec.name(), s.lambda, s.validation_error);
        }
        let p = problem.with_reg(RegularizerSpec::l1(lambda))?;
        let rows = run_benchmark(&p, &[BenchEntry::new(spec)], &options)?;
        print!("{}", format_summary(&rows));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
