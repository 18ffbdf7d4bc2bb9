// Multiclass classification by one-vs-all: LIBSVM text is parsed, one
// sparse binary classifier is trained per class and the class with the
// largest score wins.

use std::error::Error;
use std::fmt::Write;

use proxsplit::data_io::{one_vs_all_tasks, parse_libsvm, OneVsAll};
use proxsplit::dr::{run_with, DrConfig};
use proxsplit::driver::{StoppingRule, TraceOptions};
use proxsplit::model::{sparsity_degree, BlockPartition, Problem, RegularizerSpec};
use proxsplit::prox::ScalarLoss;
use proxsplit::sampling::{solver_rng, standard_normal_vec};

const CLASSES: usize = 3;
const FEATURES: usize = 12;

/// Class `k` is centred at `2.5 e_k`; the other features are noise.
fn libsvm_text(n_per_class: usize, seed: u64) -> String {
    let mut rng = solver_rng(seed);
    let mut text = String::new();
    for i in 0..CLASSES * n_per_class {
        let k = i % CLASSES;
        let mut x = standard_normal_vec(&mut rng, FEATURES);
        x[k] += 2.5;
        write!(text, "{}", k + 1).unwrap();
        for (j, v) in x.iter().enumerate() {
            write!(text, " {}:{v:.6}", j + 1).unwrap();
        }
        text.push('\n');
    }
    text
}

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let train = parse_libsvm(libsvm_text(100, 1).as_bytes(), Some(FEATURES))?;
    let test = parse_libsvm(libsvm_text(100, 2).as_bytes(), Some(FEATURES))?;
    println!("classes {:?}, {} training rows", train.classes(), train.n_samples());

    let config = DrConfig { batch_size: usize::MAX, stopping: StoppingRule::iterations(1500), ..DrConfig::default() };
    let mut models = Vec::new();
    for (class, data) in one_vs_all_tasks(&train)? {
        let problem =
            Problem::new(data, BlockPartition::single(FEATURES)?, RegularizerSpec::l1(5.0), ScalarLoss::Logistic)?;
        let out = run_with(&problem, &config, &TraceOptions { stride: usize::MAX, ..TraceOptions::default() })?;
        println!("class {class}: {:.0}% zeros", 100.0 * sparsity_degree(&out.solution, 0.0));
        models.push((class, out.solution));
    }
    let classifier = OneVsAll::new(models)?;
    println!("train error {:.3}", classifier.error_rate(&train)?);
    println!("test error  {:.3}", classifier.error_rate(&test)?);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
