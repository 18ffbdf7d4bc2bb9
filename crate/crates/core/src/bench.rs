//! Benchmark orchestration: reference solutions, solver comparisons, summary
//! tables and regularization selection on a held-out split.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::baselines::{run_baseline, BaselineConfig};
use crate::dr::{run_with, DrConfig};
use crate::driver::{PlateauRule, RunOutput, TraceOptions};
use crate::error::{Error, Result};
use crate::model::{sparsity_degree, test_error, Problem, RegularizerSpec, TrainingSet};
use crate::sampling::solver_rng;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "PROXSPLIT_THREADS";

/// A solver together with its parameters.
#[derive(Debug, Clone)]
pub enum SolverSpec {
    Dr(DrConfig),
    Baseline(BaselineConfig),
}

impl SolverSpec {
    pub fn name(&self) -> String {
        match self {
            SolverSpec::Dr(_) => "dr".to_string(),
            SolverSpec::Baseline(c) => c.kind.to_string(),
        }
    }

    pub fn max_iters(&self) -> usize {
        match self {
            SolverSpec::Dr(c) => c.stopping.max_iters,
            SolverSpec::Baseline(c) => c.stopping.max_iters,
        }
    }

    /// Same solver with a different iteration budget and plateau rule.
    pub fn with_stopping(&self, max_iters: usize, plateau: Option<PlateauRule>) -> SolverSpec {
        match self {
            SolverSpec::Dr(c) => {
                let mut c = c.clone();
                c.stopping.max_iters = max_iters;
                c.stopping.plateau = plateau;
                SolverSpec::Dr(c)
            }
            SolverSpec::Baseline(c) => {
                let mut c = c.clone();
                c.stopping.max_iters = max_iters;
                c.stopping.plateau = plateau;
                SolverSpec::Baseline(c)
            }
        }
    }
}

/// Runs one solver.
pub fn solve(problem: &Problem, spec: &SolverSpec, options: &TraceOptions) -> Result<RunOutput> {
    match spec {
        SolverSpec::Dr(c) => {
            let mut c = c.clone();
            c.adapt_to(problem);
            run_with(problem, &c, options)
        }
        SolverSpec::Baseline(c) => run_baseline(problem, c, options),
    }
}

/// Long run of `spec` (`long_run_factor` times its iteration budget, with the
/// default plateau rule) whose solution serves as `w_inf`.
///
/// Fails with [`Error::NonConvergence`] when the plateau is never reached and
/// the KKT residual stays above `1e-4`.
pub fn compute_reference(problem: &Problem, spec: &SolverSpec, long_run_factor: usize) -> Result<Vec<f64>> {
    let out = long_run(problem, spec, long_run_factor)?;
    let kkt = problem.kkt_residual(&out.solution)?;
    if !out.plateau_reached && kkt > 1e-4 {
        return Err(Error::NonConvergence { kkt_residual: kkt });
    }
    Ok(out.solution)
}

/// `spec` run for `long_run_factor` times its budget under the default
/// plateau rule. Methods that stall still return their last point.
pub fn long_run(problem: &Problem, spec: &SolverSpec, long_run_factor: usize) -> Result<RunOutput> {
    let long = spec.with_stopping(spec.max_iters() * long_run_factor.max(1), Some(PlateauRule::default()));
    solve(problem, &long, &TraceOptions { stride: usize::MAX, ..TraceOptions::default() })
}

#[derive(Debug, Clone)]
pub struct BenchEntry {
    /// Label used for the trace file and the summary row.
    pub label: String,
    pub spec: SolverSpec,
}

impl BenchEntry {
    pub fn new(spec: SolverSpec) -> Self {
        BenchEntry { label: spec.name(), spec }
    }
}

#[derive(Debug, Clone, Default)]
pub struct BenchOptions {
    pub trace_stride: usize,
    /// Shared high-accuracy solution; gives the objective gap column.
    pub shared_reference: Option<Vec<f64>>,
    /// When set, each solver's own long run (this many times its budget)
    /// is its `w_inf` for the `dist_ref` column, converged or not; otherwise
    /// the shared reference is used.
    pub per_solver_reference_factor: Option<usize>,
    pub test: Option<TrainingSet>,
    pub zero_tol: f64,
    /// Directory receiving `<label>.csv` traces and `summary.csv`.
    pub output_dir: Option<PathBuf>,
}

impl BenchOptions {
    pub fn new() -> Self {
        BenchOptions { trace_stride: 10, zero_tol: 1e-8, ..Default::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub solver: String,
    pub iterations: usize,
    pub seconds: f64,
    pub objective: f64,
    /// `(F(w) - F(w_ref)) / |F(w_ref)|` against the shared reference.
    pub relative_gap: Option<f64>,
    pub dist_ref: Option<f64>,
    pub train_error: f64,
    pub test_error: Option<f64>,
    pub zeros_exact: f64,
    pub zeros_tol: f64,
}

pub const SUMMARY_HEADER: &str =
    "solver,iterations,seconds,objective,relative_gap,dist_ref,train_error_pct,test_error_pct,zeros_exact_pct,zeros_tol_pct";

fn opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.16e}")).unwrap_or_default()
}

impl SummaryRow {
    fn csv(&self) -> String {
        format!(
            "{},{},{:.16e},{:.16e},{},{},{:.16e},{},{:.16e},{:.16e}",
            self.solver,
            self.iterations,
            self.seconds,
            self.objective,
            opt(self.relative_gap),
            opt(self.dist_ref),
            100.0 * self.train_error,
            opt(self.test_error.map(|e| 100.0 * e)),
            100.0 * self.zeros_exact,
            100.0 * self.zeros_tol,
        )
    }
}

pub fn write_summary_csv<W: Write>(rows: &[SummaryRow], mut out: W) -> Result<()> {
    writeln!(out, "{SUMMARY_HEADER}")?;
    for r in rows {
        writeln!(out, "{}", r.csv())?;
    }
    Ok(())
}

/// Human-readable table: errors and zeros in percent.
pub fn format_summary(rows: &[SummaryRow]) -> String {
    let mut s = format!(
        "{:<10} {:>8} {:>10} {:>14} {:>11} {:>10} {:>10} {:>9}\n",
        "solver", "iters", "seconds", "objective", "rel gap", "test err%", "zeros%", "zeros~%"
    );
    for r in rows {
        let gap = r.relative_gap.map_or("-".to_string(), |g| format!("{g:.3e}"));
        let err = r.test_error.map_or("-".to_string(), |e| format!("{:.2}", 100.0 * e));
        s.push_str(&format!(
            "{:<10} {:>8} {:>10.3} {:>14.8e} {:>11} {:>10} {:>10.2} {:>9.2}\n",
            r.solver,
            r.iterations,
            r.seconds,
            r.objective,
            gap,
            err,
            100.0 * r.zeros_exact,
            100.0 * r.zeros_tol
        ));
    }
    s
}

fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("{THREADS_ENV} must be a positive integer, got '{v}'")))?;
        builder = builder.num_threads(n.max(1));
    }
    builder.build().map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))
}

/// Runs `f` on every item, in parallel up to the thread cap, keeping order.
pub fn par_map<T: Sync, U: Send>(items: &[T], f: impl Fn(&T) -> Result<U> + Sync + Send) -> Result<Vec<U>> {
    thread_pool()?.install(|| items.par_iter().map(f).collect())
}

fn bench_one(problem: &Problem, entry: &BenchEntry, options: &BenchOptions) -> Result<(SummaryRow, RunOutput)> {
    let reference = match options.per_solver_reference_factor {
        Some(factor) => Some(long_run(problem, &entry.spec, factor)?.solution),
        None => options.shared_reference.clone(),
    };
    let trace_options =
        TraceOptions { stride: options.trace_stride.max(1), reference: reference.clone(), zero_tol: options.zero_tol };
    let out = solve(problem, &entry.spec, &trace_options)?;
    let objective = problem.objective(&out.solution)?;
    let relative_gap = match &options.shared_reference {
        Some(r) => {
            let f_ref = problem.objective(r)?;
            Some((objective - f_ref) / f_ref.abs().max(f64::MIN_POSITIVE))
        }
        None => None,
    };
    let last = out.trace.last().copied();
    let row = SummaryRow {
        solver: entry.label.clone(),
        iterations: out.iterations,
        seconds: last.map_or(0.0, |r| r.seconds),
        objective,
        relative_gap,
        dist_ref: reference
            .as_deref()
            .map(|r| out.solution.iter().zip(r).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()),
        train_error: test_error(&out.solution, problem.data())?,
        test_error: options.test.as_ref().map(|t| test_error(&out.solution, t)).transpose()?,
        zeros_exact: sparsity_degree(&out.solution, 0.0),
        zeros_tol: sparsity_degree(&out.solution, options.zero_tol),
    };
    Ok((row, out))
}

/// Runs every entry (concurrently), writes one trace CSV per entry plus
/// `summary.csv` when an output directory is set, and returns the rows in
/// entry order.
pub fn run_benchmark(problem: &Problem, entries: &[BenchEntry], options: &BenchOptions) -> Result<Vec<SummaryRow>> {
    if let Some(t) = &options.test {
        if t.n_features() != problem.n_features() {
            return Err(Error::DimensionMismatch(format!(
                "test set has {} features, training set {}",
                t.n_features(),
                problem.n_features()
            )));
        }
    }
    let results = par_map(entries, |e| bench_one(problem, e, options))?;
    if let Some(dir) = &options.output_dir {
        fs::create_dir_all(dir)?;
        for (entry, (_, out)) in entries.iter().zip(&results) {
            out.trace.write_csv(BufWriter::new(File::create(trace_path(dir, &entry.label))?))?;
        }
    }
    let rows: Vec<SummaryRow> = results.into_iter().map(|(r, _)| r).collect();
    if let Some(dir) = &options.output_dir {
        write_summary_csv(&rows, BufWriter::new(File::create(dir.join("summary.csv"))?))?;
    }
    Ok(rows)
}

pub fn trace_path(dir: &Path, label: &str) -> PathBuf {
    dir.join(format!("{label}.csv"))
}

/// Splits sample indices into a training part and a validation part of
/// about `validation_fraction`, with a seeded shuffle.
pub fn holdout_split(n: usize, validation_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    use rand::seq::SliceRandom;
    if !(validation_fraction > 0.0 && validation_fraction < 1.0) {
        return Err(Error::InvalidConfig(format!("validation fraction must lie in (0, 1), got {validation_fraction}")));
    }
    let n_val = ((n as f64) * validation_fraction).round() as usize;
    if n_val == 0 || n_val == n {
        return Err(Error::InvalidConfig(format!("cannot hold out {n_val} of {n} samples")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut solver_rng(seed));
    let mut val = idx[..n_val].to_vec();
    let mut train = idx[n_val..].to_vec();
    val.sort_unstable();
    train.sort_unstable();
    Ok((train, val))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LambdaScore {
    pub lambda: f64,
    pub validation_error: f64,
    pub zeros_exact: f64,
}

/// Trains `spec` for every `lambda` in `grid` on a training split and scores
/// it on the held-out part. Returns the best `lambda` (lowest validation
/// error, larger `lambda` on ties) and all scores.
pub fn select_lambda(
    problem: &Problem,
    spec: &SolverSpec,
    grid: &[f64],
    validation_fraction: f64,
    seed: u64,
) -> Result<(f64, Vec<LambdaScore>)> {
    if grid.is_empty() {
        return Err(Error::InvalidConfig("empty lambda grid".into()));
    }
    let (train_idx, val_idx) = holdout_split(problem.n_samples(), validation_fraction, seed)?;
    let train = problem.data().subset(&train_idx);
    let val = problem.data().subset(&val_idx);
    let base = Problem::new(train, problem.partition().clone(), problem.reg().clone(), problem.loss())?;
    let scores = par_map(grid, |&lambda| {
        let p = base.with_reg(RegularizerSpec { lambda, ..problem.reg().clone() })?;
        let out = solve(&p, spec, &TraceOptions { stride: usize::MAX, ..TraceOptions::default() })?;
        Ok(LambdaScore {
            lambda,
            validation_error: test_error(&out.solution, &val)?,
            zeros_exact: sparsity_degree(&out.solution, 0.0),
        })
    })?;
    let best = scores
        .iter()
        .min_by(|a, b| a.validation_error.total_cmp(&b.validation_error).then(b.lambda.total_cmp(&a.lambda)))
        .map(|s| s.lambda)
        .unwrap_or(grid[0]);
    Ok((best, scores))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::BaselineKind;
    use crate::driver::StoppingRule;
    use crate::model::BlockPartition;
    use crate::prox::ScalarLoss;
    use crate::synthetic::{generate, SyntheticSpec};

    fn problem(lambda: f64) -> Problem {
        let (data, _) =
            generate(&SyntheticSpec { n_samples: 60, n_features: 8, seed: 3, ..Default::default() }).unwrap();
        Problem::new(data, BlockPartition::contiguous(8, 2).unwrap(), RegularizerSpec::l1(lambda), ScalarLoss::Logistic)
            .unwrap()
    }

    fn dr(iters: usize) -> SolverSpec {
        SolverSpec::Dr(DrConfig {
            batch_size: usize::MAX,
            stopping: StoppingRule::iterations(iters),
            ..Default::default()
        })
    }

    #[test]
    fn reference_is_a_kkt_point() {
        let p = problem(2.0);
        let w = compute_reference(&p, &dr(500), 20).unwrap();
        assert!(p.kkt_residual(&w).unwrap() <= 1e-6);
    }

    #[test]
    fn large_lambda_reference_is_zero() {
        let p = problem(0.0);
        let p = p.with_reg(RegularizerSpec::l1(1.01 * p.lambda_max())).unwrap();
        let w = compute_reference(&p, &dr(200), 20).unwrap();
        assert!(w.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn empty_benchmark_is_empty() {
        let rows = run_benchmark(&problem(1.0), &[], &BenchOptions::new()).unwrap();
        assert!(rows.is_empty());
    }

    #[test]
    fn benchmark_writes_traces_and_summary() {
        let p = problem(1.0);
        let dir = tempfile::tempdir().unwrap();
        let sfb = BaselineConfig {
            step_constant: 0.05,
            batch_size: 20,
            stopping: StoppingRule::iterations(30),
            ..BaselineConfig::new(BaselineKind::Sfb)
        };
        let entries = vec![BenchEntry::new(dr(30)), BenchEntry::new(SolverSpec::Baseline(sfb))];
        let options = BenchOptions { output_dir: Some(dir.path().to_path_buf()), ..BenchOptions::new() };
        let rows = run_benchmark(&p, &entries, &options).unwrap();
        assert_eq!(rows.iter().map(|r| r.solver.as_str()).collect::<Vec<_>>(), vec!["dr", "sfb"]);
        let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
        assert_eq!(summary.lines().count(), 3);
        let trace = crate::trace::ConvergenceTrace::read_csv(std::io::BufReader::new(
            File::open(dir.path().join("dr.csv")).unwrap(),
        ))
        .unwrap();
        assert_eq!(trace.records.first().unwrap().iteration, 0);
        assert_eq!(trace.records.last().unwrap().iteration, 30);
    }

    #[test]
    fn holdout_split_partitions_indices() {
        let (a, b) = holdout_split(10, 0.3, 1).unwrap();
        assert_eq!(b.len(), 3);
        let mut all = [a, b].concat();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn lambda_selection_scores_every_value() {
        let p = problem(1.0);
        let (best, scores) = select_lambda(&p, &dr(100), &[0.1, 1.0, 100.0], 0.25, 0).unwrap();
        assert_eq!(scores.len(), 3);
        assert!(scores.iter().any(|s| s.lambda == best));
        assert_eq!(scores[2].zeros_exact, 1.0);
    }
}
