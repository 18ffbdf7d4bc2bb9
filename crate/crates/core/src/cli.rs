//! Command-line front end.
//!
//! ```text
//! proxsplit train --data train.svm --lambda 0.1 --blocks 4 --out run/
//! proxsplit bench --data w8a --test w8a.t --lambda-grid 1,3,10 --out bench/
//! proxsplit prox-eval --v 0 --gamma 1
//! proxsplit w-eval --r 1 --v 3.718281828
//! ```
//!
//! `train` and `bench` accept `--config FILE` with `key = value` lines whose
//! keys are the long flag names. Flags override the file, which overrides
//! the defaults. Exit codes: 0 on success, 1 on runtime errors, 2 on bad
//! arguments or parameters.

use std::collections::HashMap;
use std::fmt::Display;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, CommandFactory, Parser, Subcommand};

use crate::baselines::{BaselineConfig, BaselineKind};
use crate::bench::{format_summary, par_map, run_benchmark, select_lambda, BenchEntry, BenchOptions, SolverSpec};
use crate::data_io::{
    align_features, binarize, binarize_auto, one_vs_all_tasks, read_libsvm_file, OneVsAll, RawDataset,
};
use crate::dr::{run_simplified_with, DrConfig, InitialPoint, MuSchedule, Param, PrimalActivation, VUpdateVariant};
use crate::driver::{PlateauRule, RunOutput, StoppingRule, TraceOptions};
use crate::error::Error;
use crate::lambert_w::eval_w;
use crate::model::{sparsity_degree, test_error, BlockNorm, BlockPartition, Problem, RegularizerSpec, TrainingSet};
use crate::prox::ScalarLoss;

#[derive(Parser, Debug)]
#[command(
    name = "proxsplit",
    version,
    about = "Sparse logistic regression by random block-coordinate Douglas-Rachford"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Train one model (or one per class) and write weights and trace.
    Train(RunArgs),
    /// Compare solvers on one dataset.
    Bench(BenchArgs),
    /// Print prox_{gamma h}(v).
    ProxEval {
        #[arg(long, allow_hyphen_values = true)]
        v: f64,
        #[arg(long)]
        gamma: f64,
        #[arg(long, default_value = "logistic")]
        loss: String,
    },
    /// Print W_r(v), the root of w (e^w + r) = v.
    WEval {
        #[arg(long)]
        r: f64,
        #[arg(long, allow_hyphen_values = true)]
        v: f64,
    },
}

/// Options shared by `train` and `bench`. Every field may also come from
/// the config file.
#[derive(Args, Debug, Default, Clone)]
pub struct RunArgs {
    /// `key = value` file with defaults for the flags below.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Training data in LIBSVM format (`.gz` accepted).
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub test: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// logistic, hinge, squared-hinge or huber.
    #[arg(long)]
    pub loss: Option<String>,
    /// l1, or l2 for the group penalty.
    #[arg(long)]
    pub reg: Option<String>,
    #[arg(long)]
    pub lambda: Option<f64>,
    /// dr, dr-simplified, sfb, rda or bcpd.
    #[arg(long)]
    pub solver: Option<String>,
    #[arg(long)]
    pub blocks: Option<usize>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    /// Blocks activated per iteration (all by default).
    #[arg(long)]
    pub primal_blocks: Option<usize>,
    /// literal or refreshed.
    #[arg(long)]
    pub variant: Option<String>,
    /// normal or zeros.
    #[arg(long)]
    pub init: Option<String>,
    /// Constant c of the SFB/RDA steps c / sqrt(i + 1).
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long)]
    pub bcpd_tau: Option<f64>,
    #[arg(long)]
    pub bcpd_sigma: Option<f64>,
    /// Stop early when the objective stalls.
    #[arg(long)]
    pub plateau: Option<bool>,
    #[arg(long)]
    pub trace_stride: Option<usize>,
    /// Label treated as +1; other labels become -1.
    #[arg(long, allow_hyphen_values = true)]
    pub positive_class: Option<f64>,
    /// Train one model per class.
    #[arg(long)]
    pub one_vs_all: Option<bool>,
}

#[derive(Args, Debug, Clone)]
pub struct BenchArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Comma-separated solvers to compare.
    #[arg(long)]
    pub solvers: Option<String>,
    /// Comma-separated lambda values to select from on a held-out split.
    #[arg(long)]
    pub lambda_grid: Option<String>,
    #[arg(long)]
    pub validation: Option<f64>,
    /// Budget multiple for the reference runs.
    #[arg(long)]
    pub reference_factor: Option<usize>,
}

/// Failure of a command, with its exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig(m) => CliError::Usage(format!("invalid configuration: {m}")),
            other => CliError::Runtime(other),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(Error::Io(e))
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config(text: &str) -> CliResult<HashMap<String, String>> {
    let mut map = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected key = value", i + 1)))?;
        map.insert(k.trim().replace('_', "-"), v.trim().to_string());
    }
    Ok(map)
}

const CONFIG_KEYS: &[&str] = &[
    "data",
    "test",
    "out",
    "loss",
    "reg",
    "lambda",
    "solver",
    "blocks",
    "batch",
    "iters",
    "seed",
    "gamma",
    "tau",
    "rho",
    "mu",
    "eta",
    "primal-blocks",
    "variant",
    "init",
    "step",
    "bcpd-tau",
    "bcpd-sigma",
    "plateau",
    "trace-stride",
    "positive-class",
    "one-vs-all",
    "solvers",
    "lambda-grid",
    "validation",
    "reference-factor",
];

/// Flag values layered over a config file.
struct Layered {
    file: HashMap<String, String>,
}

impl Layered {
    fn load(path: Option<&Path>) -> CliResult<Self> {
        let file = match path {
            Some(p) => {
                let text = fs::read_to_string(p)
                    .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", p.display())))?;
                parse_config(&text)?
            }
            None => HashMap::new(),
        };
        if let Some(k) = file.keys().find(|k| !CONFIG_KEYS.contains(&k.as_str())) {
            return Err(CliError::Usage(format!("unknown config key '{k}'")));
        }
        Ok(Layered { file })
    }

    fn get<T: FromStr>(&self, flag: Option<T>, key: &str) -> CliResult<Option<T>>
    where
        T::Err: Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        self.file
            .get(key)
            .map(|s| s.parse::<T>().map_err(|e| CliError::Usage(format!("config key '{key}' = '{s}': {e}"))))
            .transpose()
    }

    fn or<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> CliResult<T>
    where
        T::Err: Display,
    {
        Ok(self.get(flag, key)?.unwrap_or(default))
    }
}

/// Fully resolved `train` / `bench` settings.
#[derive(Debug, Clone)]
pub struct Settings {
    pub data: PathBuf,
    pub test: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub loss: ScalarLoss,
    pub norm: BlockNorm,
    pub lambda: f64,
    pub solver: String,
    pub blocks: usize,
    pub batch: usize,
    pub iters: usize,
    pub seed: u64,
    pub gamma: f64,
    pub tau: f64,
    pub rho: f64,
    pub mu: f64,
    pub eta: f64,
    pub primal_blocks: Option<usize>,
    pub variant: VUpdateVariant,
    pub init: InitialPoint,
    pub step: f64,
    pub bcpd_tau: f64,
    pub bcpd_sigma: Option<f64>,
    pub plateau: bool,
    pub trace_stride: usize,
    pub positive_class: Option<f64>,
    pub one_vs_all: bool,
}

fn parse_variant(s: &str) -> CliResult<VUpdateVariant> {
    match s.to_ascii_lowercase().as_str() {
        "literal" => Ok(VUpdateVariant::Literal),
        "refreshed" => Ok(VUpdateVariant::Refreshed),
        other => Err(CliError::Usage(format!("unknown variant '{other}' (literal or refreshed)"))),
    }
}

fn parse_init(s: &str) -> CliResult<InitialPoint> {
    match s.to_ascii_lowercase().as_str() {
        "normal" => Ok(InitialPoint::StandardNormal),
        "zeros" => Ok(InitialPoint::Zeros),
        other => Err(CliError::Usage(format!("unknown init '{other}' (normal or zeros)"))),
    }
}

fn usage<E: Display>(e: E) -> CliError {
    CliError::Usage(e.to_string())
}

impl Settings {
    fn resolve(args: &RunArgs, cfg: &Layered) -> CliResult<Settings> {
        let data = cfg
            .get(args.data.clone(), "data")?
            .ok_or_else(|| CliError::Usage("missing required option --data".into()))?;
        let loss: ScalarLoss = cfg.or(args.loss.clone(), "loss", "logistic".to_string())?.parse().map_err(usage)?;
        let norm: BlockNorm = cfg.or(args.reg.clone(), "reg", "l1".to_string())?.parse().map_err(usage)?;
        let solver = cfg.or(args.solver.clone(), "solver", "dr".to_string())?.to_ascii_lowercase();
        if !["dr", "dr-simplified", "sfb", "rda", "bcpd"].contains(&solver.as_str()) {
            return Err(CliError::Usage(format!("unknown solver '{solver}'")));
        }
        // rho defaults to 0.1 for the logistic loss and to 0 otherwise.
        let rho_default = if loss == ScalarLoss::Logistic { 0.1 } else { 0.0 };
        Ok(Settings {
            data,
            test: cfg.get(args.test.clone(), "test")?,
            out: cfg.get(args.out.clone(), "out")?,
            loss,
            norm,
            lambda: cfg.or(args.lambda, "lambda", 1.0)?,
            solver,
            blocks: cfg.or(args.blocks, "blocks", 1)?,
            batch: cfg.or(args.batch, "batch", 1000)?,
            iters: cfg.or(args.iters, "iters", 1000)?,
            seed: cfg.or(args.seed, "seed", 0)?,
            gamma: cfg.or(args.gamma, "gamma", 1.0)?,
            tau: cfg.or(args.tau, "tau", 1.0)?,
            rho: cfg.or(args.rho, "rho", rho_default)?,
            mu: cfg.or(args.mu, "mu", 1.5)?,
            eta: cfg.or(args.eta, "eta", 0.49)?,
            primal_blocks: cfg.get(args.primal_blocks, "primal-blocks")?,
            variant: parse_variant(&cfg.or(args.variant.clone(), "variant", "refreshed".to_string())?)?,
            init: parse_init(&cfg.or(args.init.clone(), "init", "normal".to_string())?)?,
            step: cfg.or(args.step, "step", 0.1)?,
            bcpd_tau: cfg.or(args.bcpd_tau, "bcpd-tau", 0.1)?,
            bcpd_sigma: cfg.get(args.bcpd_sigma, "bcpd-sigma")?,
            plateau: cfg.or(args.plateau, "plateau", false)?,
            trace_stride: cfg.or(args.trace_stride, "trace-stride", 10)?,
            positive_class: cfg.get(args.positive_class, "positive-class")?,
            one_vs_all: cfg.or(args.one_vs_all, "one-vs-all", false)?,
        })
    }

    fn stopping(&self) -> StoppingRule {
        let rule = StoppingRule::iterations(self.iters);
        if self.plateau {
            rule.with_plateau(PlateauRule::default())
        } else {
            rule
        }
    }

    pub fn dr_config(&self) -> DrConfig {
        DrConfig {
            tau: Param::Uniform(self.tau),
            gamma: Param::Uniform(self.gamma),
            rho: Param::Uniform(self.rho),
            eta: self.eta,
            mu: MuSchedule::Constant(self.mu),
            batch_size: self.batch,
            primal_activation: self.primal_blocks.map_or(PrimalActivation::All, PrimalActivation::UniformSubset),
            seed: self.seed,
            stopping: self.stopping(),
            v_update: self.variant,
            init: self.init.clone(),
        }
    }

    pub fn baseline_config(&self, kind: BaselineKind) -> BaselineConfig {
        BaselineConfig {
            kind,
            step_constant: self.step,
            tau: self.bcpd_tau,
            sigma: self.bcpd_sigma,
            batch_size: self.batch,
            seed: self.seed,
            stopping: self.stopping(),
            init: self.init.clone(),
        }
    }

    pub fn solver_spec(&self, name: &str) -> CliResult<SolverSpec> {
        Ok(match name {
            "dr" | "dr-simplified" => SolverSpec::Dr(self.dr_config()),
            other => SolverSpec::Baseline(self.baseline_config(other.parse().map_err(usage)?)),
        })
    }

    fn problem(&self, data: TrainingSet, lambda: f64) -> CliResult<Problem> {
        let partition = BlockPartition::contiguous(data.n_features(), self.blocks)?;
        Ok(Problem::new(data, partition, RegularizerSpec { lambda, kappa: vec![self.norm] }, self.loss)?)
    }

    fn load(&self) -> CliResult<(RawDataset, Option<RawDataset>)> {
        let train = read_libsvm_file(&self.data, None).map_err(CliError::Runtime)?;
        match &self.test {
            Some(p) => {
                let test = read_libsvm_file(p, None).map_err(CliError::Runtime)?;
                let (a, b) = align_features(train, test)?;
                Ok((a, Some(b)))
            }
            None => Ok((train, None)),
        }
    }

    fn binary(&self, raw: &RawDataset) -> CliResult<TrainingSet> {
        Ok(match self.positive_class {
            Some(c) => binarize(raw, c)?,
            None => binarize_auto(raw)?,
        })
    }

    /// Checks the solver parameters against `problem` before any iteration.
    fn validate(&self, problem: &Problem, warn: &mut dyn Write) -> CliResult<()> {
        if self.solver.starts_with("dr") {
            let mut cfg = self.dr_config();
            if let Some(msg) = cfg.adapt_to(problem) {
                writeln!(warn, "warning: {msg}")?;
            }
            cfg.validate(problem)?;
        }
        Ok(())
    }
}

fn train_one(settings: &Settings, problem: &Problem) -> CliResult<RunOutput> {
    let options = TraceOptions { stride: settings.trace_stride.max(1), ..TraceOptions::default() };
    let out = match settings.solver.as_str() {
        "dr-simplified" => {
            let mut cfg = settings.dr_config();
            cfg.adapt_to(problem);
            run_simplified_with(problem, &cfg, &options)?
        }
        name => crate::bench::solve(problem, &settings.solver_spec(name)?, &options)?,
    };
    Ok(out)
}

/// Text model file: `key value` header lines, then `weights`, then one
/// weight per line.
pub fn write_model<W: Write>(mut out: W, problem: &Problem, class: Option<f64>, w: &[f64]) -> std::io::Result<()> {
    writeln!(out, "n_features {}", problem.n_features())?;
    writeln!(out, "n_blocks {}", problem.n_blocks())?;
    writeln!(out, "lambda {}", problem.reg().lambda)?;
    writeln!(out, "kappa {}", problem.reg().norm(0))?;
    writeln!(out, "loss {}", problem.loss())?;
    if let Some(c) = class {
        writeln!(out, "class {c}")?;
    }
    writeln!(out, "weights")?;
    for x in w {
        writeln!(out, "{x}")?;
    }
    Ok(())
}

/// Reads the weights of a model file.
pub fn read_model_weights(text: &str) -> Option<Vec<f64>> {
    let mut lines = text.lines();
    lines.by_ref().find(|l| l.trim() == "weights")?;
    lines.map(|l| l.trim().parse().ok()).collect()
}

fn write_outputs(dir: &Path, stem: &str, problem: &Problem, class: Option<f64>, out: &RunOutput) -> CliResult<()> {
    fs::create_dir_all(dir)?;
    write_model(BufWriter::new(File::create(dir.join(format!("{stem}.txt")))?), problem, class, &out.solution)?;
    let trace_name = stem.replacen("model", "trace", 1);
    out.trace.write_csv(BufWriter::new(File::create(dir.join(format!("{trace_name}.csv")))?))?;
    Ok(())
}

fn cmd_train(args: &RunArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CliResult<()> {
    let cfg = Layered::load(args.config.as_deref())?;
    let settings = Settings::resolve(args, &cfg)?;
    let (raw, raw_test) = settings.load()?;

    if settings.one_vs_all {
        let tasks = one_vs_all_tasks(&raw)?;
        let problems = tasks
            .into_iter()
            .map(|(c, data)| Ok((c, settings.problem(data, settings.lambda)?)))
            .collect::<CliResult<Vec<_>>>()?;
        for (_, p) in &problems {
            settings.validate(p, stderr)?;
        }
        let outputs = par_map(&problems, |(_, p)| train_one(&settings, p).map_err(cli_to_error))?;
        let mut models = Vec::new();
        for ((c, p), out) in problems.iter().zip(&outputs) {
            writeln!(
                stdout,
                "class {c}: objective {:.10e}, zeros {:.2}%, iterations {}",
                p.objective(&out.solution)?,
                100.0 * sparsity_degree(&out.solution, 0.0),
                out.iterations
            )?;
            if let Some(dir) = &settings.out {
                write_outputs(dir, &format!("model_{c}"), p, Some(*c), out)?;
            }
            models.push((*c, out.solution.clone()));
        }
        let ova = OneVsAll::new(models)?;
        writeln!(stdout, "train error {:.2}%", 100.0 * ova.error_rate(&raw)?)?;
        if let Some(t) = &raw_test {
            writeln!(stdout, "test error {:.2}%", 100.0 * ova.error_rate(t)?)?;
        }
        return Ok(());
    }

    let data = settings.binary(&raw)?;
    let problem = settings.problem(data, settings.lambda)?;
    settings.validate(&problem, stderr)?;
    let test = raw_test.as_ref().map(|t| settings.binary(t)).transpose()?;
    let out = train_one(&settings, &problem)?;
    writeln!(stdout, "solver {}", settings.solver)?;
    writeln!(stdout, "iterations {}", out.iterations)?;
    writeln!(stdout, "objective {:.10e}", problem.objective(&out.solution)?)?;
    writeln!(stdout, "kkt_residual {:.3e}", problem.kkt_residual(&out.solution)?)?;
    writeln!(stdout, "zeros {:.2}%", 100.0 * sparsity_degree(&out.solution, 0.0))?;
    writeln!(stdout, "train error {:.2}%", 100.0 * test_error(&out.solution, problem.data())?)?;
    if let Some(t) = &test {
        writeln!(stdout, "test error {:.2}%", 100.0 * test_error(&out.solution, t)?)?;
    }
    if let Some(dir) = &settings.out {
        write_outputs(dir, "model", &problem, None, &out)?;
        writeln!(stdout, "wrote {}", dir.display())?;
    }
    Ok(())
}

fn cli_to_error(e: CliError) -> Error {
    match e {
        CliError::Usage(m) => Error::InvalidConfig(m),
        CliError::Runtime(e) => e,
    }
}

fn parse_list<T: FromStr>(s: &str, what: &str) -> CliResult<Vec<T>>
where
    T::Err: Display,
{
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<T>().map_err(|e| CliError::Usage(format!("{what} entry '{t}': {e}"))))
        .collect()
}

fn cmd_bench(args: &BenchArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CliResult<()> {
    let cfg = Layered::load(args.run.config.as_deref())?;
    let settings = Settings::resolve(&args.run, &cfg)?;
    let solvers: Vec<String> =
        parse_list(&cfg.or(args.solvers.clone(), "solvers", "dr,sfb,rda,bcpd".into())?, "solvers")?;
    let grid: Option<Vec<f64>> =
        cfg.get(args.lambda_grid.clone(), "lambda-grid")?.map(|g| parse_list(&g, "lambda-grid")).transpose()?;
    let validation = cfg.or(args.validation, "validation", 0.2)?;
    let factor = cfg.or(args.reference_factor, "reference-factor", 20)?;
    let specs = solvers
        .iter()
        .map(|s| {
            if s == "dr-simplified" {
                return Err(CliError::Usage("bench compares dr, sfb, rda and bcpd".into()));
            }
            Ok((s.clone(), settings.solver_spec(s)?))
        })
        .collect::<CliResult<Vec<_>>>()?;

    let (raw, raw_test) = settings.load()?;
    let data = settings.binary(&raw)?;
    let test = raw_test.as_ref().map(|t| settings.binary(t)).transpose()?;
    let problem = settings.problem(data, settings.lambda)?;
    if specs.iter().any(|(s, _)| s == "dr") {
        Settings { solver: "dr".into(), ..settings.clone() }.validate(&problem, stderr)?;
    }

    let mut entries = Vec::new();
    for (name, spec) in &specs {
        let lambda = match &grid {
            Some(g) => {
                let (best, scores) = select_lambda(&problem, spec, g, validation, settings.seed)?;
                for s in &scores {
                    writeln!(
                        stdout,
                        "{name}: lambda {} validation error {:.2}% zeros {:.2}%",
                        s.lambda,
                        100.0 * s.validation_error,
                        100.0 * s.zeros_exact
                    )?;
                }
                writeln!(stdout, "{name}: selected lambda {best}")?;
                best
            }
            None => settings.lambda,
        };
        entries.push((lambda, BenchEntry::new(spec.clone())));
    }

    let mut rows = Vec::new();
    // Entries sharing a lambda are benchmarked together.
    let mut lambdas: Vec<f64> = entries.iter().map(|e| e.0).collect();
    lambdas.sort_by(f64::total_cmp);
    lambdas.dedup();
    for lambda in lambdas {
        let p = problem.with_reg(RegularizerSpec { lambda, ..problem.reg().clone() })?;
        let group: Vec<BenchEntry> = entries.iter().filter(|e| e.0 == lambda).map(|e| e.1.clone()).collect();
        let reference = crate::bench::compute_reference(&p, &settings.solver_spec("dr")?, factor)?;
        let options = BenchOptions {
            trace_stride: settings.trace_stride,
            shared_reference: Some(reference),
            per_solver_reference_factor: Some(factor),
            test: test.clone(),
            output_dir: settings.out.clone(),
            ..BenchOptions::new()
        };
        rows.extend(run_benchmark(&p, &group, &options)?);
    }
    rows.sort_by_key(|r| solvers.iter().position(|s| *s == r.solver));
    write!(stdout, "{}", format_summary(&rows))?;
    if let Some(dir) = &settings.out {
        crate::bench::write_summary_csv(&rows, BufWriter::new(File::create(dir.join("summary.csv"))?))?;
    }
    Ok(())
}

fn dispatch(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CliResult<()> {
    match &cli.command {
        Command::Train(args) => cmd_train(args, stdout, stderr),
        Command::Bench(args) => cmd_bench(args, stdout, stderr),
        Command::ProxEval { v, gamma, loss } => {
            let loss: ScalarLoss = loss.parse().map_err(usage)?;
            let p = loss.prox(*v, *gamma).map_err(|e| CliError::Usage(e.to_string()))?;
            writeln!(stdout, "{p}")?;
            Ok(())
        }
        Command::WEval { r, v } => {
            let w = eval_w(*r, *v).map_err(|e| match e {
                Error::Domain(m) => CliError::Usage(m),
                other => CliError::Runtime(other),
            })?;
            writeln!(stdout, "{}", w.value)?;
            Ok(())
        }
    }
}

/// Runs the command line `args` (program name first) and returns the exit
/// code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if code == 0 { write!(stdout, "{text}") } else { write!(stderr, "{text}") };
            return code;
        }
    };
    match dispatch(&cli, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let code = e.exit_code();
            match e {
                CliError::Usage(m) => {
                    let _ = writeln!(stderr, "error: {m}\n");
                    let sub = match cli.command {
                        Command::Train(_) => "train",
                        Command::Bench(_) => "bench",
                        Command::ProxEval { .. } => "prox-eval",
                        Command::WEval { .. } => "w-eval",
                    };
                    let mut cmd = Cli::command();
                    cmd.build();
                    if let Some(c) = cmd.find_subcommand_mut(sub) {
                        let _ = writeln!(stderr, "{}", c.render_usage());
                    }
                }
                CliError::Runtime(err) => {
                    let _ = writeln!(stderr, "error: {err}");
                }
            }
            code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_lines() {
        let map = parse_config("# run\nlambda = 0.5\n\nbatch_size=20  # inline\n").unwrap();
        assert_eq!(map.get("lambda").map(String::as_str), Some("0.5"));
        assert_eq!(map.get("batch-size").map(String::as_str), Some("20"));
        assert!(matches!(parse_config("lambda 0.5"), Err(CliError::Usage(_))));
    }

    #[test]
    fn flag_beats_file_beats_default() {
        let layered = Layered { file: parse_config("iters = 7\nseed = 3").unwrap() };
        assert_eq!(layered.or(Some(2usize), "iters", 1000).unwrap(), 2);
        assert_eq!(layered.or(None, "iters", 1000usize).unwrap(), 7);
        assert_eq!(layered.or(None, "batch", 1000usize).unwrap(), 1000);
        let bad = Layered { file: parse_config("iters = many").unwrap() };
        assert!(matches!(bad.or(None, "iters", 1usize), Err(CliError::Usage(_))));
    }
}
