//! Comparison solvers on the same problem: stochastic forward-backward (SFB),
//! regularized dual averaging (RDA) and block-coordinate primal-dual (BCPD).
//!
//! All three draw a mini-batch of samples per iteration with the same
//! sampler as the Douglas-Rachford solver, and share its trace format.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use crate::dr::{initial_point, InitialPoint};
use crate::driver::{drive, IterativeSolver, RunOutput, StoppingRule, TraceOptions};
use crate::error::{ensure_finite, Error, Result};
use crate::model::Problem;
use crate::sampling::{solver_rng, standard_normal_vec, SolverRng, SubsetSampler};
use crate::sparse::SparseMatrix;
use crate::trace::ConvergenceTrace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BaselineKind {
    Sfb,
    Rda,
    Bcpd,
}

impl BaselineKind {
    pub fn name(self) -> &'static str {
        match self {
            BaselineKind::Sfb => "sfb",
            BaselineKind::Rda => "rda",
            BaselineKind::Bcpd => "bcpd",
        }
    }
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BaselineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sfb" => Ok(BaselineKind::Sfb),
            "rda" => Ok(BaselineKind::Rda),
            "bcpd" => Ok(BaselineKind::Bcpd),
            other => Err(Error::InvalidConfig(format!("unknown baseline '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineConfig {
    pub kind: BaselineKind,
    /// `c` in the step law `gamma_i = c / sqrt(i + 1)` (SFB, RDA).
    pub step_constant: f64,
    /// Primal step of BCPD.
    pub tau: f64,
    /// Dual step of BCPD; `None` picks `1 / (tau ||sum_l x_l x_l^T||)`.
    pub sigma: Option<f64>,
    pub batch_size: usize,
    pub seed: u64,
    pub stopping: StoppingRule,
    pub init: InitialPoint,
}

impl BaselineConfig {
    /// Defaults used for the W8A comparison: `c = 0.1`, `tau = 0.1`.
    pub fn new(kind: BaselineKind) -> Self {
        BaselineConfig {
            kind,
            step_constant: 0.1,
            tau: 0.1,
            sigma: None,
            batch_size: 1000,
            seed: 0,
            stopping: StoppingRule::iterations(1000),
            init: InitialPoint::StandardNormal,
        }
    }

    fn validate(&self, problem: &Problem) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch size must be at least 1".into()));
        }
        match self.kind {
            BaselineKind::Sfb | BaselineKind::Rda => {
                if !(self.step_constant.is_finite() && self.step_constant > 0.0) {
                    return Err(Error::InvalidConfig(format!("step constant must be > 0, got {}", self.step_constant)));
                }
                if !problem.loss().is_smooth() {
                    return Err(Error::InvalidConfig(format!(
                        "{} needs a differentiable loss, got {}",
                        self.kind,
                        problem.loss()
                    )));
                }
            }
            BaselineKind::Bcpd => {
                if !(self.tau.is_finite() && self.tau > 0.0) {
                    return Err(Error::InvalidConfig(format!("tau must be > 0, got {}", self.tau)));
                }
                if let Some(s) = self.sigma {
                    if !(s.is_finite() && s > 0.0) {
                        return Err(Error::InvalidConfig(format!("sigma must be > 0, got {s}")));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Step law `c / sqrt(i + 1)`.
#[inline]
pub fn step_size(c: f64, iteration: usize) -> f64 {
    c / ((iteration + 1) as f64).sqrt()
}

/// Largest eigenvalue of `X^T X = sum_l x_l x_l^T` by power iteration.
///
/// Iterates until the Rayleigh quotient changes by at most `1e-12`
/// (relative); fails if after 1000 iterations it still moves by more than
/// `1e-6`.
pub fn operator_norm_sq(x: &SparseMatrix) -> Result<f64> {
    const CAP: usize = 1000;
    if x.n_rows() == 0 {
        return Err(Error::EmptyDataset);
    }
    let n = x.n_cols();
    if x.values().iter().all(|&v| v == 0.0) || n == 0 {
        return Ok(0.0);
    }
    let mut rng = solver_rng(0x5eed);
    let mut z = standard_normal_vec(&mut rng, n);
    let mut estimate = 0.0_f64;
    let mut change = f64::INFINITY;
    for _ in 0..CAP {
        let norm = z.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Ok(0.0);
        }
        z.iter_mut().for_each(|v| *v /= norm);
        let next = x.matvec_transpose(&x.matvec(&z));
        let rq: f64 = next.iter().zip(&z).map(|(a, b)| a * b).sum();
        change = (rq - estimate).abs() / rq.abs().max(f64::MIN_POSITIVE);
        estimate = rq;
        z = next;
        if change <= 1e-12 {
            return Ok(estimate);
        }
    }
    if change <= 1e-6 {
        Ok(estimate)
    } else {
        Err(Error::Convergence { what: "power iteration for ||X^T X||".into(), iterations: CAP })
    }
}

/// `sigma = 1 / (tau ||sum_l x_l x_l^T||)`.
pub fn bcpd_default_sigma(problem: &Problem, tau: f64) -> Result<f64> {
    let norm = operator_norm_sq(problem.data().x())?;
    if norm == 0.0 {
        return Err(Error::DegenerateDataset);
    }
    Ok(1.0 / (tau * norm))
}

fn prox_all(problem: &Problem, w: &mut [f64], step: f64) {
    for b in 0..problem.n_blocks() {
        problem.reg().prox_block(b, &mut w[problem.partition().range(b)], step);
    }
}

/// `sum_{l in batch} y_l x_l h'(y_l x_l^T w)`.
fn batch_gradient(problem: &Problem, batch: &[usize], w: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|g| *g = 0.0);
    let (x, y, loss) = (problem.data().x(), problem.data().y(), problem.loss());
    for &l in batch {
        let d = loss.grad(y[l] * x.row_dot(l, w));
        if d != 0.0 {
            x.row_axpy(l, y[l] * d, out);
        }
    }
}

/// Stochastic forward-backward and regularized dual averaging.
pub struct GradientSolver<'a> {
    problem: &'a Problem,
    config: BaselineConfig,
    rng: SolverRng,
    sampler: SubsetSampler,
    w: Vec<f64>,
    /// RDA accumulator.
    z: Vec<f64>,
    grad: Vec<f64>,
    iteration: usize,
    last_step: Option<f64>,
}

impl<'a> GradientSolver<'a> {
    pub fn new(problem: &'a Problem, config: &BaselineConfig) -> Result<Self> {
        if config.kind == BaselineKind::Bcpd {
            return Err(Error::InvalidConfig("BCPD is not a gradient method".into()));
        }
        config.validate(problem)?;
        let mut rng = solver_rng(config.seed);
        let w = initial_point(&config.init, problem.n_features(), &mut rng)?;
        let n = problem.n_features();
        Ok(GradientSolver {
            problem,
            config: config.clone(),
            rng,
            sampler: SubsetSampler::new(problem.n_samples()),
            w,
            z: vec![0.0; n],
            grad: vec![0.0; n],
            iteration: 0,
            last_step: None,
        })
    }

    pub fn accumulator(&self) -> &[f64] {
        &self.z
    }
}

impl IterativeSolver for GradientSolver<'_> {
    fn step(&mut self) -> Result<()> {
        let gamma = step_size(self.config.step_constant, self.iteration);
        let batch = self.sampler.sample(&mut self.rng, self.config.batch_size);
        batch_gradient(self.problem, batch, &self.w, &mut self.grad);
        match self.config.kind {
            BaselineKind::Sfb => {
                for (w, g) in self.w.iter_mut().zip(&self.grad) {
                    *w -= gamma * g;
                }
            }
            BaselineKind::Rda => {
                for ((w, z), g) in self.w.iter_mut().zip(self.z.iter_mut()).zip(&self.grad) {
                    *z += g;
                    *w = -gamma * *z;
                }
            }
            BaselineKind::Bcpd => unreachable!("rejected in GradientSolver::new"),
        }
        prox_all(self.problem, &mut self.w, gamma);
        for &w in &self.w {
            ensure_finite(w, &format!("{} iterate at iteration {}", self.config.kind, self.iteration))?;
        }
        self.iteration += 1;
        self.last_step = Some(gamma);
        Ok(())
    }

    fn iterate(&self) -> &[f64] {
        &self.w
    }

    fn last_step_size(&self) -> Option<f64> {
        self.last_step
    }
}

/// Block-coordinate primal-dual iteration with per-sample duals `v_l` and
/// `u = sum_l v_l y_l x_l` kept up to date incrementally.
pub struct BcpdSolver<'a> {
    problem: &'a Problem,
    config: BaselineConfig,
    tau: f64,
    sigma: f64,
    rng: SolverRng,
    sampler: SubsetSampler,
    w: Vec<f64>,
    w_prev: Vec<f64>,
    v: Vec<f64>,
    u: Vec<f64>,
}

impl<'a> BcpdSolver<'a> {
    pub fn new(problem: &'a Problem, config: &BaselineConfig) -> Result<Self> {
        if config.kind != BaselineKind::Bcpd {
            return Err(Error::InvalidConfig(format!("{} is not BCPD", config.kind)));
        }
        config.validate(problem)?;
        let norm = operator_norm_sq(problem.data().x())?;
        let tau = config.tau;
        let sigma = match config.sigma {
            Some(s) => s,
            None if norm > 0.0 => 1.0 / (tau * norm),
            None => return Err(Error::DegenerateDataset),
        };
        // Power iteration is accurate to well below this slack.
        if tau * sigma * norm > 1.0 + 1e-9 {
            return Err(Error::InvalidConfig(format!(
                "tau*sigma*||sum x x^T|| <= 1 violated: {tau}*{sigma}*{norm} = {}",
                tau * sigma * norm
            )));
        }
        let mut rng = solver_rng(config.seed);
        let w = initial_point(&config.init, problem.n_features(), &mut rng)?;
        let v = vec![0.0; problem.n_samples()];
        let u = problem
            .data()
            .x()
            .matvec_transpose(&v.iter().zip(problem.data().y()).map(|(v, y)| v * y).collect::<Vec<_>>());
        Ok(BcpdSolver {
            problem,
            config: config.clone(),
            tau,
            sigma,
            rng,
            sampler: SubsetSampler::new(problem.n_samples()),
            w_prev: w.clone(),
            w,
            v,
            u,
        })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn duals(&self) -> &[f64] {
        &self.v
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }
}

impl IterativeSolver for BcpdSolver<'_> {
    fn step(&mut self) -> Result<()> {
        let (tau, sigma) = (self.tau, self.sigma);
        std::mem::swap(&mut self.w, &mut self.w_prev);
        for ((w, wp), u) in self.w.iter_mut().zip(&self.w_prev).zip(&self.u) {
            *w = wp - tau * u;
        }
        prox_all(self.problem, &mut self.w, tau);
        let (x, y, loss) = (self.problem.data().x(), self.problem.data().y(), self.problem.loss());
        let batch = self.sampler.sample(&mut self.rng, self.config.batch_size);
        for &l in batch {
            let (cols, vals) = x.row(l);
            let dot: f64 = cols.iter().zip(vals).map(|(&j, &xv)| xv * (2.0 * self.w[j] - self.w_prev[j])).sum();
            let old = self.v[l];
            let new = ensure_finite(loss.prox_conjugate(old + sigma * y[l] * dot, sigma)?, "BCPD dual")?;
            self.v[l] = new;
            if new != old {
                x.row_axpy(l, (new - old) * y[l], &mut self.u);
            }
        }
        Ok(())
    }

    fn iterate(&self) -> &[f64] {
        &self.w
    }
}

fn run_solver<S: IterativeSolver>(
    mut solver: S,
    problem: &Problem,
    stopping: &StoppingRule,
    options: &TraceOptions,
    start: Instant,
) -> Result<RunOutput> {
    let setup = start.elapsed();
    drive(&mut solver, problem, stopping, options, setup)
}

/// Runs the configured baseline.
pub fn run_baseline(problem: &Problem, config: &BaselineConfig, options: &TraceOptions) -> Result<RunOutput> {
    let start = Instant::now();
    match config.kind {
        BaselineKind::Sfb | BaselineKind::Rda => {
            run_solver(GradientSolver::new(problem, config)?, problem, &config.stopping, options, start)
        }
        BaselineKind::Bcpd => run_solver(BcpdSolver::new(problem, config)?, problem, &config.stopping, options, start),
    }
}

fn run_kind(problem: &Problem, config: &BaselineConfig, kind: BaselineKind) -> Result<(Vec<f64>, ConvergenceTrace)> {
    let config = BaselineConfig { kind, ..config.clone() };
    let out = run_baseline(problem, &config, &TraceOptions::default())?;
    Ok((out.solution, out.trace))
}

pub fn sfb_run(problem: &Problem, config: &BaselineConfig) -> Result<(Vec<f64>, ConvergenceTrace)> {
    run_kind(problem, config, BaselineKind::Sfb)
}

pub fn rda_run(problem: &Problem, config: &BaselineConfig) -> Result<(Vec<f64>, ConvergenceTrace)> {
    run_kind(problem, config, BaselineKind::Rda)
}

pub fn bcpd_run(problem: &Problem, config: &BaselineConfig) -> Result<(Vec<f64>, ConvergenceTrace)> {
    run_kind(problem, config, BaselineKind::Bcpd)
}
