//! Random block-coordinate Douglas-Rachford splitting.
//!
//! Solves `minimize sum_b f_b(w_b) + sum_l h(sum_b A_{l,b} w_b)` with
//! `A_{l,b} = y_l x_{l,b}^T`. Each iteration updates a random subset of the
//! primal blocks `(w_b, t_b)` and of the per-sample dual variables
//! `(v_l, s_l)`; the only linear algebra is a solve with the fixed per-block
//! matrices `Id + tau_b sum_l c_l x_{l,b} x_{l,b}^T`, factored once.
//!
//! The dual step uses the logistic prox (or any [`ScalarLoss`] prox) on the
//! scalar `p_l = 2 sum_b v_{l,b} - sum_b s_{l,b}`.

use std::fmt;
use std::sync::Arc;
use std::time::Instant;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::driver::{drive, IterativeSolver, RunOutput, StoppingRule, TraceOptions};
use crate::error::{Error, Result};
use crate::model::Problem;
use crate::prox::ScalarLoss;
use crate::sampling::{solver_rng, standard_normal_vec, SolverRng, SubsetSampler};
use crate::trace::ConvergenceTrace;

/// A parameter that is either shared or given per block / per sample.
#[derive(Debug, Clone, PartialEq)]
pub enum Param {
    Uniform(f64),
    PerIndex(Vec<f64>),
}

impl Param {
    #[inline]
    pub fn at(&self, i: usize) -> f64 {
        match self {
            Param::Uniform(x) => *x,
            Param::PerIndex(v) => v[i],
        }
    }

    fn check(&self, len: usize, name: &str) -> Result<()> {
        if let Param::PerIndex(v) = self {
            if v.len() != len {
                return Err(Error::InvalidConfig(format!("{name} has {} entries, expected {len}", v.len())));
            }
        }
        Ok(())
    }
}

impl From<f64> for Param {
    fn from(x: f64) -> Self {
        Param::Uniform(x)
    }
}

/// Relaxation `mu` per iteration.
#[derive(Clone)]
pub enum MuSchedule {
    Constant(f64),
    Custom(Arc<dyn Fn(usize) -> f64 + Send + Sync>),
}

impl MuSchedule {
    pub fn at(&self, iteration: usize) -> f64 {
        match self {
            MuSchedule::Constant(m) => *m,
            MuSchedule::Custom(f) => f(iteration),
        }
    }
}

impl fmt::Debug for MuSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MuSchedule::Constant(m) => write!(f, "Constant({m})"),
            MuSchedule::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// Which primal blocks are activated each iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrimalActivation {
    All,
    /// `k` blocks drawn uniformly without replacement.
    UniformSubset(usize),
}

/// Which primal value enters the `v` update.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VUpdateVariant {
    /// `A_{l,b} w_b` taken at the start of the iteration.
    Literal,
    /// `A_{l,b} w_b` taken after this iteration's primal update.
    Refreshed,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialPoint {
    Zeros,
    /// Entries drawn from `N(0, 1)` with the run's seed.
    StandardNormal,
    Given(Vec<f64>),
}

/// Parameters of a Douglas-Rachford run. Defaults follow the usual choices
/// `gamma = tau = 1`, `mu = 1.5`, `rho = 0.1`, batches of 1000 samples.
#[derive(Debug, Clone)]
pub struct DrConfig {
    /// Per-block primal steps `tau_b > 0`.
    pub tau: Param,
    /// Per-sample dual steps `gamma_l > 0`.
    pub gamma: Param,
    /// Per-sample strong convexity shifts `rho_l >= 0`.
    pub rho: Param,
    pub eta: f64,
    pub mu: MuSchedule,
    /// Samples activated per iteration; `usize::MAX` activates all.
    pub batch_size: usize,
    pub primal_activation: PrimalActivation,
    pub seed: u64,
    pub stopping: StoppingRule,
    pub v_update: VUpdateVariant,
    /// Starting point `t^0`; `s^0 = 0`.
    pub init: InitialPoint,
}

impl Default for DrConfig {
    fn default() -> Self {
        DrConfig {
            tau: Param::Uniform(1.0),
            gamma: Param::Uniform(1.0),
            rho: Param::Uniform(0.1),
            eta: 0.49,
            mu: MuSchedule::Constant(1.5),
            batch_size: 1000,
            primal_activation: PrimalActivation::All,
            seed: 0,
            stopping: StoppingRule::iterations(1000),
            v_update: VUpdateVariant::Refreshed,
            init: InitialPoint::StandardNormal,
        }
    }
}

impl DrConfig {
    /// Forces `rho = 0` when the loss has no Lipschitz gradient. Returns a
    /// warning if something was changed.
    pub fn adapt_to(&mut self, problem: &Problem) -> Option<String> {
        let loss = problem.loss();
        if loss.is_smooth() {
            return None;
        }
        let nonzero = match &self.rho {
            Param::Uniform(r) => *r != 0.0,
            Param::PerIndex(v) => v.iter().any(|&r| r != 0.0),
        };
        self.rho = Param::Uniform(0.0);
        nonzero.then(|| format!("rho forced to 0: the {loss} loss is not differentiable"))
    }

    fn check_mu(&self, mu: f64, iteration: usize) -> Result<()> {
        if mu > self.eta && mu < 2.0 - self.eta {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "mu = {mu} at iteration {iteration} violates eta < mu < 2 - eta with eta = {}",
                self.eta
            )))
        }
    }

    /// Checks every parameter constraint against `problem`, naming the
    /// violated inequality.
    pub fn validate(&self, problem: &Problem) -> Result<()> {
        let (n_blocks, n_samples) = (problem.n_blocks(), problem.n_samples());
        self.tau.check(n_blocks, "tau")?;
        self.gamma.check(n_samples, "gamma")?;
        self.rho.check(n_samples, "rho")?;
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::InvalidConfig(format!("eta = {} must lie in (0, 1]", self.eta)));
        }
        if let MuSchedule::Constant(m) = self.mu {
            self.check_mu(m, 0)?;
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch size must be at least 1".into()));
        }
        if let PrimalActivation::UniformSubset(k) = self.primal_activation {
            if k == 0 || k > n_blocks {
                return Err(Error::InvalidConfig(format!("cannot activate {k} of {n_blocks} blocks")));
            }
        }
        for b in 0..n_blocks {
            let tau = self.tau.at(b);
            if !(tau.is_finite() && tau > 0.0) {
                return Err(Error::InvalidConfig(format!("tau > 0 violated on block {b}: tau = {tau}")));
            }
        }
        let beta = problem.loss().gradient_lipschitz();
        for l in 0..n_samples {
            let (gamma, rho) = (self.gamma.at(l), self.rho.at(l));
            if !(gamma.is_finite() && gamma > 0.0) {
                return Err(Error::InvalidConfig(format!("gamma > 0 violated for sample {l}: gamma = {gamma}")));
            }
            if !(rho.is_finite() && rho >= 0.0) {
                return Err(Error::InvalidConfig(format!("rho >= 0 violated for sample {l}: rho = {rho}")));
            }
            match beta {
                None if rho != 0.0 => {
                    return Err(Error::InvalidConfig(format!(
                        "rho = {rho} must be 0 for the non-differentiable {} loss",
                        problem.loss()
                    )))
                }
                Some(beta) if n_blocks as f64 * beta * rho > 1.0 => {
                    return Err(Error::InvalidConfig(format!(
                        "B*beta*rho <= 1 violated for sample {l}: {n_blocks}*{beta}*{rho} = {}",
                        n_blocks as f64 * beta * rho
                    )))
                }
                _ => {}
            }
            if gamma * rho >= 1.0 {
                return Err(Error::InvalidConfig(format!(
                    "gamma*rho < 1 violated for sample {l}: {gamma}*{rho} = {}",
                    gamma * rho
                )));
            }
        }
        Ok(())
    }
}

/// Positions of each block's entries inside each CSR row.
#[derive(Debug, Clone)]
struct RowBlocks {
    n_blocks: usize,
    /// For row `l`, block `b` occupies `ptr[l*(B+1)+b] .. ptr[l*(B+1)+b+1]`
    /// (relative to the row start).
    ptr: Vec<usize>,
}

impl RowBlocks {
    fn new(problem: &Problem) -> Self {
        let b_count = problem.n_blocks();
        let offsets = problem.partition().offsets();
        let x = problem.data().x();
        let mut ptr = Vec::with_capacity(x.n_rows() * (b_count + 1));
        for l in 0..x.n_rows() {
            let (cols, _) = x.row(l);
            ptr.push(0);
            for &end in &offsets[1..] {
                ptr.push(cols.partition_point(|&j| j < end));
            }
        }
        RowBlocks { n_blocks: b_count, ptr }
    }

    #[inline]
    fn segment(&self, l: usize, b: usize) -> std::ops::Range<usize> {
        let base = l * (self.n_blocks + 1) + b;
        self.ptr[base]..self.ptr[base + 1]
    }
}

/// `y_l x_{l,b}^T w` where `w` is indexed globally.
#[inline]
fn block_margin(problem: &Problem, rows: &RowBlocks, l: usize, b: usize, w: &[f64]) -> f64 {
    let (cols, vals) = problem.data().x().row(l);
    let seg = rows.segment(l, b);
    let dot: f64 = cols[seg.clone()].iter().zip(&vals[seg]).map(|(&j, &x)| x * w[j]).sum();
    problem.data().y()[l] * dot
}

/// `out += alpha * y_l x_{l,b}`.
#[inline]
fn block_axpy(problem: &Problem, rows: &RowBlocks, l: usize, b: usize, alpha: f64, out: &mut [f64]) {
    let (cols, vals) = problem.data().x().row(l);
    let seg = rows.segment(l, b);
    let a = alpha * problem.data().y()[l];
    for (&j, &x) in cols[seg.clone()].iter().zip(&vals[seg]) {
        out[j] += a * x;
    }
}

/// Cholesky factors of `M_b = Id + tau_b sum_l c_l x_{l,b} x_{l,b}^T`,
/// `c_l = gamma_l / (1 + gamma_l rho_l)`. Applying the preconditioner means
/// solving with `M_b`.
#[derive(Debug, Clone)]
pub struct Preconditioner {
    offsets: Vec<usize>,
    factors: Vec<Cholesky<f64, Dyn>>,
}

impl Preconditioner {
    pub fn n_blocks(&self) -> usize {
        self.factors.len()
    }

    /// Solves `M_b w = z` in place (`z` holds block `b` only).
    pub fn apply(&self, b: usize, z: &mut [f64]) {
        let mut rhs = DVector::from_column_slice(z);
        self.factors[b].solve_mut(&mut rhs);
        z.copy_from_slice(rhs.as_slice());
    }

    /// `M_b w`, reconstructed from the factor.
    pub fn multiply(&self, b: usize, w: &[f64]) -> Vec<f64> {
        let l = self.factors[b].l();
        let v = DVector::from_column_slice(w);
        let out = &l * (l.transpose() * v);
        out.as_slice().to_vec()
    }

    /// Dense `C_b = M_b^{-1}`.
    pub fn inverse(&self, b: usize) -> DMatrix<f64> {
        self.factors[b].inverse()
    }

    pub fn block_len(&self, b: usize) -> usize {
        self.offsets[b + 1] - self.offsets[b]
    }
}

/// Factors the per-block matrices. `config` must already be valid.
pub fn build_preconditioner(problem: &Problem, config: &DrConfig) -> Result<Preconditioner> {
    let partition = problem.partition();
    let x = problem.data().x();
    let mut mats: Vec<DMatrix<f64>> = (0..partition.n_blocks())
        .map(|b| DMatrix::identity(partition.block_size(b), partition.block_size(b)))
        .collect();
    for l in 0..problem.n_samples() {
        let (gamma, rho) = (config.gamma.at(l), config.rho.at(l));
        let c = gamma / (1.0 + gamma * rho);
        let (cols, vals) = x.row(l);
        let mut k = 0;
        while k < cols.len() {
            let b = partition.block_of(cols[k]);
            let start = partition.range(b).start;
            let end = k + cols[k..].partition_point(|&j| j < partition.range(b).end);
            let scale = config.tau.at(b) * c;
            let m = &mut mats[b];
            for p in k..end {
                let (jp, xp) = (cols[p] - start, vals[p]);
                for q in k..end {
                    m[(jp, cols[q] - start)] += scale * xp * vals[q];
                }
            }
            k = end;
        }
    }
    let mut factors = Vec::with_capacity(mats.len());
    for (b, m) in mats.into_iter().enumerate() {
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::Factorization { block: b });
        }
        factors.push(Cholesky::new(m).ok_or(Error::Factorization { block: b })?);
    }
    Ok(Preconditioner { offsets: partition.offsets().to_vec(), factors })
}

/// Iterates of the method. `v` and `s` are stored sample-major, `L x B`.
#[derive(Debug, Clone, PartialEq)]
pub struct DrState {
    pub w: Vec<f64>,
    pub t: Vec<f64>,
    pub v: Vec<f64>,
    pub s: Vec<f64>,
    pub u: Vec<f64>,
    pub iteration: usize,
}

impl DrState {
    #[inline]
    pub fn v_at(&self, l: usize, b: usize, n_blocks: usize) -> f64 {
        self.v[l * n_blocks + b]
    }

    #[inline]
    pub fn s_at(&self, l: usize, b: usize, n_blocks: usize) -> f64 {
        self.s[l * n_blocks + b]
    }

    pub fn is_finite(&self) -> bool {
        [&self.w, &self.t, &self.v, &self.s, &self.u].iter().all(|x| x.iter().all(|v| v.is_finite()))
    }
}

/// `u_b = sum_l A_{l,b}^* s_{l,b} / (1 + gamma_l rho_l)`, recomputed from `s`.
pub fn recompute_u(problem: &Problem, config: &DrConfig, s: &[f64]) -> Vec<f64> {
    let rows = RowBlocks::new(problem);
    recompute_u_with(problem, config, &rows, s)
}

fn recompute_u_with(problem: &Problem, config: &DrConfig, rows: &RowBlocks, s: &[f64]) -> Vec<f64> {
    let n_blocks = problem.n_blocks();
    let mut u = vec![0.0; problem.n_features()];
    for l in 0..problem.n_samples() {
        let denom = 1.0 + config.gamma.at(l) * config.rho.at(l);
        for b in 0..n_blocks {
            let s_lb = s[l * n_blocks + b];
            if s_lb != 0.0 {
                block_axpy(problem, rows, l, b, s_lb / denom, &mut u);
            }
        }
    }
    u
}

/// Initial state: `w = 0`, `t = t0`, `s = s0`, `v = 0` and `u` from `s0`.
pub fn init_state(problem: &Problem, config: &DrConfig, t0: Vec<f64>, s0: Vec<f64>) -> Result<DrState> {
    if t0.len() != problem.n_features() {
        return Err(Error::DimensionMismatch(format!(
            "t0 has {} entries, expected {}",
            t0.len(),
            problem.n_features()
        )));
    }
    let dual_len = problem.n_samples() * problem.n_blocks();
    if s0.len() != dual_len {
        return Err(Error::DimensionMismatch(format!("s0 has {} entries, expected L*B = {dual_len}", s0.len())));
    }
    let u = recompute_u(problem, config, &s0);
    Ok(DrState { w: vec![0.0; problem.n_features()], t: t0, v: vec![0.0; dual_len], s: s0, u, iteration: 0 })
}

/// Activation variables of one iteration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActivationMask {
    /// One flag per block.
    pub primal: Vec<bool>,
    /// Activated samples, strictly increasing.
    pub dual: Vec<usize>,
}

impl ActivationMask {
    pub fn all(n_blocks: usize, n_samples: usize) -> Self {
        ActivationMask { primal: vec![true; n_blocks], dual: (0..n_samples).collect() }
    }

    /// From a `B + L` bit vector, blocks first.
    pub fn from_bits(bits: &[bool], n_blocks: usize) -> Self {
        ActivationMask {
            primal: bits[..n_blocks].to_vec(),
            dual: bits[n_blocks..].iter().enumerate().filter(|(_, &on)| on).map(|(l, _)| l).collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.dual.is_empty() && !self.primal.iter().any(|&p| p)
    }
}

/// Scratch buffers and fixed data of one iteration.
struct Workspace {
    rows: RowBlocks,
    w_prev: Vec<f64>,
    block: Vec<f64>,
    v_row: Vec<f64>,
}

impl Workspace {
    fn new(problem: &Problem) -> Self {
        Workspace {
            rows: RowBlocks::new(problem),
            w_prev: Vec::new(),
            block: Vec::new(),
            v_row: vec![0.0; problem.n_blocks()],
        }
    }
}

/// One iteration of the method on the coordinates selected by `mask`.
/// Coordinates outside the mask are left untouched.
pub fn dr_iterate(
    state: &mut DrState,
    problem: &Problem,
    preconditioner: &Preconditioner,
    config: &DrConfig,
    mask: &ActivationMask,
    mu: f64,
) -> Result<()> {
    let mut ws = Workspace::new(problem);
    iterate_with(state, problem, preconditioner, config, mask, mu, &mut ws)
}

fn iterate_with(
    state: &mut DrState,
    problem: &Problem,
    pre: &Preconditioner,
    config: &DrConfig,
    mask: &ActivationMask,
    mu: f64,
    ws: &mut Workspace,
) -> Result<()> {
    let n_blocks = problem.n_blocks();
    if mask.primal.len() != n_blocks {
        return Err(Error::DimensionMismatch("primal activation mask length".into()));
    }
    if mask.is_empty() {
        return Err(Error::InvalidConfig("activation mask is all zero".into()));
    }
    if mask.dual.windows(2).any(|w| w[0] >= w[1]) || mask.dual.last().is_some_and(|&l| l >= problem.n_samples()) {
        return Err(Error::InvalidConfig("dual activation must list distinct, sorted sample indices".into()));
    }
    config.check_mu(mu, state.iteration)?;

    let literal = config.v_update == VUpdateVariant::Literal;
    if literal && !mask.dual.is_empty() {
        ws.w_prev.clone_from(&state.w);
    }

    // Primal blocks.
    let partition = problem.partition();
    for b in (0..n_blocks).filter(|&b| mask.primal[b]) {
        let range = partition.range(b);
        let tau = config.tau.at(b);
        ws.block.clear();
        ws.block.extend(state.t[range.clone()].iter().zip(&state.u[range.clone()]).map(|(t, u)| t - tau * u));
        pre.apply(b, &mut ws.block);
        state.w[range.clone()].copy_from_slice(&ws.block);
        // ws.block <- prox_{tau f_b}(2 w_b - t_b)
        for (z, t) in ws.block.iter_mut().zip(&state.t[range.clone()]) {
            *z = 2.0 * *z - t;
        }
        problem.reg().prox_block(b, &mut ws.block, tau);
        for ((t, p), w) in state.t[range.clone()].iter_mut().zip(&ws.block).zip(&state.w[range.clone()]) {
            *t += mu * (p - w);
        }
        if state.w[range].iter().any(|x| !x.is_finite()) {
            return Err(Error::Numerical(format!("primal block {b} at iteration {}", state.iteration)));
        }
    }

    // Dual samples, in increasing order so that the u reduction is fixed.
    let loss: ScalarLoss = problem.loss();
    let w_src: &[f64] = if literal { &ws.w_prev } else { &state.w };
    for &l in &mask.dual {
        let (gamma, rho) = (config.gamma.at(l), config.rho.at(l));
        let denom = 1.0 + gamma * rho;
        let base = l * n_blocks;
        let mut sum_v = 0.0;
        let mut sum_s = 0.0;
        for b in 0..n_blocks {
            let a = block_margin(problem, &ws.rows, l, b, w_src);
            let v = (state.s[base + b] + gamma * a) / denom;
            ws.v_row[b] = v;
            sum_v += v;
            sum_s += state.s[base + b];
        }
        let p = 2.0 * sum_v - sum_s;
        let kappa = n_blocks as f64 * (1.0 - gamma * rho);
        let q = loss.prox(p / gamma, kappa / gamma)?;
        let target = (p - gamma * q) / kappa;
        if !target.is_finite() {
            return Err(Error::Numerical(format!("dual update of sample {l} at iteration {}", state.iteration)));
        }
        for b in 0..n_blocks {
            let v = ws.v_row[b];
            state.v[base + b] = v;
            let old = state.s[base + b];
            let new = old + mu * (target - v);
            state.s[base + b] = new;
            let delta = new - old;
            if delta != 0.0 {
                block_axpy(problem, &ws.rows, l, b, delta / denom, &mut state.u);
            }
        }
    }
    state.iteration += 1;
    Ok(())
}

/// The iterate `w` and the prox image `(prox_{tau_b f_b}(2 w_b - t_b))_b`.
/// The latter is exactly sparse under `l1` and equals `w` at a fixed point.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtractedSolution {
    pub iterate: Vec<f64>,
    pub prox_image: Vec<f64>,
}

pub fn extract_solution(state: &DrState, problem: &Problem, config: &DrConfig) -> ExtractedSolution {
    let mut prox_image: Vec<f64> = state.w.iter().zip(&state.t).map(|(w, t)| 2.0 * w - t).collect();
    let partition = problem.partition();
    for b in 0..problem.n_blocks() {
        problem.reg().prox_block(b, &mut prox_image[partition.range(b)], config.tau.at(b));
    }
    ExtractedSolution { iterate: state.w.clone(), prox_image }
}

pub(crate) fn initial_point(init: &InitialPoint, n: usize, rng: &mut SolverRng) -> Result<Vec<f64>> {
    match init {
        InitialPoint::Zeros => Ok(vec![0.0; n]),
        InitialPoint::StandardNormal => Ok(standard_normal_vec(rng, n)),
        InitialPoint::Given(w) if w.len() == n => Ok(w.clone()),
        InitialPoint::Given(w) => {
            Err(Error::DimensionMismatch(format!("initial point has {} entries, expected {n}", w.len())))
        }
    }
}

/// Draws activation masks from the configured laws.
struct ActivationSampler {
    blocks: SubsetSampler,
    samples: SubsetSampler,
    mask: ActivationMask,
}

impl ActivationSampler {
    fn new(n_blocks: usize, n_samples: usize) -> Self {
        ActivationSampler {
            blocks: SubsetSampler::new(n_blocks),
            samples: SubsetSampler::new(n_samples),
            mask: ActivationMask { primal: vec![false; n_blocks], dual: Vec::new() },
        }
    }

    fn draw(&mut self, rng: &mut SolverRng, primal: PrimalActivation, batch: usize) -> &ActivationMask {
        match primal {
            PrimalActivation::All => self.mask.primal.iter_mut().for_each(|p| *p = true),
            PrimalActivation::UniformSubset(k) => {
                self.mask.primal.iter_mut().for_each(|p| *p = false);
                for &b in self.blocks.sample(rng, k) {
                    self.mask.primal[b] = true;
                }
            }
        }
        self.mask.dual.clear();
        self.mask.dual.extend_from_slice(self.samples.sample(rng, batch));
        &self.mask
    }
}

/// A configured Douglas-Rachford run: validated parameters, factored
/// preconditioner, state and random stream.
pub struct DrSolver<'a> {
    problem: &'a Problem,
    config: DrConfig,
    preconditioner: Preconditioner,
    state: DrState,
    rng: SolverRng,
    sampler: ActivationSampler,
    ws: Workspace,
}

impl<'a> DrSolver<'a> {
    pub fn new(problem: &'a Problem, config: &DrConfig) -> Result<Self> {
        config.validate(problem)?;
        let preconditioner = build_preconditioner(problem, config)?;
        let mut rng = solver_rng(config.seed);
        let t0 = initial_point(&config.init, problem.n_features(), &mut rng)?;
        let s0 = vec![0.0; problem.n_samples() * problem.n_blocks()];
        let state = init_state(problem, config, t0, s0)?;
        Ok(DrSolver {
            problem,
            config: config.clone(),
            preconditioner,
            state,
            rng,
            sampler: ActivationSampler::new(problem.n_blocks(), problem.n_samples()),
            ws: Workspace::new(problem),
        })
    }

    pub fn state(&self) -> &DrState {
        &self.state
    }

    pub fn preconditioner(&self) -> &Preconditioner {
        &self.preconditioner
    }

    pub fn config(&self) -> &DrConfig {
        &self.config
    }

    pub fn extract(&self) -> ExtractedSolution {
        extract_solution(&self.state, self.problem, &self.config)
    }

    /// One iteration with an explicit mask instead of a random one.
    pub fn step_with_mask(&mut self, mask: &ActivationMask) -> Result<()> {
        let mu = self.config.mu.at(self.state.iteration);
        iterate_with(&mut self.state, self.problem, &self.preconditioner, &self.config, mask, mu, &mut self.ws)
    }

    /// Recomputes `u` from `s` (for consistency checks).
    pub fn recomputed_u(&self) -> Vec<f64> {
        recompute_u_with(self.problem, &self.config, &self.ws.rows, &self.state.s)
    }
}

impl IterativeSolver for DrSolver<'_> {
    fn step(&mut self) -> Result<()> {
        let mu = self.config.mu.at(self.state.iteration);
        let mask = self.sampler.draw(&mut self.rng, self.config.primal_activation, self.config.batch_size);
        iterate_with(&mut self.state, self.problem, &self.preconditioner, &self.config, mask, mu, &mut self.ws)
    }

    fn iterate(&self) -> &[f64] {
        &self.state.w
    }

    fn solution(&self) -> Vec<f64> {
        self.extract().prox_image
    }
}

/// Runs the method and returns the prox-image solution and its trace.
pub fn run(problem: &Problem, config: &DrConfig) -> Result<(Vec<f64>, ConvergenceTrace)> {
    let out = run_with(problem, config, &TraceOptions::default())?;
    Ok((out.solution, out.trace))
}

pub fn run_with(problem: &Problem, config: &DrConfig, options: &TraceOptions) -> Result<RunOutput> {
    let start = Instant::now();
    let mut solver = DrSolver::new(problem, config)?;
    let setup = start.elapsed();
    drive(&mut solver, problem, &config.stopping, options, setup)
}

/// Iterates of the single-block, `rho = 0` form of the method, written in the
/// rescaled duals `s~ = -tau s`, `u~ = -tau u`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplifiedState {
    pub w: Vec<f64>,
    pub t: Vec<f64>,
    pub s_tilde: Vec<f64>,
    pub u_tilde: Vec<f64>,
    pub iteration: usize,
}

/// Single-block, `rho = 0` specialization of [`DrSolver`]. With the same
/// seed and `v_update` it produces the same primal iterates.
pub struct SimplifiedDrSolver<'a> {
    problem: &'a Problem,
    config: DrConfig,
    tau: f64,
    preconditioner: Preconditioner,
    state: SimplifiedState,
    rng: SolverRng,
    sampler: ActivationSampler,
    scratch: Vec<f64>,
    w_prev: Vec<f64>,
}

/// `u~ = sum_l A_l^* s~_l`.
pub fn init_simplified(problem: &Problem, t0: Vec<f64>, s_tilde0: Vec<f64>) -> Result<SimplifiedState> {
    if t0.len() != problem.n_features() || s_tilde0.len() != problem.n_samples() {
        return Err(Error::DimensionMismatch("simplified initial state".into()));
    }
    let x = problem.data().x();
    let mut u_tilde = vec![0.0; problem.n_features()];
    for (l, &s) in s_tilde0.iter().enumerate() {
        if s != 0.0 {
            x.row_axpy(l, s * problem.data().y()[l], &mut u_tilde);
        }
    }
    Ok(SimplifiedState { w: vec![0.0; problem.n_features()], t: t0, s_tilde: s_tilde0, u_tilde, iteration: 0 })
}

impl<'a> SimplifiedDrSolver<'a> {
    pub fn new(problem: &'a Problem, config: &DrConfig) -> Result<Self> {
        if problem.n_blocks() != 1 {
            return Err(Error::InvalidConfig(format!(
                "the simplified method needs B = 1, got B = {}",
                problem.n_blocks()
            )));
        }
        if (0..problem.n_samples()).any(|l| config.rho.at(l) != 0.0) {
            return Err(Error::InvalidConfig("the simplified method needs rho = 0".into()));
        }
        config.validate(problem)?;
        let preconditioner = build_preconditioner(problem, config)?;
        let mut rng = solver_rng(config.seed);
        let t0 = initial_point(&config.init, problem.n_features(), &mut rng)?;
        let state = init_simplified(problem, t0, vec![0.0; problem.n_samples()])?;
        Ok(SimplifiedDrSolver {
            problem,
            tau: config.tau.at(0),
            config: config.clone(),
            preconditioner,
            state,
            rng,
            sampler: ActivationSampler::new(1, problem.n_samples()),
            scratch: Vec::new(),
            w_prev: Vec::new(),
        })
    }

    pub fn state(&self) -> &SimplifiedState {
        &self.state
    }

    pub fn step_with_mask(&mut self, mask: &ActivationMask) -> Result<()> {
        let mu = self.config.mu.at(self.state.iteration);
        self.config.check_mu(mu, self.state.iteration)?;
        let problem = self.problem;
        let tau = self.tau;
        let st = &mut self.state;
        let literal = self.config.v_update == VUpdateVariant::Literal;
        if literal {
            self.w_prev.clone_from(&st.w);
        }
        if mask.primal[0] {
            // w = C (t + u~)
            self.scratch.clear();
            self.scratch.extend(st.t.iter().zip(&st.u_tilde).map(|(t, u)| t + u));
            self.preconditioner.apply(0, &mut self.scratch);
            st.w.copy_from_slice(&self.scratch);
            for (z, t) in self.scratch.iter_mut().zip(&st.t) {
                *z = 2.0 * *z - t;
            }
            problem.reg().prox_block(0, &mut self.scratch, tau);
            for ((t, p), w) in st.t.iter_mut().zip(&self.scratch).zip(&st.w) {
                *t += mu * (p - w);
            }
        }
        let loss = problem.loss();
        let x = problem.data().x();
        let y = problem.data().y();
        let w_src: &[f64] = if literal { &self.w_prev } else { &st.w };
        for &l in &mask.dual {
            let gamma = self.config.gamma.at(l);
            let a = y[l] * x.row_dot(l, w_src);
            let q = loss.prox(2.0 * a - st.s_tilde[l] / (tau * gamma), 1.0 / gamma)?;
            let old = st.s_tilde[l];
            let new = old + mu * tau * gamma * (q - a);
            if !new.is_finite() {
                return Err(Error::Numerical(format!("dual update of sample {l}")));
            }
            st.s_tilde[l] = new;
            let delta = new - old;
            if delta != 0.0 {
                x.row_axpy(l, delta * y[l], &mut st.u_tilde);
            }
        }
        st.iteration += 1;
        Ok(())
    }

    /// `prox_{tau f}(2 w - t)`.
    pub fn prox_image(&self) -> Vec<f64> {
        let mut z: Vec<f64> = self.state.w.iter().zip(&self.state.t).map(|(w, t)| 2.0 * w - t).collect();
        self.problem.reg().prox_block(0, &mut z, self.tau);
        z
    }
}

impl IterativeSolver for SimplifiedDrSolver<'_> {
    fn step(&mut self) -> Result<()> {
        let mask = self.sampler.draw(&mut self.rng, self.config.primal_activation, self.config.batch_size).clone();
        self.step_with_mask(&mask)
    }

    fn iterate(&self) -> &[f64] {
        &self.state.w
    }

    fn solution(&self) -> Vec<f64> {
        self.prox_image()
    }
}

/// Runs the single-block, `rho = 0` specialization.
pub fn run_simplified(problem: &Problem, config: &DrConfig) -> Result<(Vec<f64>, ConvergenceTrace)> {
    let out = run_simplified_with(problem, config, &TraceOptions::default())?;
    Ok((out.solution, out.trace))
}

pub fn run_simplified_with(problem: &Problem, config: &DrConfig, options: &TraceOptions) -> Result<RunOutput> {
    let start = Instant::now();
    let mut solver = SimplifiedDrSolver::new(problem, config)?;
    let setup = start.elapsed();
    drive(&mut solver, problem, &config.stopping, options, setup)
}
