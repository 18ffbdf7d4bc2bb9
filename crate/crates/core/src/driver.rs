//! Iteration loop shared by all solvers: stopping rules and trace recording.

use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::model::{sparsity_degree, Problem};
use crate::trace::{ConvergenceTrace, TraceRecord};

/// One iteration at a time, with access to the current and the reported point.
pub trait IterativeSolver {
    fn step(&mut self) -> Result<()>;

    /// Current primal iterate.
    fn iterate(&self) -> &[f64];

    /// Point reported as the solution. Defaults to the iterate.
    fn solution(&self) -> Vec<f64> {
        self.iterate().to_vec()
    }

    /// Step size used by the last call to `step`, if the method has one.
    fn last_step_size(&self) -> Option<f64> {
        None
    }
}

/// Stop when the objective changes by less than `rel_tol` (relative) over
/// `window` iterations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlateauRule {
    pub window: usize,
    pub rel_tol: f64,
}

impl Default for PlateauRule {
    fn default() -> Self {
        PlateauRule { window: 50, rel_tol: 1e-10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StoppingRule {
    pub max_iters: usize,
    pub plateau: Option<PlateauRule>,
}

impl StoppingRule {
    pub fn iterations(max_iters: usize) -> Self {
        StoppingRule { max_iters, plateau: None }
    }

    pub fn with_plateau(self, rule: PlateauRule) -> Self {
        StoppingRule { plateau: Some(rule), ..self }
    }
}

/// What to record while running.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceOptions {
    /// Record every `stride` iterations (plus the first and the last).
    pub stride: usize,
    /// Reference solution for the `dist_ref` column.
    pub reference: Option<Vec<f64>>,
    /// Magnitude below which an iterate entry counts as zero in `zeros_tol`.
    pub zero_tol: f64,
}

impl Default for TraceOptions {
    fn default() -> Self {
        TraceOptions { stride: 10, reference: None, zero_tol: 1e-8 }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    /// Reported solution (the prox image for Douglas-Rachford).
    pub solution: Vec<f64>,
    /// Last primal iterate.
    pub iterate: Vec<f64>,
    pub trace: ConvergenceTrace,
    pub iterations: usize,
    /// Whether the plateau rule fired before the iteration cap.
    pub plateau_reached: bool,
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Runs `solver` under `stopping`, recording a trace. `setup` is the time
/// already spent building the solver; it is included in the trace clock.
pub fn drive<S: IterativeSolver + ?Sized>(
    solver: &mut S,
    problem: &Problem,
    stopping: &StoppingRule,
    options: &TraceOptions,
    setup: Duration,
) -> Result<RunOutput> {
    if let Some(r) = &options.reference {
        if r.len() != problem.n_features() {
            return Err(Error::DimensionMismatch("reference solution length".into()));
        }
    }
    let stride = options.stride.max(1);
    let mut trace = ConvergenceTrace { setup_seconds: setup.as_secs_f64(), ..Default::default() };
    let start = Instant::now();
    // Time spent evaluating trace entries is taken off the clock.
    let mut bookkeeping = Duration::ZERO;

    let record =
        |solver: &S, iteration: usize, bookkeeping: &mut Duration, trace: &mut ConvergenceTrace| -> Result<()> {
            let elapsed = start.elapsed().saturating_sub(*bookkeeping);
            let t0 = Instant::now();
            let w = solver.iterate();
            let reported = solver.solution();
            let objective = problem.objective(w)?;
            trace.records.push(TraceRecord {
                iteration,
                seconds: (setup + elapsed).as_secs_f64(),
                objective,
                dist_ref: options.reference.as_deref().map(|r| distance(w, r)),
                zeros_exact: sparsity_degree(&reported, 0.0),
                zeros_tol: sparsity_degree(w, options.zero_tol),
            });
            *bookkeeping += t0.elapsed();
            Ok(())
        };

    record(solver, 0, &mut bookkeeping, &mut trace)?;
    let mut plateau_anchor: Option<f64> = None;
    let mut plateau_reached = false;
    let mut done = 0;
    for i in 1..=stopping.max_iters {
        solver.step()?;
        done = i;
        if let Some(g) = solver.last_step_size() {
            trace.step_sizes.push(g);
        }
        if i % stride == 0 {
            record(solver, i, &mut bookkeeping, &mut trace)?;
        }
        if let Some(rule) = stopping.plateau {
            if i % rule.window.max(1) == 0 {
                let t0 = Instant::now();
                let f = problem.objective(solver.iterate())?;
                bookkeeping += t0.elapsed();
                if !f.is_finite() {
                    return Err(Error::Numerical(format!("objective at iteration {i}")));
                }
                if let Some(prev) = plateau_anchor {
                    if (f - prev).abs() <= rule.rel_tol * f.abs().max(f64::MIN_POSITIVE) {
                        plateau_reached = true;
                        break;
                    }
                }
                plateau_anchor = Some(f);
            }
        }
    }
    if trace.records.last().is_none_or(|r| r.iteration != done) {
        record(solver, done, &mut bookkeeping, &mut trace)?;
    }
    Ok(RunOutput {
        solution: solver.solution(),
        iterate: solver.iterate().to_vec(),
        trace,
        iterations: done,
        plateau_reached,
    })
}
