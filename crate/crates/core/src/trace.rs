//! Convergence traces and their CSV form.
//!
//! ```text
//! # setup_seconds=1.2500000000000000e-3
//! iter,seconds,objective,dist_ref,zeros_exact,zeros_tol
//! 0,1.2500000000000000e-3,3.4657359027997265e1,,0.0000000000000000e0,0.0000000000000000e0
//! ```
//!
//! Floats are written with 17 significant digits so that reading a file back
//! reproduces the in-memory trace exactly. `dist_ref` is empty when no
//! reference solution was given.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "iter,seconds,objective,dist_ref,zeros_exact,zeros_tol";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub iteration: usize,
    /// Wall-clock seconds since the solver was set up, setup included.
    pub seconds: f64,
    pub objective: f64,
    /// `||w - w_ref||_2`.
    pub dist_ref: Option<f64>,
    /// Fraction of exact zeros in the reported solution.
    pub zeros_exact: f64,
    /// Fraction of iterate entries with magnitude at most the zero tolerance.
    pub zeros_tol: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConvergenceTrace {
    /// Time spent before the first iteration (preconditioner factorization).
    pub setup_seconds: f64,
    pub records: Vec<TraceRecord>,
    /// Step size of every iteration, for solvers with a step schedule.
    pub step_sizes: Vec<f64>,
}

fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

impl ConvergenceTrace {
    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# setup_seconds={}", fmt_float(self.setup_seconds))?;
        writeln!(out, "{CSV_HEADER}")?;
        for r in &self.records {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                r.iteration,
                fmt_float(r.seconds),
                fmt_float(r.objective),
                r.dist_ref.map(fmt_float).unwrap_or_default(),
                fmt_float(r.zeros_exact),
                fmt_float(r.zeros_tol),
            )?;
        }
        Ok(())
    }

    /// Reads a trace written by [`write_csv`](Self::write_csv). Step sizes
    /// are not part of the file.
    pub fn read_csv<R: BufRead>(input: R) -> Result<ConvergenceTrace> {
        let mut trace = ConvergenceTrace::default();
        let mut seen_header = false;
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            let lineno = i + 1;
            let err = |message: String| Error::Parse { line: lineno, message };
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(meta) = line.strip_prefix('#') {
                if let Some(v) = meta.trim().strip_prefix("setup_seconds=") {
                    trace.setup_seconds = v.parse().map_err(|e| err(format!("setup_seconds: {e}")))?;
                }
                continue;
            }
            if !seen_header {
                if line != CSV_HEADER {
                    return Err(err(format!("expected header '{CSV_HEADER}'")));
                }
                seen_header = true;
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 6 {
                return Err(err(format!("expected 6 fields, found {}", fields.len())));
            }
            let float =
                |s: &str, name: &str| -> Result<f64> { s.parse::<f64>().map_err(|e| err(format!("{name}: {e}"))) };
            trace.records.push(TraceRecord {
                iteration: fields[0].parse().map_err(|e| err(format!("iter: {e}")))?,
                seconds: float(fields[1], "seconds")?,
                objective: float(fields[2], "objective")?,
                dist_ref: if fields[3].is_empty() { None } else { Some(float(fields[3], "dist_ref")?) },
                zeros_exact: float(fields[4], "zeros_exact")?,
                zeros_tol: float(fields[5], "zeros_tol")?,
            });
        }
        Ok(trace)
    }
}
