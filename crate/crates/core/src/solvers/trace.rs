//! Per-iteration solver history and its CSV form.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// One row of an [`IterateTrace`].
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    /// Objective the solver minimizes (`H_μ` or `G_ρ`).
    pub objective: f64,
    /// Unrelaxed analysis-LASSO objective `H(x_k)`.
    pub true_objective: f64,
    /// `‖x_k − x_true‖ / ‖x_true‖` when the truth is known.
    pub rel_error: Option<f64>,
    /// Momentum weight after this iteration (`t_{k+1}`; row 0 holds `t_1 = 1`).
    pub t_k: f64,
    pub seconds: f64,
    pub stage: usize,
    /// `‖z_k − D*x_k‖` for split iterates.
    pub feasibility: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterateTrace {
    pub rows: Vec<TraceRow>,
    /// Final iterate (for split solvers this is `[x; z]`).
    pub solution: Vec<f64>,
    /// Length of the signal part of `solution`.
    pub signal_len: usize,
    /// Step-size constant the run used, one per stage.
    pub lipschitz: Vec<f64>,
    /// Relaxation parameter (μ or ρ) of each stage.
    pub stage_params: Vec<f64>,
    pub stopped_early: bool,
}

impl IterateTrace {
    pub fn x(&self) -> &[f64] {
        &self.solution[..self.signal_len]
    }

    /// Auxiliary split variable, if the run had one.
    pub fn z(&self) -> Option<&[f64]> {
        (self.solution.len() > self.signal_len).then(|| &self.solution[self.signal_len..])
    }

    pub fn last(&self) -> &TraceRow {
        self.rows.last().expect("trace always holds the initial row")
    }

    /// Number of iterations performed (rows minus the initial one).
    pub fn iterations(&self) -> usize {
        self.rows.last().map(|r| r.iter).unwrap_or(0)
    }

    pub fn row_at(&self, iter: usize) -> Option<&TraceRow> {
        self.rows.iter().find(|r| r.iter == iter)
    }

    pub fn objectives(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.objective).collect()
    }

    pub fn is_monotone(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].objective <= w[0].objective)
    }

    pub fn num_stages(&self) -> usize {
        self.stage_params.len().max(1)
    }

    /// First iteration whose relative error is at most `target`.
    pub fn first_iter_reaching(&self, target: f64) -> Option<usize> {
        self.rows
            .iter()
            .find(|r| r.rel_error.is_some_and(|e| e <= target))
            .map(|r| r.iter)
    }

    pub fn to_csv_string(&self, opts: CsvOptions) -> String {
        let mut s = String::new();
        s.push_str("iter,objective,true_objective,rel_error,t_k,seconds");
        if opts.stage_column {
            s.push_str(",stage");
        }
        s.push('\n');
        for r in &self.rows {
            let err = r.rel_error.map(|e| format!("{e:e}")).unwrap_or_default();
            let secs = if opts.timing { r.seconds } else { 0.0 };
            write!(
                s,
                "{},{:e},{:e},{},{:e},{:e}",
                r.iter, r.objective, r.true_objective, err, r.t_k, secs
            )
            .unwrap();
            if opts.stage_column {
                write!(s, ",{}", r.stage).unwrap();
            }
            s.push('\n');
        }
        s
    }

    pub fn write_csv<W: Write>(&self, mut w: W, opts: CsvOptions) -> Result<()> {
        w.write_all(self.to_csv_string(opts).as_bytes())?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CsvOptions {
    /// Write wall-clock seconds; when false the column is written as zero so
    /// that reruns produce byte-identical files.
    pub timing: bool,
    pub stage_column: bool,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self {
            timing: true,
            stage_column: false,
        }
    }
}

/// Parse rows written by [`IterateTrace::write_csv`].
pub fn read_trace_csv<R: BufRead>(r: R) -> Result<Vec<TraceRow>> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty trace csv".into()))??;
    let cols: Vec<&str> = header.split(',').collect();
    let has_stage = cols.last() == Some(&"stage");
    let mut rows = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        let bad = |what: &str| Error::Parse(format!("trace csv line {}: bad {what}", lineno + 2));
        let num = |i: usize, what: &str| f.get(i).and_then(|v| v.parse::<f64>().ok()).ok_or_else(|| bad(what));
        rows.push(TraceRow {
            iter: f.first().and_then(|v| v.parse().ok()).ok_or_else(|| bad("iter"))?,
            objective: num(1, "objective")?,
            true_objective: num(2, "true_objective")?,
            rel_error: match f.get(3) {
                Some(v) if !v.is_empty() => Some(v.parse().map_err(|_| bad("rel_error"))?),
                _ => None,
            },
            t_k: num(4, "t_k")?,
            seconds: num(5, "seconds")?,
            stage: if has_stage {
                f.get(6).and_then(|v| v.parse().ok()).ok_or_else(|| bad("stage"))?
            } else {
                0
            },
            feasibility: None,
        });
    }
    Ok(rows)
}
