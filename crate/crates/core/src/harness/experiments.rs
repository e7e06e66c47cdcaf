//! Random analysis-model instances, Monte Carlo phase diagrams and solver
//! comparisons.

use std::fmt::Write as _;
use std::io::BufRead;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::frames::{cosparse_signal, random_tight_frame, TightFrame};
use crate::linops::{DenseMatrix, LinearOperator};
use crate::rng::{self, tag};
use crate::solvers::{self, AnalysisProblem, IterateTrace, Relaxation, SolverConfig};
use crate::vector;

use super::config::ConfigMap;

/// `m = round(αn)`, `l = n − round(βm)`.
pub fn grid_dimensions(n: usize, alpha: f64, beta: f64) -> Result<(usize, usize)> {
    for (name, v) in [("alpha", alpha), ("beta", beta)] {
        if !(v > 0.0 && v <= 1.0) {
            return Err(Error::invalid(name, format!("must lie in (0, 1], got {v}")));
        }
    }
    let m = ((alpha * n as f64).round() as usize).max(1);
    let k = (beta * m as f64).round() as usize;
    Ok((m, n.saturating_sub(k)))
}

/// Gaussian `A` (m×n, unnormalized), a unit-norm signal with `l` zeros in
/// `D*x`, and `b = Ax + w` with `w ~ N(0, σ²I)`.
pub fn make_problem(n: usize, m: usize, frame: &TightFrame, l: usize, noise_sigma: f64, lambda: f64, seed: u64) -> Result<(AnalysisProblem, Vec<f64>)> {
    if frame.n() != n {
        return Err(Error::DimensionMismatch {
            context: "frame signal dimension",
            expected: n,
            actual: frame.n(),
        });
    }
    if m == 0 {
        return Err(Error::invalid("m", "must be positive"));
    }
    if !(noise_sigma >= 0.0) {
        return Err(Error::invalid("noise_sigma", "must be nonnegative"));
    }
    let a = DenseMatrix::gaussian(m, n, seed);
    let signal = cosparse_signal(frame, l, seed)?;
    let mut b = a.apply(&signal.x);
    if noise_sigma > 0.0 {
        let mut r = rng::stream(seed, &[tag::NOISE]);
        let w = rng::gaussian_vec(&mut r, m);
        vector::axpy(noise_sigma, &w, &mut b);
    }
    let problem = AnalysisProblem::new(a.into_shared(), b, frame.clone(), lambda)?;
    Ok((problem, signal.x))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    Sfista,
    Dfista,
}

impl SolverKind {
    pub fn name(&self) -> &'static str {
        match self {
            SolverKind::Sfista => "sfista",
            SolverKind::Dfista => "dfista",
        }
    }
}

impl std::str::FromStr for SolverKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "sfista" | "smoothing" => Ok(SolverKind::Sfista),
            "dfista" | "decomposition" => Ok(SolverKind::Dfista),
            other => Err(format!("unknown solver `{other}` (expected sfista or dfista)")),
        }
    }
}

/// Settings for a Monte Carlo sweep over `(α, β)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub n: usize,
    pub p: usize,
    pub alpha_grid: Vec<f64>,
    pub beta_grid: Vec<f64>,
    pub lambda: f64,
    pub solver: SolverKind,
    pub mu: f64,
    pub rho: f64,
    pub iters: usize,
    pub trials: usize,
    pub noise_sigma: f64,
    pub master_seed: u64,
    pub output_path: Option<String>,
}

pub const DEFAULT_TRIALS: usize = 10;

impl ExperimentConfig {
    /// The desk-scale sweep: n=120, p=144, λ=0.004, μ=10⁻³/λ, ρ=10³λ,
    /// 3000 iterations.
    pub fn desk_scale(alpha_grid: Vec<f64>, beta_grid: Vec<f64>) -> Self {
        let lambda = 0.004;
        Self {
            n: 120,
            p: 144,
            alpha_grid,
            beta_grid,
            lambda,
            solver: SolverKind::Sfista,
            mu: 1e-3 / lambda,
            rho: 1e3 * lambda,
            iters: 3000,
            trials: DEFAULT_TRIALS,
            noise_sigma: 0.0,
            master_seed: 0,
            output_path: None,
        }
    }

    pub fn from_map(c: &ConfigMap) -> Result<Self> {
        let n: usize = c.require("n")?;
        let p: usize = c.require("p")?;
        if p < n {
            return Err(Error::config("p", format!("must be at least n={n}")));
        }
        let alpha_grid: Vec<f64> = c.require_list("alpha_grid")?;
        let beta_grid: Vec<f64> = c.require_list("beta_grid")?;
        for (key, grid) in [("alpha_grid", &alpha_grid), ("beta_grid", &beta_grid)] {
            if let Some(bad) = grid.iter().find(|v| !(**v > 0.0 && **v <= 1.0)) {
                return Err(Error::config(key, format!("value {bad} outside (0, 1]")));
            }
        }
        let lambda = c.require_positive("lambda")?;
        let solver: SolverKind = c.get_or("solver", SolverKind::Sfista)?;
        let (mu, rho) = match solver {
            SolverKind::Sfista => (c.require_positive("mu")?, c.get_or("rho", 1.0)?),
            SolverKind::Dfista => (c.get_or("mu", 1.0)?, c.require_positive("rho")?),
        };
        let iters: usize = c.require("iters")?;
        if iters == 0 {
            return Err(Error::config("iters", "must be at least 1"));
        }
        let trials: usize = c.get_or("trials", DEFAULT_TRIALS)?;
        if trials == 0 {
            return Err(Error::config("trials", "must be at least 1"));
        }
        let noise_sigma: f64 = c.get_or("noise_sigma", 0.0)?;
        if !(noise_sigma >= 0.0) {
            return Err(Error::config("noise_sigma", "must be nonnegative"));
        }
        Ok(Self {
            n,
            p,
            alpha_grid,
            beta_grid,
            lambda,
            solver,
            mu,
            rho,
            iters,
            trials,
            noise_sigma,
            master_seed: c.get_or("master_seed", 0)?,
            output_path: c.get("output_path")?,
        })
    }

    pub fn to_map(&self) -> ConfigMap {
        let list = |g: &[f64]| g.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", ");
        let mut c = ConfigMap::new();
        c.set("kind", "phase-diagram");
        c.set("n", self.n.to_string());
        c.set("p", self.p.to_string());
        c.set("alpha_grid", list(&self.alpha_grid));
        c.set("beta_grid", list(&self.beta_grid));
        c.set("lambda", self.lambda.to_string());
        c.set("solver", self.solver.name());
        c.set("mu", self.mu.to_string());
        c.set("rho", self.rho.to_string());
        c.set("iters", self.iters.to_string());
        c.set("trials", self.trials.to_string());
        c.set("noise_sigma", self.noise_sigma.to_string());
        c.set("master_seed", self.master_seed.to_string());
        if let Some(o) = &self.output_path {
            c.set("output_path", o.clone());
        }
        c
    }

    pub fn solver_config(&self) -> SolverConfig {
        match self.solver {
            SolverKind::Sfista => SolverConfig::smoothing(self.mu, self.iters),
            SolverKind::Dfista => SolverConfig::decomposition(self.rho, self.iters),
        }
    }

    /// Seed of trial `trial` in cell `(ia, ib)`; independent of the solver
    /// so different solvers see the same instances.
    pub fn trial_seed(&self, ia: usize, ib: usize, trial: usize) -> u64 {
        rng::derive_seed(self.master_seed, &[ia as u64, ib as u64, trial as u64])
    }

    /// Build the instance for one trial.
    pub fn trial_problem(&self, ia: usize, ib: usize, trial: usize) -> Result<(AnalysisProblem, Vec<f64>)> {
        let seed = self.trial_seed(ia, ib, trial);
        let (m, l) = grid_dimensions(self.n, self.alpha_grid[ia], self.beta_grid[ib])?;
        let frame = random_tight_frame(self.n, self.p, rng::derive_seed(seed, &[tag::FRAME]))?;
        make_problem(self.n, m, &frame, l, self.noise_sigma, self.lambda, seed)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridCell {
    pub alpha: f64,
    pub beta: f64,
    pub m: usize,
    pub l: usize,
    pub mean_err: f64,
    /// Sample standard deviation (0 for a single trial).
    pub std_err: f64,
    /// Successful trials.
    pub trials: usize,
    pub failures: usize,
    /// Per-trial relative errors in trial order; failed trials are NaN.
    pub errors: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GridResult {
    pub cells: Vec<GridCell>,
}

pub const GRID_HEADER: &str = "alpha,beta,mean_err,std_err,trials";

impl GridResult {
    pub fn cell(&self, alpha: f64, beta: f64) -> Option<&GridCell> {
        self.cells.iter().find(|c| c.alpha == alpha && c.beta == beta)
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from(GRID_HEADER);
        out.push('\n');
        for c in &self.cells {
            let _ = writeln!(out, "{},{},{:e},{:e},{}", c.alpha, c.beta, c.mean_err, c.std_err, c.trials);
        }
        out
    }
}

/// `(alpha, beta, mean_err, std_err, trials)` rows of a grid CSV.
pub fn read_grid_csv<R: BufRead>(r: R) -> Result<Vec<(f64, f64, f64, f64, usize)>> {
    let mut lines = r.lines();
    let header = lines.next().transpose()?.unwrap_or_default();
    if header.trim() != GRID_HEADER {
        return Err(Error::Parse(format!("unexpected grid header `{header}`")));
    }
    let mut rows = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 5 {
            return Err(Error::Parse(format!("grid row has {} fields: `{line}`", f.len())));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|e| Error::Parse(format!("`{s}`: {e}")));
        rows.push((
            num(f[0])?,
            num(f[1])?,
            num(f[2])?,
            num(f[3])?,
            f[4].parse().map_err(|e| Error::Parse(format!("`{}`: {e}", f[4])))?,
        ));
    }
    Ok(rows)
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Relative error of one trial of the sweep.
pub fn run_trial(cfg: &ExperimentConfig, ia: usize, ib: usize, trial: usize) -> Result<f64> {
    let (problem, x_true) = cfg.trial_problem(ia, ib, trial)?;
    let seed = cfg.trial_seed(ia, ib, trial);
    let trace = solvers::solve(&problem, &cfg.solver_config().with_seed(seed), None)?;
    Ok(vector::relative_error(trace.x(), &x_true))
}

/// Monte Carlo sweep over the `(α, β)` grid. Cells and trials run in
/// parallel; aggregation is keyed by `(cell, trial)` so results do not
/// depend on scheduling. Failed trials are logged and counted.
pub fn phase_diagram(cfg: &ExperimentConfig) -> Result<GridResult> {
    if cfg.alpha_grid.is_empty() || cfg.beta_grid.is_empty() {
        return Err(Error::invalid("grid", "alpha and beta grids must be nonempty"));
    }
    if cfg.trials == 0 {
        return Err(Error::invalid("trials", "must be at least 1"));
    }
    let (na, nb) = (cfg.alpha_grid.len(), cfg.beta_grid.len());
    for &a in &cfg.alpha_grid {
        for &b in &cfg.beta_grid {
            grid_dimensions(cfg.n, a, b)?;
        }
    }
    let jobs: Vec<(usize, usize, usize)> = (0..na)
        .flat_map(|ia| (0..nb).flat_map(move |ib| (0..cfg.trials).map(move |t| (ia, ib, t))))
        .collect();
    let outcomes: Vec<f64> = jobs
        .par_iter()
        .map(|&(ia, ib, t)| match run_trial(cfg, ia, ib, t) {
            Ok(e) => e,
            Err(e) => {
                log::warn!(
                    "trial {t} at alpha={} beta={} failed: {e}",
                    cfg.alpha_grid[ia],
                    cfg.beta_grid[ib]
                );
                f64::NAN
            }
        })
        .collect();
    let mut cells = Vec::with_capacity(na * nb);
    for ia in 0..na {
        for ib in 0..nb {
            let start = (ia * nb + ib) * cfg.trials;
            let errors = outcomes[start..start + cfg.trials].to_vec();
            let ok: Vec<f64> = errors.iter().cloned().filter(|e| !e.is_nan()).collect();
            let (mean_err, std_err) = mean_std(&ok);
            let (m, l) = grid_dimensions(cfg.n, cfg.alpha_grid[ia], cfg.beta_grid[ib])?;
            cells.push(GridCell {
                alpha: cfg.alpha_grid[ia],
                beta: cfg.beta_grid[ib],
                m,
                l,
                mean_err,
                std_err,
                trials: ok.len(),
                failures: errors.len() - ok.len(),
                errors,
            });
        }
    }
    Ok(GridResult { cells })
}

/// One solver run of a comparison.
#[derive(Debug, Clone)]
pub struct ComparedRun {
    pub label: String,
    pub relaxation: Relaxation,
    pub trace: IterateTrace,
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub runs: Vec<ComparedRun>,
}

pub fn run_label(relaxation: Relaxation) -> String {
    match relaxation {
        Relaxation::Smoothing { mu } => format!("sfista_mu{mu:e}"),
        Relaxation::Decomposition { rho } => format!("dfista_rho{rho:e}"),
    }
}

pub const SUMMARY_HEADER: &str = "solver,parameter,iter,objective,true_objective,rel_error";

impl Comparison {
    /// Objective and error of each run at the given iterations (clamped to
    /// the last recorded iteration).
    pub fn summary_csv(&self, checkpoints: &[usize]) -> String {
        let mut out = String::from(SUMMARY_HEADER);
        out.push('\n');
        for run in &self.runs {
            let (name, param) = match run.relaxation {
                Relaxation::Smoothing { mu } => ("sfista", mu),
                Relaxation::Decomposition { rho } => ("dfista", rho),
            };
            for &k in checkpoints {
                let row = run.trace.row_at(k).unwrap_or_else(|| run.trace.last());
                let err = row.rel_error.map(|e| format!("{e:e}")).unwrap_or_default();
                let _ = writeln!(
                    out,
                    "{name},{param:e},{},{:e},{:e},{err}",
                    row.iter, row.objective, row.true_objective
                );
            }
        }
        out
    }
}

/// Run every configuration on the same problem (in parallel).
pub fn compare_solvers(problem: &AnalysisProblem, configs: &[SolverConfig], truth: Option<&[f64]>) -> Result<Comparison> {
    let runs = configs
        .par_iter()
        .map(|cfg| {
            let trace = solvers::solve(problem, cfg, truth)?;
            Ok(ComparedRun {
                label: run_label(cfg.relaxation),
                relaxation: cfg.relaxation,
                trace,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Comparison { runs })
}
