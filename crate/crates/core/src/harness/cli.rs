//! Command-line front end. Every subcommand reads a flat `key = value`
//! config (`--config`), accepts `--set key=value` overrides and `--seed`,
//! and writes CSV outputs plus a run manifest into the output directory
//! (`--out`, else `$COSPARSE_OUT_DIR`, else `./results`).
//!
//! Exit codes: 0 success, 1 runtime failure, 2 bad arguments or config.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::certify::{self, CertificateReport, DripEstimate, IterationInputs};
use crate::error::{Error, Result};
use crate::flatbin;
use crate::frames::{random_tight_frame, TightFrame};
use crate::linops::DenseMatrix;
use crate::rng::{self, tag};
use crate::solvers::{self, ContinuationConfig, CsvOptions, SolverConfig};

use super::certification::{certify_all, CertifySpec};
use super::config::ConfigMap;
use super::experiments::{compare_solvers, grid_dimensions, make_problem, phase_diagram, ExperimentConfig};
use super::manifest::RunManifest;
use super::phantom::{phantom_experiment, phantom_problem, PhantomSolver, PhantomSpec};
use super::OUT_DIR_ENV;

const DEFAULT_OUT_DIR: &str = "results";

#[derive(Debug, Parser)]
#[command(name = "cosparse", version, about = "Analysis-LASSO recovery experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one config key (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Master seed (overrides `master_seed`).
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Record wall-clock seconds in trace CSVs (off keeps reruns byte-identical).
    #[arg(long)]
    timing: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Monte Carlo sweep of relative error over (alpha, beta).
    PhaseDiagram {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Run SFISTA and DFISTA over a parameter grid on one instance.
    Compare {
        #[command(flatten)]
        common: Common,
    },
    /// Shepp-Logan-type reconstruction from radial Fourier samples.
    Phantom {
        #[command(flatten)]
        common: Common,
    },
    /// Check the recovery bound on small tight-frame instances.
    Certify {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Estimate the D-RIP constant of a matrix.
    Drip {
        #[command(flatten)]
        common: Common,
    },
    /// Worst-case iteration counts for both relaxations.
    EstimateIters {
        #[command(flatten)]
        common: Common,
    },
}

/// Resolved inputs shared by every subcommand.
struct Context {
    config: ConfigMap,
    seed: u64,
    out_dir: PathBuf,
    csv: CsvOptions,
}

impl Context {
    fn new(common: &Common, trials: Option<usize>) -> Result<Self> {
        let mut config = match &common.config {
            Some(p) => ConfigMap::load(p)?,
            None => ConfigMap::new(),
        };
        for s in &common.set {
            config.apply_override(s)?;
        }
        if let Some(t) = trials {
            config.set("trials", t.to_string());
        }
        if let Some(seed) = common.seed {
            config.set("master_seed", seed.to_string());
        }
        let seed = config.get_or("master_seed", 0u64)?;
        let out_dir = common
            .out
            .clone()
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
        Ok(Self {
            config,
            seed,
            out_dir,
            csv: CsvOptions {
                timing: common.timing,
                stage_column: false,
            },
        })
    }

    fn output(&self, key_default: &str) -> Result<PathBuf> {
        std::fs::create_dir_all(&self.out_dir)?;
        let name: String = self.config.get_or("output_path", key_default.to_string())?;
        Ok(self.out_dir.join(name))
    }

    fn finish(&self, command: &str, outputs: Vec<PathBuf>) -> Result<()> {
        let Some(primary) = outputs.first().cloned() else { return Ok(()) };
        let manifest = RunManifest {
            command: command.into(),
            master_seed: self.seed,
            config: self.config.clone(),
            outputs,
        };
        let path = manifest.write_next_to(&primary)?;
        log::info!("manifest written to {}", path.display());
        Ok(())
    }
}

/// Parse `argv` (including the program name) and run. Returns the exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config { .. } | Error::Parse(_) | Error::InvalidParameter { .. } => 2,
        _ => 1,
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::PhaseDiagram { common, trials } => cmd_phase_diagram(&Context::new(&common, trials)?),
        Command::Compare { common } => cmd_compare(&Context::new(&common, None)?),
        Command::Phantom { common } => cmd_phantom(&Context::new(&common, None)?),
        Command::Certify { common, trials } => cmd_certify(&Context::new(&common, trials)?),
        Command::Drip { common } => cmd_drip(&Context::new(&common, None)?),
        Command::EstimateIters { common } => cmd_estimate_iters(&Context::new(&common, None)?),
    }
}

fn cmd_phase_diagram(ctx: &Context) -> Result<()> {
    let cfg = ExperimentConfig::from_map(&ctx.config)?;
    let path = ctx.output(&format!("phase_diagram_{}.csv", cfg.solver.name()))?;
    let grid = phase_diagram(&cfg)?;
    std::fs::write(&path, grid.to_csv_string())?;
    for c in &grid.cells {
        println!(
            "alpha={:<5} beta={:<5} m={:<4} l={:<4} mean_err={:.4e} std_err={:.4e}",
            c.alpha, c.beta, c.m, c.l, c.mean_err, c.std_err
        );
    }
    ctx.finish("phase-diagram", vec![path])
}

/// Random Gaussian instance (`problem = random`, default) or the phantom.
fn comparison_problem(ctx: &Context, lambda: f64) -> Result<(solvers::AnalysisProblem, Vec<f64>)> {
    let c = &ctx.config;
    let kind: String = c.get_or("problem", "random".to_string())?;
    match kind.as_str() {
        "random" => {
            let n: usize = c.get_or("n", 120)?;
            let p: usize = c.get_or("p", 144)?;
            let (m, l) = grid_dimensions(n, c.get_or("alpha", 0.75)?, c.get_or("beta", 0.3)?)?;
            let frame = random_tight_frame(n, p, rng::derive_seed(ctx.seed, &[tag::FRAME]))?;
            make_problem(n, m, &frame, l, c.get_or("noise_sigma", 0.0)?, lambda, ctx.seed)
        }
        "phantom" => phantom_problem(&phantom_spec(c)?, lambda, ctx.seed),
        other => Err(Error::config("problem", format!("unknown problem `{other}` (expected random or phantom)"))),
    }
}

fn cmd_compare(ctx: &Context) -> Result<()> {
    let c = &ctx.config;
    let lambda = c.require_positive("lambda")?;
    let iters: usize = c.get_or("iters", 500)?;
    if iters == 0 {
        return Err(Error::config("iters", "must be at least 1"));
    }
    let mu_grid: Vec<f64> = c.get_list("mu_grid")?.unwrap_or_else(|| vec![10.0, 1.0, 0.1]);
    let rho_grid: Vec<f64> = c
        .get_list("rho_grid")?
        .unwrap_or_else(|| mu_grid.iter().map(|m| 1.0 / m).collect());
    for (key, g) in [("mu_grid", &mu_grid), ("rho_grid", &rho_grid)] {
        if g.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::config(key, "values must be positive"));
        }
    }
    let checkpoints: Vec<usize> = c.get_list("checkpoints")?.unwrap_or_else(|| vec![100, iters]);
    let (problem, truth) = comparison_problem(ctx, lambda)?;
    let configs: Vec<SolverConfig> = mu_grid
        .iter()
        .map(|&mu| SolverConfig::smoothing(mu, iters).with_seed(ctx.seed))
        .chain(rho_grid.iter().map(|&rho| SolverConfig::decomposition(rho, iters).with_seed(ctx.seed)))
        .collect();
    let cmp = compare_solvers(&problem, &configs, Some(&truth))?;
    let summary = ctx.output("compare_summary.csv")?;
    std::fs::write(&summary, cmp.summary_csv(&checkpoints))?;
    let mut outputs = vec![summary];
    for run in &cmp.runs {
        let path = ctx.out_dir.join(format!("compare_{}.csv", run.label));
        std::fs::write(&path, run.trace.to_csv_string(ctx.csv))?;
        let last = run.trace.last();
        println!(
            "{:<22} objective={:.7} H={:.7} rel_err={:.4e}",
            run.label,
            last.objective,
            last.true_objective,
            last.rel_error.unwrap_or(f64::NAN)
        );
        outputs.push(path);
    }
    ctx.finish("compare", outputs)
}

fn phantom_spec(c: &ConfigMap) -> Result<PhantomSpec> {
    let d = PhantomSpec::desk_scale();
    Ok(PhantomSpec {
        side: c.get_or("side", d.side)?,
        num_radial_lines: c.get_or("lines", d.num_radial_lines)?,
        noise_sigma: c.get_or("noise_sigma", d.noise_sigma)?,
    })
}

/// Solver for the phantom: `solver = continuation` (default), `sfista` or
/// `dfista`. Continuation defaults run μ from 10⁻¹/λ to 10⁻⁴/λ with γ = 10.
pub fn phantom_solver(c: &ConfigMap, lambda: f64, seed: u64) -> Result<PhantomSolver> {
    let solver: String = c.get_or("solver", "continuation".to_string())?;
    let iters: usize = c.get_or("iters", 3000)?;
    if iters == 0 {
        return Err(Error::config("iters", "must be at least 1"));
    }
    let mu_final: f64 = c.get_or("mu_final", 1e-4 / lambda)?;
    Ok(match solver.as_str() {
        "continuation" => {
            let mut cc = ContinuationConfig::new(
                c.get_or("mu0", 1e-1 / lambda)?,
                mu_final,
                c.get_or("gamma", 10.0)?,
                c.get_or("inner_iters", 750)?,
            );
            cc.stage_tol = c.get_or("stage_tol", 1e-8)?;
            cc.seed = seed;
            cc.schedule().map_err(|e| Error::config("mu0", e.to_string()))?;
            PhantomSolver::Continuation(cc)
        }
        "sfista" => {
            let mu: f64 = c.get_or("mu", mu_final)?;
            PhantomSolver::Single(SolverConfig::smoothing(mu, iters).with_seed(seed))
        }
        "dfista" => {
            let rho: f64 = c.get_or("rho", 1.0 / mu_final)?;
            PhantomSolver::Single(SolverConfig::decomposition(rho, iters).with_seed(seed))
        }
        other => {
            return Err(Error::config(
                "solver",
                format!("unknown solver `{other}` (expected continuation, sfista or dfista)"),
            ))
        }
    })
}

fn cmd_phantom(ctx: &Context) -> Result<()> {
    let c = &ctx.config;
    let lambda = c.require_positive("lambda")?;
    let spec = phantom_spec(c)?;
    let solver = phantom_solver(c, lambda, ctx.seed)?;
    let res = phantom_experiment(&spec, lambda, &solver, ctx.seed)?;
    let trace_path = ctx.output("phantom_trace.csv")?;
    let opts = CsvOptions {
        stage_column: true,
        ..ctx.csv
    };
    std::fs::write(&trace_path, res.trace.to_csv_string(opts))?;
    let image_path = ctx.out_dir.join("phantom_image.bin");
    let truth_path = ctx.out_dir.join("phantom_truth.bin");
    flatbin::write_array(std::fs::File::create(&image_path)?, &[spec.side, spec.side], &res.image)?;
    flatbin::write_array(std::fs::File::create(&truth_path)?, &[spec.side, spec.side], &res.truth)?;
    println!(
        "iterations={} stages={} rel_err={:.4e} H={:.7}",
        res.trace.iterations(),
        res.trace.num_stages(),
        res.rel_error,
        res.trace.last().true_objective
    );
    ctx.finish("phantom", vec![trace_path, image_path, truth_path])
}

fn cmd_certify(ctx: &Context) -> Result<()> {
    let spec = CertifySpec::from_map(&ctx.config)?;
    let spec = CertifySpec {
        master_seed: ctx.seed,
        ..spec
    };
    let trials = certify_all(&spec)?;
    let path = ctx.output("certify.csv")?;
    let mut csv = format!("trial,{},bound_holds\n", CertificateReport::CSV_HEADER);
    let mut held = 0;
    for (i, t) in trials.iter().enumerate() {
        csv.push_str(&format!("{i},{},{}\n", t.report.csv_row(), t.report.bound_holds()));
        held += t.report.bound_holds() as usize;
    }
    std::fs::write(&path, csv)?;
    if let Some(first) = trials.first() {
        print!("{}", first.report.to_text());
    }
    println!("bound held in {held}/{} trials", trials.len());
    ctx.finish("certify", vec![path])
}

fn load_or_random_frame(c: &ConfigMap, seed: u64) -> Result<TightFrame> {
    match c.raw("frame_file") {
        Some(f) => flatbin::load_frame(Path::new(f)),
        None => random_tight_frame(c.get_or("n", 12)?, c.get_or("p", 16)?, rng::derive_seed(seed, &[tag::FRAME])),
    }
}

fn cmd_drip(ctx: &Context) -> Result<()> {
    let c = &ctx.config;
    let frame = load_or_random_frame(c, ctx.seed)?;
    let s: usize = c.get_or("s", 2)?;
    if s == 0 || s > frame.p() {
        return Err(Error::config("s", format!("need 1 <= s <= p={}", frame.p())));
    }
    let a = match (c.raw("a_file"), c.get_or("design", false)?) {
        (Some(f), _) => flatbin::read_matrix(std::fs::File::open(f)?)?,
        (None, true) => {
            certify::design_drip_matrix(&frame, c.get_or("m", 10)?, s, ctx.seed, &certify::DesignOptions::default())?.a
        }
        (None, false) => {
            let m: usize = c.get_or("m", 10)?;
            DenseMatrix::gaussian(m, frame.n(), rng::derive_seed(ctx.seed, &[tag::MEASUREMENT]))
                .scaled(1.0 / (m as f64).sqrt())
        }
    };
    let method: String = c.get_or("method", "exhaustive".to_string())?;
    let est: DripEstimate = match method.as_str() {
        "exhaustive" => certify::drip_exhaustive(&a, &frame, s)?,
        "randomized" => certify::drip_randomized_lb(&a, &frame, s, c.get_or("trials", 10_000)?, ctx.seed)?,
        other => {
            return Err(Error::config(
                "method",
                format!("unknown method `{other}` (expected exhaustive or randomized)"),
            ))
        }
    };
    let path = ctx.output("drip.csv")?;
    let csv = format!(
        "s,sigma_s,method,supports_checked,lambda_min,lambda_max,below_threshold\n{},{:e},{},{},{:e},{:e},{}\n",
        est.s,
        est.sigma_s,
        est.method.as_str(),
        est.supports_checked,
        est.lambda_min,
        est.lambda_max,
        est.sigma_s < certify::STATED_DRIP_THRESHOLD
    );
    std::fs::write(&path, csv)?;
    println!(
        "sigma_{}={:.6} ({}, {} supports) threshold {} (exact {:.6})",
        est.s,
        est.sigma_s,
        est.method.as_str(),
        est.supports_checked,
        certify::STATED_DRIP_THRESHOLD,
        certify::drip_threshold()
    );
    ctx.finish("drip", vec![path])
}

/// Inputs left unset are measured on a random instance built from
/// `n, p, alpha, beta` (starting point `x₀ = 0`, so `H(x₀) = ½‖b‖²` and the
/// distance to the minimizer is approximated by `‖x_true‖`).
fn cmd_estimate_iters(ctx: &Context) -> Result<()> {
    let c = &ctx.config;
    let lambda = c.require_positive("lambda")?;
    let eps: f64 = c.get_or("eps", 1e-3)?;
    let (problem, truth) = comparison_problem(ctx, lambda)?;
    let a_norm = problem.measurement_norm(ctx.seed)?;
    let d_norm: f64 = c.get_or("d_norm", problem.frame_norm(ctx.seed))?;
    let dist = crate::vector::norm2(&truth);
    let lambda1: f64 = c.get_or("lambda1", dist)?;
    let inp = IterationInputs {
        l_g: c.get_or("l_g", certify::l1_lipschitz(lambda, problem.p()))?,
        l_grad_f: c.get_or("l_grad_f", a_norm * a_norm)?,
        lambda1,
        lambda2: c.get_or("lambda2", dist * dist * (1.0 + d_norm * d_norm))?,
        eps,
        h_x0: c.get_or("h_x0", problem.alasso_objective(&vec![0.0; problem.n()]))?,
        d_norm,
    };
    let est = certify::iteration_estimates(&inp).map_err(|e| match e {
        Error::InvalidParameter { name, reason } => Error::config(name, reason),
        other => other,
    })?;
    let path = ctx.output("estimate_iters.csv")?;
    let csv = format!(
        "eps,l_g,l_grad_f,lambda1,lambda2,h_x0,d_norm,k_smoothing,mu_star,k_decomposition,rho_star\n{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}\n",
        est.target_eps,
        inp.l_g,
        inp.l_grad_f,
        inp.lambda1,
        inp.lambda2,
        inp.h_x0,
        inp.d_norm,
        est.k_smoothing,
        est.mu_star,
        est.k_decomposition,
        est.rho_star
    );
    std::fs::write(&path, csv)?;
    println!("smoothing:     K={:.3e} at mu*={:.4e}", est.k_smoothing, est.mu_star);
    println!("decomposition: K={:.3e} at rho*={:.4e}", est.k_decomposition, est.rho_star);
    ctx.finish("estimate-iters", vec![path])
}
