//! Smoothing- and decomposition-based MFISTA for the analysis LASSO
//! `H(x) = ½‖Ax − b‖² + λ‖D*x‖₁`.

use crate::error::{check_dim, Error, Result};
use crate::frames::TightFrame;
use crate::linops::{self, SharedOperator};
use crate::prox::{self, CouplingParams, EnvelopeParams};
use crate::vector;

use super::engine::{mfista, CompositeProblem, Monitor, RunOptions};
use super::trace::IterateTrace;

/// Power-iteration steps used for `‖A‖₂` and `‖D‖₂` estimates.
pub const POWER_ITERS: usize = 500;

/// Multiplier applied to power-iteration norm estimates before use in a
/// step size.
pub const NORM_SAFETY: f64 = 1.01;

/// `(A, b, D*, λ)`.
#[derive(Clone)]
pub struct AnalysisProblem {
    a: SharedOperator,
    b: Vec<f64>,
    frame: TightFrame,
    lambda: f64,
}

impl std::fmt::Debug for AnalysisProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AnalysisProblem")
            .field("m", &self.m())
            .field("n", &self.n())
            .field("p", &self.p())
            .field("lambda", &self.lambda)
            .finish()
    }
}

impl AnalysisProblem {
    pub fn new(a: SharedOperator, b: Vec<f64>, frame: TightFrame, lambda: f64) -> Result<Self> {
        check_dim("measurements b vs A rows", a.out_dim(), b.len())?;
        check_dim("A columns vs frame signal dimension", frame.n(), a.in_dim())?;
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::invalid("lambda", format!("must be positive and finite, got {lambda}")));
        }
        Ok(Self { a, b, frame, lambda })
    }

    pub fn a(&self) -> &SharedOperator {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn frame(&self) -> &TightFrame {
        &self.frame
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Self::new(self.a.clone(), self.b.clone(), self.frame.clone(), lambda)
    }

    pub fn m(&self) -> usize {
        self.a.out_dim()
    }

    pub fn n(&self) -> usize {
        self.a.in_dim()
    }

    pub fn p(&self) -> usize {
        self.frame.p()
    }

    fn residual_sq(&self, ax: &[f64]) -> f64 {
        ax.iter().zip(&self.b).map(|(u, v)| (u - v) * (u - v)).sum()
    }

    /// `½‖Ax − b‖² + λ‖D*x‖₁`
    pub fn alasso_objective(&self, x: &[f64]) -> f64 {
        0.5 * self.residual_sq(&self.a.apply(x)) + self.lambda * vector::norm1(&self.frame.analyze(x))
    }

    /// `½‖Ax − b‖² + λ‖z‖₁ + (ρ/2)‖z − D*x‖²`
    pub fn ralasso_objective(&self, x: &[f64], z: &[f64], rho: f64) -> f64 {
        let dx = self.frame.analyze(x);
        0.5 * self.residual_sq(&self.a.apply(x))
            + self.lambda * vector::norm1(z)
            + 0.5 * rho * vector::dist2(z, &dx).powi(2)
    }

    /// `H_μ(x) = ½‖Ax − b‖² + g_μ(D*x)`
    pub fn smoothed_objective(&self, x: &[f64], mu: f64) -> Result<f64> {
        let params = EnvelopeParams::new(self.lambda, mu)?;
        Ok(0.5 * self.residual_sq(&self.a.apply(x)) + prox::envelope_value(&self.frame.analyze(x), &params))
    }

    /// `min_z` of the split objective at fixed `x`, via the soft-threshold
    /// minimizer.
    pub fn ralasso_partial_min(&self, x: &[f64], rho: f64) -> Result<f64> {
        let params = CouplingParams::new(self.lambda, rho)?;
        let dx = self.frame.analyze(x);
        let z = prox::partial_min_z(&dx, &params);
        Ok(self.ralasso_objective(x, &z, rho))
    }

    /// `‖A‖₂` by power iteration.
    pub fn measurement_norm(&self, seed: u64) -> Result<f64> {
        Ok(linops::spectral_norm(self.a.as_ref(), POWER_ITERS, seed)?.sigma)
    }

    /// `‖D‖₂`: exactly 1 for tight frames, otherwise a padded power-iteration
    /// estimate.
    pub fn frame_norm(&self, seed: u64) -> f64 {
        if self.frame.is_tight() {
            1.0
        } else {
            NORM_SAFETY * self.frame.synthesis_norm(POWER_ITERS, seed)
        }
    }

    /// `(1.01‖A‖)² + ‖D‖²/μ`
    pub fn smoothing_lipschitz(&self, mu: f64, seed: u64) -> Result<f64> {
        let na = NORM_SAFETY * self.measurement_norm(seed)?;
        let nd = self.frame_norm(seed);
        Ok(na * na + nd * nd / mu)
    }

    /// `(1.01‖A‖)² + ρ(1 + ‖D‖²)`
    pub fn decomposition_lipschitz(&self, rho: f64, seed: u64) -> Result<f64> {
        let na = NORM_SAFETY * self.measurement_norm(seed)?;
        let nd = self.frame_norm(seed);
        Ok(na * na + rho * (1.0 + nd * nd))
    }
}

/// Which relaxation of the analysis LASSO a run solves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Relaxation {
    /// Moreau-envelope smoothing with parameter μ.
    Smoothing { mu: f64 },
    /// Variable splitting `z ≈ D*x` with penalty ρ.
    Decomposition { rho: f64 },
}

impl Relaxation {
    pub fn parameter(&self) -> f64 {
        match *self {
            Relaxation::Smoothing { mu } => mu,
            Relaxation::Decomposition { rho } => rho,
        }
    }
}

/// Where the smoothing solver evaluates the envelope gradient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EnvelopeGradientAt {
    /// Full gradient of `H_μ` at the momentum point `y_k` (standard MFISTA).
    #[default]
    MomentumPoint,
    /// Envelope part at the previous iterate `x_{k−1}`, data part at `y_k`.
    /// Kept only to compare against that published variant.
    PreviousIterate,
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub relaxation: Relaxation,
    pub max_iters: usize,
    /// Initial signal; zero when absent.
    pub x0: Option<Vec<f64>>,
    /// Initial split variable; `D*x0` when absent.
    pub z0: Option<Vec<f64>>,
    pub objective_tol: f64,
    /// Seed for the power iterations behind the step size.
    pub seed: u64,
    /// Overrides the estimated Lipschitz bound.
    pub lipschitz: Option<f64>,
    pub envelope_gradient_at: EnvelopeGradientAt,
}

impl SolverConfig {
    pub fn smoothing(mu: f64, max_iters: usize) -> Self {
        Self::new(Relaxation::Smoothing { mu }, max_iters)
    }

    pub fn decomposition(rho: f64, max_iters: usize) -> Self {
        Self::new(Relaxation::Decomposition { rho }, max_iters)
    }

    fn new(relaxation: Relaxation, max_iters: usize) -> Self {
        Self {
            relaxation,
            max_iters,
            x0: None,
            z0: None,
            objective_tol: 0.0,
            seed: 0,
            lipschitz: None,
            envelope_gradient_at: EnvelopeGradientAt::MomentumPoint,
        }
    }

    pub fn with_x0(mut self, x0: Vec<f64>) -> Self {
        self.x0 = Some(x0);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters", "must be at least 1"));
        }
        if !(self.objective_tol >= 0.0) {
            return Err(Error::invalid("objective_tol", "must be nonnegative"));
        }
        Ok(())
    }
}

/// Cached `(Ax, D*x)`.
#[derive(Debug, Clone)]
pub struct LinearImages {
    ax: Vec<f64>,
    dx: Vec<f64>,
}

fn combine_images(wa: f64, a: &LinearImages, wb: f64, b: &LinearImages, wc: f64, c: &LinearImages) -> LinearImages {
    LinearImages {
        ax: vector::combine3(wa, &a.ax, wb, &b.ax, wc, &c.ax),
        dx: vector::combine3(wa, &a.dx, wb, &b.dx, wc, &c.dx),
    }
}

/// `H_μ` as a smooth composite problem (`G ≡ 0`).
pub struct SmoothedAnalysis<'a> {
    problem: &'a AnalysisProblem,
    params: EnvelopeParams,
    lipschitz: f64,
    gradient_at: EnvelopeGradientAt,
}

impl<'a> SmoothedAnalysis<'a> {
    pub fn new(problem: &'a AnalysisProblem, mu: f64, lipschitz: f64) -> Result<Self> {
        Ok(Self {
            problem,
            params: EnvelopeParams::new(problem.lambda, mu)?,
            lipschitz,
            gradient_at: EnvelopeGradientAt::MomentumPoint,
        })
    }

    fn residual(&self, ax: &[f64]) -> Vec<f64> {
        vector::sub(ax, &self.problem.b)
    }

    /// `A*(Ay − b) + D ∇g_μ(v)` with `v` the analysis coefficients to
    /// differentiate the envelope at.
    fn gradient_from(&self, ay: &[f64], envelope_at: &[f64], out: &mut [f64]) {
        let data = self.problem.a.apply_adjoint(&self.residual(ay));
        let env = prox::envelope_gradient(envelope_at, &self.params);
        let smooth = self.problem.frame.synthesize(&env);
        for ((o, d), s) in out.iter_mut().zip(data).zip(smooth) {
            *o = d + s;
        }
    }
}

impl CompositeProblem for SmoothedAnalysis<'_> {
    type Products = LinearImages;

    fn dim(&self) -> usize {
        self.problem.n()
    }

    fn lipschitz_bound(&self) -> f64 {
        self.lipschitz
    }

    fn products(&self, x: &[f64]) -> LinearImages {
        LinearImages {
            ax: self.problem.a.apply(x),
            dx: self.problem.frame.analyze(x),
        }
    }

    fn combine_products(&self, wa: f64, a: &LinearImages, wb: f64, b: &LinearImages, wc: f64, c: &LinearImages) -> LinearImages {
        combine_images(wa, a, wb, b, wc, c)
    }

    fn smooth_value(&self, _x: &[f64], p: &LinearImages) -> f64 {
        0.5 * self.problem.residual_sq(&p.ax) + prox::envelope_value(&p.dx, &self.params)
    }

    fn smooth_gradient(&self, _x: &[f64], p: &LinearImages, out: &mut [f64]) {
        self.gradient_from(&p.ax, &p.dx, out);
    }

    fn momentum_gradient(&self, _y: &[f64], py: &LinearImages, previous: (&[f64], &LinearImages), out: &mut [f64]) {
        match self.gradient_at {
            EnvelopeGradientAt::MomentumPoint => self.gradient_from(&py.ax, &py.dx, out),
            EnvelopeGradientAt::PreviousIterate => self.gradient_from(&py.ax, &previous.1.dx, out),
        }
    }

    fn monitor(&self, _x: &[f64], p: &LinearImages) -> Monitor {
        Monitor {
            true_objective: 0.5 * self.problem.residual_sq(&p.ax) + self.problem.lambda * vector::norm1(&p.dx),
            feasibility: None,
        }
    }
}

/// `G_ρ(x, z)` on the stacked iterate `[x; z]`.
pub struct SplitAnalysis<'a> {
    problem: &'a AnalysisProblem,
    params: CouplingParams,
    lipschitz: f64,
}

impl<'a> SplitAnalysis<'a> {
    pub fn new(problem: &'a AnalysisProblem, rho: f64, lipschitz: f64) -> Result<Self> {
        Ok(Self {
            problem,
            params: CouplingParams::new(problem.lambda, rho)?,
            lipschitz,
        })
    }
}

impl CompositeProblem for SplitAnalysis<'_> {
    type Products = LinearImages;

    fn dim(&self) -> usize {
        self.problem.n() + self.problem.p()
    }

    fn lipschitz_bound(&self) -> f64 {
        self.lipschitz
    }

    fn signal_len(&self) -> usize {
        self.problem.n()
    }

    fn products(&self, w: &[f64]) -> LinearImages {
        let x = &w[..self.problem.n()];
        LinearImages {
            ax: self.problem.a.apply(x),
            dx: self.problem.frame.analyze(x),
        }
    }

    fn combine_products(&self, wa: f64, a: &LinearImages, wb: f64, b: &LinearImages, wc: f64, c: &LinearImages) -> LinearImages {
        combine_images(wa, a, wb, b, wc, c)
    }

    fn smooth_value(&self, w: &[f64], p: &LinearImages) -> f64 {
        let z = &w[self.problem.n()..];
        0.5 * self.problem.residual_sq(&p.ax) + 0.5 * self.params.rho() * vector::dist2(z, &p.dx).powi(2)
    }

    fn smooth_gradient(&self, w: &[f64], p: &LinearImages, out: &mut [f64]) {
        let n = self.problem.n();
        let rho = self.params.rho();
        let z = &w[n..];
        // ∇ₓ = A*(Ax − b) + ρ D(D*x − z), ∇_z = ρ(z − D*x)
        let coupling = vector::sub(&p.dx, z);
        let data = self.problem.a.apply_adjoint(&vector::sub(&p.ax, &self.problem.b));
        let pull = self.problem.frame.synthesize(&coupling);
        let (gx, gz) = out.split_at_mut(n);
        for ((o, d), c) in gx.iter_mut().zip(data).zip(pull) {
            *o = d + rho * c;
        }
        for (o, c) in gz.iter_mut().zip(coupling) {
            *o = -rho * c;
        }
    }

    fn nonsmooth_value(&self, w: &[f64]) -> f64 {
        self.params.lambda() * vector::norm1(&w[self.problem.n()..])
    }

    fn prox_nonsmooth(&self, v: &[f64], step: f64, out: &mut [f64]) {
        let n = self.problem.n();
        out[..n].copy_from_slice(&v[..n]);
        let tau = self.params.lambda() * step;
        for (o, &vi) in out[n..].iter_mut().zip(&v[n..]) {
            *o = prox::soft_threshold_scalar(vi, tau);
        }
    }

    fn monitor(&self, w: &[f64], p: &LinearImages) -> Monitor {
        let z = &w[self.problem.n()..];
        Monitor {
            true_objective: 0.5 * self.problem.residual_sq(&p.ax) + self.problem.lambda * vector::norm1(&p.dx),
            feasibility: Some(vector::dist2(z, &p.dx)),
        }
    }
}

fn initial_x(problem: &AnalysisProblem, config: &SolverConfig) -> Result<Vec<f64>> {
    match &config.x0 {
        Some(x0) => {
            check_dim("x0", problem.n(), x0.len())?;
            Ok(x0.clone())
        }
        None => Ok(vec![0.0; problem.n()]),
    }
}

fn run_options<'t>(config: &SolverConfig, truth: Option<&'t [f64]>) -> RunOptions<'t> {
    RunOptions {
        max_iters: config.max_iters,
        objective_tol: config.objective_tol,
        truth,
        stage: 0,
    }
}

/// MFISTA on `H_μ(x) = ½‖Ax − b‖² + g_μ(D*x)`.
pub fn sfista(problem: &AnalysisProblem, config: &SolverConfig, truth: Option<&[f64]>) -> Result<IterateTrace> {
    config.validate()?;
    let Relaxation::Smoothing { mu } = config.relaxation else {
        return Err(Error::invalid("relaxation", "smoothing solver needs a mu"));
    };
    if let Some(t) = truth {
        check_dim("truth", problem.n(), t.len())?;
    }
    let lipschitz = match config.lipschitz {
        Some(l) => l,
        None => problem.smoothing_lipschitz(mu, config.seed)?,
    };
    let mut smoothed = SmoothedAnalysis::new(problem, mu, lipschitz)?;
    smoothed.gradient_at = config.envelope_gradient_at;
    let x0 = initial_x(problem, config)?;
    let mut trace = mfista(&smoothed, &x0, &run_options(config, truth))?;
    trace.stage_params = vec![mu];
    Ok(trace)
}

/// MFISTA on `G_ρ(x, z) = ½‖Ax − b‖² + λ‖z‖₁ + (ρ/2)‖z − D*x‖²`.
pub fn dfista(problem: &AnalysisProblem, config: &SolverConfig, truth: Option<&[f64]>) -> Result<IterateTrace> {
    config.validate()?;
    let Relaxation::Decomposition { rho } = config.relaxation else {
        return Err(Error::invalid("relaxation", "decomposition solver needs a rho"));
    };
    if let Some(t) = truth {
        check_dim("truth", problem.n(), t.len())?;
    }
    let lipschitz = match config.lipschitz {
        Some(l) => l,
        None => problem.decomposition_lipschitz(rho, config.seed)?,
    };
    let split = SplitAnalysis::new(problem, rho, lipschitz)?;
    let x0 = initial_x(problem, config)?;
    let z0 = match &config.z0 {
        Some(z0) => {
            check_dim("z0", problem.p(), z0.len())?;
            z0.clone()
        }
        None => problem.frame.analyze(&x0),
    };
    let mut w0 = x0;
    w0.extend_from_slice(&z0);
    let mut trace = mfista(&split, &w0, &run_options(config, truth))?;
    trace.stage_params = vec![rho];
    Ok(trace)
}

/// Run whichever solver matches `config.relaxation`.
pub fn solve(problem: &AnalysisProblem, config: &SolverConfig, truth: Option<&[f64]>) -> Result<IterateTrace> {
    match config.relaxation {
        Relaxation::Smoothing { .. } => sfista(problem, config, truth),
        Relaxation::Decomposition { .. } => dfista(problem, config, truth),
    }
}

/// Smoothing continuation schedule.
#[derive(Debug, Clone)]
pub struct ContinuationConfig {
    pub mu0: f64,
    pub mu_final: f64,
    pub gamma: f64,
    /// Iteration cap per stage.
    pub inner_iters: usize,
    /// Early-stopping tolerance on the relative objective change within a
    /// stage (see [`RunOptions::objective_tol`]); 0 runs every stage to
    /// `inner_iters`.
    pub stage_tol: f64,
    pub x0: Option<Vec<f64>>,
    pub seed: u64,
}

impl ContinuationConfig {
    pub fn new(mu0: f64, mu_final: f64, gamma: f64, inner_iters: usize) -> Self {
        Self {
            mu0,
            mu_final,
            gamma,
            inner_iters,
            stage_tol: 0.0,
            x0: None,
            seed: 0,
        }
    }
}

impl ContinuationConfig {
    /// Stage parameters `μ₀, μ₀/γ, …`, the last one clamped to `μ_f`.
    pub fn schedule(&self) -> Result<Vec<f64>> {
        if !(self.mu_final > 0.0 && self.mu0 >= self.mu_final) {
            return Err(Error::invalid("mu0", "need mu0 >= mu_final > 0"));
        }
        if !(self.gamma > 1.0) {
            return Err(Error::invalid("gamma", "must exceed 1"));
        }
        if self.inner_iters == 0 {
            return Err(Error::invalid("inner_iters", "must be at least 1"));
        }
        if !(self.stage_tol >= 0.0) {
            return Err(Error::invalid("stage_tol", "must be nonnegative"));
        }
        let mut mus = vec![self.mu0];
        let mut mu = self.mu0;
        while mu > self.mu_final * (1.0 + 1e-9) {
            mu = (mu / self.gamma).max(self.mu_final);
            mus.push(mu);
        }
        Ok(mus)
    }
}

/// SFISTA over a decreasing μ schedule, warm-starting each stage from the
/// previous stage's solution. Rows are numbered by cumulative iteration and
/// tagged with their stage index.
pub fn continuation(problem: &AnalysisProblem, config: &ContinuationConfig, truth: Option<&[f64]>) -> Result<IterateTrace> {
    let schedule = config.schedule()?;
    let mut x = match &config.x0 {
        Some(x0) => {
            check_dim("x0", problem.n(), x0.len())?;
            x0.clone()
        }
        None => vec![0.0; problem.n()],
    };
    let norm_a = NORM_SAFETY * problem.measurement_norm(config.seed)?;
    let norm_d = problem.frame_norm(config.seed);

    let mut rows = Vec::new();
    let mut lipschitz = Vec::new();
    let mut offset = 0usize;
    let mut elapsed = 0.0;
    let mut stopped_early = false;
    for (stage, &mu) in schedule.iter().enumerate() {
        let l = norm_a * norm_a + norm_d * norm_d / mu;
        let smoothed = SmoothedAnalysis::new(problem, mu, l)?;
        let opts = RunOptions {
            max_iters: config.inner_iters,
            objective_tol: config.stage_tol,
            truth,
            stage,
        };
        let tr = mfista(&smoothed, &x, &opts)?;
        let skip = usize::from(stage > 0);
        for mut r in tr.rows.into_iter().skip(skip) {
            r.iter += offset;
            r.seconds += elapsed;
            rows.push(r);
        }
        offset = rows.last().map(|r| r.iter).unwrap_or(0);
        elapsed = rows.last().map(|r| r.seconds).unwrap_or(0.0);
        stopped_early |= tr.stopped_early;
        lipschitz.push(l);
        x = tr.solution;
    }
    Ok(IterateTrace {
        rows,
        signal_len: problem.n(),
        solution: x,
        lipschitz,
        stage_params: schedule,
        stopped_early,
    })
}
