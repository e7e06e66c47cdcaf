//! Tiny tight-frame instances on which the recovery bound can be checked
//! end to end.

use crate::certify::{self, CertificateReport, DesignOptions, DripEstimate};
use crate::error::{Error, Result};
use crate::frames::{cosparse_signal, random_tight_frame};
use crate::linops::LinearOperator;
use crate::rng::{self, tag};
use crate::solvers::{self, AnalysisProblem, Relaxation, SolverConfig};
use crate::vector;

use super::config::ConfigMap;

#[derive(Debug, Clone, PartialEq)]
pub struct CertifySpec {
    pub n: usize,
    pub p: usize,
    pub m: usize,
    pub s: usize,
    /// Zeros in `D*x_true` (0 gives a generic signal).
    pub l: usize,
    pub lambda: f64,
    pub rho: f64,
    pub noise_sigma: f64,
    pub iters: usize,
    pub trials: usize,
    pub master_seed: u64,
}

impl CertifySpec {
    /// n=12, p=16, m=10, s=1 with a designed measurement matrix.
    pub fn tiny(lambda: f64) -> Self {
        Self {
            n: 12,
            p: 16,
            m: 10,
            s: 1,
            l: 0,
            lambda,
            rho: 1e3,
            noise_sigma: 1e-3,
            iters: 20_000,
            trials: 20,
            master_seed: 0,
        }
    }

    pub fn from_map(c: &ConfigMap) -> Result<Self> {
        let lambda = c.require_positive("lambda")?;
        let d = Self::tiny(lambda);
        let spec = Self {
            n: c.get_or("n", d.n)?,
            p: c.get_or("p", d.p)?,
            m: c.get_or("m", d.m)?,
            s: c.get_or("s", d.s)?,
            l: c.get_or("l", d.l)?,
            lambda,
            rho: c.get_or("rho", d.rho)?,
            noise_sigma: c.get_or("noise_sigma", d.noise_sigma)?,
            iters: c.get_or("iters", d.iters)?,
            trials: c.get_or("trials", d.trials)?,
            master_seed: c.get_or("master_seed", d.master_seed)?,
        };
        if spec.p < spec.n {
            return Err(Error::config("p", "must be at least n"));
        }
        if spec.s == 0 || 2 * spec.s > spec.p {
            return Err(Error::config("s", "need 1 <= 2s <= p"));
        }
        if !(spec.rho > 0.0) {
            return Err(Error::config("rho", "must be positive"));
        }
        if spec.trials == 0 {
            return Err(Error::config("trials", "must be at least 1"));
        }
        if spec.iters == 0 {
            return Err(Error::config("iters", "must be at least 1"));
        }
        Ok(spec)
    }
}

/// One certified instance and the solver output on it.
#[derive(Debug, Clone)]
pub struct CertifiedTrial {
    pub problem: AnalysisProblem,
    pub x_true: Vec<f64>,
    pub x_hat: Vec<f64>,
    pub drip: DripEstimate,
    pub report: CertificateReport,
}

/// Build trial `trial`: random tight frame, designed D-RIP matrix at level
/// `2s`, signal, noisy measurements; solve the split problem with SFISTA at
/// `μ = 1/ρ` and evaluate the certificate.
pub fn certify_trial(spec: &CertifySpec, trial: usize) -> Result<CertifiedTrial> {
    let seed = rng::derive_seed(spec.master_seed, &[trial as u64]);
    let frame = random_tight_frame(spec.n, spec.p, rng::derive_seed(seed, &[tag::FRAME]))?;
    let designed = certify::design_drip_matrix(&frame, spec.m, 2 * spec.s, seed, &DesignOptions::default())?;
    let x_true = cosparse_signal(&frame, spec.l, seed)?.x;
    let mut b = designed.a.apply(&x_true);
    if spec.noise_sigma > 0.0 {
        let w = rng::gaussian_vec(&mut rng::stream(seed, &[tag::NOISE]), spec.m);
        vector::axpy(spec.noise_sigma, &w, &mut b);
    }
    let problem = AnalysisProblem::new(designed.a.clone().into_shared(), b, frame, spec.lambda)?;
    let mu = 1.0 / spec.rho;
    let trace = solvers::sfista(&problem, &SolverConfig::smoothing(mu, spec.iters).with_seed(seed), None)?;
    let x_hat = trace.x().to_vec();
    let report = certify::error_bound(
        &problem,
        &x_true,
        &x_hat,
        Some(Relaxation::Smoothing { mu }),
        spec.s,
        &designed.estimate,
    )?;
    Ok(CertifiedTrial {
        problem,
        x_true,
        x_hat,
        drip: designed.estimate,
        report,
    })
}

pub fn certify_all(spec: &CertifySpec) -> Result<Vec<CertifiedTrial>> {
    use rayon::prelude::*;
    (0..spec.trials).into_par_iter().map(|t| certify_trial(spec, t)).collect()
}
