//! D-RIP estimation, recovery bounds for the relaxed analysis LASSO, and
//! numerical checks of the inequalities behind them.

use std::fmt::Write as _;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::seq::index;
use rayon::prelude::*;

use crate::error::{check_dim, Error, Result};
use crate::frames::TightFrame;
use crate::linops::{DenseMatrix, LinearOperator};
use crate::rng::{self, tag};
use crate::solvers::{AnalysisProblem, Relaxation};
use crate::vector;

/// Largest number of supports [`drip_exhaustive`] will enumerate.
pub const ENUMERATION_BUDGET: u128 = 1_000_000;

/// D-RIP level required by the recovery theorem, as stated (rounded).
pub const STATED_DRIP_THRESHOLD: f64 = 0.1907;

/// Exact root of `1 − (1 + 3√2)σ`.
pub fn drip_threshold() -> f64 {
    1.0 / (1.0 + 3.0 * std::f64::consts::SQRT_2)
}

const RANK_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DripMethod {
    Exhaustive,
    RandomizedLowerBound,
}

impl DripMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            DripMethod::Exhaustive => "exhaustive",
            DripMethod::RandomizedLowerBound => "randomized-lower-bound",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DripEstimate {
    pub s: usize,
    pub sigma_s: f64,
    pub method: DripMethod,
    pub supports_checked: u128,
    /// Support attaining `sigma_s`.
    pub worst_support: Vec<usize>,
    /// Extreme eigenvalues of `A` restricted to the checked subspaces.
    pub lambda_min: f64,
    pub lambda_max: f64,
}

pub fn binomial(n: usize, k: usize) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut c: Vec<usize> = (0..k).collect();
    loop {
        out.push(c.clone());
        let mut i = k;
        while i > 0 && c[i - 1] == n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        c[i - 1] += 1;
        for j in i..k {
            c[j] = c[j - 1] + 1;
        }
    }
}

/// Orthonormal basis (columns) of `range(D_T)`, the span of the synthesis
/// atoms indexed by `support`.
pub fn support_basis(d_star: &DenseMatrix, support: &[usize]) -> DMatrix<f64> {
    let n = d_star.cols();
    let dt = DMatrix::from_fn(n, support.len(), |i, j| d_star.get(support[j], i));
    let svd = dt.svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let top = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > RANK_TOL * top.max(1.0))
        .collect();
    let mut q = DMatrix::zeros(n, keep.len());
    for (k, &i) in keep.iter().enumerate() {
        q.set_column(k, &u.column(i));
    }
    q
}

/// `(λ_min, λ_max)` of `Qᵀ AᵀA Q`; `None` for an empty basis.
fn restricted_extremes(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Option<(f64, f64)> {
    if q.ncols() == 0 {
        return None;
    }
    let m = a * q;
    let eig = SymmetricEigen::new(m.transpose() * m).eigenvalues;
    let lo = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Some((lo, hi))
}

/// `max(λ_max − 1, 1 − λ_min)` of `A` on `range(D_T)`.
pub fn support_constant(a: &DenseMatrix, frame: &TightFrame, support: &[usize]) -> f64 {
    let q = support_basis(&frame.dense_analysis(), support);
    match restricted_extremes(&a.to_nalgebra(), &q) {
        Some((lo, hi)) => (hi - 1.0).max(1.0 - lo),
        None => 0.0,
    }
}

fn check_drip_inputs(a: &DenseMatrix, frame: &TightFrame, s: usize) -> Result<()> {
    check_dim("A columns vs frame signal dimension", frame.n(), a.cols())?;
    if s == 0 || s > frame.p() {
        return Err(Error::invalid("s", format!("need 1 <= s <= p={}, got {s}", frame.p())));
    }
    Ok(())
}

fn reduce_supports<'a>(a: &DenseMatrix, frame: &TightFrame, supports: impl IndexedParallelIterator<Item = &'a Vec<usize>>) -> (f64, f64, Vec<usize>) {
    let ds = frame.dense_analysis();
    let an = a.to_nalgebra();
    let per: Vec<(f64, f64, &Vec<usize>)> = supports
        .filter_map(|t| restricted_extremes(&an, &support_basis(&ds, t)).map(|(lo, hi)| (lo, hi, t)))
        .collect();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut worst = (f64::NEG_INFINITY, Vec::new());
    for (l, h, t) in per {
        lo = lo.min(l);
        hi = hi.max(h);
        let sig = (h - 1.0).max(1.0 - l);
        if sig > worst.0 {
            worst = (sig, t.clone());
        }
    }
    (lo, hi, worst.1)
}

fn estimate_from(s: usize, method: DripMethod, checked: u128, (lo, hi, worst): (f64, f64, Vec<usize>)) -> DripEstimate {
    let sigma = if worst.is_empty() { 0.0 } else { (hi - 1.0).max(1.0 - lo).max(0.0) };
    DripEstimate {
        s,
        sigma_s: sigma,
        method,
        supports_checked: checked,
        worst_support: worst,
        lambda_min: lo,
        lambda_max: hi,
    }
}

/// D-RIP constant `σ_s` by enumerating every `s`-subset of atoms.
pub fn drip_exhaustive(a: &DenseMatrix, frame: &TightFrame, s: usize) -> Result<DripEstimate> {
    check_drip_inputs(a, frame, s)?;
    let count = binomial(frame.p(), s).unwrap_or(u128::MAX);
    if count > ENUMERATION_BUDGET {
        return Err(Error::EnumerationBudget {
            required: count,
            budget: ENUMERATION_BUDGET,
        });
    }
    let supports = combinations(frame.p(), s);
    let r = reduce_supports(a, frame, supports.par_iter());
    Ok(estimate_from(s, DripMethod::Exhaustive, count, r))
}

/// Lower bound on `σ_s` from `trials` uniformly sampled supports. When
/// `trials` covers every support, all of them are checked instead.
pub fn drip_randomized_lb(a: &DenseMatrix, frame: &TightFrame, s: usize, trials: usize, seed: u64) -> Result<DripEstimate> {
    check_drip_inputs(a, frame, s)?;
    if trials == 0 {
        return Err(Error::invalid("trials", "must be at least 1"));
    }
    let count = binomial(frame.p(), s).unwrap_or(u128::MAX);
    let supports: Vec<Vec<usize>> = if (trials as u128) >= count {
        combinations(frame.p(), s)
    } else {
        (0..trials)
            .map(|i| {
                let mut r = rng::stream(seed, &[tag::SUPPORT, i as u64]);
                let mut t = index::sample(&mut r, frame.p(), s).into_vec();
                t.sort_unstable();
                t
            })
            .collect()
    };
    let checked = supports.len() as u128;
    let r = reduce_supports(a, frame, supports.par_iter());
    Ok(estimate_from(s, DripMethod::RandomizedLowerBound, checked, r))
}

/// Closed-form constants of the recovery bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundConstants {
    pub c0: f64,
    pub big_c0: f64,
    pub c1: f64,
    pub c2: f64,
}

/// `σ_2s` outside the range where the bound holds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Infeasible {
    pub sigma_2s: f64,
    /// `1 − (1 + 3√2)σ_2s`
    pub denominator: f64,
}

/// `c₀ = ½ + ‖D*D‖₁,₁`, `C₀ = 4√2c₀/δ`, `C₁ = 4((√2−1)σ+1)/δ`,
/// `C₂ = ((√2−1)σ+1)/δ` with `δ = 1 − (1+3√2)σ`.
///
/// Feasibility follows the stated hypothesis `σ_2s < 0.1907`; see
/// [`drip_threshold`] for the exact root of `δ`.
pub fn bound_constants(sigma_2s: f64, d_star_d_norm11: f64) -> std::result::Result<BoundConstants, Infeasible> {
    let sqrt2 = std::f64::consts::SQRT_2;
    let denominator = 1.0 - (1.0 + 3.0 * sqrt2) * sigma_2s;
    if !(sigma_2s >= 0.0 && sigma_2s < STATED_DRIP_THRESHOLD && denominator > 0.0) {
        return Err(Infeasible { sigma_2s, denominator });
    }
    let c0 = 0.5 + d_star_d_norm11;
    let num = (sqrt2 - 1.0) * sigma_2s + 1.0;
    Ok(BoundConstants {
        c0,
        big_c0: 4.0 * sqrt2 * c0 / denominator,
        c1: 4.0 * num / denominator,
        c2: num / denominator,
    })
}

/// The relaxation-dependent cone term: `λp/ρ`, `λμp`, or 0 for the
/// unrelaxed problem.
pub fn relaxation_penalty(lambda: f64, p: usize, relaxation: Option<Relaxation>) -> f64 {
    match relaxation {
        Some(Relaxation::Decomposition { rho }) => lambda * p as f64 / rho,
        Some(Relaxation::Smoothing { mu }) => lambda * mu * p as f64,
        None => 0.0,
    }
}

/// Indices of the `s` largest magnitudes, ties broken by lower index.
pub fn top_s(v: &[f64], s: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&i, &j| v[j].abs().total_cmp(&v[i].abs()).then(i.cmp(&j)));
    idx.truncate(s);
    idx.sort_unstable();
    idx
}

fn complement(p: usize, set: &[usize]) -> Vec<usize> {
    let mut mask = vec![false; p];
    for &i in set {
        mask[i] = true;
    }
    (0..p).filter(|&i| !mask[i]).collect()
}

fn l1_on(v: &[f64], idx: &[usize]) -> f64 {
    idx.iter().map(|&i| v[i].abs()).sum()
}

/// `‖D*x − (D*x)_s‖₁`
pub fn best_s_term_tail(frame: &TightFrame, x: &[f64], s: usize) -> f64 {
    let dx = frame.analyze(x);
    l1_on(&dx, &complement(dx.len(), &top_s(&dx, s)))
}

/// `‖D*A*w‖_∞` with `w = b − A x_true`.
pub fn noise_condition_lhs(problem: &AnalysisProblem, x_true: &[f64]) -> f64 {
    let w = vector::sub(problem.b(), &problem.a().apply(x_true));
    vector::norm_inf(&problem.frame().analyze(&problem.a().apply_adjoint(&w)))
}

/// `‖D*A*(Ax̂ − b)‖_∞ / (λ‖D*D‖₁,₁)`; at most 1 at a minimizer of the split
/// problem.
pub fn optimality_certificate(problem: &AnalysisProblem, x_hat: &[f64]) -> f64 {
    let r = vector::sub(&problem.a().apply(x_hat), problem.b());
    let g = problem.frame().analyze(&problem.a().apply_adjoint(&r));
    vector::norm_inf(&g) / (problem.lambda() * problem.frame().gram_norm_11())
}

/// Slack `penalty + 3‖D*_T h‖₁ + 4‖D*_{T^c}x‖₁ − ‖D*_{T^c}h‖₁` of the cone
/// constraint, `h = x̂ − x`, `T` the top-`s` set of `D*x`.
pub fn cone_certificate(problem: &AnalysisProblem, x_true: &[f64], x_hat: &[f64], relaxation: Option<Relaxation>, s: usize) -> f64 {
    let frame = problem.frame();
    let dx = frame.analyze(x_true);
    let dh = frame.analyze(&vector::sub(x_hat, x_true));
    let t = top_s(&dx, s);
    let tc = complement(dx.len(), &t);
    let penalty = relaxation_penalty(problem.lambda(), frame.p(), relaxation);
    penalty + 3.0 * l1_on(&dh, &t) + 4.0 * l1_on(&dx, &tc) - l1_on(&dh, &tc)
}

/// Slack of
/// `⟨Ah, ADD*_{T01}h⟩ ≥ (1−σ)‖D*_{T01}h‖² − √2 s^{−½} σ ‖D*_{T01}h‖ ‖D*_{T^c}h‖₁`
/// where `T` is the top-`s` set of `D*x` and `T1` the top-`s` set of
/// `D*h` outside `T`.
pub fn restricted_isometry_slack(problem: &AnalysisProblem, x_true: &[f64], x_hat: &[f64], s: usize, sigma_2s: f64) -> f64 {
    let frame = problem.frame();
    let a = problem.a();
    let h = vector::sub(x_hat, x_true);
    let dh = frame.analyze(&h);
    let t0 = top_s(&frame.analyze(x_true), s);
    let tc = complement(dh.len(), &t0);
    let restricted: Vec<f64> = tc.iter().map(|&i| dh[i]).collect();
    let t1: Vec<usize> = top_s(&restricted, s).into_iter().map(|k| tc[k]).collect();
    let mut v01 = vec![0.0; dh.len()];
    for &i in t0.iter().chain(&t1) {
        v01[i] = dh[i];
    }
    let lhs = vector::dot(&a.apply(&h), &a.apply(&frame.synthesize(&v01)));
    let n01 = vector::norm2(&v01);
    let rhs = (1.0 - sigma_2s) * n01 * n01
        - std::f64::consts::SQRT_2 / (s as f64).sqrt() * sigma_2s * n01 * l1_on(&dh, &tc);
    lhs - rhs
}

/// Random unit vector in `Σ_s`.
fn sample_sigma_s(frame: &TightFrame, s: usize, r: &mut rng::Stream) -> Vec<f64> {
    let t = index::sample(r, frame.p(), s).into_vec();
    let c = rng::gaussian_vec(r, s);
    let mut coeffs = vec![0.0; frame.p()];
    for (&i, &ci) in t.iter().zip(&c) {
        coeffs[i] = ci;
    }
    let u = frame.synthesize(&coeffs);
    let nrm = vector::norm2(&u);
    if nrm > 0.0 {
        vector::scale(&u, 1.0 / nrm)
    } else {
        u
    }
}

/// Most negative slack of `⟨Au, Av⟩ ≥ −σ_2s‖u‖‖v‖ + ⟨u, v⟩` over sampled
/// `u, v ∈ Σ_s`. The first pair uses `u = v`.
pub fn drip_inner_product_check(a: &DenseMatrix, frame: &TightFrame, s: usize, sigma_2s: f64, trials: usize, seed: u64) -> Result<f64> {
    check_drip_inputs(a, frame, s)?;
    let worst = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::stream(seed, &[tag::PAIRS, i as u64]);
            let u = sample_sigma_s(frame, s, &mut r);
            let v = if i == 0 { u.clone() } else { sample_sigma_s(frame, s, &mut r) };
            let lhs = vector::dot(&a.apply(&u), &a.apply(&v));
            lhs - (-sigma_2s * vector::norm2(&u) * vector::norm2(&v) + vector::dot(&u, &v))
        })
        .reduce(|| f64::INFINITY, f64::min);
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificateReport {
    pub s: usize,
    pub lambda: f64,
    pub sigma_2s: f64,
    pub drip_method: DripMethod,
    pub constants: Option<BoundConstants>,
    /// `+∞` when the constants are infeasible.
    pub predicted_bound: f64,
    pub measured_error: f64,
    pub noise_condition_lhs: f64,
    pub optimality_residual: f64,
    pub cone_slack: f64,
    pub restricted_isometry_slack: f64,
    /// `σ_2s < 0.1907`
    pub feasible: bool,
    /// `σ_2s < 1/(1+3√2)`
    pub feasible_exact: bool,
}

impl CertificateReport {
    pub fn noise_condition_holds(&self) -> bool {
        self.noise_condition_lhs <= self.lambda / 2.0
    }

    pub fn hypotheses_hold(&self) -> bool {
        self.feasible && self.noise_condition_holds() && self.drip_method == DripMethod::Exhaustive
    }

    pub fn bound_holds(&self) -> bool {
        self.measured_error <= self.predicted_bound
    }

    pub const CSV_HEADER: &'static str = "s,lambda,sigma_2s,drip_method,c0,C0,C1,C2,predicted_bound,measured_error,noise_condition_lhs,optimality_residual,cone_slack,restricted_isometry_slack,feasible,feasible_exact";

    pub fn csv_row(&self) -> String {
        let (c0, big_c0, c1, c2) = match self.constants {
            Some(c) => (c.c0, c.big_c0, c.c1, c.c2),
            None => (f64::INFINITY, f64::INFINITY, f64::INFINITY, f64::INFINITY),
        };
        format!(
            "{},{:e},{:e},{},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{},{}",
            self.s,
            self.lambda,
            self.sigma_2s,
            self.drip_method.as_str(),
            c0,
            big_c0,
            c1,
            c2,
            self.predicted_bound,
            self.measured_error,
            self.noise_condition_lhs,
            self.optimality_residual,
            self.cone_slack,
            self.restricted_isometry_slack,
            self.feasible,
            self.feasible_exact
        )
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "sparsity level s        {}", self.s);
        let _ = writeln!(out, "lambda                  {:.6e}", self.lambda);
        let _ = writeln!(out, "sigma_2s ({})  {:.6}", self.drip_method.as_str(), self.sigma_2s);
        let _ = writeln!(
            out,
            "threshold               {} (stated), {:.6} (exact)",
            STATED_DRIP_THRESHOLD,
            drip_threshold()
        );
        match self.constants {
            Some(c) => {
                let _ = writeln!(out, "c0 C0 C1 C2             {:.6} {:.6} {:.6} {:.6}", c.c0, c.big_c0, c.c1, c.c2);
            }
            None => {
                let _ = writeln!(out, "constants               infeasible (sigma_2s too large)");
            }
        }
        let _ = writeln!(out, "predicted bound         {:.6e}", self.predicted_bound);
        let _ = writeln!(out, "measured error          {:.6e}", self.measured_error);
        let _ = writeln!(
            out,
            "noise condition         {:.6e} <= {:.6e}: {}",
            self.noise_condition_lhs,
            self.lambda / 2.0,
            self.noise_condition_holds()
        );
        let _ = writeln!(out, "optimality residual     {:.6}", self.optimality_residual);
        let _ = writeln!(out, "cone slack              {:.6e}", self.cone_slack);
        let _ = writeln!(out, "restricted isometry slack {:.6e}", self.restricted_isometry_slack);
        let _ = writeln!(out, "bound holds             {}", self.bound_holds());
        out
    }
}

/// Evaluate the recovery bound
/// `C₀√s λ + C₁‖D*x − (D*x)_s‖₁/√s + C₂·penalty/√s` for a computed `x̂`,
/// where the penalty is `λp/ρ`, `λμp`, or absent for the unrelaxed problem.
/// `drip` must be an estimate at level `2s`.
pub fn error_bound(
    problem: &AnalysisProblem,
    x_true: &[f64],
    x_hat: &[f64],
    relaxation: Option<Relaxation>,
    s: usize,
    drip: &DripEstimate,
) -> Result<CertificateReport> {
    let frame = problem.frame();
    if !frame.is_tight() {
        return Err(Error::NotTight(
            "the recovery bound and its supporting inequalities assume D D* = I; this frame is not tight".into(),
        ));
    }
    check_dim("x_true", problem.n(), x_true.len())?;
    check_dim("x_hat", problem.n(), x_hat.len())?;
    if s == 0 {
        return Err(Error::invalid("s", "must be at least 1"));
    }
    if drip.s != 2 * s {
        return Err(Error::invalid("drip", format!("estimate is at level {}, need 2s = {}", drip.s, 2 * s)));
    }
    let lambda = problem.lambda();
    let sigma = drip.sigma_s;
    let constants = bound_constants(sigma, frame.gram_norm_11()).ok();
    let rs = (s as f64).sqrt();
    let predicted_bound = match constants {
        Some(c) => {
            c.big_c0 * rs * lambda
                + c.c1 * best_s_term_tail(frame, x_true, s) / rs
                + c.c2 * relaxation_penalty(lambda, frame.p(), relaxation) / rs
        }
        None => f64::INFINITY,
    };
    Ok(CertificateReport {
        s,
        lambda,
        sigma_2s: sigma,
        drip_method: drip.method,
        constants,
        predicted_bound,
        measured_error: vector::dist2(x_hat, x_true),
        noise_condition_lhs: noise_condition_lhs(problem, x_true),
        optimality_residual: optimality_certificate(problem, x_hat),
        cone_slack: cone_certificate(problem, x_true, x_hat, relaxation, s),
        restricted_isometry_slack: restricted_isometry_slack(problem, x_true, x_hat, s, sigma),
        feasible: constants.is_some(),
        feasible_exact: sigma < drip_threshold(),
    })
}

/// Inputs to the iteration-count formulas. `lambda1` bounds `‖x₀ − x̂_μ‖`;
/// `lambda2` bounds `‖x₀ − x̂_ρ‖² + ‖z₀ − ẑ_ρ‖²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationInputs {
    pub l_g: f64,
    pub l_grad_f: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub eps: f64,
    pub h_x0: f64,
    pub d_norm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationEstimate {
    pub target_eps: f64,
    pub k_smoothing: f64,
    pub mu_star: f64,
    pub k_decomposition: f64,
    pub rho_star: f64,
}

/// Lipschitz constant of `λ‖·‖₁` on `ℝ^p`: `λ√p`.
pub fn l1_lipschitz(lambda: f64, p: usize) -> f64 {
    lambda * (p as f64).sqrt()
}

/// Worst-case MFISTA iteration counts for an ε-optimal point of the
/// analysis LASSO, with the smoothing parameter and the penalty that
/// achieve them.
pub fn iteration_estimates(inp: &IterationInputs) -> Result<IterationEstimate> {
    let named = [
        ("l_g", inp.l_g),
        ("l_grad_f", inp.l_grad_f),
        ("lambda1", inp.lambda1),
        ("lambda2", inp.lambda2),
        ("eps", inp.eps),
        ("h_x0", inp.h_x0),
        ("d_norm", inp.d_norm),
    ];
    for (name, v) in named {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::invalid(name, format!("must be positive and finite, got {v}")));
        }
    }
    let IterationInputs {
        l_g,
        l_grad_f: l_f,
        lambda1,
        lambda2,
        eps,
        h_x0,
        d_norm,
    } = *inp;
    let d2 = d_norm * d_norm;
    let k_smoothing = 2.0 * d_norm * (l_g * lambda1).sqrt() / eps + (l_f * lambda1).sqrt() / eps.sqrt();
    let mu_star = (d2 / l_g).sqrt() * eps / ((d2 * l_g).sqrt() + (d2 * l_g + l_f * eps).sqrt());
    let k_decomposition = f64::max(
        16.0 * ((1.0 + d2) * lambda2 * h_x0).sqrt() * l_g / eps.powf(1.5),
        2.0 * (l_f * lambda2).sqrt() / eps.sqrt(),
    );
    let rho_star = (l_g * (2.0 * h_x0).sqrt() * k_decomposition * k_decomposition / (2.0 * (1.0 + d2) * lambda2)).powf(2.0 / 3.0);
    Ok(IterationEstimate {
        target_eps: eps,
        k_smoothing,
        mu_star,
        k_decomposition,
        rho_star,
    })
}

/// Settings for [`design_drip_matrix`].
#[derive(Debug, Clone)]
pub struct DesignOptions {
    /// Soft-max sharpness levels, used in order.
    pub sharpness: Vec<f64>,
    pub iters_per_level: usize,
    pub restarts: usize,
    /// Stop restarting once `σ` drops below this.
    pub target: f64,
}

impl Default for DesignOptions {
    fn default() -> Self {
        Self {
            sharpness: vec![4.0, 8.0, 16.0, 32.0, 64.0, 128.0],
            iters_per_level: 400,
            restarts: 8,
            target: STATED_DRIP_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DesignedMatrix {
    pub a: DenseMatrix,
    /// Exhaustive estimate for the returned (rescaled) matrix.
    pub estimate: DripEstimate,
    pub restarts_used: usize,
}

/// Smoothed `log κ` over all supports: soft-max of `log λ_max` plus
/// soft-max of `−log λ_min`, with gradient in `A`.
struct ConditionObjective<'a> {
    bases: &'a [DMatrix<f64>],
    q: f64,
}

impl ConditionObjective<'_> {
    fn eval(&self, a: &DMatrix<f64>, grad: &mut DMatrix<f64>) -> f64 {
        // (log λ, A w) for every extreme eigenpair
        let mut tops: Vec<(f64, DMatrix<f64>)> = Vec::with_capacity(self.bases.len());
        let mut bots: Vec<(f64, DMatrix<f64>)> = Vec::with_capacity(self.bases.len());
        for q in self.bases {
            let m = a * q;
            let eig = SymmetricEigen::new(m.transpose() * &m);
            let (mut imin, mut imax) = (0, 0);
            for i in 0..eig.eigenvalues.len() {
                if eig.eigenvalues[i] < eig.eigenvalues[imin] {
                    imin = i;
                }
                if eig.eigenvalues[i] > eig.eigenvalues[imax] {
                    imax = i;
                }
            }
            for (i, list) in [(imax, &mut tops), (imin, &mut bots)] {
                let lam = eig.eigenvalues[i].max(1e-300);
                let w = q * eig.eigenvectors.column(i);
                // ∂λ/∂A = 2 (A w) wᵀ
                let dl = (&m * eig.eigenvectors.column(i)) * w.transpose() * 2.0;
                list.push((lam.ln(), dl / lam));
            }
        }
        grad.fill(0.0);
        let mut value = 0.0;
        for (list, sign) in [(&tops, 1.0), (&bots, -1.0)] {
            let peak = list.iter().map(|(l, _)| sign * l).fold(f64::NEG_INFINITY, f64::max);
            let weights: Vec<f64> = list.iter().map(|(l, _)| (self.q * (sign * l - peak)).exp()).collect();
            let total: f64 = weights.iter().sum();
            value += peak + total.ln() / self.q;
            for ((_, dl), w) in list.iter().zip(&weights) {
                *grad += dl * (sign * w / total);
            }
        }
        value
    }
}

/// Limited-memory BFGS with Armijo backtracking.
fn lbfgs(obj: &ConditionObjective<'_>, a: &mut DMatrix<f64>, iters: usize) {
    const MEMORY: usize = 8;
    let mut g = DMatrix::zeros(a.nrows(), a.ncols());
    let mut f = obj.eval(a, &mut g);
    let mut hist: Vec<(DMatrix<f64>, DMatrix<f64>, f64)> = Vec::new();
    let mut g_new = g.clone();
    for _ in 0..iters {
        let mut d = -&g;
        let mut alphas = Vec::with_capacity(hist.len());
        for (s, y, rho) in hist.iter().rev() {
            let al = rho * s.dot(&d);
            d -= y * al;
            alphas.push(al);
        }
        if let Some((s, y, _)) = hist.last() {
            d *= s.dot(y) / y.dot(y);
        }
        for ((s, y, rho), al) in hist.iter().zip(alphas.into_iter().rev()) {
            let be = rho * y.dot(&d);
            d += s * (al - be);
        }
        let mut slope = g.dot(&d);
        if slope >= 0.0 {
            d = -&g;
            slope = g.dot(&d);
            hist.clear();
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let trial = &*a + &d * step;
            let ft = obj.eval(&trial, &mut g_new);
            if ft.is_finite() && ft <= f + 1e-4 * step * slope {
                accepted = Some((trial, ft));
                break;
            }
            step *= 0.5;
        }
        let Some((trial, ft)) = accepted else { break };
        let s = &trial - &*a;
        let y = &g_new - &g;
        let sy = s.dot(&y);
        *a = trial;
        g.copy_from(&g_new);
        let done = (f - ft).abs() <= 1e-15 * f.abs().max(1.0);
        f = ft;
        if sy > 1e-300 {
            hist.push((s, y, 1.0 / sy));
            if hist.len() > MEMORY {
                hist.remove(0);
            }
        }
        if done {
            break;
        }
    }
}

/// Search for an `m×n` measurement matrix with a small exhaustive D-RIP
/// constant at level `s` for `frame`.
///
/// Each restart draws a Gaussian matrix, minimizes a smoothed version of
/// the worst restricted condition number over all `s`-supports, and
/// rescales by `√(2/(λ_max+λ_min))`, which centers the restricted spectrum
/// around 1 and turns condition number `κ` into `σ_s = (κ−1)/(κ+1)`.
/// Returns the best matrix found; restarts stop once `σ_s < target`.
pub fn design_drip_matrix(frame: &TightFrame, m: usize, s: usize, seed: u64, opts: &DesignOptions) -> Result<DesignedMatrix> {
    if m == 0 {
        return Err(Error::invalid("m", "must be positive"));
    }
    if opts.restarts == 0 {
        return Err(Error::invalid("restarts", "must be at least 1"));
    }
    let count = binomial(frame.p(), s).unwrap_or(u128::MAX);
    if count > ENUMERATION_BUDGET {
        return Err(Error::EnumerationBudget {
            required: count,
            budget: ENUMERATION_BUDGET,
        });
    }
    let ds = frame.dense_analysis();
    let bases: Vec<DMatrix<f64>> = combinations(frame.p(), s)
        .iter()
        .map(|t| support_basis(&ds, t))
        .filter(|q| q.ncols() > 0)
        .collect();
    let mut best: Option<DesignedMatrix> = None;
    for r in 0..opts.restarts {
        let g = DenseMatrix::gaussian(m, frame.n(), rng::derive_seed(seed, &[r as u64]));
        let mut a = g.to_nalgebra() / (m as f64).sqrt();
        for &q in &opts.sharpness {
            lbfgs(&ConditionObjective { bases: &bases, q }, &mut a, opts.iters_per_level);
        }
        let unscaled = DenseMatrix::from_nalgebra(&a);
        let pre = drip_exhaustive(&unscaled, frame, s)?;
        let c = (2.0 / (pre.lambda_max + pre.lambda_min)).sqrt();
        let scaled = unscaled.scaled(c);
        let estimate = drip_exhaustive(&scaled, frame, s)?;
        let better = best.as_ref().map_or(true, |b| estimate.sigma_s < b.estimate.sigma_s);
        if better {
            best = Some(DesignedMatrix {
                a: scaled,
                estimate,
                restarts_used: r + 1,
            });
        }
        if best.as_ref().is_some_and(|b| b.estimate.sigma_s < opts.target) {
            break;
        }
    }
    Ok(best.expect("at least one restart"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::random_tight_frame;

    /// Classical RIP constant of A by enumerating column subsets.
    fn classical_rip(a: &DenseMatrix, s: usize) -> f64 {
        let mut worst: f64 = 0.0;
        for t in combinations(a.cols(), s) {
            let sub = a.select_columns(&t).to_nalgebra();
            let eig = SymmetricEigen::new(sub.transpose() * &sub).eigenvalues;
            for &e in eig.iter() {
                worst = worst.max((e - 1.0).abs());
            }
        }
        worst
    }

    #[test]
    fn combinations_and_binomial() {
        assert_eq!(combinations(4, 2).len(), 6);
        assert_eq!(combinations(5, 0), vec![Vec::<usize>::new()]);
        assert_eq!(combinations(3, 3), vec![vec![0, 1, 2]]);
        assert_eq!(binomial(16, 2), Some(120));
        assert_eq!(binomial(144, 4), Some(17_178_876));
        assert_eq!(binomial(3, 5), Some(0));
    }

    #[test]
    fn orthogonal_a_has_zero_constant() {
        let frame = random_tight_frame(5, 8, 2).unwrap();
        let q = random_tight_frame(5, 5, 3).unwrap().dense_analysis();
        let est = drip_exhaustive(&q, &frame, 3).unwrap();
        assert!(est.sigma_s < 1e-12);
    }

    #[test]
    fn diagonal_hand_value() {
        let a = DenseMatrix::diagonal(&[1.0, 0.5]);
        let est = drip_exhaustive(&a, &TightFrame::identity(2), 1).unwrap();
        assert!((est.sigma_s - 0.75).abs() < 1e-15);
        assert_eq!(est.worst_support, vec![1]);
    }

    #[test]
    fn identity_frame_matches_classical_rip() {
        for seed in 0..3 {
            let a = DenseMatrix::gaussian(8, 12, seed).scaled(1.0 / 8f64.sqrt());
            let est = drip_exhaustive(&a, &TightFrame::identity(12), 2).unwrap();
            assert!((est.sigma_s - classical_rip(&a, 2)).abs() < 1e-12);
        }
    }

    #[test]
    fn budget_is_enforced() {
        let frame = TightFrame::identity(144);
        let a = DenseMatrix::gaussian(10, 144, 1);
        assert!(matches!(
            drip_exhaustive(&a, &frame, 4),
            Err(Error::EnumerationBudget { .. })
        ));
    }

    #[test]
    fn randomized_is_a_lower_bound() {
        let frame = random_tight_frame(20, 24, 5).unwrap();
        let a = DenseMatrix::gaussian(14, 20, 6).scaled(1.0 / 14f64.sqrt());
        let ex = drip_exhaustive(&a, &frame, 2).unwrap();
        let lb = drip_randomized_lb(&a, &frame, 2, 500, 7).unwrap();
        assert!(lb.sigma_s <= ex.sigma_s + 1e-15);
        assert!(lb.sigma_s >= 0.9 * ex.sigma_s, "lb {} ex {}", lb.sigma_s, ex.sigma_s);
        let all = drip_randomized_lb(&a, &frame, 2, 10_000, 7).unwrap();
        assert_eq!(all.sigma_s, ex.sigma_s);
        assert_eq!(all.method, DripMethod::RandomizedLowerBound);
    }

    #[test]
    fn constants_closed_forms() {
        let c = bound_constants(0.0, 1.0).unwrap();
        assert_eq!(c.c0, 1.5);
        assert!((c.big_c0 - 6.0 * std::f64::consts::SQRT_2).abs() < 1e-14);
        assert_eq!(c.c1, 4.0);
        assert_eq!(c.c2, 1.0);
        let c = bound_constants(0.1, 1.0).unwrap();
        // independent evaluation: δ = 0.475735931288..., C0 = 8.48528.../δ
        assert!((c.big_c0 - 17.836_116_248_9).abs() < 1e-9);
        assert!((c.c1 - 8.756_297_666_4).abs() < 1e-9);
        assert!((c.c2 - 2.189_074_416_6).abs() < 1e-9);
        assert!(bound_constants(0.1907, 1.0).is_err());
        assert!(bound_constants(0.25, 1.0).unwrap_err().denominator < 0.0);
        assert!((drip_threshold() - 0.190_743).abs() < 1e-6);
    }

    #[test]
    fn constants_increase_with_sigma() {
        let mut prev = bound_constants(0.0, 2.0).unwrap();
        for i in 1..190 {
            let c = bound_constants(i as f64 * 1e-3, 2.0).unwrap();
            assert!(c.big_c0 > prev.big_c0 && c.c1 > prev.c1 && c.c2 > prev.c2);
            prev = c;
        }
    }

    #[test]
    fn top_s_breaks_ties_by_index() {
        assert_eq!(top_s(&[1.0, -3.0, 3.0, 0.5], 2), vec![1, 2]);
        assert_eq!(top_s(&[2.0, 2.0, 2.0], 2), vec![0, 1]);
    }

    fn scalar_problem(a: f64, b: f64, lambda: f64) -> AnalysisProblem {
        let op = DenseMatrix::new(1, 1, vec![a]).unwrap().into_shared();
        AnalysisProblem::new(op, vec![b], TightFrame::identity(1), lambda).unwrap()
    }

    #[test]
    fn optimality_ratio_scalar_cases() {
        // minimizer of ½(x − 3)² + |x| is 2
        let p = scalar_problem(1.0, 3.0, 1.0);
        assert!(optimality_certificate(&p, &[2.0]) <= 1.0);
        let p = scalar_problem(2.0, 100.0, 0.5);
        assert!(optimality_certificate(&p, &[0.0]) > 100.0);
    }

    #[test]
    fn cone_slack_at_zero_error() {
        let frame = random_tight_frame(6, 9, 1).unwrap();
        let a = DenseMatrix::gaussian(4, 6, 2);
        let x: Vec<f64> = (0..6).map(|i| i as f64 - 2.5).collect();
        let b = a.apply(&x);
        let p = AnalysisProblem::new(a.into_shared(), b, frame.clone(), 0.3).unwrap();
        let relax = Some(Relaxation::Decomposition { rho: 10.0 });
        let slack = cone_certificate(&p, &x, &x, relax, 2);
        let expected = 0.3 * 9.0 / 10.0 + 4.0 * best_s_term_tail(&frame, &x, 2);
        assert!((slack - expected).abs() < 1e-12);
    }

    #[test]
    fn inner_product_check_identities() {
        let frame = random_tight_frame(6, 10, 3).unwrap();
        let q = random_tight_frame(6, 6, 4).unwrap().dense_analysis();
        let worst = drip_inner_product_check(&q, &frame, 2, 0.0, 200, 1).unwrap();
        assert!(worst >= -1e-12);
        let a = DenseMatrix::gaussian(5, 6, 8).scaled(0.5);
        let sigma = drip_exhaustive(&a, &frame, 4).unwrap().sigma_s;
        assert!(drip_inner_product_check(&a, &frame, 2, sigma, 2000, 2).unwrap() >= -1e-12);
    }

    #[test]
    fn restricted_isometry_slack_holds_for_arbitrary_errors() {
        let frame = random_tight_frame(6, 8, 11).unwrap();
        let a = DenseMatrix::gaussian(6, 6, 12).scaled(1.0 / 6f64.sqrt());
        let sigma = drip_exhaustive(&a, &frame, 2).unwrap().sigma_s;
        let b = vec![0.0; 6];
        let p = AnalysisProblem::new(a.into_shared(), b, frame, 1.0).unwrap();
        for seed in 0..50 {
            let mut r = rng::stream(seed, &[99]);
            let x = rng::gaussian_vec(&mut r, 6);
            let xh = rng::gaussian_vec(&mut r, 6);
            assert!(restricted_isometry_slack(&p, &x, &xh, 1, sigma) >= -1e-10);
        }
    }

    #[test]
    fn iteration_formulas() {
        let base = IterationInputs {
            l_g: 1.0,
            l_grad_f: 1.0,
            lambda1: 1.0,
            lambda2: 1.0,
            eps: 1e-2,
            h_x0: 1.0,
            d_norm: 1.0,
        };
        let e = iteration_estimates(&base).unwrap();
        assert!((e.k_smoothing - (2.0 / 1e-2 + 1.0 / 0.1)).abs() < 1e-9);
        let half = iteration_estimates(&IterationInputs { eps: 5e-3, ..base }).unwrap();
        assert!((half.k_smoothing / e.k_smoothing - 2.0).abs() < 0.05);
        assert!((half.k_decomposition / e.k_decomposition - 2f64.powf(1.5)).abs() < 1e-9);
        assert!((l1_lipschitz(0.004, 144) - 0.048).abs() < 1e-15);
        assert!(iteration_estimates(&IterationInputs { eps: 0.0, ..base }).is_err());
    }

    #[test]
    fn designed_matrix_beats_threshold() {
        let frame = random_tight_frame(12, 16, 1).unwrap();
        let d = design_drip_matrix(&frame, 10, 2, 5, &DesignOptions::default()).unwrap();
        assert!(d.estimate.sigma_s < STATED_DRIP_THRESHOLD, "sigma {}", d.estimate.sigma_s);
        let again = drip_exhaustive(&d.a, &frame, 2).unwrap();
        assert!((again.sigma_s - d.estimate.sigma_s).abs() < 1e-12);
    }

    #[test]
    fn error_bound_refuses_non_tight() {
        let frame = crate::frames::difference_frame(4, 4).unwrap();
        let a = DenseMatrix::identity(16);
        let p = AnalysisProblem::new(a.into_shared(), vec![0.0; 16], frame, 1.0).unwrap();
        let est = DripEstimate {
            s: 2,
            sigma_s: 0.0,
            method: DripMethod::Exhaustive,
            supports_checked: 1,
            worst_support: vec![],
            lambda_min: 1.0,
            lambda_max: 1.0,
        };
        assert!(matches!(
            error_bound(&p, &[0.0; 16], &[0.0; 16], None, 1, &est),
            Err(Error::NotTight(_))
        ));
    }
}
