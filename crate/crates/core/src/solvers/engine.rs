//! Proximal gradient and monotone FISTA for `min F(x) + G(x)`.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::vector;

use super::trace::{IterateTrace, TraceRow};

/// Composite objective `F + G` with `F` smooth (gradient Lipschitz constant
/// bounded by [`CompositeProblem::lipschitz_bound`]) and `G` prox-friendly.
///
/// `Products` caches whatever linear-map images an evaluation needs (for
/// least-squares problems, `Ax` and `D*x`). The engines only ever form the
/// momentum point as a linear combination of evaluated points, so its
/// products are obtained with [`CompositeProblem::combine_products`]
/// instead of new operator applications.
pub trait CompositeProblem {
    type Products: Clone;

    fn dim(&self) -> usize;

    fn lipschitz_bound(&self) -> f64;

    fn products(&self, x: &[f64]) -> Self::Products;

    /// Products of `wa·a + wb·b + wc·c` from the products of each term.
    fn combine_products(
        &self,
        wa: f64,
        a: &Self::Products,
        wb: f64,
        b: &Self::Products,
        wc: f64,
        c: &Self::Products,
    ) -> Self::Products;

    fn smooth_value(&self, x: &[f64], products: &Self::Products) -> f64;

    fn smooth_gradient(&self, x: &[f64], products: &Self::Products, out: &mut [f64]);

    /// Gradient used by MFISTA at the momentum point `y`. `previous` is the
    /// last accepted iterate; the default ignores it.
    fn momentum_gradient(
        &self,
        y: &[f64],
        y_products: &Self::Products,
        _previous: (&[f64], &Self::Products),
        out: &mut [f64],
    ) {
        self.smooth_gradient(y, y_products, out);
    }

    fn nonsmooth_value(&self, _x: &[f64]) -> f64 {
        0.0
    }

    /// `out ← prox_{step·G}(v)`.
    fn prox_nonsmooth(&self, v: &[f64], _step: f64, out: &mut [f64]) {
        out.copy_from_slice(v);
    }

    /// Unrelaxed objective and split-feasibility residual for tracing.
    fn monitor(&self, x: &[f64], products: &Self::Products) -> Monitor {
        let _ = products;
        Monitor {
            true_objective: self.smooth_value(x, products) + self.nonsmooth_value(x),
            feasibility: None,
        }
    }

    /// Length of the leading block of an iterate that holds the signal.
    fn signal_len(&self) -> usize {
        self.dim()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Monitor {
    pub true_objective: f64,
    pub feasibility: Option<f64>,
}

/// Iteration control shared by the engines.
#[derive(Debug, Clone)]
pub struct RunOptions<'a> {
    pub max_iters: usize,
    /// Stop once the relative objective change stays below this for
    /// [`STALL_WINDOW`] consecutive iterations; 0 disables early stopping.
    pub objective_tol: f64,
    pub truth: Option<&'a [f64]>,
    pub stage: usize,
}

impl<'a> RunOptions<'a> {
    pub fn iterations(max_iters: usize) -> Self {
        Self {
            max_iters,
            objective_tol: 0.0,
            truth: None,
            stage: 0,
        }
    }

    pub fn with_truth(mut self, truth: &'a [f64]) -> Self {
        self.truth = Some(truth);
        self
    }
}

pub const STALL_WINDOW: usize = 10;

struct Recorder<'a> {
    start: Instant,
    truth: Option<&'a [f64]>,
    stage: usize,
    rows: Vec<TraceRow>,
    stall: usize,
    tol: f64,
}

impl<'a> Recorder<'a> {
    fn new(opts: &RunOptions<'a>) -> Self {
        Self {
            start: Instant::now(),
            truth: opts.truth,
            stage: opts.stage,
            rows: Vec::with_capacity(opts.max_iters + 1),
            stall: 0,
            tol: opts.objective_tol,
        }
    }

    fn record<P: CompositeProblem>(&mut self, problem: &P, iter: usize, x: &[f64], products: &P::Products, objective: f64, t_k: f64) {
        let mon = problem.monitor(x, products);
        let rel_error = self
            .truth
            .map(|t| vector::relative_error(&x[..problem.signal_len()], t));
        if let Some(prev) = self.rows.last() {
            let change = (prev.objective - objective).abs() / prev.objective.abs().max(f64::MIN_POSITIVE);
            if change < self.tol {
                self.stall += 1;
            } else {
                self.stall = 0;
            }
        }
        self.rows.push(TraceRow {
            iter,
            objective,
            true_objective: mon.true_objective,
            rel_error,
            t_k,
            seconds: self.start.elapsed().as_secs_f64(),
            stage: self.stage,
            feasibility: mon.feasibility,
        });
    }

    fn should_stop(&self) -> bool {
        self.tol > 0.0 && self.stall >= STALL_WINDOW
    }
}

fn check_start<P: CompositeProblem>(problem: &P, x0: &[f64]) -> Result<f64> {
    crate::error::check_dim("initial point", problem.dim(), x0.len())?;
    let l = problem.lipschitz_bound();
    if !(l > 0.0 && l.is_finite()) {
        return Err(Error::invalid("lipschitz_bound", format!("must be positive and finite, got {l}")));
    }
    Ok(l)
}

/// `x_k = prox_{G/L}(x_{k−1} − ∇F(x_{k−1})/L)`.
pub fn proximal_gradient<P: CompositeProblem>(problem: &P, x0: &[f64], opts: &RunOptions<'_>) -> Result<IterateTrace> {
    let l = check_start(problem, x0)?;
    let step = 1.0 / l;
    let n = problem.dim();
    let mut rec = Recorder::new(opts);

    let mut x = x0.to_vec();
    let mut px = problem.products(&x);
    let obj0 = problem.smooth_value(&x, &px) + problem.nonsmooth_value(&x);
    rec.record(problem, 0, &x, &px, obj0, 1.0);

    let mut grad = vec![0.0; n];
    let mut next = vec![0.0; n];
    let mut stopped_early = false;
    for k in 1..=opts.max_iters {
        problem.smooth_gradient(&x, &px, &mut grad);
        let v: Vec<f64> = x.iter().zip(&grad).map(|(xi, gi)| xi - step * gi).collect();
        problem.prox_nonsmooth(&v, step, &mut next);
        if !vector::all_finite(&next) {
            return Err(Error::NonFinite { iteration: k });
        }
        std::mem::swap(&mut x, &mut next);
        px = problem.products(&x);
        let obj = problem.smooth_value(&x, &px) + problem.nonsmooth_value(&x);
        if !obj.is_finite() {
            return Err(Error::NonFinite { iteration: k });
        }
        rec.record(problem, k, &x, &px, obj, 1.0);
        if rec.should_stop() {
            stopped_early = true;
            break;
        }
    }
    Ok(IterateTrace {
        rows: rec.rows,
        signal_len: problem.signal_len(),
        solution: x,
        lipschitz: vec![l],
        stage_params: Vec::new(),
        stopped_early,
    })
}

/// Next momentum weight `t_{k+1} = (1 + √(1 + 4t_k²)) / 2`.
pub fn next_momentum(t: f64) -> f64 {
    (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0
}

/// Monotone FISTA.
///
/// Each step takes a proximal gradient step from the momentum point `y_k`
/// to get `z_k`, keeps whichever of `z_k` and `x_{k−1}` has the smaller
/// objective (ties go to `z_k`), and extrapolates
/// `y_{k+1} = x_k + (t_k/t_{k+1})(z_k − x_k) + ((t_k − 1)/t_{k+1})(x_k − x_{k−1})`.
pub fn mfista<P: CompositeProblem>(problem: &P, x0: &[f64], opts: &RunOptions<'_>) -> Result<IterateTrace> {
    let l = check_start(problem, x0)?;
    let step = 1.0 / l;
    let n = problem.dim();
    let mut rec = Recorder::new(opts);

    let mut x = x0.to_vec();
    let mut px = problem.products(&x);
    let mut obj = problem.smooth_value(&x, &px) + problem.nonsmooth_value(&x);
    if !obj.is_finite() {
        return Err(Error::NonFinite { iteration: 0 });
    }
    let mut t = 1.0;
    rec.record(problem, 0, &x, &px, obj, t);

    let mut y = x.clone();
    let mut py = px.clone();
    let mut grad = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut stopped_early = false;

    for k in 1..=opts.max_iters {
        problem.momentum_gradient(&y, &py, (&x, &px), &mut grad);
        for i in 0..n {
            v[i] = y[i] - step * grad[i];
        }
        problem.prox_nonsmooth(&v, step, &mut z);
        if !vector::all_finite(&z) {
            return Err(Error::NonFinite { iteration: k });
        }
        let pz = problem.products(&z);
        let obj_z = problem.smooth_value(&z, &pz) + problem.nonsmooth_value(&z);
        if !obj_z.is_finite() {
            return Err(Error::NonFinite { iteration: k });
        }
        let t_next = next_momentum(t);
        let a = t / t_next;
        let b = (t - 1.0) / t_next;

        let (x_new, px_new, obj_new) = if obj_z <= obj {
            (z.clone(), pz.clone(), obj_z)
        } else {
            (x.clone(), px.clone(), obj)
        };
        // y = (1 − a + b)·x_k + a·z_k − b·x_{k−1}
        y = vector::combine3(1.0 - a + b, &x_new, a, &z, -b, &x);
        py = problem.combine_products(1.0 - a + b, &px_new, a, &pz, -b, &px);

        x = x_new;
        px = px_new;
        obj = obj_new;
        t = t_next;
        rec.record(problem, k, &x, &px, obj, t);
        if rec.should_stop() {
            stopped_early = true;
            break;
        }
    }
    Ok(IterateTrace {
        rows: rec.rows,
        signal_len: problem.signal_len(),
        solution: x,
        lipschitz: vec![l],
        stage_params: Vec::new(),
        stopped_early,
    })
}

type ValueFn<'a> = Box<dyn Fn(&[f64]) -> f64 + 'a>;
type GradFn<'a> = Box<dyn Fn(&[f64], &mut [f64]) + 'a>;
type ProxFn<'a> = Box<dyn Fn(&[f64], f64, &mut [f64]) + 'a>;

/// A [`CompositeProblem`] assembled from closures, with no product caching.
pub struct FnProblem<'a> {
    pub dim: usize,
    pub lipschitz: f64,
    pub smooth_value: ValueFn<'a>,
    pub smooth_grad: GradFn<'a>,
    pub nonsmooth_value: Option<ValueFn<'a>>,
    pub prox_nonsmooth: Option<ProxFn<'a>>,
}

impl CompositeProblem for FnProblem<'_> {
    type Products = ();

    fn dim(&self) -> usize {
        self.dim
    }
    fn lipschitz_bound(&self) -> f64 {
        self.lipschitz
    }
    fn products(&self, _x: &[f64]) {}
    fn combine_products(&self, _: f64, _: &(), _: f64, _: &(), _: f64, _: &()) {}
    fn smooth_value(&self, x: &[f64], _: &()) -> f64 {
        (self.smooth_value)(x)
    }
    fn smooth_gradient(&self, x: &[f64], _: &(), out: &mut [f64]) {
        (self.smooth_grad)(x, out)
    }
    fn nonsmooth_value(&self, x: &[f64]) -> f64 {
        self.nonsmooth_value.as_ref().map_or(0.0, |g| g(x))
    }
    fn prox_nonsmooth(&self, v: &[f64], step: f64, out: &mut [f64]) {
        match &self.prox_nonsmooth {
            Some(p) => p(v, step, out),
            None => out.copy_from_slice(v),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prox;

    fn scalar_lasso() -> FnProblem<'static> {
        // ½(x − 3)² + |x|, minimizer 2
        FnProblem {
            dim: 1,
            lipschitz: 1.0,
            smooth_value: Box::new(|x| 0.5 * (x[0] - 3.0).powi(2)),
            smooth_grad: Box::new(|x, g| g[0] = x[0] - 3.0),
            nonsmooth_value: Some(Box::new(|x| x[0].abs())),
            prox_nonsmooth: Some(Box::new(|v, s, out| out[0] = prox::soft_threshold_scalar(v[0], s))),
        }
    }

    #[test]
    fn gradient_step_solves_quadratic() {
        let c = [1.0, -2.0, 0.5];
        let p = FnProblem {
            dim: 3,
            lipschitz: 1.0,
            smooth_value: Box::new(move |x| 0.5 * vector::dist2(x, &c).powi(2)),
            smooth_grad: Box::new(move |x, g| {
                for i in 0..3 {
                    g[i] = x[i] - c[i];
                }
            }),
            nonsmooth_value: None,
            prox_nonsmooth: None,
        };
        let tr = proximal_gradient(&p, &[5.0, 5.0, 5.0], &RunOptions::iterations(1)).unwrap();
        assert_eq!(tr.x(), &c);
    }

    #[test]
    fn pure_prox_step() {
        let tau = 0.7;
        let p = FnProblem {
            dim: 3,
            lipschitz: 2.0,
            smooth_value: Box::new(|_| 0.0),
            smooth_grad: Box::new(|_, g| g.fill(0.0)),
            nonsmooth_value: Some(Box::new(move |x| tau * vector::norm1(x))),
            prox_nonsmooth: Some(Box::new(move |v, s, out| {
                out.copy_from_slice(&prox::soft_threshold(v, tau * s));
            })),
        };
        let x0 = [1.0, -0.2, 0.5];
        let tr = proximal_gradient(&p, &x0, &RunOptions::iterations(1)).unwrap();
        assert_eq!(tr.x(), prox::soft_threshold(&x0, tau / 2.0).as_slice());
    }

    #[test]
    fn scalar_lasso_fixed_point() {
        let p = scalar_lasso();
        let pg = proximal_gradient(&p, &[10.0], &RunOptions::iterations(200)).unwrap();
        assert!((pg.x()[0] - 2.0).abs() < 1e-8);
        let mf = mfista(&p, &[10.0], &RunOptions::iterations(200)).unwrap();
        assert!((mf.x()[0] - 2.0).abs() < 1e-8);
        assert!(mf.is_monotone());
        assert!(pg.is_monotone());
    }

    #[test]
    fn momentum_sequence() {
        let t2 = next_momentum(1.0);
        let t3 = next_momentum(t2);
        assert!((t2 - 1.618_034).abs() < 1e-6);
        assert!((t3 - 2.193_527).abs() < 1e-6);
        let p = scalar_lasso();
        let tr = mfista(&p, &[10.0], &RunOptions::iterations(3)).unwrap();
        assert_eq!(tr.rows[0].t_k, 1.0);
        assert_eq!(tr.rows[1].t_k, t2);
        assert_eq!(tr.rows[2].t_k, t3);
    }

    #[test]
    fn non_finite_aborts_with_index() {
        let p = FnProblem {
            dim: 1,
            lipschitz: 1.0,
            smooth_value: Box::new(|x| x[0]),
            smooth_grad: Box::new(|x, g| g[0] = if x[0] < -1.0 { f64::NAN } else { 1.0 }),
            nonsmooth_value: None,
            prox_nonsmooth: None,
        };
        let err = mfista(&p, &[0.0], &RunOptions::iterations(10)).unwrap_err();
        assert!(matches!(err, Error::NonFinite { iteration: 3 }), "{err:?}");
    }

    #[test]
    fn early_stop_on_stall() {
        let p = scalar_lasso();
        let opts = RunOptions {
            objective_tol: 1e-12,
            ..RunOptions::iterations(10_000)
        };
        let tr = mfista(&p, &[10.0], &opts).unwrap();
        assert!(tr.stopped_early);
        assert!(tr.iterations() < 10_000);
    }

    #[test]
    fn rejects_bad_lipschitz_and_dims() {
        let mut p = scalar_lasso();
        assert!(mfista(&p, &[1.0, 2.0], &RunOptions::iterations(1)).is_err());
        p.lipschitz = 0.0;
        assert!(mfista(&p, &[1.0], &RunOptions::iterations(1)).is_err());
    }
}
