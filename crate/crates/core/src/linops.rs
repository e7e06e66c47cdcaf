//! Real linear operators with adjoints.
//!
//! Everything the solvers touch (`A`, `D*`, `D`, products of them) goes
//! through [`LinearOperator`]. Dense matrices back the desk-scale random
//! instances; structured operators such as finite differences or a partial
//! DFT implement the trait matrix-free.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{check_dim, Error, Result};
use crate::rng::{self, tag};
use crate::vector;

pub trait LinearOperator: Send + Sync {
    fn in_dim(&self) -> usize;
    fn out_dim(&self) -> usize;

    /// `out ← op(x)`; `x.len() == in_dim`, `out.len() == out_dim`.
    fn apply_into(&self, x: &[f64], out: &mut [f64]);

    /// `out ← op*(y)`; `y.len() == out_dim`, `out.len() == in_dim`.
    fn apply_adjoint_into(&self, y: &[f64], out: &mut [f64]);

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.out_dim()];
        self.apply_into(x, &mut out);
        out
    }

    fn apply_adjoint(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.in_dim()];
        self.apply_adjoint_into(y, &mut out);
        out
    }

    /// Materialize the operator column by column.
    fn to_dense(&self) -> DenseMatrix {
        let (m, n) = (self.out_dim(), self.in_dim());
        let mut dense = DenseMatrix::zeros(m, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            let col = self.apply(&e);
            for (i, v) in col.into_iter().enumerate() {
                dense.data[i * n + j] = v;
            }
            e[j] = 0.0;
        }
        dense
    }
}

pub type SharedOperator = Arc<dyn LinearOperator>;

/// Row-major dense matrix.
#[derive(Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DenseMatrix({}x{})", self.rows, self.cols)
    }
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid("shape", "rows and cols must be positive"));
        }
        check_dim("DenseMatrix entries", rows * cols, data.len())?;
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, d) in diag.iter().enumerate() {
            m.data[i * n + i] = *d;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Entries i.i.d. standard normal, drawn row-major from `seed`.
    pub fn gaussian(rows: usize, cols: usize, seed: u64) -> Self {
        let mut rng = rng::stream(seed, &[tag::MEASUREMENT]);
        Self {
            rows,
            cols,
            data: rng::gaussian_vec(&mut rng, rows * cols),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<Self> {
        check_dim("matmul inner dimension", self.cols, other.rows)?;
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                let orow = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                vector::axpy(a, orow, dst);
            }
        }
        Ok(out)
    }

    /// Keep only the listed rows, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Self {
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }

    pub fn select_columns(&self, idx: &[usize]) -> Self {
        Self::from_fn(self.rows, idx.len(), |i, j| self.get(i, idx[j]))
    }

    pub fn frobenius_norm(&self) -> f64 {
        vector::norm2(&self.data)
    }

    pub fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub fn from_nalgebra(m: &DMatrix<f64>) -> Self {
        Self::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
    }

    pub fn into_shared(self) -> SharedOperator {
        Arc::new(self)
    }
}

impl LinearOperator for DenseMatrix {
    fn in_dim(&self) -> usize {
        self.cols
    }

    fn out_dim(&self) -> usize {
        self.rows
    }

    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        for (i, o) in out.iter_mut().enumerate() {
            *o = vector::dot(self.row(i), x);
        }
    }

    fn apply_adjoint_into(&self, y: &[f64], out: &mut [f64]) {
        debug_assert_eq!(y.len(), self.rows);
        out.iter_mut().for_each(|o| *o = 0.0);
        for (i, &yi) in y.iter().enumerate() {
            if yi != 0.0 {
                vector::axpy(yi, self.row(i), out);
            }
        }
    }

    fn to_dense(&self) -> DenseMatrix {
        self.clone()
    }
}

/// `‖M‖₁,₁ = max ‖Mx‖₁/‖x‖₁`, the largest absolute column sum.
pub fn norm_11(m: &DenseMatrix) -> f64 {
    (0..m.cols())
        .map(|j| (0..m.rows()).map(|i| m.get(i, j).abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy)]
pub struct Identity(pub usize);

impl LinearOperator for Identity {
    fn in_dim(&self) -> usize {
        self.0
    }
    fn out_dim(&self) -> usize {
        self.0
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(x);
    }
    fn apply_adjoint_into(&self, y: &[f64], out: &mut [f64]) {
        out.copy_from_slice(y);
    }
}

/// `scale · inner`
pub struct Scaled {
    pub scale: f64,
    pub inner: SharedOperator,
}

impl LinearOperator for Scaled {
    fn in_dim(&self) -> usize {
        self.inner.in_dim()
    }
    fn out_dim(&self) -> usize {
        self.inner.out_dim()
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        self.inner.apply_into(x, out);
        out.iter_mut().for_each(|v| *v *= self.scale);
    }
    fn apply_adjoint_into(&self, y: &[f64], out: &mut [f64]) {
        self.inner.apply_adjoint_into(y, out);
        out.iter_mut().for_each(|v| *v *= self.scale);
    }
}

/// The adjoint of an operator, viewed as an operator.
pub struct Adjoint(pub SharedOperator);

impl LinearOperator for Adjoint {
    fn in_dim(&self) -> usize {
        self.0.out_dim()
    }
    fn out_dim(&self) -> usize {
        self.0.in_dim()
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        self.0.apply_adjoint_into(x, out);
    }
    fn apply_adjoint_into(&self, y: &[f64], out: &mut [f64]) {
        self.0.apply_into(y, out);
    }
}

/// `outer ∘ inner`: applies `inner` first.
pub struct Composed {
    outer: SharedOperator,
    inner: SharedOperator,
}

impl LinearOperator for Composed {
    fn in_dim(&self) -> usize {
        self.inner.in_dim()
    }
    fn out_dim(&self) -> usize {
        self.outer.out_dim()
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        let mid = self.inner.apply(x);
        self.outer.apply_into(&mid, out);
    }
    fn apply_adjoint_into(&self, y: &[f64], out: &mut [f64]) {
        let mid = self.outer.apply_adjoint(y);
        self.inner.apply_adjoint_into(&mid, out);
    }
}

/// `f ∘ g`. Fails unless `f.in_dim == g.out_dim`.
pub fn compose(f: SharedOperator, g: SharedOperator) -> Result<Composed> {
    check_dim("compose (f.in_dim vs g.out_dim)", g.out_dim(), f.in_dim())?;
    Ok(Composed { outer: f, inner: g })
}

/// Result of a power-iteration norm estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormEstimate {
    /// Estimated largest singular value.
    pub sigma: f64,
    /// Set when the iteration collapsed to zero (zero operator or a start
    /// vector in the null space).
    pub degenerate: bool,
}

/// Largest singular value of `op` by power iteration on `op* ∘ op`.
///
/// The estimate is `‖op v‖` for the unit iterate `v`; for a positive
/// semidefinite `op* op` these Rayleigh quotients are nondecreasing, and the
/// running maximum is returned so that more iterations never give a smaller
/// value under rounding.
pub fn spectral_norm(op: &dyn LinearOperator, iters: usize, seed: u64) -> Result<NormEstimate> {
    if iters == 0 {
        return Err(Error::invalid("iters", "power iteration needs at least one step"));
    }
    let mut rng = rng::stream(seed, &[tag::POWER]);
    let mut v = rng::gaussian_vec(&mut rng, op.in_dim());
    let mut best = 0.0f64;
    let nv = vector::norm2(&v);
    if nv == 0.0 {
        return Ok(NormEstimate {
            sigma: 0.0,
            degenerate: true,
        });
    }
    v.iter_mut().for_each(|x| *x /= nv);
    for _ in 0..iters {
        let av = op.apply(&v);
        let sigma = vector::norm2(&av);
        best = best.max(sigma);
        let mut w = op.apply_adjoint(&av);
        let nw = vector::norm2(&w);
        if nw == 0.0 || !nw.is_finite() {
            break;
        }
        w.iter_mut().for_each(|x| *x /= nw);
        v = w;
    }
    Ok(NormEstimate {
        sigma: best,
        degenerate: best == 0.0,
    })
}

/// Worst relative violation of `⟨op u, v⟩ = ⟨u, op* v⟩` over random pairs.
pub fn adjoint_mismatch(op: &dyn LinearOperator, pairs: usize, seed: u64) -> f64 {
    let mut rng = rng::stream(seed, &[tag::PAIRS]);
    let mut worst = 0.0f64;
    for _ in 0..pairs {
        let u = rng::gaussian_vec(&mut rng, op.in_dim());
        let v = rng::gaussian_vec(&mut rng, op.out_dim());
        let lhs = vector::dot(&op.apply(&u), &v);
        let rhs = vector::dot(&u, &op.apply_adjoint(&v));
        let scale = lhs.abs().max(rhs.abs()).max(f64::MIN_POSITIVE);
        worst = worst.max((lhs - rhs).abs() / scale);
    }
    worst
}
