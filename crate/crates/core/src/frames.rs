//! Analysis operators and cosparse test signals.

use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::seq::index;

use crate::error::{Error, Result};
use crate::linops::{self, DenseMatrix, LinearOperator, SharedOperator};
use crate::rng::{self, tag};
use crate::vector;

/// An analysis operator `D*` (p×n) together with its synthesis adjoint `D`.
///
/// `is_tight` records whether `D D* = I_n` holds; bounds that depend on
/// tightness refuse frames where it is false.
#[derive(Clone)]
pub struct TightFrame {
    d_star: SharedOperator,
    dense: Option<DenseMatrix>,
    is_tight: bool,
}

impl std::fmt::Debug for TightFrame {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TightFrame")
            .field("n", &self.n())
            .field("p", &self.p())
            .field("is_tight", &self.is_tight)
            .finish()
    }
}

impl TightFrame {
    /// Wrap a dense `D*`, checking `D D* = I` to decide tightness.
    pub fn from_dense(d_star: DenseMatrix) -> Self {
        let is_tight = d_star.rows() >= d_star.cols() && tightness_defect(&d_star) < 1e-10;
        Self {
            d_star: Arc::new(d_star.clone()),
            dense: Some(d_star),
            is_tight,
        }
    }

    /// Wrap a matrix-free operator. Tightness is asserted by the caller.
    pub fn from_operator(d_star: SharedOperator, is_tight: bool) -> Self {
        Self {
            d_star,
            dense: None,
            is_tight,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_dense(DenseMatrix::identity(n))
    }

    /// Signal dimension `n`.
    pub fn n(&self) -> usize {
        self.d_star.in_dim()
    }

    /// Number of analysis coefficients `p`.
    pub fn p(&self) -> usize {
        self.d_star.out_dim()
    }

    pub fn is_tight(&self) -> bool {
        self.is_tight
    }

    pub fn analysis_operator(&self) -> &SharedOperator {
        &self.d_star
    }

    /// `D* x`
    pub fn analyze(&self, x: &[f64]) -> Vec<f64> {
        self.d_star.apply(x)
    }

    /// `D v`
    pub fn synthesize(&self, v: &[f64]) -> Vec<f64> {
        self.d_star.apply_adjoint(v)
    }

    /// Dense `D*`, materialized on demand for matrix-free frames.
    pub fn dense_analysis(&self) -> DenseMatrix {
        match &self.dense {
            Some(d) => d.clone(),
            None => self.d_star.to_dense(),
        }
    }

    /// `‖D*D‖₁,₁`
    pub fn gram_norm_11(&self) -> f64 {
        let ds = self.dense_analysis();
        let gram = ds.matmul(&ds.transpose()).expect("square gram");
        linops::norm_11(&gram)
    }

    /// `‖D‖₂`: exactly 1 for tight frames, power iteration otherwise.
    pub fn synthesis_norm(&self, iters: usize, seed: u64) -> f64 {
        if self.is_tight {
            1.0
        } else {
            linops::spectral_norm(self.d_star.as_ref(), iters, seed)
                .map(|e| e.sigma)
                .unwrap_or(0.0)
        }
    }
}

/// `max |(D D* − I)ᵢⱼ|` for a dense `D*`.
pub fn tightness_defect(d_star: &DenseMatrix) -> f64 {
    let n = d_star.cols();
    let ds = d_star.to_nalgebra();
    let g = ds.transpose() * &ds;
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - target).abs());
        }
    }
    worst
}

/// Random tight frame: `D*` is the thin `Q` of a QR factorization of a p×n
/// Gaussian matrix, with column signs fixed so that `R` has a nonnegative
/// diagonal.
pub fn random_tight_frame(n: usize, p: usize, seed: u64) -> Result<TightFrame> {
    if n == 0 {
        return Err(Error::invalid("n", "must be at least 1"));
    }
    if p < n {
        return Err(Error::invalid("p", format!("tight frame needs p >= n, got p={p}, n={n}")));
    }
    let mut r = rng::stream(seed, &[tag::FRAME]);
    let g = DMatrix::from_row_slice(p, n, &rng::gaussian_vec(&mut r, p * n));
    let qr = g.qr();
    let mut q = qr.q();
    let rr = qr.r();
    for j in 0..n {
        if rr[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    Ok(TightFrame::from_dense(DenseMatrix::from_nalgebra(&q)))
}

/// Periodic first differences of a `rows × cols` image (row-major), stacked
/// as `[horizontal; vertical]`. Output length is `2·rows·cols`.
#[derive(Debug, Clone, Copy)]
pub struct Difference2d {
    rows: usize,
    cols: usize,
}

impl Difference2d {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }
}

impl LinearOperator for Difference2d {
    fn in_dim(&self) -> usize {
        self.rows * self.cols
    }

    fn out_dim(&self) -> usize {
        2 * self.rows * self.cols
    }

    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        let (r, c) = (self.rows, self.cols);
        let (h, v) = out.split_at_mut(r * c);
        for i in 0..r {
            let down = ((i + 1) % r) * c;
            for j in 0..c {
                let here = x[i * c + j];
                h[i * c + j] = x[i * c + (j + 1) % c] - here;
                v[i * c + j] = x[down + j] - here;
            }
        }
    }

    fn apply_adjoint_into(&self, y: &[f64], out: &mut [f64]) {
        let (r, c) = (self.rows, self.cols);
        let (h, v) = y.split_at(r * c);
        for i in 0..r {
            let up = ((i + r - 1) % r) * c;
            for j in 0..c {
                let left = (j + c - 1) % c;
                out[i * c + j] = h[i * c + left] - h[i * c + j] + v[up + j] - v[i * c + j];
            }
        }
    }
}

/// 2D periodic finite differences, the total-variation analysis operator.
/// Not a tight frame.
pub fn difference_operator_2d(rows: usize, cols: usize) -> Result<Difference2d> {
    if rows < 2 || cols < 2 {
        return Err(Error::invalid("shape", "difference operator needs rows, cols >= 2"));
    }
    Ok(Difference2d { rows, cols })
}

pub fn difference_frame(rows: usize, cols: usize) -> Result<TightFrame> {
    Ok(TightFrame::from_operator(
        Arc::new(difference_operator_2d(rows, cols)?),
        false,
    ))
}

/// A signal whose analysis coefficients vanish on `cosupport`.
#[derive(Debug, Clone, PartialEq)]
pub struct CosparseSignal {
    pub x: Vec<f64>,
    /// Sorted indices Λ with `(D*x)[Λ] = 0`.
    pub cosupport: Vec<usize>,
}

impl CosparseSignal {
    pub fn l(&self) -> usize {
        self.cosupport.len()
    }
}

const COSPARSE_ATTEMPTS: usize = 16;

/// Draw Λ uniformly with `|Λ| = l`, project a Gaussian vector onto
/// `null(D*_Λ)` and normalize.
pub fn cosparse_signal(frame: &TightFrame, l: usize, seed: u64) -> Result<CosparseSignal> {
    let (n, p) = (frame.n(), frame.p());
    if l > p {
        return Err(Error::invalid("l", format!("cosparsity {l} exceeds p={p}")));
    }
    let ds = frame.dense_analysis();
    let mut r = rng::stream(seed, &[tag::SIGNAL]);
    let mut last_reason = String::new();
    for _ in 0..COSPARSE_ATTEMPTS {
        let mut lambda: Vec<usize> = index::sample(&mut r, p, l).into_vec();
        lambda.sort_unstable();
        let g = rng::gaussian_vec(&mut r, n);
        if l == 0 {
            let nrm = vector::norm2(&g);
            return Ok(CosparseSignal {
                x: vector::scale(&g, 1.0 / nrm),
                cosupport: lambda,
            });
        }
        let basis = null_space_basis(&ds.select_rows(&lambda));
        if basis.ncols() == 0 {
            last_reason = format!("null space of the {l}x{n} restricted analysis operator is trivial");
            continue;
        }
        let gv = nalgebra::DVector::from_column_slice(&g);
        let coeff = basis.transpose() * &gv;
        let x = &basis * coeff;
        let nrm = x.norm();
        if nrm == 0.0 || !nrm.is_finite() {
            last_reason = "projected draw vanished".to_string();
            continue;
        }
        let x: Vec<f64> = x.iter().map(|v| v / nrm).collect();
        return Ok(CosparseSignal { x, cosupport: lambda });
    }
    Err(Error::DegenerateCosupport {
        attempts: COSPARSE_ATTEMPTS,
        reason: last_reason,
    })
}

/// Orthonormal basis (as columns) of the null space of `m`.
pub(crate) fn null_space_basis(m: &DenseMatrix) -> DMatrix<f64> {
    let a = m.to_nalgebra();
    let n = a.ncols();
    let gram = a.transpose() * &a;
    let eig = SymmetricEigen::new(gram);
    let top = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let tol = 1e-12 * top.max(1.0) * n as f64;
    let keep: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] <= tol).collect();
    let mut basis = DMatrix::zeros(n, keep.len());
    for (k, &i) in keep.iter().enumerate() {
        basis.set_column(k, &eig.eigenvectors.column(i));
    }
    basis
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_column_frame_is_unit_vector() {
        let f = random_tight_frame(1, 4, 3).unwrap();
        let col = f.dense_analysis().column(0);
        assert!((vector::norm2(&col) - 1.0).abs() < 1e-14);
        assert!(f.is_tight());
    }

    #[test]
    fn square_frame_is_orthogonal() {
        let f = random_tight_frame(3, 3, 9).unwrap();
        let ds = f.dense_analysis();
        let dds = ds.matmul(&ds.transpose()).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let t = if i == j { 1.0 } else { 0.0 };
                assert!((dds.get(i, j) - t).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn desk_scale_frame_is_tight() {
        for seed in [0, 1, 2] {
            let f = random_tight_frame(120, 144, seed).unwrap();
            assert!(tightness_defect(&f.dense_analysis()) < 1e-10);
        }
    }

    #[test]
    fn frame_rejects_short_p() {
        assert!(random_tight_frame(5, 4, 0).is_err());
    }

    #[test]
    fn frame_is_seed_reproducible() {
        let a = random_tight_frame(6, 8, 42).unwrap().dense_analysis();
        let b = random_tight_frame(6, 8, 42).unwrap().dense_analysis();
        assert_eq!(a, b);
    }

    #[test]
    fn synthesis_after_analysis_is_identity() {
        let f = random_tight_frame(10, 15, 5).unwrap();
        let mut r = rng::stream(1, &[]);
        for _ in 0..20 {
            let x = rng::gaussian_vec(&mut r, 10);
            let back = f.synthesize(&f.analyze(&x));
            assert!(vector::dist2(&back, &x) < 1e-10);
        }
    }

    #[test]
    fn differences_of_constant_vanish() {
        let d = difference_operator_2d(4, 5).unwrap();
        assert!(d.apply(&[2.5; 20]).iter().all(|v| *v == 0.0));
        assert_eq!(d.out_dim(), 40);
    }

    #[test]
    fn difference_hand_example() {
        let d = difference_operator_2d(2, 2).unwrap();
        let g = d.apply(&[1.0, 0.0, 0.0, 0.0]);
        assert_eq!(&g[0..2], &[-1.0, 1.0]);
    }

    #[test]
    fn difference_adjoint_and_norm() {
        let d = difference_operator_2d(8, 8).unwrap();
        assert!(linops::adjoint_mismatch(&d, 20, 7) < 1e-10);
        let est = linops::spectral_norm(&d, 300, 1).unwrap().sigma;
        assert!(est <= 8f64.sqrt() + 1e-12);
        assert!(est > 2.7);
        assert!(!difference_frame(8, 8).unwrap().is_tight());
    }

    #[test]
    fn cosparse_signal_has_exact_zeros() {
        let f = random_tight_frame(12, 16, 4).unwrap();
        let sig = cosparse_signal(&f, 10, 77).unwrap();
        let coeffs = f.analyze(&sig.x);
        let scale = vector::norm_inf(&coeffs);
        let on_cosupport = sig.cosupport.iter().map(|&i| coeffs[i].abs()).fold(0.0, f64::max);
        assert!(on_cosupport < 1e-10 * scale);
        let zeros = coeffs.iter().filter(|c| c.abs() < 1e-10 * scale).count();
        assert!(zeros >= 10);
        assert!((vector::norm2(&sig.x) - 1.0).abs() < 1e-12);
        assert_eq!(sig, cosparse_signal(&f, 10, 77).unwrap());
    }

    #[test]
    fn cosparse_zero_l_is_plain_gaussian() {
        let f = random_tight_frame(5, 7, 1).unwrap();
        let sig = cosparse_signal(&f, 0, 3).unwrap();
        assert!(sig.cosupport.is_empty());
        assert!((vector::norm2(&sig.x) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn full_cosupport_of_orthogonal_frame_fails() {
        let f = random_tight_frame(4, 4, 2).unwrap();
        assert!(matches!(
            cosparse_signal(&f, 4, 0),
            Err(Error::DegenerateCosupport { .. })
        ));
    }
}
