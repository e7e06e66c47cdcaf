//! Desk-scale MRI-style reconstruction: a piecewise-constant phantom
//! observed through radial lines of its 2D DFT, recovered with a
//! total-variation analysis prior.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::frames::difference_frame;
use crate::linops::LinearOperator;
use crate::rng::{self, tag};
use crate::solvers::{self, AnalysisProblem, ContinuationConfig, IterateTrace, SolverConfig};
use crate::vector;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhantomSpec {
    pub side: usize,
    pub num_radial_lines: usize,
    pub noise_sigma: f64,
}

impl PhantomSpec {
    /// 64×64 image, 15 lines, σ = 0.001.
    pub fn desk_scale() -> Self {
        Self {
            side: 64,
            num_radial_lines: 15,
            noise_sigma: 0.001,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.side < 16 {
            return Err(Error::invalid("side", format!("must be at least 16, got {}", self.side)));
        }
        if self.num_radial_lines == 0 {
            return Err(Error::invalid("num_radial_lines", "must be at least 1"));
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(Error::invalid("noise_sigma", "must be nonnegative"));
        }
        Ok(())
    }
}

/// `(centre row, centre col, semi-axis rows, semi-axis cols, value)` in
/// units of the side length; later ellipses overwrite earlier ones.
const ELLIPSES: [(f64, f64, f64, f64, f64); 5] = [
    (0.5, 0.5, 0.42, 0.34, 0.8),
    (0.5, 0.5, 0.38, 0.30, 0.2),
    (0.45, 0.5, 0.22, 0.16, 0.5),
    (0.42, 0.5, 0.10, 0.07, 1.0),
    (0.68, 0.42, 0.06, 0.05, 0.7),
];

/// Piecewise-constant nested-ellipse image with values in `[0, 1]`,
/// row-major.
pub fn ellipse_phantom(side: usize) -> Vec<f64> {
    let s = side as f64;
    let mut img = vec![0.0; side * side];
    for &(cr, cc, ar, ac, val) in &ELLIPSES {
        for i in 0..side {
            for j in 0..side {
                let y = (i as f64 + 0.5) / s - cr;
                let x = (j as f64 + 0.5) / s - cc;
                if (y / ar).powi(2) + (x / ac).powi(2) <= 1.0 {
                    img[i * side + j] = val;
                }
            }
        }
    }
    img
}

fn bresenham(x0: i64, y0: i64, x1: i64, y1: i64, mut visit: impl FnMut(i64, i64)) {
    let dx = (x1 - x0).abs();
    let dy = -(y1 - y0).abs();
    let sx = if x0 < x1 { 1 } else { -1 };
    let sy = if y0 < y1 { 1 } else { -1 };
    let (mut x, mut y, mut err) = (x0, y0, dx + dy);
    loop {
        visit(x, y);
        if x == x1 && y == y1 {
            return;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
}

/// Lines beyond which a radial mask adds nothing new at this side length.
pub fn max_radial_lines(side: usize) -> usize {
    2 * side
}

/// Sorted flat indices (`row·side + col`, DFT layout with DC at 0) of the
/// frequencies nearest `lines` lines through the origin at angles `jπ/lines`.
/// DC is always included.
pub fn radial_mask(side: usize, lines: usize) -> Vec<usize> {
    let lines = if lines > max_radial_lines(side) {
        log::warn!(
            "{lines} radial lines exceed what a {side}x{side} grid resolves; clamping to {}",
            max_radial_lines(side)
        );
        max_radial_lines(side)
    } else {
        lines
    };
    let n = side as i64;
    let half = n / 2;
    let mut keep = vec![false; side * side];
    keep[0] = true;
    let clamp = |v: f64| (v.round() as i64).clamp(-half, n - half - 1);
    for j in 0..lines {
        let theta = std::f64::consts::PI * j as f64 / lines as f64;
        let (s, c) = theta.sin_cos();
        let r = half as f64;
        let (x0, y0) = (clamp(-r * c), clamp(-r * s));
        let (x1, y1) = (clamp(r * c), clamp(r * s));
        bresenham(x0, y0, x1, y1, |u, v| {
            let row = v.rem_euclid(n) as usize;
            let col = u.rem_euclid(n) as usize;
            keep[row * side + col] = true;
        });
    }
    (0..side * side).filter(|&i| keep[i]).collect()
}

/// Sampled unitary 2D DFT of a real `side × side` image, returned as
/// `[Re; Im]` of the kept frequencies. Its norm is at most 1.
pub struct PartialFourier {
    side: usize,
    mask: Vec<usize>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for PartialFourier {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PartialFourier")
            .field("side", &self.side)
            .field("samples", &self.mask.len())
            .finish()
    }
}

impl PartialFourier {
    pub fn new(side: usize, mask: Vec<usize>) -> Result<Self> {
        if side == 0 {
            return Err(Error::invalid("side", "must be positive"));
        }
        if mask.is_empty() {
            return Err(Error::invalid("mask", "must keep at least one frequency"));
        }
        if let Some(&bad) = mask.iter().find(|&&i| i >= side * side) {
            return Err(Error::invalid("mask", format!("index {bad} outside a {side}x{side} grid")));
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            side,
            forward: planner.plan_fft_forward(side),
            inverse: planner.plan_fft_inverse(side),
            mask,
        })
    }

    /// Every frequency.
    pub fn full(side: usize) -> Result<Self> {
        Self::new(side, (0..side * side).collect())
    }

    pub fn radial(side: usize, lines: usize) -> Result<Self> {
        Self::new(side, radial_mask(side, lines))
    }

    pub fn mask(&self) -> &[usize] {
        &self.mask
    }

    fn fft2(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let n = self.side;
        for row in data.chunks_exact_mut(n) {
            fft.process(row);
        }
        let mut col = vec![Complex64::new(0.0, 0.0); n];
        for j in 0..n {
            for i in 0..n {
                col[i] = data[i * n + j];
            }
            fft.process(&mut col);
            for i in 0..n {
                data[i * n + j] = col[i];
            }
        }
        let scale = 1.0 / n as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }
}

impl LinearOperator for PartialFourier {
    fn in_dim(&self) -> usize {
        self.side * self.side
    }

    fn out_dim(&self) -> usize {
        2 * self.mask.len()
    }

    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        let mut data: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fft2(&mut data, &self.forward);
        let k = self.mask.len();
        for (t, &idx) in self.mask.iter().enumerate() {
            out[t] = data[idx].re;
            out[k + t] = data[idx].im;
        }
    }

    fn apply_adjoint_into(&self, y: &[f64], out: &mut [f64]) {
        let k = self.mask.len();
        let mut data = vec![Complex64::new(0.0, 0.0); self.side * self.side];
        for (t, &idx) in self.mask.iter().enumerate() {
            data[idx] += Complex64::new(y[t], y[k + t]);
        }
        self.fft2(&mut data, &self.inverse);
        for (o, v) in out.iter_mut().zip(&data) {
            *o = v.re;
        }
    }
}

/// The phantom, its radial-line measurements (with Gaussian noise of the
/// given level), and a total-variation analysis problem.
pub fn phantom_problem(spec: &PhantomSpec, lambda: f64, seed: u64) -> Result<(AnalysisProblem, Vec<f64>)> {
    spec.validate()?;
    let image = ellipse_phantom(spec.side);
    let op = PartialFourier::radial(spec.side, spec.num_radial_lines)?;
    problem_for_image(&image, spec, op, lambda, seed)
}

/// Same construction for an arbitrary image and sampling operator.
pub fn problem_for_image(image: &[f64], spec: &PhantomSpec, op: PartialFourier, lambda: f64, seed: u64) -> Result<(AnalysisProblem, Vec<f64>)> {
    crate::error::check_dim("image size", spec.side * spec.side, image.len())?;
    let mut b = op.apply(image);
    if spec.noise_sigma > 0.0 {
        let mut r = rng::stream(seed, &[tag::NOISE]);
        let w = rng::gaussian_vec(&mut r, b.len());
        vector::axpy(spec.noise_sigma, &w, &mut b);
    }
    let frame = difference_frame(spec.side, spec.side)?;
    let problem = AnalysisProblem::new(Arc::new(op), b, frame, lambda)?;
    Ok((problem, image.to_vec()))
}

/// How to solve the phantom problem.
#[derive(Debug, Clone)]
pub enum PhantomSolver {
    Single(SolverConfig),
    Continuation(ContinuationConfig),
}

#[derive(Debug, Clone)]
pub struct PhantomResult {
    pub trace: IterateTrace,
    pub image: Vec<f64>,
    pub truth: Vec<f64>,
    pub rel_error: f64,
}

pub fn phantom_experiment(spec: &PhantomSpec, lambda: f64, solver: &PhantomSolver, seed: u64) -> Result<PhantomResult> {
    let (problem, truth) = phantom_problem(spec, lambda, seed)?;
    let trace = match solver {
        PhantomSolver::Single(cfg) => solvers::solve(&problem, cfg, Some(&truth))?,
        PhantomSolver::Continuation(cfg) => solvers::continuation(&problem, cfg, Some(&truth))?,
    };
    let image = trace.x().to_vec();
    let rel_error = vector::relative_error(&image, &truth);
    Ok(PhantomResult {
        trace,
        image,
        truth,
        rel_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::{adjoint_mismatch, spectral_norm};

    #[test]
    fn phantom_values_and_edges() {
        let img = ellipse_phantom(64);
        assert!(img.iter().all(|&v| (0.0..=1.0).contains(&v)));
        let distinct: std::collections::BTreeSet<u64> = img.iter().map(|v| v.to_bits()).collect();
        assert!(distinct.len() >= 5);
        assert_eq!(img[0], 0.0);
    }

    #[test]
    fn mask_contains_dc_and_axes() {
        let m = radial_mask(32, 4);
        assert_eq!(m[0], 0);
        // angle 0 is the horizontal axis through DC
        for col in 0..32 {
            assert!(m.binary_search(&col).is_ok());
        }
        // angle π/2 is the vertical axis
        for row in 0..32 {
            assert!(m.binary_search(&(row * 32)).is_ok());
        }
        assert!(m.len() < 32 * 32);
        assert_eq!(radial_mask(16, 1000), radial_mask(16, max_radial_lines(16)));
    }

    #[test]
    fn operator_adjoint_and_norm() {
        let op = PartialFourier::radial(16, 5).unwrap();
        assert!(adjoint_mismatch(&op, 5, 1) < 1e-12);
        let est = spectral_norm(&op, 200, 2).unwrap();
        assert!(est.sigma <= 1.0 + 1e-12);
    }

    #[test]
    fn full_sampling_is_an_isometry() {
        let op = PartialFourier::full(16).unwrap();
        let x: Vec<f64> = (0..256).map(|i| ((i * 37) % 11) as f64).collect();
        let back = op.apply_adjoint(&op.apply(&x));
        assert!(vector::dist2(&back, &x) < 1e-12 * vector::norm2(&x));
    }

    #[test]
    fn dft_matches_direct_sum() {
        let side = 16;
        let op = PartialFourier::new(side, vec![0, 1, 17, 40]).unwrap();
        let x: Vec<f64> = (0..side * side).map(|i| (i as f64 * 0.31).cos()).collect();
        let y = op.apply(&x);
        for (t, &idx) in op.mask().iter().enumerate() {
            let (k1, k2) = ((idx / side) as f64, (idx % side) as f64);
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..side {
                for j in 0..side {
                    let ph = -2.0 * std::f64::consts::PI * (k1 * i as f64 + k2 * j as f64) / side as f64;
                    acc += Complex64::from_polar(x[i * side + j], ph);
                }
            }
            acc /= side as f64;
            assert!((acc.re - y[t]).abs() < 1e-12 && (acc.im - y[4 + t]).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_image_reconstructs_to_zero() {
        let spec = PhantomSpec {
            side: 16,
            num_radial_lines: 6,
            noise_sigma: 0.0,
        };
        let op = PartialFourier::radial(16, 6).unwrap();
        let (p, truth) = problem_for_image(&vec![0.0; 256], &spec, op, 1e-3, 0).unwrap();
        let tr = solvers::sfista(&p, &SolverConfig::smoothing(1.0, 50), Some(&truth)).unwrap();
        assert!(vector::norm2(tr.x()) < 1e-8);
    }

    #[test]
    fn full_sampling_noiseless_recovers() {
        let spec = PhantomSpec {
            side: 16,
            num_radial_lines: 1,
            noise_sigma: 0.0,
        };
        let img = ellipse_phantom(16);
        let op = PartialFourier::full(16).unwrap();
        let (p, truth) = problem_for_image(&img, &spec, op, 1e-12, 0).unwrap();
        let tr = solvers::sfista(&p, &SolverConfig::smoothing(1e3, 200), Some(&truth)).unwrap();
        assert!(vector::relative_error(tr.x(), &truth) < 1e-6);
    }
}
