//! Proximal map of `λ‖·‖₁` and its Moreau envelope.
//!
//! The envelope of `λ‖·‖₁` with parameter `μ` is `Σ λ·H_{λμ}(vᵢ)` where
//! `H_α` is the Huber function; its gradient is `(v − Γ_{λμ}(v)) / μ`.

use crate::error::{Error, Result};

/// Smoothing parameters for the envelope of `λ‖·‖₁`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeParams {
    lambda: f64,
    mu: f64,
}

impl EnvelopeParams {
    pub fn new(lambda: f64, mu: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::invalid("lambda", format!("must be positive and finite, got {lambda}")));
        }
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::invalid("mu", format!("must be positive and finite, got {mu}")));
        }
        Ok(Self { lambda, mu })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Soft-threshold level `λμ` used inside the envelope.
    pub fn threshold(&self) -> f64 {
        self.lambda * self.mu
    }
}

/// Penalty parameters of the split model `λ‖z‖₁ + (ρ/2)‖z − v‖²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingParams {
    lambda: f64,
    rho: f64,
}

impl CouplingParams {
    pub fn new(lambda: f64, rho: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::invalid("lambda", format!("must be positive and finite, got {lambda}")));
        }
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::invalid("rho", format!("must be positive and finite, got {rho}")));
        }
        Ok(Self { lambda, rho })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }
}

#[inline]
pub fn soft_threshold_scalar(z: f64, tau: f64) -> f64 {
    let mag = z.abs() - tau;
    if mag > 0.0 {
        mag.copysign(z)
    } else {
        0.0
    }
}

/// `Γ_τ(z) = [|z| − τ]₊ sgn(z)`, elementwise. Ties `|z| = τ` give exactly 0.
pub fn soft_threshold(z: &[f64], tau: f64) -> Vec<f64> {
    debug_assert!(tau >= 0.0);
    z.iter().map(|&v| soft_threshold_scalar(v, tau)).collect()
}

pub fn soft_threshold_in_place(z: &mut [f64], tau: f64) {
    z.iter_mut().for_each(|v| *v = soft_threshold_scalar(*v, tau));
}

/// Huber function: `x²/(2α)` for `|x| < α`, else `|x| − α/2`.
#[inline]
pub fn huber(x: f64, alpha: f64) -> f64 {
    let a = x.abs();
    if a < alpha {
        x * x / (2.0 * alpha)
    } else {
        a - alpha / 2.0
    }
}

/// `g_μ(v) = Σᵢ λ·H_{λμ}(vᵢ)`.
pub fn envelope_value(v: &[f64], params: &EnvelopeParams) -> f64 {
    let alpha = params.threshold();
    params.lambda * v.iter().map(|&x| huber(x, alpha)).sum::<f64>()
}

/// `(v − Γ_{λμ}(v)) / μ`, the gradient of [`envelope_value`] in `v`.
pub fn envelope_gradient(v: &[f64], params: &EnvelopeParams) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    envelope_gradient_into(v, params, &mut out);
    out
}

pub fn envelope_gradient_into(v: &[f64], params: &EnvelopeParams, out: &mut [f64]) {
    let tau = params.threshold();
    let inv_mu = 1.0 / params.mu;
    for (o, &x) in out.iter_mut().zip(v) {
        *o = (x - soft_threshold_scalar(x, tau)) * inv_mu;
    }
}

/// `argmin_z λ‖z‖₁ + (ρ/2)‖z − v‖²`, i.e. `Γ_{λ/ρ}(v)`.
pub fn partial_min_z(v: &[f64], params: &CouplingParams) -> Vec<f64> {
    soft_threshold(v, params.lambda / params.rho)
}

/// Value of `λ‖z‖₁ + (ρ/2)‖z − v‖²`.
pub fn coupling_value(z: &[f64], v: &[f64], params: &CouplingParams) -> f64 {
    let l1: f64 = z.iter().map(|x| x.abs()).sum();
    let sq: f64 = z.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
    params.lambda * l1 + 0.5 * params.rho * sq
}
