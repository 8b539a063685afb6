//! Closed forms for the one-dimensional G-normal law.
//!
//! Along a direction a the law of (a, B_t) is described by σ⁺ = σ_{aaᵀ},
//! σ⁻ = σ_{−aaᵀ} and t. Convex payoffs are priced by the classical Gaussian
//! with variance σ⁺t, concave ones by variance |σ⁻|t.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::integrate;
use crate::sublinear::{directional_sigmas, g_value, Direction, SymMatrix, UncertaintySet};

const QUAD_TOL: f64 = 1e-10;
const QUAD_MAX_INTERVALS: usize = 4000;
const HALF_WIDTH_SD: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GNormalParams {
    pub sigma_plus: f64,
    pub sigma_minus: f64,
    pub t: f64,
}

impl GNormalParams {
    pub fn new(sigma_plus: f64, sigma_minus: f64, t: f64) -> Result<Self> {
        if !(sigma_plus >= 0.0 && sigma_minus <= 0.0 && sigma_plus.is_finite() && sigma_minus.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "need sigma_plus >= 0 >= sigma_minus, got ({sigma_plus}, {sigma_minus})"
            )));
        }
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::InvalidArgument(format!("t must be finite and >= 0, got {t}")));
        }
        Ok(Self { sigma_plus, sigma_minus, t })
    }

    pub fn from_direction(gamma: &UncertaintySet, a: &Direction, t: f64) -> Result<Self> {
        let (sp, sm) = directional_sigmas(gamma, a)?;
        Self::new(sp, sm, t)
    }

    pub fn upper_variance(&self) -> f64 {
        self.sigma_plus * self.t
    }

    pub fn lower_variance(&self) -> f64 {
        self.sigma_minus.abs() * self.t
    }
}

/// (n−1)!! with (−1)!! = 0!! = 1. Exact up to n = 20.
pub fn double_factorial(n: u32) -> Result<u64> {
    if n > 20 {
        return Err(Error::Unsupported(format!("double factorial beyond 20 ({n}) not supported")));
    }
    let mut acc: u64 = 1;
    let mut k = n as u64;
    while k > 1 {
        acc *= k;
        k -= 2;
    }
    Ok(acc)
}

/// E[|N(0, v)|ⁿ].
fn gaussian_abs_moment(v: f64, n: u32) -> Result<f64> {
    if n == 0 {
        return Ok(1.0);
    }
    let scale = v.powf(n as f64 / 2.0);
    let df = double_factorial(n - 1)? as f64;
    if n % 2 == 0 {
        Ok(df * scale)
    } else {
        Ok((2.0 / PI).sqrt() * df * scale)
    }
}

/// E[|B_t^a|ⁿ]: the absolute moment at variance σ⁺t.
pub fn moment_abs(params: &GNormalParams, n: u32) -> Result<f64> {
    gaussian_abs_moment(params.upper_variance(), n)
}

/// E[sign·(B_t^a)ⁿ] for even n: (n−1)!!(σ⁺t)^{n/2} for sign = +1 and
/// −(n−1)!!(|σ⁻|t)^{n/2} for sign = −1.
pub fn moment_even_signed(params: &GNormalParams, n: u32, sign: i8) -> Result<f64> {
    if n % 2 != 0 {
        return Err(Error::InvalidArgument(format!("signed moment needs even n, got {n}")));
    }
    match sign {
        1 => gaussian_abs_moment(params.upper_variance(), n),
        -1 => Ok(-gaussian_abs_moment(params.lower_variance(), n)?),
        _ => Err(Error::InvalidArgument(format!("sign must be +1 or -1, got {sign}"))),
    }
}

/// ∫φ(y) N(x, variance)(dy) by adaptive quadrature on x ± 10 sd.
pub fn gaussian_expectation<F: Fn(f64) -> f64>(variance: f64, payoff: F, x: f64) -> Result<f64> {
    if variance <= 0.0 {
        return Ok(payoff(x));
    }
    let sd = variance.sqrt();
    let base = payoff(x);
    if !base.is_finite() {
        return Err(Error::NonFinite { location: format!("payoff at {x}") });
    }
    let norm = 1.0 / (2.0 * PI * variance).sqrt();
    // integrating φ − φ(x) keeps constants exact
    let integrand = |y: f64| {
        let z = y - x;
        (payoff(y) - base) * norm * (-0.5 * z * z / variance).exp()
    };
    let r = integrate(integrand, x - HALF_WIDTH_SD * sd, x + HALF_WIDTH_SD * sd, QUAD_TOL, QUAD_MAX_INTERVALS)?;
    Ok(base + r.value)
}

/// E[φ(x + B_t^a)] for convex φ.
pub fn convex_payoff_value<F: Fn(f64) -> f64>(params: &GNormalParams, payoff: F, x: f64) -> Result<f64> {
    gaussian_expectation(params.upper_variance(), payoff, x)
}

/// E[φ(x + B_t^a)] for concave φ. With σ⁻ = 0 the law is a point mass.
pub fn concave_payoff_value<F: Fn(f64) -> f64>(params: &GNormalParams, payoff: F, x: f64) -> Result<f64> {
    gaussian_expectation(params.lower_variance(), payoff, x)
}

/// E[(A B_t, B_t)] = 2G(A)t.
pub fn quadratic_form_value(gamma: &UncertaintySet, a_mat: &SymMatrix, t: f64) -> Result<f64> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!("t must be finite and >= 0, got {t}")));
    }
    Ok(2.0 * g_value(gamma, a_mat)? * t)
}
