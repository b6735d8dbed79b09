//! Closed-form approximants near the Gaussian boundary.
//!
//! With `y = x - ζ` and `β* = β sgn(y)`, the density splits into a Gaussian
//! core and a power tail,
//!
//! ```text
//! g(x) = F₁ + F₂,   F₁ = f(y; 2),   F₂ = (1 + β*) Δ |y|^(Δ-3),
//! ```
//!
//! the first dominating for `|y| ≤ (2-δ)√(log 1/Δ)` and the second for
//! `|y| ≥ (2+δ)√(log 1/Δ)`. Score approximants are built from `g` and its
//! derivative, and the parameter derivatives have leading tail forms
//! `f_α ≈ -(1+β*)|y|^(-1-α)` and `f_β ≈ Δ sgn(y) |y|^(-1-α)`.

use serde::{Deserialize, Serialize};

use crate::density::{gaussian_density, gaussian_density_deriv};
use crate::error::{Error, Result};
use crate::params::Shape;

/// Default half-width `δ` of the crossover band, in units of `√(log 1/Δ)`.
pub const DEFAULT_DELTA_KNOB: f64 = 0.5;

/// Default `|y|` below which the tail forms of `f_α`, `f_β` are refused.
pub const DEFAULT_TAIL_START: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegimeKind {
    Core,
    Crossover,
    Tail,
}

impl RegimeKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            RegimeKind::Core => "core",
            RegimeKind::Crossover => "crossover",
            RegimeKind::Tail => "tail",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regime {
    pub kind: RegimeKind,
    pub boundary_low: f64,
    pub boundary_high: f64,
    pub delta_knob: f64,
}

fn star(beta: f64, y: f64) -> f64 {
    if y > 0.0 {
        beta
    } else if y < 0.0 {
        -beta
    } else {
        0.0
    }
}

fn check_knob(delta_knob: f64) -> Result<()> {
    if delta_knob > 0.0 && delta_knob < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "delta_knob",
            value: delta_knob,
            reason: "must lie in (0, 1)",
        })
    }
}

/// `((2-δ)√(log 1/Δ), (2+δ)√(log 1/Δ))`; both infinite at `Δ = 0`.
pub fn regime_boundaries(alpha: f64, delta_knob: f64) -> Result<(f64, f64)> {
    check_knob(delta_knob)?;
    let s = Shape::new(alpha, 0.0)?;
    if s.is_gaussian() {
        return Ok((f64::INFINITY, f64::INFINITY));
    }
    let r = (1.0 / s.delta).ln().sqrt();
    Ok(((2.0 - delta_knob) * r, (2.0 + delta_knob) * r))
}

/// Regime of the offset `y = x - ζ` from the mode shift.
pub fn classify(y: f64, alpha: f64, delta_knob: f64) -> Result<Regime> {
    let (lo, hi) = regime_boundaries(alpha, delta_knob)?;
    let a = y.abs();
    let kind = if a <= lo {
        RegimeKind::Core
    } else if a >= hi {
        RegimeKind::Tail
    } else {
        RegimeKind::Crossover
    };
    Ok(Regime {
        kind,
        boundary_low: lo,
        boundary_high: hi,
        delta_knob,
    })
}

/// [`classify`] for a point `x` at skewness `β`.
pub fn classify_x(x: f64, alpha: f64, beta: f64, delta_knob: f64) -> Result<Regime> {
    let s = Shape::new(alpha, beta)?;
    classify(x - s.zeta, alpha, delta_knob)
}

/// `F₁ = f(x - ζ; 2)`.
pub fn f1(x: f64, alpha: f64, beta: f64) -> Result<f64> {
    let s = Shape::new(alpha, beta)?;
    Ok(gaussian_density(x - s.zeta))
}

/// `F₂ = (1 + β*) Δ |x - ζ|^(Δ-3)`; infinite at `x = ζ` unless `Δ = 0`.
pub fn f2(x: f64, alpha: f64, beta: f64) -> Result<f64> {
    let s = Shape::new(alpha, beta)?;
    let y = x - s.zeta;
    if s.is_gaussian() {
        return Ok(0.0);
    }
    Ok((1.0 + star(beta, y)) * s.delta * y.abs().powf(s.delta - 3.0))
}

/// `g = F₁ + F₂`.
pub fn g_density(x: f64, alpha: f64, beta: f64) -> Result<f64> {
    Ok(f1(x, alpha, beta)? + f2(x, alpha, beta)?)
}

/// `F₁' = -((x-ζ)/2) f(x-ζ; 2)`.
pub fn f1_prime(x: f64, alpha: f64, beta: f64) -> Result<f64> {
    let s = Shape::new(alpha, beta)?;
    Ok(gaussian_density_deriv(x - s.zeta))
}

/// `F₂' = -3 sgn(x-ζ) (1 + β*) Δ |x - ζ|^(Δ-4)`.
pub fn f2_prime(x: f64, alpha: f64, beta: f64) -> Result<f64> {
    let s = Shape::new(alpha, beta)?;
    let y = x - s.zeta;
    if s.is_gaussian() {
        return Ok(0.0);
    }
    Ok(-3.0 * y.signum() * (1.0 + star(beta, y)) * s.delta * y.abs().powf(s.delta - 4.0))
}

/// `g' = F₁' + F₂'`.
pub fn g_deriv(x: f64, alpha: f64, beta: f64) -> Result<f64> {
    Ok(f1_prime(x, alpha, beta)? + f2_prime(x, alpha, beta)?)
}

/// `-g'/g`, the approximant of the location score `-f'/f`.
pub fn score_mu_approx(x: f64, alpha: f64, beta: f64) -> Result<f64> {
    Ok(-g_deriv(x, alpha, beta)? / g_density(x, alpha, beta)?)
}

/// `g_σ/g = -1 - (x-ζ) g'/g`, the approximant of the scale score.
pub fn score_sigma_approx(x: f64, alpha: f64, beta: f64) -> Result<f64> {
    let s = Shape::new(alpha, beta)?;
    let y = x - s.zeta;
    Ok(-1.0 - y * g_deriv(x, alpha, beta)? / g_density(x, alpha, beta)?)
}

/// Core branch of the location score, `(x-ζ)/2`.
pub fn score_mu_core(y: f64) -> f64 {
    0.5 * y
}

/// Tail branch of the location score, `3/(x-ζ)`.
pub fn score_mu_tail(y: f64) -> f64 {
    3.0 / y
}

/// Core branch of the scale score, `(x-ζ)²/2`.
pub fn score_sigma_core(y: f64) -> f64 {
    0.5 * y * y
}

/// Tail branch of the scale score, the constant 2.
pub fn score_sigma_tail(_y: f64) -> f64 {
    2.0
}

fn tail_offset(x: f64, s: &Shape, y0: f64) -> Result<f64> {
    let y = x - s.zeta;
    if y.abs() < y0 {
        return Err(Error::Domain {
            what: "tail approximant",
            detail: format!("|x - zeta| = {} is below the tail start {y0}", y.abs()),
        });
    }
    Ok(y)
}

/// `-(1 + β*) |x-ζ|^(-(1+α))`, leading order of `f_α` for `|x - ζ| ≥ 5`.
pub fn f_alpha_tail(x: f64, alpha: f64, beta: f64) -> Result<f64> {
    f_alpha_tail_from(x, alpha, beta, DEFAULT_TAIL_START)
}

pub fn f_alpha_tail_from(x: f64, alpha: f64, beta: f64, y0: f64) -> Result<f64> {
    let s = Shape::new(alpha, beta)?;
    let y = tail_offset(x, &s, y0)?;
    Ok(-(1.0 + star(beta, y)) * y.abs().powf(-1.0 - alpha))
}

/// `Δ sgn(x-ζ) |x-ζ|^(-(1+α))`, leading order of `f_β` for `|x - ζ| ≥ 5`.
pub fn f_beta_tail(x: f64, alpha: f64, beta: f64) -> Result<f64> {
    f_beta_tail_from(x, alpha, beta, DEFAULT_TAIL_START)
}

pub fn f_beta_tail_from(x: f64, alpha: f64, beta: f64, y0: f64) -> Result<f64> {
    let s = Shape::new(alpha, beta)?;
    let y = tail_offset(x, &s, y0)?;
    Ok(s.delta * y.signum() * y.abs().powf(-1.0 - alpha))
}
