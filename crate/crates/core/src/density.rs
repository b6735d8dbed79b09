//! Density `f(x; α, β)` and its spatial derivative from the integral
//! representation.
//!
//! For `y = x - ζ > 0`, with `z = y^(α/(α-1))` and `u(λ) = z A(1 - λ)`:
//!
//! ```text
//! f  = α / (2(α-1) y) ∫ u e^{-u} dλ
//! f' = α / (2(α-1)² y²) (∫ u e^{-u} dλ - α ∫ u² e^{-u} dλ)
//! ```
//!
//! over `λ ∈ (0, 1 + ϱ)`. Since `u` is monotone in `λ`, the range is cut where
//! `u` crosses fixed levels, so every segment sees at most a modest change of
//! scale; the part where `u > 750` contributes below the smallest double and
//! is dropped. `x < ζ` goes through `f(x; α, β) = f(-x; α, -β)`, points within
//! [`NEAR_MODE_THRESHOLD`] of `ζ` are delegated to the Fourier inversion, and
//! `α = 2` uses the closed Gaussian form.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier;
use crate::integrand::Kernel;
use crate::params::{standardize, Shape, StableParams};
use crate::quadrature::{integrate_vec, QuadConfig, VecQuadResult};

/// Half-width of the band around `ζ` handled by Fourier inversion.
pub const NEAR_MODE_THRESHOLD: f64 = 0.05;

/// `1 / (2√π)`.
pub const GAUSSIAN_PEAK: f64 = 0.282_094_791_773_878_14;

/// `u` beyond which `u e^{-u}` underflows.
const U_CUTOFF: f64 = 750.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DensityMethod {
    NolanIntegral,
    FourierFallback,
    GaussianExact,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityResult {
    pub value: f64,
    pub abs_error: f64,
    pub method: DensityMethod,
}

/// `f(x; 2) = exp(-x²/4) / (2√π)`, the `N(0, 2)` density.
pub fn gaussian_density(x: f64) -> f64 {
    GAUSSIAN_PEAK * (-0.25 * x * x).exp()
}

/// `f'(x; 2) = -(x/2) f(x; 2)`.
pub fn gaussian_density_deriv(x: f64) -> f64 {
    -0.5 * x * gaussian_density(x)
}

fn nolan_config() -> QuadConfig {
    QuadConfig::with_tolerances(1e-300, 1e-12)
}

/// `(∫ u e^{-u}, ∫ u² e^{-u})` over `λ` for `y > 0` on the `x > ζ` branch.
pub(crate) fn nolan_integrals(y: f64, shape: &Shape) -> VecQuadResult<2> {
    let k = Kernel::new(shape);
    let ln_z = k.alpha / (k.alpha - 1.0) * y.ln();

    // λ-positions where ln u crosses these levels; the last one is ln(750),
    // above which the integrand underflows.
    const LEVELS: [f64; 13] = [-12.0, -6.0, -3.0, -1.5, -0.5, 0.0, 0.5, 1.0, 1.6, 2.3, 3.4, 4.6, 5.7];
    let hi = k.l_max;
    let ln_u_max = k.log_a(hi * (1.0 - 1e-15)) + ln_z;
    let mut breaks: Vec<f64> = vec![0.0];
    for &c in &LEVELS {
        if ln_u_max <= c {
            break;
        }
        let lo = *breaks.last().unwrap();
        let lam = k.solve_log_a(c - ln_z, lo.max(f64::MIN_POSITIVE), hi);
        if lam > lo * (1.0 + 1e-9) && lam < hi {
            breaks.push(lam);
        }
    }
    let top = if ln_u_max > U_CUTOFF.ln() {
        k.solve_log_a(U_CUTOFF.ln() - ln_z, breaks.last().unwrap().max(f64::MIN_POSITIVE), hi)
    } else {
        hi
    };
    while breaks.len() > 1 && *breaks.last().unwrap() >= top {
        breaks.pop();
    }
    breaks.push(top);

    let g = |lam: f64| {
        let ln_u = ln_z + k.log_a(lam);
        let u = ln_u.exp();
        let w = u * (-u).exp();
        [w, w * u]
    };
    integrate_vec(g, &breaks, &nolan_config()).expect("breakpoints are increasing")
}

fn check_point(x: f64, alpha: f64, beta: f64) -> Result<Shape> {
    if !x.is_finite() {
        return Err(Error::Domain {
            what: "density",
            detail: format!("x must be finite, got {x}"),
        });
    }
    Shape::new(alpha, beta)
}

fn nolan_result(r: &VecQuadResult<2>, what: &'static str, value: f64, err: f64) -> Result<DensityResult> {
    if !r.converged || !value.is_finite() {
        return Err(Error::NonConvergence {
            what,
            best: value,
            abs_error: err,
        });
    }
    Ok(DensityResult {
        value,
        abs_error: err,
        method: DensityMethod::NolanIntegral,
    })
}

/// Density at standard `(μ, σ) = (0, 1)`.
pub fn density_std(x: f64, alpha: f64, beta: f64) -> Result<DensityResult> {
    let s = check_point(x, alpha, beta)?;
    if s.is_gaussian() {
        return Ok(DensityResult {
            value: gaussian_density(x),
            abs_error: 0.0,
            method: DensityMethod::GaussianExact,
        });
    }
    let y = x - s.zeta;
    if y.abs() <= NEAR_MODE_THRESHOLD {
        return fourier::density_fourier(x, alpha, beta);
    }
    let (y, s) = if y > 0.0 { (y, s) } else { (-y, s.reflected()) };
    let r = nolan_integrals(y, &s);
    let c = alpha / (2.0 * (alpha - 1.0) * y);
    nolan_result(&r, "density", c * r.value[0], c * r.abs_error[0])
}

/// `∂f/∂x` at standard `(μ, σ) = (0, 1)`. The representation is singular at
/// `x = ζ` itself, which is rejected.
pub fn density_deriv_std(x: f64, alpha: f64, beta: f64) -> Result<DensityResult> {
    let s = check_point(x, alpha, beta)?;
    if s.is_gaussian() {
        return Ok(DensityResult {
            value: gaussian_density_deriv(x),
            abs_error: 0.0,
            method: DensityMethod::GaussianExact,
        });
    }
    let y = x - s.zeta;
    if y == 0.0 {
        return Err(Error::SingularPoint { x });
    }
    if y.abs() <= NEAR_MODE_THRESHOLD {
        return fourier::density_deriv_fourier(x, alpha, beta);
    }
    let (ya, sign, s) = if y > 0.0 { (y, 1.0, s) } else { (-y, -1.0, s.reflected()) };
    let r = nolan_integrals(ya, &s);
    let c = alpha / (2.0 * (alpha - 1.0).powi(2) * ya * ya);
    let value = sign * c * (r.value[0] - alpha * r.value[1]);
    let err = c * (r.abs_error[0] + alpha * r.abs_error[1]);
    nolan_result(&r, "density derivative", value, err)
}

/// `f(x; μ, σ, α, β) = f((x - μ)/σ; α, β) / σ`.
pub fn density(x: f64, p: &StableParams) -> Result<DensityResult> {
    p.validate()?;
    let (xs, scale) = standardize(x, p);
    let r = density_std(xs, p.alpha, p.beta)?;
    Ok(DensityResult {
        value: r.value * scale,
        abs_error: r.abs_error * scale,
        ..r
    })
}

/// `∂f/∂x` for general location and scale.
pub fn density_deriv(x: f64, p: &StableParams) -> Result<DensityResult> {
    p.validate()?;
    let (xs, scale) = standardize(x, p);
    let r = density_deriv_std(xs, p.alpha, p.beta)?;
    Ok(DensityResult {
        value: r.value * scale * scale,
        abs_error: r.abs_error * scale * scale,
        ..r
    })
}

/// `∫_0^1 A e^{-y² A} dφ` at `α = 2`, which equals `f(y; 2) / y`.
#[cfg(test)]
fn gaussian_representation(y: f64) -> f64 {
    let cfg = QuadConfig::with_tolerances(1e-15, 1e-13);
    crate::quadrature::integrate(
        |phi| {
            let s = (0.5 * std::f64::consts::PI * phi).sin();
            let a = 1.0 / (4.0 * s * s);
            a * (-y * y * a).exp()
        },
        0.0,
        1.0,
        &cfg,
    )
    .unwrap()
    .value
}
