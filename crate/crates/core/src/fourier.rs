//! Characteristic function and density inversion.
//!
//! With `τ = tan(πα/2)` and `ψ(t) = βτ(t^α - t) - tx`,
//!
//! ```text
//! f(x)   = (1/π) ∫_0^∞ e^{-t^α} cos ψ dt
//! f'(x)  = (1/π) ∫_0^∞ e^{-t^α} t sin ψ dt
//! f_α(x) = (1/π) ∫_0^∞ e^{-t^α} [-t^α ln t cos ψ - sin ψ (βτ t^α ln t + βπ/2 (1+τ²)(t^α - t))] dt
//! f_β(x) = -(1/π) ∫_0^∞ e^{-t^α} τ (t^α - t) sin ψ dt
//! ```
//!
//! All four come out of a single pass over `[0, T*]` with `T*^α = 50`. The
//! range is cut into pieces no longer than half an oscillation period and
//! the pieces are integrated together by the adaptive engine; the
//! truncation remainder is bounded analytically and added to the error.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::density::{DensityMethod, DensityResult};
use crate::error::{Error, Result};
use crate::params::Shape;
use crate::quadrature::{integrate_vec_l1, QuadConfig};

/// `t^α` at the truncation point.
const TRUNCATION_EXPONENT: f64 = 50.0;

/// Values with modulus below this are reported as exact zeros by
/// [`density_fourier`] when they come out negative.
const NEGATIVE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicEvaluation {
    pub t: f64,
    pub re: f64,
    pub im: f64,
    /// `exp(-|t|^α)`, the modulus of the value.
    pub decay_envelope: f64,
}

/// `Φ(t; α, β) = exp(-|t|^α {1 + iβ sgn(t) tan(πα/2)(|t|^(1-α) - 1)})`.
pub fn cf(t: f64, alpha: f64, beta: f64) -> Result<Complex64> {
    let e = cf_eval(t, alpha, beta)?;
    Ok(Complex64::new(e.re, e.im))
}

pub fn cf_eval(t: f64, alpha: f64, beta: f64) -> Result<CharacteristicEvaluation> {
    let s = Shape::new(alpha, beta)?;
    let at = t.abs();
    let ta = at.powf(alpha);
    let envelope = (-ta).exp();
    let phase = if s.is_gaussian() {
        0.0
    } else {
        beta * s.tan_pa2 * t.signum() * (ta - at)
    };
    let (sin, cos) = phase.sin_cos();
    Ok(CharacteristicEvaluation {
        t,
        re: envelope * cos,
        im: envelope * sin,
        decay_envelope: envelope,
    })
}

/// `f`, `f'`, `f_α`, `f_β` at one point from a single inversion pass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourierBundle {
    pub f: f64,
    pub f_prime: f64,
    pub f_alpha: f64,
    pub f_beta: f64,
    pub abs_error: [f64; 4],
    pub converged: bool,
    /// Set at `α = 2`, where `f_α` is the derivative from the left.
    pub one_sided_alpha: bool,
}

/// A parameter derivative of the density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivativeResult {
    pub value: f64,
    pub abs_error: f64,
    pub one_sided: bool,
}

fn fourier_config(pieces: usize) -> QuadConfig {
    QuadConfig {
        abs_tol: 1e-17,
        rel_tol: 1e-12,
        max_subdivisions: 4 * pieces + 2000,
        ..QuadConfig::default()
    }
}

pub(crate) fn bundle_std(x: f64, s: &Shape) -> FourierBundle {
    let alpha = s.alpha;
    let beta = s.beta;
    let tau = if s.is_gaussian() { 0.0 } else { s.tan_pa2 };
    let bt = beta * tau;
    let slope = beta * FRAC_PI_2 * (1.0 + tau * tau);
    let t_max = TRUNCATION_EXPONENT.powf(1.0 / alpha);

    // Fastest phase speed |ψ'(t)| on the range bounds the piece width.
    let y = x - s.zeta;
    let speed = (y.abs() + bt.abs() * (alpha * t_max.powf(alpha - 1.0) + 1.0)).max(1.0);
    let pieces = ((t_max * speed / PI).ceil() as usize).max(2);
    let breaks: Vec<f64> = (0..=pieces).map(|i| t_max * i as f64 / pieces as f64).collect();

    let g = |t: f64| {
        let ta = t.powf(alpha);
        let e = (-ta).exp();
        if e == 0.0 {
            return [0.0; 4];
        }
        let psi = bt * (ta - t) - t * x;
        let (sin, cos) = psi.sin_cos();
        let tl = ta * t.ln();
        [
            e * cos,
            e * t * sin,
            e * (-tl * cos - sin * (bt * tl + slope * (ta - t))),
            -e * tau * (ta - t) * sin,
        ]
    };
    let r = integrate_vec_l1(g, &breaks, &fourier_config(pieces), 1e-13)
        .expect("breakpoints are increasing and the configuration is valid");

    // ∫_T^∞ e^{-t^α} t^k dt ≤ e^{-T^α} T^k / (α T^(α-1) - k/T), crude but safe.
    let tail = (-TRUNCATION_EXPONENT).exp() / (alpha * t_max.powf(alpha - 1.0) - 2.0 / t_max).max(0.5);
    let poly = TRUNCATION_EXPONENT * (1.0 + t_max.ln()) * (1.0 + bt.abs()) + slope.abs() * TRUNCATION_EXPONENT;
    let trunc = [tail, tail * t_max, tail * poly, tail * tau.abs() * TRUNCATION_EXPONENT];

    FourierBundle {
        f: r.value[0] / PI,
        f_prime: r.value[1] / PI,
        f_alpha: r.value[2] / PI,
        f_beta: r.value[3] / PI,
        abs_error: std::array::from_fn(|k| (r.abs_error[k] + trunc[k]) / PI),
        converged: r.converged,
        one_sided_alpha: s.is_gaussian(),
    }
}

/// `f`, `f'`, `f_α` and `f_β` at `x` for standard `(μ, σ) = (0, 1)`.
pub fn fourier_bundle(x: f64, alpha: f64, beta: f64) -> Result<FourierBundle> {
    check_x(x)?;
    let s = Shape::new(alpha, beta)?;
    let b = bundle_std(x, &s);
    if !b.converged {
        return Err(Error::NonConvergence {
            what: "Fourier inversion",
            best: b.f,
            abs_error: b.abs_error[0],
        });
    }
    Ok(b)
}

fn check_x(x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain {
            what: "Fourier inversion",
            detail: format!("x must be finite, got {x}"),
        })
    }
}

fn converged(b: &FourierBundle, k: usize, what: &'static str) -> Result<()> {
    if b.converged {
        Ok(())
    } else {
        let best = [b.f, b.f_prime, b.f_alpha, b.f_beta][k];
        Err(Error::NonConvergence {
            what,
            best,
            abs_error: b.abs_error[k],
        })
    }
}

/// Density by inversion of the characteristic function.
///
/// Slightly negative values produced by rounding in the far tail are clipped
/// to zero.
pub fn density_fourier(x: f64, alpha: f64, beta: f64) -> Result<DensityResult> {
    check_x(x)?;
    let s = Shape::new(alpha, beta)?;
    let b = bundle_std(x, &s);
    converged(&b, 0, "Fourier density")?;
    let mut value = b.f;
    if value < 0.0 {
        if value < -NEGATIVE_SLACK.max(b.abs_error[0]) {
            log::warn!("Fourier density {value:e} at x = {x} clipped to zero");
        }
        value = 0.0;
    }
    Ok(DensityResult {
        value,
        abs_error: b.abs_error[0],
        method: DensityMethod::FourierFallback,
    })
}

/// `f'(x)` by inversion.
pub fn density_deriv_fourier(x: f64, alpha: f64, beta: f64) -> Result<DensityResult> {
    check_x(x)?;
    let s = Shape::new(alpha, beta)?;
    let b = bundle_std(x, &s);
    converged(&b, 1, "Fourier density derivative")?;
    Ok(DensityResult {
        value: b.f_prime,
        abs_error: b.abs_error[1],
        method: DensityMethod::FourierFallback,
    })
}

/// `∂f/∂α`. At `α = 2` the left derivative is returned and flagged.
pub fn f_alpha(x: f64, alpha: f64, beta: f64) -> Result<DerivativeResult> {
    check_x(x)?;
    let s = Shape::new(alpha, beta)?;
    let b = bundle_std(x, &s);
    converged(&b, 2, "f_alpha")?;
    Ok(DerivativeResult {
        value: b.f_alpha,
        abs_error: b.abs_error[2],
        one_sided: b.one_sided_alpha,
    })
}

/// `∂f/∂β`; identically zero at `α = 2`.
pub fn f_beta(x: f64, alpha: f64, beta: f64) -> Result<DerivativeResult> {
    check_x(x)?;
    let s = Shape::new(alpha, beta)?;
    let b = bundle_std(x, &s);
    converged(&b, 3, "f_beta")?;
    Ok(DerivativeResult {
        value: b.f_beta,
        abs_error: b.abs_error[3],
        one_sided: false,
    })
}

/// The unchecked density used by finite-difference oracles, which step
/// just outside the validated parameter box.
pub(crate) fn density_unchecked(x: f64, alpha: f64, beta: f64) -> f64 {
    bundle_std(x, &Shape::new_unchecked(alpha, beta)).f
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::fd_derivative;

    const GAMMA_5_3_OVER_PI: f64 = 0.287_352_751_452_164_45;

    #[test]
    fn cf_special_points() {
        assert_eq!(cf(0.0, 1.7, 0.4).unwrap(), Complex64::new(1.0, 0.0));
        let v = cf(1.0, 1.7, 0.4).unwrap();
        assert!((v.re - (-1f64).exp()).abs() < 1e-16 && v.im.abs() < 1e-16);
        let v = cf(2.5, 1.6, 0.0).unwrap();
        assert!((v.re - (-(2.5f64.powf(1.6))).exp()).abs() < 1e-16 && v.im == 0.0);
        let v = cf(3.0, 2.0, 0.9).unwrap();
        assert_eq!(v, Complex64::new((-9f64).exp(), 0.0));
    }

    #[test]
    fn density_at_zero_symmetric() {
        let r = density_fourier(0.0, 1.5, 0.0).unwrap();
        assert!((r.value - GAMMA_5_3_OVER_PI).abs() < 1e-12, "{}", r.value);
        assert_eq!(r.method, DensityMethod::FourierFallback);
    }

    #[test]
    fn gaussian_value() {
        let r = density_fourier(1.0, 2.0, 0.0).unwrap();
        assert!((r.value - 0.219_695_644_733_861_2).abs() < 1e-13);
        let d = density_deriv_fourier(1.0, 2.0, 0.0).unwrap();
        assert!((d.value + 0.109_847_822_366_930_6).abs() < 1e-13);
    }

    #[test]
    fn gaussian_parameter_derivatives() {
        let b = f_beta(0.7, 2.0, 0.3).unwrap();
        assert_eq!(b.value, 0.0);
        let a = f_alpha(0.7, 2.0, 0.3).unwrap();
        assert!(a.one_sided);
        let fd = (density_unchecked(0.7, 2.0, 0.3) - density_unchecked(0.7, 2.0 - 1e-5, 0.3)) / 1e-5;
        assert!((a.value - fd).abs() < 1e-4, "{} vs {fd}", a.value);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let (x, alpha, beta) = (1.2, 1.8, 0.5);
        let a = f_alpha(x, alpha, beta).unwrap().value;
        let fa = fd_derivative(|al| density_unchecked(x, al, beta), alpha, 1e-4);
        assert!((a - fa).abs() < 1e-5f64.max(1e-5 * a.abs()), "{a} vs {fa}");
        let b = f_beta(x, alpha, beta).unwrap().value;
        let fb = fd_derivative(|be| density_unchecked(x, alpha, be), beta, 1e-4);
        assert!((b - fb).abs() < 1e-5f64.max(1e-5 * b.abs()), "{b} vs {fb}");
        let d = density_deriv_fourier(x, alpha, beta).unwrap().value;
        let fx = fd_derivative(|xx| density_unchecked(xx, alpha, beta), x, 1e-4);
        assert!((d - fx).abs() < 1e-9, "{d} vs {fx}");
    }

    #[test]
    fn grid_of_parameter_derivatives() {
        for &alpha in &[1.5, 1.8, 1.95] {
            for &beta in &[-0.5, 0.0, 0.5] {
                for &x in &[-4.0, -1.0, 0.0, 1.5, 6.0] {
                    let b = fourier_bundle(x, alpha, beta).unwrap();
                    let fa = fd_derivative(|al| density_unchecked(x, al, beta), alpha, 1e-4);
                    let fb = fd_derivative(|be| density_unchecked(x, alpha, be), beta, 1e-4);
                    assert!((b.f_alpha - fa).abs() <= 1e-6f64.max(1e-4 * fa.abs()), "f_alpha {alpha} {beta} {x}");
                    assert!((b.f_beta - fb).abs() <= 1e-6f64.max(1e-4 * fb.abs()), "f_beta {alpha} {beta} {x}");
                }
            }
        }
    }

    #[test]
    fn reflection_identities() {
        for &x in &[0.3, 2.0, 7.5, 40.0] {
            let p = fourier_bundle(x, 1.85, 0.6).unwrap();
            let m = fourier_bundle(-x, 1.85, -0.6).unwrap();
            assert!((p.f - m.f).abs() < 1e-12);
            assert!((p.f_prime + m.f_prime).abs() < 1e-12);
            assert!((p.f_alpha - m.f_alpha).abs() < 1e-12);
            assert!((p.f_beta + m.f_beta).abs() < 1e-12);
        }
    }

    #[test]
    fn symmetric_family_has_even_alpha_derivative() {
        for &x in &[0.5, 3.0, 12.0] {
            let p = f_alpha(x, 1.7, 0.0).unwrap().value;
            let m = f_alpha(-x, 1.7, 0.0).unwrap().value;
            assert!((p - m).abs() < 1e-13);
        }
    }

    #[test]
    fn far_tail_keeps_relative_accuracy() {
        // Far out f ≈ c y^(-1-α) with c = α Γ(α) sin(πα/2) / π.
        let (alpha, beta) = (1.9, 0.0);
        let b = fourier_bundle(200.0, alpha, beta).unwrap();
        let c = alpha * statrs::function::gamma::gamma(alpha) * (0.5 * PI * alpha).sin() / PI;
        let lead = c * 200f64.powf(-1.0 - alpha);
        assert!((b.f / lead - 1.0).abs() < 0.01, "{} vs {lead}", b.f);
        assert!(b.abs_error[0] < 1e-3 * b.f);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(density_fourier(f64::NAN, 1.5, 0.0).is_err());
        assert!(density_fourier(0.0, 0.9, 0.0).is_err());
    }
}
