//! The positive kernel `A(φ; α, β)` of the integral density representation
//!
//! ```text
//! f(x) = α|x-ζ|^(1/(α-1)) / (2(α-1)) ∫_{-ϱ}^{1} A(φ) exp(-|x-ζ|^(α/(α-1)) A(φ)) dφ
//! ```
//!
//! with `A = (C/B) (D E / B)^(1/(α-1))`, where
//! `B = sin(π/2 α(φ+ϱ))`, `C = cos(π/2 (αϱ + (α-1)φ))`, `D = cos(πφ/2)`,
//! `E = cos(π αϱ/2)`. All public functions here are for the branch
//! `x > ζ` (so `ϱ* = ϱ`); the other branch is obtained by flipping `β`.
//!
//! Internally everything is written in `λ = 1 - φ`, which keeps the angles
//! accurate near `φ = 1` where `A` varies over many orders of magnitude,
//! and `A` is carried as `log A`.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::Shape;

/// Distance kept from either end of `(-ϱ, 1)` by the public evaluators.
pub const ENDPOINT_MARGIN: f64 = 1e-12;

/// The trigonometric factors of `A` and of its derivatives at one `φ`.
///
/// `F = cos(π/2 α(φ+ϱ))`, `G = sin(π/2 (αϱ + (α-1)φ))` and
/// `H = sin(πφ/2)` are the companions of `B`, `C`, `D` that appear in `A'`
/// and `A''`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrandFactors {
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub f: f64,
    pub g: f64,
    pub h: f64,
}

/// Precomputed constants for evaluating `A` on one side of the mode.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Kernel {
    pub alpha: f64,
    delta: f64,
    /// `αϱ` for this side.
    a: f64,
    /// Upper end of the `λ` range, `1 + ϱ`.
    pub l_max: f64,
    inv_am1: f64,
    log_e: f64,
}

impl Kernel {
    /// Kernel for `x > ζ` at the given shape.
    pub fn new(shape: &Shape) -> Self {
        let a = shape.alpha_varrho;
        Kernel {
            alpha: shape.alpha,
            delta: shape.delta,
            a,
            l_max: 1.0 + a / shape.alpha,
            inv_am1: 1.0 / (shape.alpha - 1.0),
            log_e: (FRAC_PI_2 * a).cos().ln(),
        }
    }

    fn theta_b(&self, lam: f64) -> f64 {
        FRAC_PI_2 * (self.delta + self.alpha * lam - self.a)
    }

    fn theta_c(&self, lam: f64) -> f64 {
        FRAC_PI_2 * (self.delta - self.a + (self.alpha - 1.0) * lam)
    }

    fn theta_d(&self, lam: f64) -> f64 {
        FRAC_PI_2 * lam
    }

    /// `sin θ_B`, switching to the supplementary angle past `π/2` so that the
    /// zero at `λ = 1 + ϱ` is resolved to full relative precision.
    fn sin_b(&self, lam: f64) -> f64 {
        let tb = self.theta_b(lam);
        if tb <= FRAC_PI_2 {
            tb.sin()
        } else {
            (FRAC_PI_2 * self.alpha * (self.l_max - lam)).sin()
        }
    }

    pub fn log_a(&self, lam: f64) -> f64 {
        let ln_b = self.sin_b(lam).ln();
        let ln_c = self.theta_c(lam).sin().ln();
        let ln_d = self.theta_d(lam).sin().ln();
        ln_c - ln_b + self.inv_am1 * (ln_d + self.log_e - ln_b)
    }

    /// `d log A / dφ`.
    pub fn dlog_a(&self, lam: f64) -> f64 {
        let cot = |t: f64| t.cos() / t.sin();
        let am1 = self.alpha - 1.0;
        let cb = self.theta_b(lam).cos() / self.sin_b(lam);
        FRAC_PI_2
            * (self.alpha * self.alpha * self.inv_am1 * cb
                - am1 * cot(self.theta_c(lam))
                - self.inv_am1 * cot(self.theta_d(lam)))
    }

    /// `d² log A / dφ²`.
    pub fn d2log_a(&self, lam: f64) -> f64 {
        let csc2 = |s: f64| 1.0 / (s * s);
        let am1 = self.alpha - 1.0;
        PI * PI / 4.0
            * self.inv_am1
            * (self.alpha.powi(3) * csc2(self.sin_b(lam))
                - am1.powi(3) * csc2(self.theta_c(lam).sin())
                - csc2(self.theta_d(lam).sin()))
    }

    pub fn factors(&self, lam: f64) -> IntegrandFactors {
        let tb = self.theta_b(lam);
        let tc = self.theta_c(lam);
        let td = self.theta_d(lam);
        IntegrandFactors {
            b: self.sin_b(lam),
            c: tc.sin(),
            d: td.sin(),
            e: self.log_e.exp(),
            f: -tb.cos(),
            g: tc.cos(),
            h: td.cos(),
        }
    }

    /// Smallest `λ` at which `log A ≥ target`, by bisection. `log A` is
    /// increasing in `λ` (equivalently `A` decreasing in `φ`).
    pub fn solve_log_a(&self, target: f64, lo: f64, hi: f64) -> f64 {
        let (mut lo, mut hi) = (lo, hi);
        for _ in 0..200 {
            // Geometric midpoint while the bracket spans decades near λ = 0.
            let mid = if lo > 0.0 && hi / lo > 4.0 {
                (lo * hi).sqrt()
            } else {
                0.5 * (lo + hi)
            };
            if mid <= lo || mid >= hi {
                break;
            }
            if self.log_a(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-12 * hi {
                break;
            }
        }
        0.5 * (lo + hi)
    }
}

fn kernel_at(phi: f64, alpha: f64, beta: f64) -> Result<(Kernel, f64)> {
    let shape = Shape::new(alpha, beta)?;
    let k = Kernel::new(&shape);
    let lo = -shape.varrho();
    if !(phi > lo + ENDPOINT_MARGIN && phi < 1.0 - ENDPOINT_MARGIN) {
        return Err(Error::Domain {
            what: "A(phi)",
            detail: format!("phi = {phi} must lie strictly inside ({lo}, 1)"),
        });
    }
    Ok((k, 1.0 - phi))
}

/// Trigonometric factors `B … H` at `φ`.
pub fn factors(phi: f64, alpha: f64, beta: f64) -> Result<IntegrandFactors> {
    let (k, lam) = kernel_at(phi, alpha, beta)?;
    Ok(k.factors(lam))
}

/// `A(φ; α, β)`. At `α = 2` this is `1 / (4 sin²(πφ/2))`.
pub fn a(phi: f64, alpha: f64, beta: f64) -> Result<f64> {
    let (k, lam) = kernel_at(phi, alpha, beta)?;
    Ok(k.log_a(lam).exp())
}

/// `∂A/∂φ`.
pub fn a_prime(phi: f64, alpha: f64, beta: f64) -> Result<f64> {
    let (k, lam) = kernel_at(phi, alpha, beta)?;
    Ok(k.log_a(lam).exp() * k.dlog_a(lam))
}

/// `∂²A/∂φ²`.
pub fn a_second(phi: f64, alpha: f64, beta: f64) -> Result<f64> {
    let (k, lam) = kernel_at(phi, alpha, beta)?;
    let l1 = k.dlog_a(lam);
    Ok(k.log_a(lam).exp() * (l1 * l1 + k.d2log_a(lam)))
}

/// Scale on which `A(1 - λ)` is approximated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExpansionRegime {
    /// `0 ≤ λ ≤ Δ/ε'`, where `A` rises from 0 to about `1/4`.
    InnerScale,
    /// `λ = Δ^(1/2-ε)` for some `ε ∈ (0, 1/2)`.
    MidScale,
    /// `Δ^(1/2-ε) ≤ λ < 1`.
    OuterScale,
}

/// The small constants that delimit the expansion regimes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpansionConfig {
    pub eps: f64,
    pub eps_prime: f64,
}

impl Default for ExpansionConfig {
    fn default() -> Self {
        ExpansionConfig {
            eps: 0.1,
            eps_prime: 0.1,
        }
    }
}

/// Leading-order approximant of `A(1 - λ)` as `Δ → 0`, with `αϱ` replaced
/// by `-βΔ`:
///
/// * inner: `(λ/Δ)^(1/(1-Δ)) (1+β+λ/Δ) / (1+β+2λ/Δ)²`
/// * mid and outer: `1/4 + π²λ²/16`
pub fn a_expansion(lambda: f64, delta: f64, beta: f64, regime: ExpansionRegime) -> Result<f64> {
    a_expansion_with(lambda, delta, beta, regime, &ExpansionConfig::default())
}

pub fn a_expansion_with(
    lambda: f64,
    delta: f64,
    beta: f64,
    regime: ExpansionRegime,
    cfg: &ExpansionConfig,
) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) || !(lambda >= 0.0) {
        return Err(Error::RegimeMismatch(format!(
            "expansions need 0 < delta < 1 and lambda >= 0, got delta = {delta}, lambda = {lambda}"
        )));
    }
    match regime {
        ExpansionRegime::InnerScale => {
            if lambda > delta / cfg.eps_prime {
                return Err(Error::RegimeMismatch(format!(
                    "inner scale needs lambda <= delta/eps' = {}, got {lambda}",
                    delta / cfg.eps_prime
                )));
            }
            let r = lambda / delta;
            let d = 1.0 + beta + 2.0 * r;
            Ok(r.powf(1.0 / (1.0 - delta)) * (1.0 + beta + r) / (d * d))
        }
        ExpansionRegime::MidScale => {
            if !(lambda > delta.sqrt() && lambda < 1.0) {
                return Err(Error::RegimeMismatch(format!(
                    "mid scale needs sqrt(delta) < lambda < 1, got lambda = {lambda}"
                )));
            }
            Ok(0.25 + PI * PI * lambda * lambda / 16.0)
        }
        ExpansionRegime::OuterScale => {
            let lo = delta.powf(0.5 - cfg.eps);
            if !(lambda >= lo && lambda < 1.0) {
                return Err(Error::RegimeMismatch(format!(
                    "outer scale needs delta^(1/2-eps) = {lo} <= lambda < 1, got {lambda}"
                )));
            }
            Ok(0.25 + PI * PI * lambda * lambda / 16.0)
        }
    }
}

/// Outer-scale approximant of `A'(1 - λ)`:
/// `-π²λ/8 - Δ²(1-λ+β)² / (8λ³)`.
pub fn a_prime_expansion(lambda: f64, delta: f64, beta: f64) -> f64 {
    let w = 1.0 - lambda + beta;
    -PI * PI * lambda / 8.0 - delta * delta * w * w / (8.0 * lambda.powi(3))
}

/// Outer-scale approximant of `A''(1 - λ)`.
pub fn a_second_expansion(lambda: f64, delta: f64, beta: f64) -> f64 {
    let w = 1.0 - lambda + beta;
    let d2 = delta * delta;
    PI * PI / 8.0 + PI * PI / 8.0 * lambda * lambda
        - 3.0 / 8.0 * d2 * w * w / lambda.powi(4)
        - 0.75 * d2 * w / lambda.powi(3) * (1.0 - delta * w * w / (lambda * lambda))
}

/// Outcome of a monotonicity scan of `A` over `(-ϱ, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonotoneReport {
    pub monotone: bool,
    /// `φ` of the first grid point where either check failed.
    pub first_violation: Option<f64>,
}

/// Checks that `A` decreases on an `n_grid`-point interior mesh of
/// `(-ϱ, 1)`, both by the sign of `A'` and by consecutive differences.
/// Comparisons are done on `log A` so that the huge values near `-ϱ` do
/// not overflow.
pub fn check_monotone(alpha: f64, beta: f64, n_grid: usize) -> Result<MonotoneReport> {
    let shape = Shape::new(alpha, beta)?;
    let k = Kernel::new(&shape);
    let lo = -shape.varrho();
    let step = (1.0 - lo) / (n_grid as f64 + 1.0);
    let mut prev = f64::INFINITY;
    for i in 1..=n_grid {
        let phi = lo + step * i as f64;
        let lam = 1.0 - phi;
        let la = k.log_a(lam);
        if !(k.dlog_a(lam) < 0.0) || !(la < prev) {
            return Ok(MonotoneReport {
                monotone: false,
                first_violation: Some(phi),
            });
        }
        prev = la;
    }
    Ok(MonotoneReport {
        monotone: true,
        first_violation: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{fd_derivative, fd_second_derivative};

    #[test]
    fn gaussian_closed_form() {
        assert!((a(0.5, 2.0, 0.3).unwrap() - 0.5).abs() < 1e-15);
        for &phi in &[0.1, 0.37, 0.8, 0.99] {
            let s = (FRAC_PI_2 * phi).sin();
            let exact = 1.0 / (4.0 * s * s);
            assert!((a(phi, 2.0, 0.0).unwrap() / exact - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn gaussian_derivatives_at_half() {
        // A = csc²(πφ/2)/4 ⇒ A'(1/2) = -π/2, A''(1/2) = π².
        assert!((a_prime(0.5, 2.0, 0.0).unwrap() + PI / 2.0).abs() < 1e-13);
        assert!((a_second(0.5, 2.0, 0.0).unwrap() - PI * PI).abs() < 1e-12);
    }

    #[test]
    fn gaussian_second_derivative_near_one() {
        let v = a_second(1.0 - 1e-4, 2.0, 0.0).unwrap();
        assert!((v - PI * PI / 8.0).abs() < 1e-6);
    }

    #[test]
    fn vanishes_at_one_below_gaussian() {
        let v = a(1.0 - 1e-11, 1.7, 0.2).unwrap();
        assert!(v > 0.0 && v < 1e-12);
    }

    #[test]
    fn outer_scale_value() {
        let v = a_expansion(0.1, 1e-4, 0.0, ExpansionRegime::OuterScale).unwrap();
        assert!((v - 0.256_168_502_750_680_8).abs() < 1e-12);
    }

    #[test]
    fn inner_scale_values() {
        let delta = 0.01;
        let v = a_expansion(delta, delta, 0.0, ExpansionRegime::InnerScale).unwrap();
        assert!((v - 2.0 / 9.0).abs() < 1e-15);
        assert_eq!(a_expansion(0.0, delta, 0.4, ExpansionRegime::InnerScale).unwrap(), 0.0);
    }

    #[test]
    fn regime_mismatch() {
        assert!(matches!(
            a_expansion(0.5, 0.01, 0.0, ExpansionRegime::InnerScale),
            Err(Error::RegimeMismatch(_))
        ));
        assert!(a_expansion(0.01, 0.01, 0.0, ExpansionRegime::OuterScale).is_err());
        assert!(a_expansion(0.05, 0.01, 0.0, ExpansionRegime::MidScale).is_err());
    }

    #[test]
    fn near_one_matches_outer_expansion() {
        // Δ = 0.1, λ = 0.1: Δ^(0.4) ≈ 0.398 > λ, so use a smaller Δ.
        let lam = 0.1;
        let exact = a(1.0 - lam, 1.999, 0.3).unwrap();
        let approx = a_expansion(lam, 0.001, 0.3, ExpansionRegime::OuterScale).unwrap();
        assert!(((exact - approx) / (lam * lam)).abs() < 0.05);
    }

    #[test]
    fn domain_errors() {
        assert!(a(1.0, 1.8, 0.0).is_err());
        assert!(a(-0.1, 1.8, 0.0).is_err());
        // β > 0 ⇒ ϱ < 0, so the range starts to the right of 0.
        let rho = Shape::new(1.8, 0.5).unwrap().varrho();
        assert!(a(-rho * 0.5, 1.8, 0.5).is_err());
        assert!(a(-rho * 1.5, 1.8, 0.5).is_ok());
    }

    #[test]
    fn derivative_at_mid_scale_point() {
        let (alpha, beta, eps) = (1.95f64, 0.2, 0.1);
        let lam = (2.0 - alpha).powf(0.5 - eps);
        let exact = a_prime(1.0 - lam, alpha, beta).unwrap();
        let fd = fd_derivative(|p| a(p, alpha, beta).unwrap(), 1.0 - lam, 1e-5);
        assert!((exact - fd).abs() < 1e-8 * exact.abs().max(1.0));
    }

    #[test]
    fn derivative_approaches_leading_term() {
        // A'(φ_Δ) ≈ -(π²/8) Δ^(1/2-ε); the relative gap shrinks with Δ.
        let (beta, eps) = (0.2, 0.1);
        let mut prev = f64::INFINITY;
        for &delta in &[1e-2f64, 1e-4, 1e-6] {
            let lam = delta.powf(0.5 - eps);
            let exact = a_prime(1.0 - lam, 2.0 - delta, beta).unwrap();
            let rel = (exact / (-PI * PI / 8.0 * lam) - 1.0).abs();
            assert!(rel < prev, "delta {delta}: {rel}");
            prev = rel;
        }
        assert!(prev < 0.01);
    }

    #[test]
    fn monotone_examples() {
        assert!(check_monotone(1.95, 0.5, 10_000).unwrap().monotone);
        assert!(check_monotone(1.99, -0.9, 10_000).unwrap().monotone);
        assert!(check_monotone(2.0, 0.0, 10).unwrap().monotone);
    }

    #[test]
    fn factors_positive_inside() {
        for &beta in &[-0.9, 0.0, 0.9] {
            let lo = -Shape::new(1.6, beta).unwrap().varrho();
            for i in 1..50 {
                let phi = lo + (1.0 - lo) * i as f64 / 50.0;
                let f = factors(phi, 1.6, beta).unwrap();
                assert!(f.b > 0.0 && f.c > 0.0 && f.d > 0.0 && f.e > 0.0);
            }
        }
    }

    fn interior_grid(alpha: f64, beta: f64, n: usize) -> Vec<f64> {
        let lo = -Shape::new(alpha, beta).unwrap().varrho();
        (1..n).map(|i| lo + (1.0 - lo) * i as f64 / n as f64).collect()
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let h = 1e-5;
        for &alpha in &[1.5, 1.8, 1.9, 1.95, 1.99] {
            for &beta in &[0.0, 0.3, -0.3, 0.9, -0.9] {
                for phi in interior_grid(alpha, beta, 20) {
                    let d1 = a_prime(phi, alpha, beta).unwrap();
                    let fd1 = fd_derivative(|p| a(p, alpha, beta).unwrap(), phi, h);
                    assert!((d1 - fd1).abs() <= 1e-6f64.max(1e-4 * d1.abs()), "A' at {alpha},{beta},{phi}: {d1} vs {fd1}");
                    let d2 = a_second(phi, alpha, beta).unwrap();
                    let fd2 = fd_second_derivative(|p| a(p, alpha, beta).unwrap(), phi, 1e-3);
                    assert!((d2 - fd2).abs() <= 1e-6f64.max(1e-4 * d2.abs()), "A'' at {alpha},{beta},{phi}: {d2} vs {fd2}");
                }
            }
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn positive_inside(alpha in 1.05f64..2.0, beta in -0.999f64..0.999, t in 0.0001f64..0.9999) {
                let lo = -Shape::new(alpha, beta).unwrap().varrho();
                let phi = lo + (1.0 - lo) * t;
                let v = a(phi, alpha, beta).unwrap();
                prop_assert!(v > 0.0);
            }

            #[test]
            fn decreasing_for_small_delta(delta in 0.001f64..0.5, beta in -0.999f64..0.999) {
                let r = check_monotone(2.0 - delta, beta, 400).unwrap();
                prop_assert!(r.monotone, "violation at {:?}", r.first_violation);
            }
        }
    }
}
