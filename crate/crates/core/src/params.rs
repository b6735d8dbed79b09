//! Parameter container and the derived quantities shared by every module.
//!
//! Densities are evaluated in Zolotarev's (M) parameterization with
//! characteristic function
//!
//! ```text
//! Φ(t) = exp(-|σt|^α {1 + iβ sgn(t) tan(πα/2) (|σt|^(1-α) - 1)} + iμt)
//! ```
//!
//! Everything numeric works at the standard point `(μ, σ) = (0, 1)` and is
//! mapped back through `f(x; μ, σ) = f((x - μ)/σ) / σ`.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest admissible `|β|`. The one-sided laws `β = ±1` are excluded.
pub const BETA_MAX: f64 = 0.999;

/// Location, scale, characteristic exponent and skewness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StableParams {
    pub mu: f64,
    pub sigma: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl StableParams {
    pub fn new(mu: f64, sigma: f64, alpha: f64, beta: f64) -> Result<Self> {
        let p = StableParams {
            mu,
            sigma,
            alpha,
            beta,
        };
        p.validate()?;
        Ok(p)
    }

    /// Standard parameters `(μ, σ) = (0, 1)`.
    pub fn standard(alpha: f64, beta: f64) -> Result<Self> {
        Self::new(0.0, 1.0, alpha, beta)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.mu.is_finite() {
            return Err(Error::InvalidParameter {
                name: "mu",
                value: self.mu,
                reason: "must be finite",
            });
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "sigma",
                value: self.sigma,
                reason: "must be positive and finite",
            });
        }
        check_shape(self.alpha, self.beta)
    }

    pub fn delta(&self) -> f64 {
        2.0 - self.alpha
    }
}

/// `ζ`, `ϱ` and `Δ = 2 - α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedQuantities {
    pub zeta: f64,
    pub varrho: f64,
    pub delta: f64,
}

impl DerivedQuantities {
    /// `ϱ* = ϱ sgn(x - ζ)`, the sign-dependent lower endpoint of the
    /// integral representation.
    pub fn varrho_star(&self, x: f64) -> f64 {
        let s = x - self.zeta;
        if s > 0.0 {
            self.varrho
        } else if s < 0.0 {
            -self.varrho
        } else {
            0.0
        }
    }
}

/// Computes `(ζ, ϱ, Δ)`.
///
/// `tan(πα/2)` is formed as `-tan(πΔ/2)`, which keeps full relative accuracy
/// as `α → 2` and makes `α = 2` return `ζ = ϱ = 0` exactly.
pub fn derive(p: &StableParams) -> Result<DerivedQuantities> {
    p.validate()?;
    let s = Shape::new_unchecked(p.alpha, p.beta);
    Ok(DerivedQuantities {
        zeta: s.zeta,
        varrho: s.varrho(),
        delta: s.delta,
    })
}

/// Maps `x` to the standard point: returns `((x - μ)/σ, 1/σ)`.
pub fn standardize(x: f64, p: &StableParams) -> (f64, f64) {
    ((x - p.mu) / p.sigma, 1.0 / p.sigma)
}

pub(crate) fn check_shape(alpha: f64, beta: f64) -> Result<()> {
    if !(alpha > 1.0 && alpha <= 2.0) {
        return Err(Error::InvalidParameter {
            name: "alpha",
            value: alpha,
            reason: "must lie in (1, 2]",
        });
    }
    if !(beta.abs() <= BETA_MAX) {
        return Err(Error::InvalidParameter {
            name: "beta",
            value: beta,
            reason: "must satisfy |beta| <= 0.999",
        });
    }
    Ok(())
}

/// Shape parameters at the standard point with the trigonometric constants
/// every evaluator needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Shape {
    pub alpha: f64,
    pub beta: f64,
    /// `Δ = 2 - α`.
    pub delta: f64,
    /// `tan(πα/2)`, always `<= 0` on `(1, 2]`.
    pub tan_pa2: f64,
    pub zeta: f64,
    /// `αϱ = (2/π) arctan(β tan(πα/2))`.
    pub alpha_varrho: f64,
}

impl Shape {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        check_shape(alpha, beta)?;
        Ok(Self::new_unchecked(alpha, beta))
    }

    /// No range checks; finite-difference oracles step slightly outside the
    /// validated box.
    pub fn new_unchecked(alpha: f64, beta: f64) -> Self {
        let delta = 2.0 - alpha;
        let tan_pa2 = -(FRAC_PI_2 * delta).tan();
        let zeta = -beta * tan_pa2;
        let alpha_varrho = (beta * tan_pa2).atan() / FRAC_PI_2;
        Shape {
            alpha,
            beta,
            delta,
            tan_pa2,
            zeta,
            alpha_varrho,
        }
    }

    pub fn varrho(&self) -> f64 {
        self.alpha_varrho / self.alpha
    }

    pub fn reflected(&self) -> Self {
        Shape {
            beta: -self.beta,
            zeta: -self.zeta,
            alpha_varrho: -self.alpha_varrho,
            ..*self
        }
    }

    pub fn is_gaussian(&self) -> bool {
        self.delta == 0.0
    }
}
