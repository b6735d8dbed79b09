//! Brute-force reference values for tests and the `verify` command.
//!
//! Nothing here touches the (M)-kernel representation or the differentiated
//! inversion integrals: scores come from finite differences of the plain
//! Fourier density, Fisher entries from a trapezoid sum over those scores.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fisher::{Param, ScoreVector, ENTRY_PAIRS, UNDERFLOW_THRESHOLD};
use crate::fourier::density_unchecked;
use crate::params::{check_shape, Shape};
use crate::quadrature::{fd_derivative, fd_derivative_backward};

/// One comparison between a main-pipeline value and its oracle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub quantity: String,
    pub main_value: f64,
    pub oracle_value: f64,
    pub abs_diff: f64,
    pub rel_diff: f64,
    pub pass: bool,
}

impl OracleReport {
    /// Passes when `abs_diff <= abs_tol` or `rel_diff <= rel_tol`.
    pub fn compare(quantity: impl Into<String>, main_value: f64, oracle_value: f64, abs_tol: f64, rel_tol: f64) -> Self {
        let abs_diff = (main_value - oracle_value).abs();
        let rel_diff = if oracle_value != 0.0 {
            abs_diff / oracle_value.abs()
        } else if abs_diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        let same_infinity = main_value.is_infinite() && main_value == oracle_value;
        OracleReport {
            quantity: quantity.into(),
            main_value,
            oracle_value,
            abs_diff: if same_infinity { 0.0 } else { abs_diff },
            rel_diff: if same_infinity { 0.0 } else { rel_diff },
            pass: same_infinity || abs_diff <= abs_tol || rel_diff <= rel_tol,
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

fn step_alpha(alpha: f64) -> Option<f64> {
    let d = 2.0 - alpha;
    (d > 0.0).then(|| (d / 4.0).min(1e-3))
}

/// All four scores by Richardson differences of `log`-free density values:
/// `x` shifted for μ, rescaled for σ, and the shape parameters stepped
/// directly. At `α = 2` the α-derivative is one-sided.
pub fn score_fd(x: f64, alpha: f64, beta: f64) -> Result<ScoreVector> {
    check_shape(alpha, beta)?;
    let f = density_unchecked(x, alpha, beta);
    if !(f > UNDERFLOW_THRESHOLD) {
        return Err(Error::Underflow { x, value: f });
    }
    Ok(scores_at(x, f, alpha, beta))
}

fn scores_at(x: f64, f: f64, alpha: f64, beta: f64) -> ScoreVector {
    let zeta = Shape::new_unchecked(alpha, beta).zeta;
    let hx = 1e-2 * (x - zeta).abs().max(1.0);
    let d_mu = -fd_derivative(|u| density_unchecked(u, alpha, beta), x, hx);
    let d_sigma = fd_derivative(|s| density_unchecked(x / s, alpha, beta) / s, 1.0, 1e-3);
    let d_alpha = match step_alpha(alpha) {
        Some(h) => fd_derivative(|a| density_unchecked(x, a, beta), alpha, h),
        None => fd_derivative_backward(|a| density_unchecked(x, a, beta), alpha, 1e-3),
    };
    let hb = ((1.0 - beta.abs()) / 4.0).min(1e-3);
    let d_beta = fd_derivative(|b| density_unchecked(x, alpha, b), beta, hb);
    ScoreVector {
        s_mu: d_mu / f,
        s_sigma: d_sigma / f,
        s_alpha: d_alpha / f,
        s_beta: d_beta / f,
    }
}

/// Every entry by the trapezoid rule in `u` with `x = ζ + sinh(u)`,
/// `|x - ζ| <= x_max`, `n` nodes, plus a closed-form power-law tail on each
/// side beyond `x_max`. The α row is infinite at `α = 2` and left to the
/// caller; here the sum is simply returned.
pub fn fisher_trapezoid_all(alpha: f64, beta: f64, x_max: f64, n: usize) -> Result<[[f64; 4]; 4]> {
    check_shape(alpha, beta)?;
    if n < 1000 {
        return Err(Error::InvalidParameter {
            name: "n",
            value: n as f64,
            reason: "trapezoid oracle needs at least 1000 nodes",
        });
    }
    if !(x_max > 1.0 && x_max.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "x_max",
            value: x_max,
            reason: "must be finite and > 1",
        });
    }
    let zeta = Shape::new_unchecked(alpha, beta).zeta;
    let u_max = x_max.asinh();
    let h = 2.0 * u_max / (n - 1) as f64;
    let products = |x: f64| -> [f64; 10] {
        let f = density_unchecked(x, alpha, beta);
        if !(f > UNDERFLOW_THRESHOLD) {
            return [0.0; 10];
        }
        let s = scores_at(x, f, alpha, beta).as_array();
        std::array::from_fn(|k| {
            let (i, j) = ENTRY_PAIRS[k];
            s[i] * s[j] * f
        })
    };
    let nodes: Vec<[f64; 10]> = (0..n)
        .into_par_iter()
        .map(|k| {
            let u = -u_max + h * k as f64;
            let w = if k == 0 || k == n - 1 { 0.5 } else { 1.0 } * h * u.cosh();
            products(zeta + u.sinh()).map(|v| v * w)
        })
        .collect();
    let mut sum = [0.0; 10];
    for v in &nodes {
        for k in 0..10 {
            sum[k] += v[k];
        }
    }
    // Tails: s_i s_j f ~ |y|^(-p) with p = 1 + α, one more per μ factor.
    let ends = [products(zeta - x_max), products(zeta + x_max)];
    for (k, &(i, j)) in ENTRY_PAIRS.iter().enumerate() {
        let p = 1.0 + alpha + (i == 0) as u8 as f64 + (j == 0) as u8 as f64;
        sum[k] += (ends[0][k] + ends[1][k]) * x_max / (p - 1.0);
    }
    let mut out = [[0.0; 4]; 4];
    for (k, &(i, j)) in ENTRY_PAIRS.iter().enumerate() {
        out[i][j] = sum[k];
        out[j][i] = sum[k];
    }
    Ok(out)
}

pub fn fisher_trapezoid(i: Param, j: Param, alpha: f64, beta: f64, x_max: f64, n: usize) -> Result<f64> {
    Ok(fisher_trapezoid_all(alpha, beta, x_max, n)?[i.index()][j.index()])
}

/// What a closed-form reference value is the value of.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ClosedFormKind {
    /// `f(0; α, 0) = Γ(1 + 1/α) / π`.
    DensityAtZero { alpha: f64 },
    GaussianDensity { x: f64 },
    GaussianDeriv { x: f64 },
    Zeta { alpha: f64, beta: f64 },
    Varrho { alpha: f64, beta: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedForm {
    pub id: String,
    pub kind: ClosedFormKind,
    pub value: f64,
}

/// Exact reference values.
pub fn closed_forms() -> Vec<ClosedForm> {
    use statrs::function::gamma::gamma;
    use std::f64::consts::PI;
    use ClosedFormKind::*;
    let mut v = Vec::new();
    let mut push = |id: String, kind, value| v.push(ClosedForm { id, kind, value });
    for alpha in [1.5, 1.8, 2.0] {
        push(format!("f(0;{alpha},0)"), DensityAtZero { alpha }, gamma(1.0 + 1.0 / alpha) / PI);
    }
    let g = |x: f64| (-x * x / 4.0).exp() / (2.0 * PI.sqrt());
    for x in [0.0, 1.0, 2.0, 4.0] {
        push(format!("f({x};2)"), GaussianDensity { x }, g(x));
        push(format!("f'({x};2)"), GaussianDeriv { x }, -0.5 * x * g(x));
    }
    // tan(3π/4) = -1, so ζ = β and αϱ = (2/π) arctan(-β).
    push("zeta(1.5,0.5)".into(), Zeta { alpha: 1.5, beta: 0.5 }, 0.5);
    push(
        "varrho(1.5,0.5)".into(),
        Varrho { alpha: 1.5, beta: 0.5 },
        -2.0 / (1.5 * PI) * 0.5f64.atan(),
    );
    push("zeta(2,0.7)".into(), Zeta { alpha: 2.0, beta: 0.7 }, 0.0);
    v
}
