//! Scores and the Fisher information matrix in `θ = (μ, σ, α, β)`.
//!
//! At standard `(μ, σ) = (0, 1)` the parameter derivatives of the density are
//! `f_μ = -f'`, `f_σ = -f - x f'`, and `f_α`, `f_β` from the differentiated
//! inversion formula, and
//!
//! ```text
//! I_ij = ∫ f_i f_j / f dx.
//! ```
//!
//! The integral is taken in `y = |x - ζ|`, adding the two mirror points
//! `ζ ± y` at every node, on segments cut at the regime boundaries of an
//! [`IntervalPlan`] and at doubling points beyond `T`. Past `x_far` each side
//! is continued by a power law whose exponent is fitted to the integrand at
//! `x_far/2` and `x_far`; the difference from the leading-order exponent is
//! charged to the error.

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

use crate::asymptotics::DEFAULT_DELTA_KNOB;
use crate::density::{gaussian_density, gaussian_density_deriv, nolan_integrals, NEAR_MODE_THRESHOLD};
use crate::error::{Error, Result};
use crate::fourier;
use crate::params::Shape;
use crate::quadrature::{integrate_vec, integrate_vec_par, QuadConfig};

/// Densities below this are treated as zero: the scores are not formed and
/// the point contributes nothing.
pub const UNDERFLOW_THRESHOLD: f64 = 1e-300;

/// Largest `x₃` kept in an [`IntervalPlan`].
pub const X3_CAP: f64 = 1e12;

/// Default `T` of the interval plan.
pub const DEFAULT_T: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Param {
    Mu,
    Sigma,
    Alpha,
    Beta,
}

impl Param {
    pub const ALL: [Param; 4] = [Param::Mu, Param::Sigma, Param::Alpha, Param::Beta];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Param::Mu => "mu",
            Param::Sigma => "sigma",
            Param::Alpha => "alpha",
            Param::Beta => "beta",
        }
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Param {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mu" => Ok(Param::Mu),
            "sigma" => Ok(Param::Sigma),
            "alpha" => Ok(Param::Alpha),
            "beta" => Ok(Param::Beta),
            other => Err(Error::Domain {
                what: "parameter name",
                detail: format!("expected one of mu, sigma, alpha, beta; got `{other}`"),
            }),
        }
    }
}

/// `∂ log f / ∂θ` at a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreVector {
    pub s_mu: f64,
    pub s_sigma: f64,
    pub s_alpha: f64,
    pub s_beta: f64,
}

impl ScoreVector {
    pub fn as_array(&self) -> [f64; 4] {
        [self.s_mu, self.s_sigma, self.s_alpha, self.s_beta]
    }

    pub fn get(&self, p: Param) -> f64 {
        self.as_array()[p.index()]
    }
}

/// `f` and `(f_μ, f_σ, f_α, f_β)` at one point.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PointTerms {
    pub f: f64,
    pub grad: [f64; 4],
    pub converged: bool,
}

pub(crate) fn point_terms(x: f64, s: &Shape) -> PointTerms {
    let b = fourier::bundle_std(x, s);
    let y = x - s.zeta;
    let (f, fp, ok) = if s.is_gaussian() {
        (gaussian_density(x), gaussian_density_deriv(x), true)
    } else if y.abs() <= NEAR_MODE_THRESHOLD {
        (b.f, b.f_prime, b.converged)
    } else {
        let (ya, sign, sh) = if y > 0.0 { (y, 1.0, *s) } else { (-y, -1.0, s.reflected()) };
        let r = nolan_integrals(ya, &sh);
        let a = s.alpha;
        let c0 = a / (2.0 * (a - 1.0) * ya);
        let c1 = c0 / ((a - 1.0) * ya);
        (c0 * r.value[0], sign * c1 * (r.value[0] - a * r.value[1]), r.converged)
    };
    PointTerms {
        f,
        grad: [-fp, -f - x * fp, b.f_alpha, b.f_beta],
        converged: ok && b.converged,
    }
}

/// Scores at standard `(μ, σ) = (0, 1)`.
pub fn score_vector(x: f64, alpha: f64, beta: f64) -> Result<ScoreVector> {
    if !x.is_finite() {
        return Err(Error::Domain {
            what: "score",
            detail: format!("x must be finite, got {x}"),
        });
    }
    let s = Shape::new(alpha, beta)?;
    let p = point_terms(x, &s);
    if !(p.f > UNDERFLOW_THRESHOLD) {
        return Err(Error::Underflow { x, value: p.f });
    }
    if !p.converged {
        return Err(Error::NonConvergence {
            what: "score",
            best: p.f,
            abs_error: f64::NAN,
        });
    }
    let g = p.grad;
    Ok(ScoreVector {
        s_mu: g[0] / p.f,
        s_sigma: g[1] / p.f,
        s_alpha: g[2] / p.f,
        s_beta: g[3] / p.f,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    Quadrature,
    Asymptotic,
    TableLimit,
}

impl Provenance {
    pub fn as_str(&self) -> &'static str {
        match self {
            Provenance::Quadrature => "quadrature",
            Provenance::Asymptotic => "asymptotic",
            Provenance::TableLimit => "table_limit",
        }
    }
}

/// Order of magnitude of an entry known only through a bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OrderTag {
    /// `o(1)`
    Vanishing,
    /// `O(Δ)`
    OrderDelta,
    /// `o(1 / log(1/Δ))`
    SmallerThanInverseLog,
    /// `o(Δ log log(1/Δ))`
    SmallerThanDeltaLogLog,
}

impl fmt::Display for OrderTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OrderTag::Vanishing => "o(1)",
            OrderTag::OrderDelta => "O(delta)",
            OrderTag::SmallerThanInverseLog => "o(1/log(1/delta))",
            OrderTag::SmallerThanDeltaLogLog => "o(delta*log(log(1/delta)))",
        })
    }
}

/// Symmetric 4×4 matrix indexed by [`Param`], with per-entry provenance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FisherMatrix {
    pub entries: [[f64; 4]; 4],
    pub provenance: [[Provenance; 4]; 4],
    pub abs_error: [[f64; 4]; 4],
    pub order: [[Option<OrderTag>; 4]; 4],
    pub converged: bool,
}

impl FisherMatrix {
    fn filled(value: f64, provenance: Provenance, abs_error: f64) -> Self {
        FisherMatrix {
            entries: [[value; 4]; 4],
            provenance: [[provenance; 4]; 4],
            abs_error: [[abs_error; 4]; 4],
            order: [[None; 4]; 4],
            converged: true,
        }
    }

    fn set(&mut self, i: Param, j: Param, value: f64, provenance: Provenance, abs_error: f64) {
        let (i, j) = (i.index(), j.index());
        for (a, b) in [(i, j), (j, i)] {
            self.entries[a][b] = value;
            self.provenance[a][b] = provenance;
            self.abs_error[a][b] = abs_error;
        }
    }

    fn tag(&mut self, i: Param, j: Param, tag: OrderTag) {
        self.order[i.index()][j.index()] = Some(tag);
        self.order[j.index()][i.index()] = Some(tag);
    }

    pub fn get(&self, i: Param, j: Param) -> f64 {
        self.entries[i.index()][j.index()]
    }

    pub fn error(&self, i: Param, j: Param) -> f64 {
        self.abs_error[i.index()][j.index()]
    }

    pub fn is_symmetric(&self) -> bool {
        (0..4).all(|i| (0..4).all(|j| self.entries[i][j].to_bits() == self.entries[j][i].to_bits()))
    }

    /// Smallest eigenvalue, or `None` when an entry is not finite.
    pub fn min_eigenvalue(&self) -> Option<f64> {
        if self.entries.iter().flatten().any(|v| !v.is_finite()) {
            return None;
        }
        let m = Matrix4::from_fn(|i, j| self.entries[i][j]);
        m.symmetric_eigen().eigenvalues.iter().copied().reduce(f64::min)
    }
}

/// Cut points of the `y = |x - ζ|` axis: `T` and the regime boundaries
/// `x₁ = (2-δ)√(log 1/Δ)`, `x₂ = (2+δ)√(log 1/Δ)`, `x₃ = exp(Δ^(-1/2))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalPlan {
    pub t: f64,
    pub x1: f64,
    pub x2: f64,
    pub x3: f64,
    pub delta_knob: f64,
    /// `T < x₁ < x₂ < x₃` fails; the cut points are still used, in sorted
    /// order.
    pub degenerate: bool,
    pub x3_capped: bool,
}

impl IntervalPlan {
    /// Sorted, deduplicated cut points strictly inside `(0, upto)`.
    pub fn cut_points(&self, upto: f64) -> Vec<f64> {
        let mut v: Vec<f64> = [self.t, self.x1, self.x2, self.x3]
            .into_iter()
            .filter(|&c| c > 0.0 && c < upto)
            .collect();
        v.sort_by(f64::total_cmp);
        v.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * b.abs());
        v
    }
}

pub fn make_interval_plan(alpha: f64, t: f64) -> Result<IntervalPlan> {
    make_interval_plan_with(alpha, t, DEFAULT_DELTA_KNOB)
}

pub fn make_interval_plan_with(alpha: f64, t: f64, delta_knob: f64) -> Result<IntervalPlan> {
    let s = Shape::new(alpha, 0.0)?;
    if s.is_gaussian() {
        return Err(Error::Domain {
            what: "interval plan",
            detail: "needs alpha < 2".into(),
        });
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "T",
            value: t,
            reason: "must be positive and finite",
        });
    }
    let (x1, x2) = crate::asymptotics::regime_boundaries(alpha, delta_knob)?;
    let raw = (1.0 / s.delta.sqrt()).exp();
    let x3 = raw.min(X3_CAP);
    let degenerate = !(t < x1 && x1 < x2 && x2 < x3);
    if degenerate {
        log::info!("interval plan at alpha = {alpha} is degenerate: T = {t}, x1 = {x1}, x2 = {x2}, x3 = {x3}");
    }
    Ok(IntervalPlan {
        t,
        x1,
        x2,
        x3,
        delta_knob,
        degenerate,
        x3_capped: raw > X3_CAP,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FisherConfig {
    pub quad: QuadConfig,
    /// End of the numerically integrated range in `|x - ζ|`.
    pub x_far: f64,
    /// Evaluate quadrature nodes on the rayon pool.
    pub parallel: bool,
}

impl Default for FisherConfig {
    fn default() -> Self {
        FisherConfig {
            quad: QuadConfig::with_tolerances(1e-10, 1e-9),
            x_far: 400.0,
            parallel: true,
        }
    }
}

/// Index pairs of the 10 distinct entries, row-major upper triangle.
pub const ENTRY_PAIRS: [(usize, usize); 10] = [
    (0, 0),
    (0, 1),
    (0, 2),
    (0, 3),
    (1, 1),
    (1, 2),
    (1, 3),
    (2, 2),
    (2, 3),
    (3, 3),
];

/// Components: `f`, the four `f_θ`, then `f_i f_j / f` for [`ENTRY_PAIRS`].
const NCOMP: usize = 15;

/// Everything integrated in one pass: `∫f`, `∫f_θ` and the matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FisherIntegrals {
    pub normalization: f64,
    pub normalization_error: f64,
    /// `∫ f_θ dx = ∫ s_θ f dx`, zero in exact arithmetic.
    pub score_means: [f64; 4],
    pub score_mean_errors: [f64; 4],
    pub matrix: FisherMatrix,
    /// Share of each entry contributed by the fitted tail beyond `x_far`.
    pub tail_share: [[f64; 4]; 4],
    pub n_evals: usize,
    /// Nodes where the density fell below [`UNDERFLOW_THRESHOLD`].
    pub underflow_points: usize,
}

fn components(p: &PointTerms, skip_alpha_products: bool) -> [f64; NCOMP] {
    let mut out = [0.0; NCOMP];
    if !(p.f > UNDERFLOW_THRESHOLD) {
        return out;
    }
    out[0] = p.f;
    out[1..5].copy_from_slice(&p.grad);
    for (k, &(i, j)) in ENTRY_PAIRS.iter().enumerate() {
        if skip_alpha_products && ((i == 2 && j == 2) || (i == 1 && j == 2) || i == 3 || j == 3) {
            continue;
        }
        out[5 + k] = p.grad[i] * p.grad[j] / p.f;
    }
    out
}

/// Decay exponent of each component under the leading tail forms: every
/// derivative decays like `|y|^(-1-α)` except `f_μ`, one power faster.
fn leading_exponents(alpha: f64) -> [f64; NCOMP] {
    let extra = |i: usize| if i == 0 { 1.0 } else { 0.0 };
    let base = 1.0 + alpha;
    let mut p = [base; NCOMP];
    p[1] = base + 1.0;
    for (k, &(i, j)) in ENTRY_PAIRS.iter().enumerate() {
        p[5 + k] = base + extra(i) + extra(j);
    }
    p
}

/// `∫_{x_far}^∞` of one side's components, continuing each as a power law
/// through its values at `x_far/2` and `x_far`.
fn fitted_tail(h1: &[f64; NCOMP], h2: &[f64; NCOMP], x_far: f64, p0: &[f64; NCOMP]) -> ([f64; NCOMP], [f64; NCOMP]) {
    let mut value = [0.0; NCOMP];
    let mut err = [0.0; NCOMP];
    for k in 0..NCOMP {
        let (a, b) = (h1[k], h2[k]);
        if b == 0.0 {
            continue;
        }
        let lead = b * x_far / (p0[k] - 1.0);
        let fit = if a != 0.0 && a.signum() == b.signum() {
            let p = (a / b).ln() / std::f64::consts::LN_2;
            if p > 1.0 + 1e-3 {
                Some(b * x_far / (p - 1.0))
            } else {
                None
            }
        } else {
            None
        };
        match fit {
            Some(v) => {
                value[k] = v;
                err[k] = (v - lead).abs();
            }
            None => {
                value[k] = lead;
                err[k] = lead.abs();
            }
        }
    }
    (value, err)
}

fn y_breaks(plan: &IntervalPlan, x_far: f64) -> Vec<f64> {
    let mut v = vec![0.0, NEAR_MODE_THRESHOLD, 0.5, 1.0, 2.0, 3.0, 4.0];
    v.extend(plan.cut_points(x_far));
    let mut g = plan.t.max(4.0) * 2.0;
    while g < x_far {
        v.push(g);
        g *= 2.0;
    }
    v.retain(|&c| c < x_far);
    v.push(x_far);
    v.sort_by(f64::total_cmp);
    v.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * b.abs().max(1e-300));
    v
}

/// `∫ f`, `∫ f_θ` and all Fisher entries in a single adaptive pass.
pub fn fisher_integrals(alpha: f64, beta: f64, plan: &IntervalPlan, cfg: &FisherConfig) -> Result<FisherIntegrals> {
    let s = Shape::new(alpha, beta)?;
    cfg.quad.validate()?;
    if !(cfg.x_far > 2.0 * plan.t.max(4.0)) {
        return Err(Error::InvalidParameter {
            name: "x_far",
            value: cfg.x_far,
            reason: "must exceed twice the plan's T",
        });
    }
    let gaussian = s.is_gaussian();
    let underflow = AtomicUsize::new(0);
    let bad = AtomicUsize::new(0);
    let h = |y: f64| {
        let mut out = [0.0; NCOMP];
        for x in [s.zeta + y, s.zeta - y] {
            let p = point_terms(x, &s);
            if !p.converged {
                bad.fetch_add(1, Ordering::Relaxed);
            }
            if !(p.f > UNDERFLOW_THRESHOLD) {
                underflow.fetch_add(1, Ordering::Relaxed);
            }
            let c = components(&p, gaussian);
            for k in 0..NCOMP {
                out[k] += c[k];
            }
        }
        out
    };
    let breaks = y_breaks(plan, cfg.x_far);
    let r = if cfg.parallel {
        integrate_vec_par(h, &breaks, &cfg.quad)?
    } else {
        integrate_vec(h, &breaks, &cfg.quad)?
    };

    let p0 = leading_exponents(alpha);
    let mut tail = [0.0; NCOMP];
    let mut tail_err = [0.0; NCOMP];
    for sign in [1.0, -1.0] {
        let h1 = components(&point_terms(s.zeta + sign * 0.5 * cfg.x_far, &s), gaussian);
        let h2 = components(&point_terms(s.zeta + sign * cfg.x_far, &s), gaussian);
        let (v, e) = fitted_tail(&h1, &h2, cfg.x_far, &p0);
        for k in 0..NCOMP {
            tail[k] += v[k];
            tail_err[k] += e[k];
        }
    }

    let total: [f64; NCOMP] = std::array::from_fn(|k| r.value[k] + tail[k]);
    let err: [f64; NCOMP] = std::array::from_fn(|k| r.abs_error[k] + tail_err[k]);
    let converged = r.converged && bad.load(Ordering::Relaxed) == 0;

    let mut m = FisherMatrix::filled(0.0, Provenance::Quadrature, 0.0);
    m.converged = converged;
    let mut tail_share = [[0.0; 4]; 4];
    for (k, &(i, j)) in ENTRY_PAIRS.iter().enumerate() {
        let (pi, pj) = (Param::ALL[i], Param::ALL[j]);
        m.set(pi, pj, total[5 + k], Provenance::Quadrature, err[5 + k]);
        let share = if total[5 + k] != 0.0 { tail[5 + k] / total[5 + k] } else { 0.0 };
        tail_share[i][j] = share;
        tail_share[j][i] = share;
    }
    if gaussian {
        m.set(Param::Alpha, Param::Alpha, f64::INFINITY, Provenance::TableLimit, 0.0);
        m.set(Param::Sigma, Param::Alpha, f64::NEG_INFINITY, Provenance::TableLimit, 0.0);
        for p in Param::ALL {
            m.set(p, Param::Beta, 0.0, Provenance::TableLimit, 0.0);
        }
    }
    Ok(FisherIntegrals {
        normalization: total[0],
        normalization_error: err[0],
        score_means: [total[1], total[2], total[3], total[4]],
        score_mean_errors: [err[1], err[2], err[3], err[4]],
        matrix: m,
        tail_share,
        n_evals: r.n_evals,
        underflow_points: underflow.load(Ordering::Relaxed),
    })
}

/// The full matrix at standard `(μ, σ)`. Non-convergence is reported via
/// [`FisherMatrix::converged`] rather than as an error.
pub fn fisher_matrix(alpha: f64, beta: f64, plan: &IntervalPlan) -> Result<FisherMatrix> {
    fisher_matrix_with(alpha, beta, plan, &FisherConfig::default())
}

pub fn fisher_matrix_with(alpha: f64, beta: f64, plan: &IntervalPlan, cfg: &FisherConfig) -> Result<FisherMatrix> {
    Ok(fisher_integrals(alpha, beta, plan, cfg)?.matrix)
}

/// One entry and its error estimate.
pub fn fisher_entry(i: Param, j: Param, alpha: f64, beta: f64, plan: &IntervalPlan) -> Result<(f64, f64)> {
    fisher_entry_with(i, j, alpha, beta, plan, &FisherConfig::default())
}

pub fn fisher_entry_with(
    i: Param,
    j: Param,
    alpha: f64,
    beta: f64,
    plan: &IntervalPlan,
    cfg: &FisherConfig,
) -> Result<(f64, f64)> {
    let m = fisher_matrix_with(alpha, beta, plan, cfg)?;
    let (v, e) = (m.get(i, j), m.error(i, j));
    if !m.converged {
        return Err(Error::NonConvergence {
            what: "Fisher entry",
            best: v,
            abs_error: e,
        });
    }
    Ok((v, e))
}

/// Plan with the default `T` and `δ` for `α < 2`; at `α = 2` a placeholder
/// plan whose only cut point is `T`.
pub fn default_plan(alpha: f64) -> Result<IntervalPlan> {
    Shape::new(alpha, 0.0)?;
    if alpha == 2.0 {
        return Ok(IntervalPlan {
            t: DEFAULT_T,
            x1: f64::INFINITY,
            x2: f64::INFINITY,
            x3: f64::INFINITY,
            delta_knob: DEFAULT_DELTA_KNOB,
            degenerate: true,
            x3_capped: false,
        });
    }
    make_interval_plan(alpha, DEFAULT_T)
}

/// Leading-order matrix as `Δ → 0`:
///
/// ```text
/// I_μμ = 1/2, I_σσ = 2, I_αα = 1/(4Δ log(1/Δ)), I_σα = -½ log log(1/Δ),
/// I_ββ = Δ / (4(1-β²) log(1/Δ)),
/// ```
///
/// the rest reported as 0 with the order of their known bound. Requires
/// `Δ < 1/e` so that `log log(1/Δ)` is positive.
pub fn fisher_asymptotic(alpha: f64, beta: f64) -> Result<FisherMatrix> {
    let s = Shape::new(alpha, beta)?;
    let d = s.delta;
    if !(d > 0.0 && d < (-1f64).exp()) {
        return Err(Error::Domain {
            what: "asymptotic Fisher matrix",
            detail: format!("needs 0 < delta < 1/e, got delta = {d}"),
        });
    }
    let l = (1.0 / d).ln();
    let mut m = FisherMatrix::filled(0.0, Provenance::Asymptotic, f64::NAN);
    use Param::*;
    m.set(Mu, Mu, 0.5, Provenance::Asymptotic, f64::NAN);
    m.set(Sigma, Sigma, 2.0, Provenance::Asymptotic, f64::NAN);
    m.set(Alpha, Alpha, 1.0 / (4.0 * d * l), Provenance::Asymptotic, f64::NAN);
    m.set(Sigma, Alpha, -0.5 * l.ln(), Provenance::Asymptotic, f64::NAN);
    m.set(Beta, Beta, d / (4.0 * (1.0 - beta * beta) * l), Provenance::Asymptotic, f64::NAN);
    m.tag(Mu, Sigma, OrderTag::Vanishing);
    m.tag(Mu, Alpha, OrderTag::Vanishing);
    m.tag(Mu, Beta, OrderTag::OrderDelta);
    m.tag(Sigma, Beta, OrderTag::SmallerThanDeltaLogLog);
    m.tag(Alpha, Beta, OrderTag::SmallerThanInverseLog);
    Ok(m)
}

/// The limit of the matrix at `α = 2`: `I_μμ = 1/2`, `I_σσ = 2`,
/// `I_αα = +∞`, `I_σα = -∞`, every other entry 0.
pub fn table1_limits() -> FisherMatrix {
    let mut m = FisherMatrix::filled(0.0, Provenance::TableLimit, 0.0);
    m.set(Param::Mu, Param::Mu, 0.5, Provenance::TableLimit, 0.0);
    m.set(Param::Sigma, Param::Sigma, 2.0, Provenance::TableLimit, 0.0);
    m.set(Param::Alpha, Param::Alpha, f64::INFINITY, Provenance::TableLimit, 0.0);
    m.set(Param::Sigma, Param::Alpha, f64::NEG_INFINITY, Provenance::TableLimit, 0.0);
    m
}
