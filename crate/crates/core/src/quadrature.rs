//! Adaptive Gauss–Kronrod integration engine.
//!
//! Every integral in the crate funnels through [`integrate_vec`]: a globally
//! adaptive G10/K21 bisection scheme over a list of breakpoints that
//! integrates `N` components at once, refining the interval whose worst
//! component is furthest from its tolerance. Error estimates follow the
//! QUADPACK rescaling. The rule set is fixed, so identical inputs produce
//! bit-identical outputs.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_600_525_603_042,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// Gauss weights for XGK[1], XGK[3], ..., XGK[9].
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

const NODES: usize = 21;

/// Change of variables applied to each finite segment before integration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum EndpointTransform {
    #[default]
    None,
    /// Cubic map `x = a + (b-a)(3u² - 2u³)`; flattens integrable algebraic
    /// singularities at either end.
    AlgebraicSingularity,
    /// tanh-sinh map; for strong endpoint singularities.
    DoubleExponential,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    pub endpoint_transform: EndpointTransform,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            max_subdivisions: 2000,
            endpoint_transform: EndpointTransform::None,
        }
    }
}

impl QuadConfig {
    pub fn with_tolerances(abs_tol: f64, rel_tol: f64) -> Self {
        QuadConfig {
            abs_tol,
            rel_tol,
            ..Default::default()
        }
    }

    pub fn with_transform(mut self, t: EndpointTransform) -> Self {
        self.endpoint_transform = t;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol >= 0.0 && self.rel_tol >= 0.0) || (self.abs_tol == 0.0 && self.rel_tol == 0.0)
        {
            return Err(Error::InvalidParameter {
                name: "tolerance",
                value: self.abs_tol.min(self.rel_tol),
                reason: "tolerances must be non-negative and not both zero",
            });
        }
        if self.max_subdivisions == 0 {
            return Err(Error::InvalidParameter {
                name: "max_subdivisions",
                value: 0.0,
                reason: "must be positive",
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error: f64,
    pub n_evals: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VecQuadResult<const N: usize> {
    pub value: [f64; N],
    pub abs_error: [f64; N],
    /// `∫|f|` per component, useful as a cancellation scale.
    pub l1: [f64; N],
    pub n_evals: usize,
    pub converged: bool,
}

impl<const N: usize> VecQuadResult<N> {
    pub fn component(&self, k: usize) -> QuadResult {
        QuadResult {
            value: self.value[k],
            abs_error: self.abs_error[k],
            n_evals: self.n_evals,
            converged: self.converged,
        }
    }
}

/// Asymptotic behaviour of an integrand on `[a, ∞)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DecayHint {
    Exponential,
    /// `|f(x)| ~ x^(-p)` with `p > 1`.
    PowerLaw(f64),
}

/// Compensated (Neumaier) running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

#[derive(Debug, Clone, Copy)]
struct Interval<const N: usize> {
    a: f64,
    b: f64,
    value: [f64; N],
    err: [f64; N],
    l1: [f64; N],
    splittable: bool,
}

fn nodes(a: f64, b: f64) -> [f64; NODES] {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut x = [c; NODES];
    for j in 0..10 {
        x[2 * j] = c - h * XGK[j];
        x[2 * j + 1] = c + h * XGK[j];
    }
    x
}

fn rescale_error(err: f64, resabs: f64, resasc: f64) -> f64 {
    let mut e = err.abs();
    if resasc != 0.0 && e != 0.0 {
        e = resasc * (200.0 * e / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        e = e.max(50.0 * f64::EPSILON * resabs);
    }
    e
}

fn combine<const N: usize>(a: f64, b: f64, fv: &[[f64; N]]) -> Interval<N> {
    let h = 0.5 * (b - a);
    let mut value = [0.0; N];
    let mut err = [0.0; N];
    let mut l1 = [0.0; N];
    for k in 0..N {
        let fc = fv[NODES - 1][k];
        let mut resk = WGK[10] * fc;
        let mut resg = 0.0;
        let mut resabs = WGK[10] * fc.abs();
        for j in 0..10 {
            let f1 = fv[2 * j][k];
            let f2 = fv[2 * j + 1][k];
            resk += WGK[j] * (f1 + f2);
            resabs += WGK[j] * (f1.abs() + f2.abs());
            if j % 2 == 1 {
                resg += WG[j / 2] * (f1 + f2);
            }
        }
        let mean = 0.5 * resk;
        let mut resasc = WGK[10] * (fc - mean).abs();
        for j in 0..10 {
            resasc += WGK[j] * ((fv[2 * j][k] - mean).abs() + (fv[2 * j + 1][k] - mean).abs());
        }
        value[k] = resk * h;
        l1[k] = resabs * h.abs();
        err[k] = rescale_error((resk - resg) * h, resabs * h.abs(), resasc * h.abs());
    }
    let mid = 0.5 * (a + b);
    let splittable = mid > a && mid < b && (b - a).abs() > 4.0 * f64::EPSILON * a.abs().max(b.abs());
    Interval {
        a,
        b,
        value,
        err,
        l1,
        splittable,
    }
}

fn evaluate<const N: usize, F>(f: &F, xs: &[f64], parallel: bool) -> Vec<[f64; N]>
where
    F: Fn(f64) -> [f64; N] + Sync,
{
    if parallel {
        xs.par_iter().map(|&x| f(x)).collect()
    } else {
        xs.iter().map(|&x| f(x)).collect()
    }
}

fn adaptive<const N: usize, F>(f: &F, breaks: &[f64], cfg: &QuadConfig, l1_rel: f64, parallel: bool) -> VecQuadResult<N>
where
    F: Fn(f64) -> [f64; N] + Sync,
{
    let mut xs = Vec::with_capacity(NODES * breaks.len());
    for w in breaks.windows(2) {
        xs.extend_from_slice(&nodes(w[0], w[1]));
    }
    let fv = evaluate(f, &xs, parallel);
    let mut n_evals = fv.len();
    let mut intervals: Vec<Interval<N>> = breaks
        .windows(2)
        .enumerate()
        .map(|(i, w)| combine(w[0], w[1], &fv[i * NODES..(i + 1) * NODES]))
        .collect();

    let budget = cfg.max_subdivisions.max(intervals.len());
    loop {
        let mut total = [CompensatedSum::default(); N];
        let mut err = [0.0; N];
        for iv in &intervals {
            for k in 0..N {
                total[k].add(iv.value[k]);
                err[k] += iv.err[k];
            }
        }
        let mut l1 = [0.0; N];
        if l1_rel > 0.0 {
            for iv in &intervals {
                for k in 0..N {
                    l1[k] += iv.l1[k];
                }
            }
        }
        let tol: [f64; N] = std::array::from_fn(|k| {
            cfg.abs_tol
                .max(cfg.rel_tol * total[k].value().abs())
                .max(l1_rel * l1[k])
                .max(f64::MIN_POSITIVE)
        });
        let done = (0..N).all(|k| err[k] <= tol[k]);
        let exhausted = intervals.len() >= budget;
        let worst = if done || exhausted {
            None
        } else {
            intervals
                .iter()
                .enumerate()
                .filter(|(_, iv)| iv.splittable)
                .map(|(i, iv)| {
                    let score = (0..N).map(|k| iv.err[k] / tol[k]).fold(0.0, f64::max);
                    (i, score)
                })
                .fold(None, |best: Option<(usize, f64)>, cur| match best {
                    Some(b) if b.1 >= cur.1 => Some(b),
                    _ => Some(cur),
                })
        };
        let Some((i, _)) = worst else {
            let mut l1 = [0.0; N];
            for iv in &intervals {
                for k in 0..N {
                    l1[k] += iv.l1[k];
                }
            }
            return VecQuadResult {
                value: std::array::from_fn(|k| total[k].value()),
                abs_error: err,
                l1,
                n_evals,
                converged: done,
            };
        };
        let iv = intervals[i];
        let mid = 0.5 * (iv.a + iv.b);
        let mut xs = Vec::with_capacity(2 * NODES);
        xs.extend_from_slice(&nodes(iv.a, mid));
        xs.extend_from_slice(&nodes(mid, iv.b));
        let fv = evaluate(f, &xs, parallel);
        n_evals += fv.len();
        intervals[i] = combine(iv.a, mid, &fv[..NODES]);
        intervals.push(combine(mid, iv.b, &fv[NODES..]));
    }
}

fn check_breaks(breaks: &[f64]) -> Result<()> {
    if breaks.len() < 2 {
        return Err(Error::Domain {
            what: "integration interval",
            detail: "need at least two breakpoints".into(),
        });
    }
    for w in breaks.windows(2) {
        if !(w[0] < w[1]) || !w[0].is_finite() || !w[1].is_finite() {
            return Err(Error::Domain {
                what: "integration interval",
                detail: format!("breakpoints must be finite and strictly increasing, got {} then {}", w[0], w[1]),
            });
        }
    }
    Ok(())
}

const DE_T_MAX: f64 = 4.5;

/// Integrates a vector-valued `f` over consecutive segments of `breaks`.
///
/// The segment list seeds the adaptive partition; the transform in `cfg`
/// is applied per segment. Never fails on non-convergence: the returned
/// `converged` flag tells the caller.
pub fn integrate_vec<const N: usize, F>(f: F, breaks: &[f64], cfg: &QuadConfig) -> Result<VecQuadResult<N>>
where
    F: Fn(f64) -> [f64; N] + Sync,
{
    integrate_vec_impl(&f, breaks, cfg, 0.0, false)
}

/// As [`integrate_vec`], but also accepts an error of `l1_rel · ∫|f_k|` per
/// component. For integrands whose value is much smaller than their
/// absolute integral because of cancellation between oscillations, where a
/// relative target on the value alone is below the rounding floor.
pub(crate) fn integrate_vec_l1<const N: usize, F>(
    f: F,
    breaks: &[f64],
    cfg: &QuadConfig,
    l1_rel: f64,
) -> Result<VecQuadResult<N>>
where
    F: Fn(f64) -> [f64; N] + Sync,
{
    integrate_vec_impl(&f, breaks, cfg, l1_rel, false)
}

/// As [`integrate_vec`], evaluating the nodes of each refinement step in
/// parallel. Worth it only for expensive integrands.
pub fn integrate_vec_par<const N: usize, F>(f: F, breaks: &[f64], cfg: &QuadConfig) -> Result<VecQuadResult<N>>
where
    F: Fn(f64) -> [f64; N] + Sync,
{
    integrate_vec_impl(&f, breaks, cfg, 0.0, true)
}

fn integrate_vec_impl<const N: usize, F>(
    f: &F,
    breaks: &[f64],
    cfg: &QuadConfig,
    l1_rel: f64,
    parallel: bool,
) -> Result<VecQuadResult<N>>
where
    F: Fn(f64) -> [f64; N] + Sync,
{
    cfg.validate()?;
    check_breaks(breaks)?;
    let m = breaks.len() - 1;
    match cfg.endpoint_transform {
        EndpointTransform::None => Ok(adaptive(f, breaks, cfg, l1_rel, parallel)),
        EndpointTransform::AlgebraicSingularity => {
            let g = |u: f64| {
                let i = (u.floor() as usize).min(m - 1);
                let s = u - i as f64;
                let (a, b) = (breaks[i], breaks[i + 1]);
                let x = a + (b - a) * s * s * (3.0 - 2.0 * s);
                let jac = 6.0 * (b - a) * s * (1.0 - s);
                if jac == 0.0 {
                    return [0.0; N];
                }
                let v = f(x);
                std::array::from_fn(|k| v[k] * jac)
            };
            let ubreaks: Vec<f64> = (0..=m).map(|i| i as f64).collect();
            Ok(adaptive(&g, &ubreaks, cfg, l1_rel, parallel))
        }
        EndpointTransform::DoubleExponential => {
            let width = 2.0 * DE_T_MAX;
            let g = |u: f64| {
                let i = ((u / width).floor() as usize).min(m - 1);
                let t = u - i as f64 * width - DE_T_MAX;
                let (a, b) = (breaks[i], breaks[i + 1]);
                let s = std::f64::consts::FRAC_PI_2 * t.sinh();
                let e = (-2.0 * s.abs()).exp();
                let jac = (b - a) * std::f64::consts::PI * t.cosh() * e / ((1.0 + e) * (1.0 + e));
                let off = (b - a) * e / (1.0 + e);
                let x = if t > 0.0 { b - off } else { a + off };
                if jac == 0.0 || x <= a || x >= b {
                    return [0.0; N];
                }
                let v = f(x);
                std::array::from_fn(|k| v[k] * jac)
            };
            let ubreaks: Vec<f64> = (0..=m).map(|i| i as f64 * width).collect();
            Ok(adaptive(&g, &ubreaks, cfg, l1_rel, parallel))
        }
    }
}

/// Scalar integral of `f` over `[a, b]`.
///
/// Returns [`Error::NonConvergence`] carrying the best estimate when the
/// tolerance is not met within the subdivision budget.
pub fn integrate<F>(f: F, a: f64, b: f64, cfg: &QuadConfig) -> Result<QuadResult>
where
    F: Fn(f64) -> f64 + Sync,
{
    let r = integrate_vec(|x| [f(x)], &[a, b], cfg)?;
    finish(r.component(0), "integrate")
}

fn finish(r: QuadResult, what: &'static str) -> Result<QuadResult> {
    if r.converged && r.value.is_finite() {
        Ok(r)
    } else {
        Err(Error::NonConvergence {
            what,
            best: r.value,
            abs_error: r.abs_error,
        })
    }
}

/// Map of `[a, ∞)` onto `(0, 1]` adapted to an integrand decaying like
/// `x^(-p)`: `x = a + s(u^(-1/(p-1)) - 1)` with `s = max(|a|, 1)`.
///
/// The mapped integrand `f(x(u)) x'(u)` tends to a constant as `u → 0` when
/// the decay is exactly a power law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawMap {
    pub a: f64,
    pub scale: f64,
    pub exponent: f64,
}

impl PowerLawMap {
    pub fn new(a: f64, exponent: f64) -> Result<Self> {
        if !(exponent > 1.0) {
            return Err(Error::Domain {
                what: "power-law map",
                detail: format!("decay exponent must exceed 1, got {exponent}"),
            });
        }
        Ok(PowerLawMap {
            a,
            scale: a.abs().max(1.0),
            exponent,
        })
    }

    pub fn x(&self, u: f64) -> f64 {
        self.a + self.scale * (u.powf(-1.0 / (self.exponent - 1.0)) - 1.0)
    }

    pub fn jacobian(&self, u: f64) -> f64 {
        self.scale / (self.exponent - 1.0) * u.powf(-self.exponent / (self.exponent - 1.0))
    }

    /// Inverse map; `u(a) = 1`, `u(∞) = 0`.
    pub fn u(&self, x: f64) -> f64 {
        ((x - self.a) / self.scale + 1.0).powf(-(self.exponent - 1.0))
    }
}

/// `∫_a^∞ f(x) dx`, mapped onto a finite interval according to `hint`.
pub fn integrate_semi_infinite<F>(f: F, a: f64, hint: DecayHint, cfg: &QuadConfig) -> Result<QuadResult>
where
    F: Fn(f64) -> f64 + Sync,
{
    let r = match hint {
        DecayHint::Exponential => {
            let g = |u: f64| {
                let w = 1.0 - u;
                let x = a + u / w;
                let v = f(x);
                if v == 0.0 {
                    [0.0]
                } else {
                    [v / (w * w)]
                }
            };
            integrate_vec(g, &[0.0, 1.0], cfg)?
        }
        DecayHint::PowerLaw(p) => {
            let map = PowerLawMap::new(a, p)?;
            let g = |u: f64| [f(map.x(u)) * map.jacobian(u)];
            integrate_vec(g, &[0.0, 1.0], cfg)?
        }
    };
    finish(r.component(0), "integrate_semi_infinite")
}

/// Richardson-extrapolated central difference: combines step `h` and `h/2`
/// to cancel the `O(h²)` term.
pub fn fd_derivative<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    let d = |h: f64| (f(x + h) - f(x - h)) / (2.0 * h);
    let d1 = d(h);
    let d2 = d(0.5 * h);
    (4.0 * d2 - d1) / 3.0
}

/// Richardson-extrapolated second central difference.
pub fn fd_second_derivative<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    let f0 = f(x);
    let s = |h: f64| (f(x + h) - 2.0 * f0 + f(x - h)) / (h * h);
    let s1 = s(h);
    let s2 = s(0.5 * h);
    (4.0 * s2 - s1) / 3.0
}

/// One-sided (backward) derivative, Richardson-extrapolated. Used where the
/// function does not exist to the right of `x`.
pub fn fd_derivative_backward<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    let f0 = f(x);
    let b = |h: f64| (3.0 * f0 - 4.0 * f(x - h) + f(x - 2.0 * h)) / (2.0 * h);
    let b1 = b(h);
    let b2 = b(0.5 * h);
    (4.0 * b2 - b1) / 3.0
}
