use rayon::prelude::*;

use stable_info::asymptotics::{classify_x, g_deriv, g_density};
use stable_info::density::{density, density_deriv, density_std, density_deriv_std, DensityMethod};
use stable_info::fisher::{
    default_plan, fisher_asymptotic, fisher_matrix_with, make_interval_plan_with, score_vector, FisherConfig,
    FisherMatrix, IntervalPlan, Param, DEFAULT_T, ENTRY_PAIRS,
};
use stable_info::oracle::{closed_forms, fisher_trapezoid_all, score_fd, ClosedFormKind, OracleReport};
use stable_info::{derive, Error, StableParams};

use crate::output::{Cell, Table};
use crate::{CliError, Command, Format, Grid, RunConfig};

/// Rendered output, plus the failure to report once it has been written.
pub struct Outcome {
    pub text: String,
    pub failure: Option<CliError>,
}

pub fn execute(cfg: &RunConfig) -> Result<Outcome, CliError> {
    if cfg.command == Command::Verify {
        return verify(cfg);
    }
    let mut table = match cfg.command {
        Command::Density => density_table(cfg)?,
        Command::Score => score_table(cfg)?,
        Command::Fisher => fisher_table(cfg)?,
        Command::CompareAsymptotics => compare_table(cfg)?,
        Command::Table1 => matrix_table(&stable_info::fisher::table1_limits()),
        Command::Sweep => sweep_table(cfg)?,
        Command::Verify => unreachable!(),
    };
    let mut meta = vec![
        ("version".to_string(), Cell::from(format!("stable-info {}", env!("CARGO_PKG_VERSION")))),
        ("command".to_string(), Cell::from(cfg.invocation.clone())),
        ("abs_tol".to_string(), Cell::from(cfg.quad.abs_tol)),
        ("rel_tol".to_string(), Cell::from(cfg.quad.rel_tol)),
    ];
    meta.append(&mut table.meta);
    table.meta = meta;
    let text = match cfg.opts.format {
        Format::Csv => table.to_csv(),
        Format::Json => table.to_json(),
    };
    Ok(Outcome { text, failure: None })
}

fn require_alpha(cfg: &RunConfig) -> Result<f64, CliError> {
    cfg.opts
        .alpha
        .ok_or_else(|| CliError::Usage(format!("--alpha is required for {}", cfg.command.name())))
}

fn require_grid(cfg: &RunConfig) -> Result<Grid, CliError> {
    cfg.opts
        .grid
        .ok_or_else(|| CliError::Usage(format!("--grid lo:hi:n is required for {}", cfg.command.name())))
}

fn params(cfg: &RunConfig) -> Result<StableParams, CliError> {
    let o = &cfg.opts;
    Ok(StableParams::new(o.mu, o.sigma, require_alpha(cfg)?, o.beta)?)
}

fn check_knob(cfg: &RunConfig) -> Result<(), CliError> {
    let k = cfg.opts.delta_knob;
    if k > 0.0 && k < 1.0 {
        Ok(())
    } else {
        Err(CliError::Usage(format!("invalid value for --delta-knob: {k} (must lie in (0, 1))")))
    }
}

/// Value and error of a density-like result; in lenient mode a
/// non-converged quadrature yields its best estimate.
fn accept(r: stable_info::Result<stable_info::density::DensityResult>, lenient: bool) -> Result<(f64, f64, &'static str), CliError> {
    match r {
        Ok(r) => Ok((r.value, r.abs_error, method_name(r.method))),
        Err(Error::NonConvergence { best, abs_error, .. }) if lenient => Ok((best, abs_error, "nonconverged")),
        Err(e) => Err(e.into()),
    }
}

fn method_name(m: DensityMethod) -> &'static str {
    match m {
        DensityMethod::NolanIntegral => "integral",
        DensityMethod::FourierFallback => "fourier",
        DensityMethod::GaussianExact => "gaussian",
    }
}

fn param_meta(t: &mut Table, p: &StableParams) {
    t.meta("alpha", p.alpha);
    t.meta("beta", p.beta);
    t.meta("mu", p.mu);
    t.meta("sigma", p.sigma);
}

fn density_table(cfg: &RunConfig) -> Result<Table, CliError> {
    let p = params(cfg)?;
    let grid = require_grid(cfg)?;
    let lenient = cfg.opts.lenient;
    let rows: Vec<Vec<Cell>> = grid
        .points()
        .par_iter()
        .map(|&x| {
            let (f, fe, method) = accept(density(x, &p), lenient)?;
            let (fp, fpe) = match density_deriv(x, &p) {
                Err(Error::SingularPoint { .. }) => (f64::NAN, f64::NAN),
                r => {
                    let (v, e, _) = accept(r, lenient)?;
                    (v, e)
                }
            };
            Ok(vec![x.into(), f.into(), fe.into(), fp.into(), fpe.into(), method.into()])
        })
        .collect::<Result<_, CliError>>()?;
    let mut t = Table::new(&["x", "f", "f_abs_error", "f_prime", "f_prime_abs_error", "method"]);
    param_meta(&mut t, &p);
    t.rows = rows;
    Ok(t)
}

fn score_table(cfg: &RunConfig) -> Result<Table, CliError> {
    let p = params(cfg)?;
    let grid = require_grid(cfg)?;
    let rows: Vec<Vec<Cell>> = grid
        .points()
        .par_iter()
        .map(|&x| {
            let z = (x - p.mu) / p.sigma;
            let s = match score_vector(z, p.alpha, p.beta) {
                Ok(s) => [s.s_mu / p.sigma, s.s_sigma / p.sigma, s.s_alpha, s.s_beta],
                // Points where the density underflows have no score.
                Err(Error::Underflow { .. }) => [f64::NAN; 4],
                Err(e) => return Err(e.into()),
            };
            Ok(vec![x.into(), s[0].into(), s[1].into(), s[2].into(), s[3].into()])
        })
        .collect::<Result<_, CliError>>()?;
    let mut t = Table::new(&["x", "s_mu", "s_sigma", "s_alpha", "s_beta"]);
    param_meta(&mut t, &p);
    t.rows = rows;
    Ok(t)
}

fn plan_for(alpha: f64, knob: f64) -> Result<IntervalPlan, CliError> {
    if alpha == 2.0 {
        Ok(default_plan(alpha)?)
    } else {
        Ok(make_interval_plan_with(alpha, DEFAULT_T, knob)?)
    }
}

fn fisher_config(cfg: &RunConfig) -> FisherConfig {
    FisherConfig {
        quad: cfg.quad,
        ..FisherConfig::default()
    }
}

fn converged_or_fail(m: &FisherMatrix, what: &str, lenient: bool) -> Result<(), CliError> {
    if m.converged || lenient {
        Ok(())
    } else {
        Err(CliError::NonConverged(format!("Fisher quadrature did not converge for {what}")))
    }
}

fn matrix_table(m: &FisherMatrix) -> Table {
    let mut t = Table::new(&["i", "j", "value", "abs_error", "provenance", "order"]);
    for i in Param::ALL {
        for j in Param::ALL {
            let (a, b) = (i.index(), j.index());
            let order = m.order[a][b].map(|o| o.to_string()).unwrap_or_default();
            t.push(vec![
                i.name().into(),
                j.name().into(),
                m.entries[a][b].into(),
                m.abs_error[a][b].into(),
                m.provenance[a][b].as_str().into(),
                order.into(),
            ]);
        }
    }
    t
}

fn fisher_table(cfg: &RunConfig) -> Result<Table, CliError> {
    let alpha = require_alpha(cfg)?;
    let beta = cfg.opts.beta;
    check_knob(cfg)?;
    StableParams::standard(alpha, beta)?;
    let plan = plan_for(alpha, cfg.opts.delta_knob)?;
    let m = fisher_matrix_with(alpha, beta, &plan, &fisher_config(cfg))?;
    converged_or_fail(&m, &format!("alpha = {alpha}, beta = {beta}"), cfg.opts.lenient)?;
    let mut t = matrix_table(&m);
    t.meta("alpha", alpha);
    t.meta("beta", beta);
    t.meta("converged", m.converged);
    t.meta("min_eigenvalue", m.min_eigenvalue().unwrap_or(f64::NAN));
    Ok(t)
}

fn compare_table(cfg: &RunConfig) -> Result<Table, CliError> {
    let p = params(cfg)?;
    let grid = require_grid(cfg)?;
    check_knob(cfg)?;
    let (a, b, s) = (p.alpha, p.beta, p.sigma);
    let lenient = cfg.opts.lenient;
    let knob = cfg.opts.delta_knob;
    let rows: Vec<Vec<Cell>> = grid
        .points()
        .par_iter()
        .map(|&x| {
            let z = (x - p.mu) / s;
            let regime = classify_x(z, a, b, knob)?.kind.as_str();
            let f = accept(density_std(z, a, b), lenient)?.0 / s;
            let g = g_density(z, a, b)? / s;
            let fp = match density_deriv_std(z, a, b) {
                Err(Error::SingularPoint { .. }) => f64::NAN,
                r => accept(r, lenient)?.0 / (s * s),
            };
            let gp = g_deriv(z, a, b)? / (s * s);
            Ok(vec![
                x.into(),
                regime.into(),
                f.into(),
                g.into(),
                (f / g - 1.0).into(),
                fp.into(),
                gp.into(),
                (fp / gp - 1.0).into(),
            ])
        })
        .collect::<Result<_, CliError>>()?;
    let mut t = Table::new(&[
        "x",
        "regime",
        "f_exact",
        "g_approx",
        "rel_err",
        "fprime_exact",
        "gprime_approx",
        "rel_err_prime",
    ]);
    param_meta(&mut t, &p);
    t.meta("delta_knob", knob);
    t.rows = rows;
    Ok(t)
}

fn sweep_table(cfg: &RunConfig) -> Result<Table, CliError> {
    let deltas = cfg
        .opts
        .deltas
        .clone()
        .ok_or_else(|| CliError::Usage("--deltas is required for sweep".into()))?;
    if deltas.is_empty() {
        return Err(CliError::Usage("--deltas needs at least one value".into()));
    }
    if let Some(d) = deltas.iter().find(|d| !(**d >= 0.0 && **d < 1.0)) {
        return Err(CliError::Usage(format!("invalid value for --deltas: {d} (each must lie in [0, 1))")));
    }
    check_knob(cfg)?;
    let beta = cfg.opts.beta;
    StableParams::standard(1.5, beta)?;
    let (pi, pj) = cfg.opts.entry;
    let fc = fisher_config(cfg);
    let lenient = cfg.opts.lenient;
    let rows: Vec<Vec<Cell>> = deltas
        .par_iter()
        .map(|&d| {
            let alpha = 2.0 - d;
            let plan = plan_for(alpha, cfg.opts.delta_knob)?;
            let m = fisher_matrix_with(alpha, beta, &plan, &fc)?;
            converged_or_fail(&m, &format!("delta = {d}"), lenient)?;
            let asym = fisher_asymptotic(alpha, beta).map(|a| a.get(pi, pj)).unwrap_or(f64::NAN);
            let exact = m.get(pi, pj);
            let ratio = if asym != 0.0 && asym.is_finite() { exact / asym } else { f64::NAN };
            Ok(vec![
                d.into(),
                alpha.into(),
                exact.into(),
                m.error(pi, pj).into(),
                asym.into(),
                ratio.into(),
            ])
        })
        .collect::<Result<_, CliError>>()?;
    let mut t = Table::new(&["delta", "alpha", "exact", "abs_error", "asymptotic", "ratio"]);
    t.meta("entry", format!("{pi},{pj}"));
    t.meta("beta", beta);
    t.rows = rows;
    Ok(t)
}

fn verify(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let alpha = cfg.opts.alpha.unwrap_or(1.9);
    let beta = cfg.opts.beta;
    StableParams::standard(alpha, beta)?;
    let mut reports = Vec::new();

    for c in closed_forms() {
        let main = match c.kind {
            ClosedFormKind::DensityAtZero { alpha } => density_std(0.0, alpha, 0.0)?.value,
            ClosedFormKind::GaussianDensity { x } => density_std(x, 2.0, 0.0)?.value,
            ClosedFormKind::GaussianDeriv { x } => density_deriv_std(x, 2.0, 0.0)?.value,
            ClosedFormKind::Zeta { alpha, beta } => derive(&StableParams::standard(alpha, beta)?)?.zeta,
            ClosedFormKind::Varrho { alpha, beta } => derive(&StableParams::standard(alpha, beta)?)?.varrho,
        };
        reports.push(OracleReport::compare(c.id, main, c.value, 1e-10, 0.0));
    }

    for k in -10..=10 {
        let x = k as f64;
        let main = density_std(x, alpha, beta)?.value;
        let fourier = stable_info::fourier::density_fourier(x, alpha, beta)?.value;
        reports.push(OracleReport::compare(format!("density({x})"), main, fourier, 1e-8, 0.0));
    }

    for x in [-3.0, -1.0, 0.5, 3.0] {
        let main = score_vector(x, alpha, beta)?.as_array();
        let fd = score_fd(x, alpha, beta)?.as_array();
        for p in Param::ALL {
            let k = p.index();
            reports.push(OracleReport::compare(format!("score_{p}({x})"), main[k], fd[k], 1e-5, 0.0));
        }
    }

    if alpha < 2.0 {
        let plan = plan_for(alpha, cfg.opts.delta_knob)?;
        let m = fisher_matrix_with(alpha, beta, &plan, &fisher_config(cfg))?;
        let o = fisher_trapezoid_all(alpha, beta, 200.0, 2001)?;
        for &(i, j) in ENTRY_PAIRS.iter() {
            let id = format!("fisher_{}_{}", Param::ALL[i], Param::ALL[j]);
            reports.push(OracleReport::compare(id, m.entries[i][j], o[i][j], 1e-7, 1e-3));
        }
    }

    let mut text = String::new();
    for r in &reports {
        text.push_str(&r.to_json_line());
        text.push('\n');
    }
    let failed = reports.iter().filter(|r| !r.pass).count();
    let failure = (failed > 0 && !cfg.opts.lenient)
        .then(|| CliError::NonConverged(format!("{failed} of {} oracle checks failed", reports.len())));
    Ok(Outcome { text, failure })
}
