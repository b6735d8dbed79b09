//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so the lines always print; exits non-zero if any criterion fails.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::Command;
use std::time::Instant;

use stable_info::asymptotics::{g_deriv, g_density, regime_boundaries};
use stable_info::density::{density_deriv_std, density_std};
use stable_info::fisher::{default_plan, fisher_integrals, fisher_matrix, FisherConfig, FisherMatrix, Param, ENTRY_PAIRS};
use stable_info::fourier::{density_fourier, f_alpha, f_beta};
use stable_info::integrand::{a, a_expansion, a_prime, a_second, check_monotone, ExpansionRegime};
use stable_info::oracle::{closed_forms, fisher_trapezoid_all, ClosedFormKind, OracleReport};
use stable_info::quadrature::{fd_derivative, fd_second_derivative};
use stable_info::StableParams;

const ALPHAS: [f64; 5] = [1.5, 1.8, 1.9, 1.95, 1.99];
const BETAS: [f64; 5] = [0.0, 0.3, -0.3, 0.9, -0.9];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

/// `|v_k - 1|` strictly decreasing along the sequence.
fn approaches_one(v: &[f64]) -> bool {
    v.windows(2).all(|w| (w[1] - 1.0).abs() < (w[0] - 1.0).abs())
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

fn fmt(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.4}")).collect();
    format!("[{}]", parts.join(", "))
}

fn c1_density_oracle(reports: &mut Vec<OracleReport>) -> Outcome {
    let t = Instant::now();
    let mut worst = 0.0f64;
    let mut at = (0.0, 0.0, 0.0);
    for &alpha in &ALPHAS {
        for &beta in &BETAS {
            for k in 0..41 {
                let x = -10.0 + 0.5 * k as f64;
                let main = density_std(x, alpha, beta).unwrap().value;
                let oracle = density_fourier(x, alpha, beta).unwrap().value;
                let r = OracleReport::compare(format!("density({x};{alpha},{beta})"), main, oracle, 1e-8, 0.0);
                if r.abs_diff > worst {
                    worst = r.abs_diff;
                    at = (x, alpha, beta);
                }
                reports.push(r);
            }
        }
    }
    let secs = t.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-8 && secs < 60.0,
        format!("max |density_std - density_fourier| = {worst:.2e} at {at:?} (tol 1e-8), {secs:.1} s (target < 60 s)"),
    )
}

fn c2_closed_forms(reports: &mut Vec<OracleReport>) -> Outcome {
    let mut ok = true;
    let mut worst = 0.0f64;
    for c in closed_forms() {
        let (main, tol) = match c.kind {
            ClosedFormKind::DensityAtZero { alpha } => (density_std(0.0, alpha, 0.0).unwrap().value, 1e-10),
            ClosedFormKind::GaussianDensity { x } if x == 1.0 => (density_std(x, 2.0, 0.0).unwrap().value, 1e-12),
            ClosedFormKind::GaussianDeriv { x } if x == 1.0 => (density_deriv_std(x, 2.0, 0.0).unwrap().value, 1e-12),
            _ => continue,
        };
        let r = OracleReport::compare(c.id, main, c.value, tol, 0.0);
        ok &= r.pass;
        worst = worst.max(r.abs_diff);
        reports.push(r);
    }
    // The literal Gaussian values.
    let g1 = density_std(1.0, 2.0, 0.0).unwrap().value;
    let g1p = density_deriv_std(1.0, 2.0, 0.0).unwrap().value;
    let lit = [(g1, 0.219_695_644_733_861_2), (g1p, -0.109_847_822_366_930_6)];
    for (v, l) in lit {
        ok &= (v - l).abs() <= 1e-12;
        worst = worst.max((v - l).abs());
    }
    outcome(ok, format!("f(0;α,0) vs Γ(1+1/α)/π for α ∈ {{1.5, 1.8, 2}}, Gaussian f(1), f'(1): max diff {worst:.2e}"))
}

fn c3_normalization() -> Outcome {
    let t = Instant::now();
    let mut worst_norm = 0.0f64;
    let mut worst_mean = 0.0f64;
    for &alpha in &ALPHAS {
        for &beta in &BETAS {
            let plan = default_plan(alpha).unwrap();
            let fi = fisher_integrals(alpha, beta, &plan, &FisherConfig::default()).unwrap();
            worst_norm = worst_norm.max((fi.normalization - 1.0).abs());
            for m in fi.score_means {
                worst_mean = worst_mean.max(m.abs());
            }
        }
    }
    outcome(
        worst_norm <= 1e-6 && worst_mean <= 1e-5,
        format!(
            "max |∫f - 1| = {worst_norm:.2e} (tol 1e-6), max |∫ s_θ f| = {worst_mean:.2e} (tol 1e-5), {:.1} s",
            t.elapsed().as_secs_f64()
        ),
    )
}

fn c4_reflection() -> Outcome {
    let mut worst = [0.0f64; 3];
    for &alpha in &ALPHAS {
        for &beta in &[0.3, 0.9] {
            for k in 0..41 {
                let x = -10.0 + 0.5 * k as f64 + 0.01;
                let f = density_std(x, alpha, beta).unwrap().value - density_std(-x, alpha, -beta).unwrap().value;
                let fp = density_deriv_std(x, alpha, beta).unwrap().value
                    + density_deriv_std(-x, alpha, -beta).unwrap().value;
                let fa = f_alpha(x, alpha, beta).unwrap().value - f_alpha(-x, alpha, -beta).unwrap().value;
                for (w, d) in worst.iter_mut().zip([f, fp, fa]) {
                    *w = w.max(d.abs());
                }
            }
        }
    }
    outcome(
        worst.iter().all(|&w| w <= 1e-8),
        format!(
            "max violation: f even {:.1e}, f' odd {:.1e}, f_α even {:.1e} (tol 1e-8)",
            worst[0], worst[1], worst[2]
        ),
    )
}

/// Max of `|f/g - 1|` and `|f'/g' - 1|` over `y` in `[lo, hi]` (β = 0).
fn band_errors(alpha: f64, lo: f64, hi: f64) -> (f64, f64) {
    let n = 200;
    let (mut ef, mut ed) = (0.0f64, 0.0f64);
    for k in 0..=n {
        let y = lo + (hi - lo) * k as f64 / n as f64;
        let f = density_std(y, alpha, 0.0).unwrap().value;
        let fp = density_deriv_std(y, alpha, 0.0).unwrap().value;
        ef = ef.max((f / g_density(y, alpha, 0.0).unwrap() - 1.0).abs());
        ed = ed.max((fp / g_deriv(y, alpha, 0.0).unwrap() - 1.0).abs());
    }
    (ef, ed)
}

fn c5_regimes() -> Outcome {
    let deltas = [0.1, 0.05, 0.02];
    let (mut cf, mut cd, mut tf, mut td) = (vec![], vec![], vec![], vec![]);
    for &d in &deltas {
        let alpha = 2.0 - d;
        let (x1, x2) = regime_boundaries(alpha, 0.5).unwrap();
        let (a, b) = band_errors(alpha, 1.0, x1);
        cf.push(a);
        cd.push(b);
        let (a, b) = band_errors(alpha, x2.max(5.0), 50.0);
        tf.push(a);
        td.push(b);
    }
    let core = strictly_decreasing(&cf) && strictly_decreasing(&cd);
    let tail = strictly_decreasing(&tf) && strictly_decreasing(&td);
    outcome(
        core && tail,
        format!(
            "Δ = 0.1, 0.05, 0.02: core |f/g-1| {} |f'/g'-1| {} ({}); tail |f/g-1| {} |f'/g'-1| {} ({})",
            fmt(&cf),
            fmt(&cd),
            if core { "decreasing" } else { "NOT decreasing" },
            fmt(&tf),
            fmt(&td),
            if tail { "decreasing" } else { "NOT decreasing" },
        ),
    )
}

fn c6_kernel() -> Outcome {
    // Derivatives against finite differences.
    let mut fd_bad = 0;
    for &alpha in &ALPHAS {
        for &beta in &BETAS {
            let lo = -stable_info::derive(&StableParams::standard(alpha, beta).unwrap()).unwrap().varrho;
            for i in 1..20 {
                let phi = lo + (1.0 - lo) * i as f64 / 20.0;
                let d1 = a_prime(phi, alpha, beta).unwrap();
                let fd1 = fd_derivative(|p| a(p, alpha, beta).unwrap(), phi, 1e-5);
                let d2 = a_second(phi, alpha, beta).unwrap();
                let fd2 = fd_second_derivative(|p| a(p, alpha, beta).unwrap(), phi, 1e-3);
                if (d1 - fd1).abs() > 1e-6f64.max(1e-4 * d1.abs()) || (d2 - fd2).abs() > 1e-6f64.max(1e-4 * d2.abs()) {
                    fd_bad += 1;
                }
            }
        }
    }

    // Inner-scale relative error scaled by Δ log(1/Δ), fitted at Δ = 0.05.
    let mut inner_ok = true;
    let mut inner = vec![];
    for &beta in &[0.0, 0.5] {
        let cs: Vec<f64> = [0.05, 0.025, 0.0125]
            .iter()
            .map(|&d: &f64| {
                let mut worst = 0.0f64;
                for k in 1..=200 {
                    let lam = (d / 0.1) * k as f64 / 200.0;
                    let exact = a(1.0 - lam, 2.0 - d, beta).unwrap();
                    let approx = a_expansion(lam, d, beta, ExpansionRegime::InnerScale).unwrap();
                    worst = worst.max((exact / approx - 1.0).abs());
                }
                worst / (d * (1.0 / d).ln())
            })
            .collect();
        inner_ok &= cs.iter().all(|&c| c <= 2.0 * cs[0]);
        inner.extend(cs);
    }

    // Outer-scale gap over λ² along λ = Δ^0.4.
    let outer: Vec<f64> = [0.1f64, 0.05, 0.02, 0.01]
        .iter()
        .map(|&d| {
            let lam = d.powf(0.4);
            let exact = a(1.0 - lam, 2.0 - d, 0.0).unwrap();
            (exact - (0.25 + PI * PI * lam * lam / 16.0)).abs() / (lam * lam)
        })
        .collect();
    let outer_ok = strictly_decreasing(&outer);

    let mut violations = 0;
    for &d in &[0.5, 0.4, 0.3, 0.2, 0.1, 0.05, 0.02, 0.01, 0.001] {
        for &beta in &[0.0, 0.3, -0.3, 0.6, -0.6, 0.9, -0.9, 0.999, -0.999] {
            if !check_monotone(2.0 - d, beta, 2000).unwrap().monotone {
                violations += 1;
            }
        }
    }
    outcome(
        fd_bad == 0 && inner_ok && outer_ok && violations == 0,
        format!(
            "FD mismatches {fd_bad}; inner C(Δ) {} (≤ 2×C(0.05): {inner_ok}); outer gap/λ² {} ({}); monotonicity violations {violations}",
            fmt(&inner),
            fmt(&outer),
            if outer_ok { "decreasing" } else { "NOT decreasing" }
        ),
    )
}

fn c7_f_beta_bound() -> Outcome {
    let mut ok = true;
    let mut all = vec![];
    for &beta in &[0.0, 0.5] {
        let cs: Vec<f64> = [0.2, 0.1, 0.05]
            .iter()
            .map(|&d| {
                let mut m = 0.0f64;
                for k in 0..=80 {
                    let x = -10.0 + 0.25 * k as f64;
                    m = m.max(f_beta(x, 2.0 - d, beta).unwrap().value.abs());
                }
                m / d
            })
            .collect();
        let (lo, hi) = cs.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &c| (l.min(c), h.max(c)));
        ok &= hi <= 2.0 * lo;
        all.extend(cs);
    }
    outcome(ok, format!("C = max|f_β|/Δ at Δ = 0.2, 0.1, 0.05 for β = 0 then 0.5: {} (spread ≤ 2x)", fmt(&all)))
}

fn matrix(alpha: f64, beta: f64) -> FisherMatrix {
    fisher_matrix(alpha, beta, &default_plan(alpha).unwrap()).unwrap()
}

fn c8_table1() -> Outcome {
    use Param::*;
    let m = matrix(1.98, 0.0);
    let mut ok = (0.45..=0.55).contains(&m.get(Mu, Mu)) && (1.8..=2.2).contains(&m.get(Sigma, Sigma));
    let mut worst_off = 0.0f64;
    for &(i, j) in ENTRY_PAIRS.iter().filter(|(i, j)| i != j) {
        if (i, j) == (1, 2) {
            continue;
        }
        worst_off = worst_off.max(m.entries[i][j].abs());
    }
    ok &= worst_off <= 0.1 && m.get(Sigma, Alpha) < 0.0;
    outcome(
        ok,
        format!(
            "Δ = 0.02, β = 0: I_μμ = {:.4}, I_σσ = {:.4}, max |off-diagonal except σα| = {worst_off:.4}, I_σα = {:.4}",
            m.get(Mu, Mu),
            m.get(Sigma, Sigma),
            m.get(Sigma, Alpha)
        ),
    )
}

fn c9_trends() -> Outcome {
    use Param::*;
    let t = Instant::now();
    let deltas = [0.2, 0.1, 0.05, 0.02];
    let mut ok = true;
    let mut lines = vec![];
    for &beta in &[0.0, 0.5] {
        let ms: Vec<FisherMatrix> = deltas.iter().map(|&d| matrix(2.0 - d, beta)).collect();
        let ratio = |f: &dyn Fn(&FisherMatrix, f64) -> f64| -> Vec<f64> {
            ms.iter().zip(deltas).map(|(m, d)| f(m, d)).collect()
        };
        let aa = ratio(&|m, d| m.get(Alpha, Alpha) * 4.0 * d * (1.0 / d).ln());
        let sa = ratio(&|m, d| -2.0 * m.get(Sigma, Alpha) / (1.0 / d).ln().ln());
        let bb = ratio(&|m, d| m.get(Beta, Beta) * 4.0 * (1.0 - beta * beta) * (1.0 / d).ln() / d);
        for (name, r) in [("αα", &aa), ("σα", &sa), ("ββ", &bb)] {
            let trend = approaches_one(r);
            let last = r[3];
            let bounded = (0.3..=3.0).contains(&last);
            ok &= trend && bounded;
            lines.push(format!(
                "β={beta} {name} {}{}{}",
                fmt(r),
                if trend { "" } else { " not monotone toward 1" },
                if bounded { "" } else { " outside [0.3, 3]" }
            ));
        }
    }
    let secs = t.elapsed().as_secs_f64();
    ok &= secs < 1200.0;
    outcome(ok, format!("Δ = 0.2, 0.1, 0.05, 0.02: {}; {secs:.1} s", lines.join("; ")))
}

fn c10_cross_pipeline(reports: &mut Vec<OracleReport>) -> Outcome {
    let (alpha, beta) = (1.9, 0.4);
    let m = matrix(alpha, beta);
    let o = fisher_trapezoid_all(alpha, beta, 200.0, 2001).unwrap();
    let mut worst = 0.0f64;
    let mut ok = true;
    for &(i, j) in ENTRY_PAIRS.iter() {
        let id = format!("fisher_{}_{}(1.9,0.4)", Param::ALL[i], Param::ALL[j]);
        let r = OracleReport::compare(id, m.entries[i][j], o[i][j], 0.0, 1e-3);
        ok &= r.pass;
        worst = worst.max(r.rel_diff);
        reports.push(r);
    }
    outcome(ok, format!("10 entries at Δ = 0.1, β = 0.4: max relative difference {worst:.2e} (tol 1e-3)"))
}

fn c11_structural_zeros() -> Outcome {
    use Param::*;
    let mut worst = 0.0f64;
    for &d in &[0.2, 0.1] {
        let m = matrix(2.0 - d, 0.0);
        for (i, j) in [(Mu, Sigma), (Mu, Alpha), (Sigma, Beta), (Alpha, Beta)] {
            worst = worst.max(m.get(i, j).abs());
        }
    }
    outcome(worst <= 1e-6, format!("max |I_μσ|, |I_μα|, |I_σβ|, |I_αβ| at Δ = 0.2, 0.1, β = 0: {worst:.2e} (tol 1e-6)"))
}

fn c12_golden() -> Outcome {
    let golden_dir: PathBuf = [env!("CARGO_MANIFEST_DIR"), "tests", "golden"].iter().collect();
    let cases: [(&str, &[&str]); 4] = [
        ("table1.json", &["table1", "--format", "json"]),
        ("table1.csv", &["table1", "--format", "csv"]),
        ("density_gaussian.csv", &["density", "--alpha", "2", "--beta", "0", "--grid", "0:4:5", "--format", "csv"]),
        (
            "sweep_alpha_alpha.csv",
            &["sweep", "--entry", "alpha,alpha", "--deltas", "0.2,0.1,0.05", "--beta", "0", "--format", "csv"],
        ),
    ];
    let mut bad = vec![];
    for (file, args) in cases {
        let run = || Command::new(env!("CARGO_BIN_EXE_stable-info")).args(args).output().unwrap().stdout;
        let (first, second) = (run(), run());
        let expected = std::fs::read(golden_dir.join(file)).unwrap();
        if first != second || first != expected {
            bad.push(file);
        }
    }
    outcome(bad.is_empty(), format!("4 fixtures, two runs each; mismatches: {bad:?}"))
}

fn main() {
    let mut reports = vec![];
    let criteria: Vec<(&str, Box<dyn FnOnce(&mut Vec<OracleReport>) -> Outcome>)> = vec![
        ("oracle equivalence (density)", Box::new(c1_density_oracle)),
        ("closed-form anchors", Box::new(c2_closed_forms)),
        ("normalization and zero-mean scores", Box::new(|_| c3_normalization())),
        ("reflection identities", Box::new(|_| c4_reflection())),
        ("core/tail regimes (trend)", Box::new(|_| c5_regimes())),
        ("kernel derivative, expansion and monotonicity suite", Box::new(|_| c6_kernel())),
        ("f_β = O(Δ) bound", Box::new(|_| c7_f_beta_bound())),
        ("limit matrix approach at Δ = 0.02", Box::new(|_| c8_table1())),
        ("Fisher divergence trends", Box::new(|_| c9_trends())),
        ("cross-pipeline Fisher agreement", Box::new(c10_cross_pipeline)),
        ("β = 0 structural zeros", Box::new(|_| c11_structural_zeros())),
        ("CLI golden outputs", Box::new(|_| c12_golden())),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.into_iter().enumerate() {
        let o = run(&mut reports);
        if !o.pass {
            failed += 1;
        }
        println!("{} [{:>2}] {name}: {}", if o.pass { "PASS" } else { "FAIL" }, k + 1, o.detail);
    }

    let failed_reports = reports.iter().filter(|r| !r.pass).count();
    let path = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance_oracle_reports.jsonl");
    let lines: Vec<String> = reports.iter().map(OracleReport::to_json_line).collect();
    std::fs::write(&path, lines.join("\n") + "\n").unwrap();
    println!(
        "oracle reports: {} written to {}, {failed_reports} failing",
        reports.len(),
        path.display()
    );
    println!("acceptance: {} of 12 criteria passed", 12 - failed);
    if failed > 0 || failed_reports > 0 {
        std::process::exit(1);
    }
}
