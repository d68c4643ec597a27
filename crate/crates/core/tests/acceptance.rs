//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
//!
//! `MDPDE_ACCEPTANCE_REPS` overrides the replication count of the
//! efficiency tables (default 1000).

use std::time::{Duration, Instant};

use mdpde_core::asymptotics::psi_omega;
use mdpde_core::golden::{self, CoefTable};
use mdpde_core::reproduce::{reproduce, ReproduceOptions, TableId, TableReport};
use mdpde_core::robustness::Influence;
use mdpde_core::sim::{Case, Scenario, SimFamily};
use mdpde_core::{data, dpd, fit, wald_table, Family, FitResult, ModelSpec, Reference, SolverOptions};
use nalgebra::{DMatrix, DVector};

const MLE_COEF_ABS: f64 = 5e-3;
const MLE_SE_REL: f64 = 0.02;
const MLE_SECONDS: f64 = 1.0;
const P_EPILEPSY: (f64, f64) = (0.0030, 0.0005);
const P_CARROTS: (f64, f64) = (0.0339, 0.002);
const SMOKE_REPS: usize = 50;
const SMOKE_SECONDS: f64 = 30.0;
const T11_ROWS: usize = 8;
const PROPERTY_SECONDS: f64 = 60.0;

struct Outcome {
    pass: bool,
    detail: String,
}

fn report(n: usize, name: &str, o: &Outcome) {
    println!("{} criterion {n} ({name}): {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
}

fn table(preset: &str) -> &'static CoefTable {
    golden::COEF_TABLES.iter().find(|t| t.preset == preset).expect("golden table")
}

fn mle_anchors() -> Outcome {
    let mut bad = Vec::new();
    let mut slowest = Duration::ZERO;
    for preset in ["aids", "leukemia", "skin", "carrots"] {
        let spec = data::preset(preset).unwrap().model().unwrap();
        let t = Instant::now();
        let f = match fit(&spec, 0.0, &SolverOptions::default()) {
            Ok(f) => f,
            Err(e) => {
                bad.push(format!("{preset}: {e}"));
                continue;
            }
        };
        slowest = slowest.max(t.elapsed());
        let se = f.se.clone().unwrap_or_default();
        for (j, row) in table(preset).rows.iter().enumerate() {
            if (f.beta[j] - row.estimate[0]).abs() > MLE_COEF_ABS {
                bad.push(format!("{preset} {} estimate {:.4} vs {}", row.name, f.beta[j], row.estimate[0]));
            }
            match se.get(j) {
                Some(s) if (s - row.se[0]).abs() <= MLE_SE_REL * row.se[0] => {}
                s => bad.push(format!("{preset} {} se {s:?} vs {}", row.name, row.se[0])),
            }
        }
    }
    let fast = slowest.as_secs_f64() < MLE_SECONDS;
    let mut detail = format!("slowest fit {:.3}s", slowest.as_secs_f64());
    if !bad.is_empty() {
        detail.push_str(&format!("; {}", bad.join("; ")));
    }
    Outcome { pass: bad.is_empty() && fast, detail }
}

fn coefficient_tables(opts: &ReproduceOptions) -> Outcome {
    let ids = [TableId::T5, TableId::T6, TableId::T7, TableId::T8, TableId::T9, TableId::T10];
    let mut parts = Vec::new();
    let mut pass = true;
    for id in ids {
        match reproduce(id, opts) {
            Ok(r) => {
                pass &= r.passed;
                parts.push(format!("{id} {}", summary(&r)));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("{id} error {e}"));
            }
        }
    }
    Outcome { pass, detail: parts.join("; ") }
}

fn summary(r: &TableReport) -> String {
    let scored: Vec<_> = r.cells.iter().filter(|c| c.scored).collect();
    let failing = scored.iter().filter(|c| !c.within).count();
    format!("{failing}/{} cells off", scored.len())
}

fn p_value(preset: &str, coef: &str) -> Option<f64> {
    let spec = data::preset(preset).ok()?.model().ok()?;
    let f = fit(&spec, 0.0, &SolverOptions::default()).ok()?;
    let rows = wald_table(&f, spec.coef_names(), Reference::residual_t(&spec)).ok()?;
    rows.into_iter().find(|r| r.name == coef).map(|r| r.p_value)
}

fn p_values() -> Outcome {
    let ep = p_value("epilepsy", "Trt");
    let ca = p_value("carrots", "Intercept");
    let ok = |v: Option<f64>, (target, tol): (f64, f64)| v.is_some_and(|v| (v - target).abs() <= tol);
    Outcome {
        pass: ok(ep, P_EPILEPSY) && ok(ca, P_CARROTS),
        detail: format!(
            "epilepsy Trt {} (want {}±{}), carrots Intercept {} (want {}±{})",
            fmt_opt(ep),
            P_EPILEPSY.0,
            P_EPILEPSY.1,
            fmt_opt(ca),
            P_CARROTS.0,
            P_CARROTS.1
        ),
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "unavailable".into(), |v| format!("{v:.4}"))
}

fn efficiency_tables(opts: &ReproduceOptions) -> Outcome {
    let ids = [TableId::T1, TableId::T2, TableId::T3, TableId::T4];
    let mut pass = true;
    let mut parts = Vec::new();
    for id in ids {
        match reproduce(id, opts) {
            Ok(r) => {
                pass &= r.passed;
                parts.push(format!("{id} {}", r.verdict));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("{id} error {e}"));
            }
        }
    }
    let smoke = ReproduceOptions { replications: SMOKE_REPS, ..opts.clone() };
    let t = Instant::now();
    let smoke_ok = ids.iter().all(|&id| reproduce(id, &smoke).is_ok());
    let secs = t.elapsed().as_secs_f64();
    pass &= smoke_ok && secs < SMOKE_SECONDS;
    parts.push(format!("{SMOKE_REPS}-replication smoke {secs:.1}s (limit {SMOKE_SECONDS}s)"));
    Outcome { pass, detail: format!("{} replications, seed {}; {}", opts.replications, opts.seed, parts.join("; ")) }
}

fn optimal_alpha(opts: &ReproduceOptions) -> Outcome {
    match reproduce(TableId::T11, opts) {
        Ok(r) => {
            let rows = r.cells.len() / golden::PILOTS.len();
            let matched = r.cells.chunks(golden::PILOTS.len()).filter(|row| row.iter().all(|c| c.within)).count();
            Outcome { pass: matched >= T11_ROWS, detail: format!("{matched} of {rows} rows exact (need {T11_ROWS})") }
        }
        Err(e) => Outcome { pass: false, detail: e.to_string() },
    }
}

fn check(failures: &mut Vec<String>, name: &str, ok: bool) {
    if !ok {
        failures.push(name.to_string());
    }
}

fn small_poisson() -> (ModelSpec, DVector<f64>) {
    let n = 25;
    let x = DMatrix::from_fn(n, 2, |i, j| if j == 0 { 1.0 } else { 1.0 / (i + 1) as f64 });
    let y: Vec<f64> = (0..n).map(|i| ((i * 5) % 9) as f64).collect();
    (ModelSpec::new(x, y, Family::Poisson).unwrap(), DVector::from_vec(vec![1.1, 0.6]))
}

fn small_logistic() -> (ModelSpec, DVector<f64>) {
    let n = 40;
    let x = DMatrix::from_fn(n, 3, |i, j| match j {
        0 => 1.0,
        1 => ((i + 1) as f64).sqrt() - 3.0,
        _ => ((i * 7) % 5) as f64 / 5.0 - 0.4,
    });
    let y: Vec<f64> = (0..n).map(|i| f64::from(((i * 13) % 7) < 3)).collect();
    (ModelSpec::new(x, y, Family::Bernoulli).unwrap(), DVector::from_vec(vec![0.2, -0.4, 0.9]))
}

fn properties() -> Outcome {
    let start = Instant::now();
    let mut failures = Vec::new();
    let (ps, pb) = small_poisson();
    let (ls, lb) = small_logistic();

    let mut identities = true;
    for (spec, theta) in [(&ps, &pb), (&ls, &lb)] {
        let (psi, omega) = psi_omega(spec, theta, 0.0).unwrap();
        identities &= (&psi - &omega).amax() < 1e-8;
    }
    for eta in [-2.0, 0.0, 3.0] {
        for fam in [Family::Poisson, Family::Bernoulli, Family::Gaussian] {
            let g = fam.gamma_set(eta, 1.5, 1, 0.0).unwrap();
            identities &= g.gamma1.abs() < 1e-8 && g.gamma2.abs() < 1e-8;
        }
    }
    check(&mut failures, "score identities", identities);

    let mut grad_ok = true;
    for (spec, theta) in [(&ps, &pb), (&ls, &lb)] {
        for alpha in [0.0, 0.1, 0.5, 1.0] {
            let g = dpd::gradient(spec, theta, alpha).unwrap();
            for j in 0..theta.len() {
                let h = 1e-5 * (1.0 + theta[j].abs());
                let mut up = theta.clone();
                let mut dn = theta.clone();
                up[j] += h;
                dn[j] -= h;
                let fd =
                    (dpd::objective(spec, &up, alpha).unwrap() - dpd::objective(spec, &dn, alpha).unwrap()) / (2.0 * h);
                grad_ok &= (fd - g[j]).abs() / g[j].abs().max(1e-3) < 1e-5;
            }
        }
    }
    check(&mut failures, "gradient", grad_ok);

    let mut oracle = true;
    for eta in [-6.0f64, -1.0, 0.0, 2.5, 9.0] {
        for alpha in [0.0, 0.5, 1.0] {
            let g = Family::Bernoulli.gamma_set(eta, 1.0, 1, alpha).unwrap();
            let (p, q) = (1.0 / (1.0 + (-eta).exp()), 1.0 / (1.0 + eta.exp()));
            let (w0, w1) = (q.powf(1.0 + alpha), p.powf(1.0 + alpha));
            oracle &= (g.gamma1 - (w1 * q - w0 * p)).abs() <= 1e-14;
            let g11 = w1 * q * q + w0 * p * p;
            oracle &= (g.gamma11 - g11).abs() <= 1e-14 * g11;
        }
    }
    for eta in [-3.0f64, 0.0, 4.0] {
        let mu = eta.exp();
        for alpha in [0.1, 1.0] {
            let g = Family::Poisson.gamma_set(eta, 1.0, 1, alpha).unwrap();
            let mut b = 0.0;
            for y in 0..2000u32 {
                let y = f64::from(y);
                let lf = Family::Poisson.log_density(y, eta, 1.0, 1).unwrap();
                b += ((1.0 + alpha) * lf).exp() * (y - mu).powi(2);
            }
            oracle &= (g.gamma11 - b).abs() <= 1e-10 * b;
        }
    }
    for alpha in [0.0, 0.5, 1.0] {
        let a = dpd::logistic_equation_explicit(ls.design(), ls.response(), &lb, alpha);
        let b = dpd::logistic_equation_simplified(ls.design(), ls.response(), &lb, alpha);
        oracle &= (a - b).amax() < 1e-12;
    }
    check(&mut failures, "closed-form oracles", oracle);

    let model = Scenario::published(SimFamily::Poisson, Case::I, 50);
    let mspec = model.truth_model().unwrap();
    let mbeta = DVector::from_column_slice(&model.beta_true);
    let mut redescending = true;
    let mut linear = true;
    for i0 in [1usize, 20, 50] {
        let mu = mspec.row(i0 - 1).dot(&mbeta).exp();
        let upper = (10.0 * mu + 100.0).ceil() as u32;
        let norms = |alpha: f64| -> Vec<f64> {
            let f = FitResult::at_parameters(&mspec, &mbeta, alpha).unwrap();
            let inf = Influence::new(&mspec, &f, i0).unwrap();
            (0..=upper).map(|t| inf.at(f64::from(t)).unwrap().norm()).collect()
        };
        for alpha in [0.1, 0.25, 0.5, 1.0] {
            let v = norms(alpha);
            let max = v.iter().cloned().fold(0.0, f64::max);
            let arg = v.iter().position(|&x| x == max).unwrap();
            redescending &= arg > 0 && arg < v.len() - 1 && v[v.len() - 1] < 1e-3 * max;
        }
        let v = norms(0.0);
        linear &= v[v.len() - 1] > v[..v.len() - 1].iter().cloned().fold(0.0, f64::max);
    }
    check(&mut failures, "influence redescends for alpha > 0", redescending);
    check(&mut failures, "influence grows linearly at alpha 0", linear);

    let fit_at = |preset: &str, alpha: f64| {
        fit(&data::preset(preset).unwrap().model().unwrap(), alpha, &SolverOptions::default()).unwrap()
    };
    let (clean, dirty) = (fit_at("aids", 0.5), fit_at("aids-two-outliers", 0.5));
    let robust_gap = clean.beta.iter().zip(&dirty.beta).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let (clean0, dirty0) = (fit_at("aids", 0.0), fit_at("aids-two-outliers", 0.0));
    let mle_gap = (clean0.beta[1] - dirty0.beta[1]).abs();
    check(&mut failures, "outlier stability", robust_gap < 0.16 && mle_gap > 0.7);

    let secs = start.elapsed().as_secs_f64();
    let mut detail = format!(
        "{secs:.1}s (limit {PROPERTY_SECONDS}s); alpha 0.5 outlier gap {robust_gap:.3}, MLE slope gap {mle_gap:.3}"
    );
    if !failures.is_empty() {
        detail.push_str(&format!("; failing: {}", failures.join(", ")));
    }
    Outcome { pass: failures.is_empty() && secs < PROPERTY_SECONDS, detail }
}

fn main() {
    let reps = std::env::var("MDPDE_ACCEPTANCE_REPS")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(mdpde_core::sim::DEFAULT_REPLICATIONS);
    let opts = ReproduceOptions { replications: reps, ..ReproduceOptions::default() };
    let outcomes = [
        (1, "maximum likelihood anchors", mle_anchors()),
        (2, "coefficient tables", coefficient_tables(&opts)),
        (3, "p-value convention", p_values()),
        (4, "relative efficiency tables", efficiency_tables(&opts)),
        (5, "optimal alpha table", optimal_alpha(&opts)),
        (6, "property suites", properties()),
    ];
    for (n, name, o) in &outcomes {
        report(*n, name, o);
    }
    if outcomes.iter().any(|(_, _, o)| !o.pass) {
        std::process::exit(1);
    }
}
