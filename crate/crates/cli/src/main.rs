//! `mdpde`: robust GLM fits by minimum density power divergence.

mod manifest;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use mdpde_core::alpha_select::{self, AlphaSelection};
use mdpde_core::data::{self, FormulaSpec};
use mdpde_core::reproduce::{self, Reading, ReproduceOptions, TableId};
use mdpde_core::robustness::{self, GridPolicy, InfluenceReport};
use mdpde_core::sim::{self, Case, CovariateRule, Scenario, SimFamily};
use mdpde_core::solver::{self, FitResult};
use mdpde_core::{fmt17, Error, Execution, Family, ModelSpec, Reference, SolverOptions};

use manifest::{DatasetRef, RunManifest};

#[derive(Debug, Parser)]
#[command(name = "mdpde", version, about = "Minimum density power divergence estimation for GLMs")]
struct Cli {
    /// Run everything on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a model along a list of alpha values.
    Fit(FitArgs),
    /// Regenerate a published table and compare.
    Reproduce(ReproduceArgs),
    /// Export influence functions over a contamination grid.
    Influence(InfluenceArgs),
    /// Choose alpha by minimising the estimated MSE against a pilot.
    SelectAlpha(SelectArgs),
    /// Monte Carlo relative efficiencies for one simulation case.
    Simulate(SimulateArgs),
    /// List the bundled datasets and presets.
    Datasets(DatasetsArgs),
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// Bundled preset (see `mdpde datasets`).
    #[arg(long, conflicts_with_all = ["data", "formula"])]
    preset: Option<String>,
    /// CSV file with a header row.
    #[arg(long, requires = "formula")]
    data: Option<PathBuf>,
    /// Model formula, e.g. `y ~ 1 + log(x) + g:eq(k, 2)`.
    #[arg(long, requires = "data")]
    formula: Option<String>,
    /// Response family; inferred from the response when omitted.
    #[arg(long, value_enum)]
    family: Option<FamilyArg>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FamilyArg {
    Poisson,
    Bernoulli,
    Binomial,
    Gaussian,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Family {
        match f {
            FamilyArg::Poisson => Family::Poisson,
            FamilyArg::Bernoulli => Family::Bernoulli,
            FamilyArg::Binomial => Family::Binomial,
            FamilyArg::Gaussian => Family::Gaussian,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Table,
    Csv,
}

#[derive(Debug, Args)]
struct SolverArgs {
    /// Only use the warm start (or the likelihood fit) as a starting point.
    #[arg(long)]
    single_start: bool,
    /// Ignore warm starts along the alpha path.
    #[arg(long)]
    cold_start: bool,
    #[arg(long, default_value_t = 200)]
    max_iter: usize,
    /// Seed for the random half-sample starts.
    #[arg(long)]
    start_seed: Option<u64>,
}

impl SolverArgs {
    fn options(&self) -> SolverOptions {
        let mut o = if self.single_start { SolverOptions::single_start() } else { SolverOptions::default() };
        o.cold_start = self.cold_start;
        o.max_iter = self.max_iter;
        if let Some(s) = self.start_seed {
            o.seed = s;
        }
        o
    }
}

#[derive(Debug, Args)]
struct FitArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Comma-separated alpha values.
    #[arg(long, value_delimiter = ',', value_parser = parse_alpha, default_value = "0", allow_hyphen_values = true)]
    alpha: Vec<f64>,
    #[command(flatten)]
    solver: SolverArgs,
    /// Reference distribution for p-values.
    #[arg(long, value_enum, default_value_t = RefArg::T)]
    reference: RefArg,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write to a file (with a manifest beside it) instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RefArg {
    /// Student t on units minus coefficients degrees of freedom.
    T,
    Normal,
}

#[derive(Debug, Args)]
struct ReproduceArgs {
    /// T1 to T11.
    #[arg(value_parser = parse_table)]
    table: TableId,
    /// Replications for the efficiency tables.
    #[arg(long, default_value_t = sim::DEFAULT_REPLICATIONS)]
    reps: usize,
    #[arg(long, default_value_t = sim::DEFAULT_SEED)]
    seed: u64,
    /// How the simulation cases are read.
    #[arg(long, value_enum, default_value_t = ReadingArg::Published)]
    reading: ReadingArg,
    /// Directory for the cell CSV and the JSON report.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ReadingArg {
    Published,
    Tabulated,
}

impl From<ReadingArg> for Reading {
    fn from(r: ReadingArg) -> Reading {
        match r {
            ReadingArg::Published => Reading::Published,
            ReadingArg::Tabulated => Reading::Tabulated,
        }
    }
}

#[derive(Debug, Args)]
struct InfluenceArgs {
    /// Simulation model at its true parameters, e.g. `poisson-case-I`.
    #[arg(long, conflicts_with_all = ["preset", "data", "design"])]
    model: Option<String>,
    /// Explicit design matrix (CSV, every column is a covariate).
    #[arg(long, requires = "beta", conflicts_with_all = ["preset", "data"])]
    design: Option<PathBuf>,
    /// True coefficients for `--design`, or overrides for `--model`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    beta: Option<Vec<f64>>,
    /// Family for `--design`.
    #[arg(long, value_enum, default_value_t = SimFamilyArg::Poisson)]
    design_family: SimFamilyArg,
    #[command(flatten)]
    data: ModelArgs,
    /// Sample size for `--model`.
    #[arg(long, default_value_t = 50)]
    n: usize,
    /// 1-based contamination directions.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    i0: Vec<usize>,
    #[arg(long, value_delimiter = ',', value_parser = parse_alpha, default_value = "0,0.1,0.25,0.5,1", allow_hyphen_values = true)]
    alphas: Vec<f64>,
    /// Integer grid upper bound; defaults per family.
    #[arg(long)]
    upper: Option<u64>,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the sensitivities as JSON here.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SimFamilyArg {
    Poisson,
    Logistic,
}

impl From<SimFamilyArg> for SimFamily {
    fn from(f: SimFamilyArg) -> SimFamily {
        match f {
            SimFamilyArg::Poisson => SimFamily::Poisson,
            SimFamilyArg::Logistic => SimFamily::Logistic,
        }
    }
}

#[derive(Debug, Args)]
struct SelectArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, value_parser = parse_alpha, default_value_t = alpha_select::DEFAULT_PILOT, allow_hyphen_values = true)]
    pilot: f64,
    #[arg(long, default_value_t = 0.05)]
    grid_step: f64,
    /// Keep going when some candidates cannot be fitted.
    #[arg(long)]
    allow_partial: bool,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long, value_enum)]
    family: SimFamilyArg,
    #[arg(long, value_parser = parse_case)]
    case: Case,
    #[arg(long, default_value_t = 50)]
    n: usize,
    #[arg(long, default_value_t = sim::DEFAULT_REPLICATIONS)]
    reps: usize,
    #[arg(long, default_value_t = sim::DEFAULT_SEED)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = ReadingArg::Published)]
    reading: ReadingArg,
    /// Alpha grid; must start at 0.
    #[arg(long, value_delimiter = ',', value_parser = parse_alpha, allow_hyphen_values = true)]
    alphas: Option<Vec<f64>>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Suppress progress on stderr.
    #[arg(long)]
    quiet: bool,
}

#[derive(Debug, Args)]
struct DatasetsArgs {
    /// Print one dataset as CSV.
    #[arg(long)]
    show: Option<String>,
}

fn parse_alpha(s: &str) -> Result<f64, String> {
    let a: f64 = s.trim().parse().map_err(|_| format!("'{s}' is not a number"))?;
    if a.is_finite() && a >= 0.0 {
        Ok(a)
    } else {
        Err(format!("alpha must be finite and non-negative, got {a}"))
    }
}

fn parse_table(s: &str) -> Result<TableId, String> {
    TableId::parse(s).map_err(|e| e.to_string())
}

fn parse_case(s: &str) -> Result<Case, String> {
    Case::parse(s).map_err(|e| e.to_string())
}

/// Exit-code contract.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Success = 0,
    Usage = 1,
    Convergence = 2,
    Tolerance = 3,
}

impl From<Status> for ExitCode {
    fn from(s: Status) -> ExitCode {
        ExitCode::from(s as u8)
    }
}

fn status_of(e: &Error) -> Status {
    if e.is_convergence() {
        Status::Convergence
    } else {
        Status::Usage
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { Status::Usage } else { Status::Success }.into();
        }
    };
    mdpde_core::exec::init_threads();
    let exec = if cli.sequential { Execution::Sequential } else { Execution::Parallel };
    let result = match cli.command {
        Command::Fit(a) => cmd_fit(a),
        Command::Reproduce(a) => cmd_reproduce(a, exec),
        Command::Influence(a) => cmd_influence(a, exec),
        Command::SelectAlpha(a) => cmd_select(a),
        Command::Simulate(a) => cmd_simulate(a, exec),
        Command::Datasets(a) => cmd_datasets(a),
    };
    match result {
        Ok(s) => s.into(),
        Err(e) => {
            eprintln!("error: {e}");
            status_of(&e).into()
        }
    }
}

type CmdResult = Result<Status, Error>;

fn load_model(m: &ModelArgs) -> Result<(ModelSpec, Option<DatasetRef>), Error> {
    match (&m.preset, &m.data, &m.formula) {
        (Some(name), _, _) => {
            let p = data::preset(name)?;
            let spec = p.model()?;
            if let Some(f) = m.family.map(Family::from) {
                if f != spec.family() {
                    return Err(Error::Input(format!("preset {name} is a {} model", spec.family().name())));
                }
            }
            Ok((spec, Some(DatasetRef { name: name.clone(), sha256: p.checksum()? })))
        }
        (None, Some(path), Some(formula)) => {
            let bytes = std::fs::read(path)?;
            let table = data::read_csv(path)?;
            let spec = data::build_model(&table, &FormulaSpec::parse(formula)?, m.family.map(Family::from))?;
            Ok((spec, Some(DatasetRef { name: path.display().to_string(), sha256: data::sha256_hex(&bytes) })))
        }
        _ => Err(Error::Input("give either --preset or both --data and --formula".into())),
    }
}

fn emit(out: Option<&Path>, text: &str, manifest: &RunManifest) -> Result<(), Error> {
    match out {
        Some(p) => {
            std::fs::write(p, text)?;
            manifest.write_beside(p)?;
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
        }
    }
    Ok(())
}

fn to_json<T: Serialize>(v: &T) -> Result<String, Error> {
    serde_json::to_string_pretty(v).map(|s| s + "\n").map_err(|e| Error::Input(e.to_string()))
}

#[derive(Debug, Serialize)]
struct FitEntry {
    alpha: f64,
    converged: bool,
    beta: Option<Vec<f64>>,
    phi: Option<f64>,
    se: Option<Vec<f64>>,
    t: Option<Vec<f64>>,
    p: Option<Vec<f64>>,
    objective: Option<f64>,
    grad_norm: Option<f64>,
    iterations: Option<usize>,
    start_source: Option<mdpde_core::StartSource>,
    note: Option<String>,
}

impl FitEntry {
    fn from_result(alpha: f64, r: &Result<FitResult, Error>, reference: Reference) -> FitEntry {
        match r {
            Ok(f) => {
                let (t, p) = match &f.se {
                    Some(se) => {
                        let t: Vec<f64> = f.beta.iter().zip(se).map(|(b, s)| b / s).collect();
                        let p = t.iter().map(|&z| reference.two_sided_p(z).ok()).collect::<Option<Vec<_>>>();
                        (Some(t), p)
                    }
                    None => (None, None),
                };
                FitEntry {
                    alpha,
                    converged: f.converged,
                    beta: Some(f.beta.clone()),
                    phi: f.phi,
                    se: f.se.clone(),
                    t,
                    p,
                    objective: Some(f.objective),
                    grad_norm: Some(f.grad_norm),
                    iterations: Some(f.iterations),
                    start_source: Some(f.start_source),
                    note: f.inference_note.clone(),
                }
            }
            Err(e) => FitEntry {
                alpha,
                converged: false,
                beta: None,
                phi: None,
                se: None,
                t: None,
                p: None,
                objective: None,
                grad_norm: None,
                iterations: None,
                start_source: None,
                note: Some(e.to_string()),
            },
        }
    }
}

#[derive(Debug, Serialize)]
struct FitOutput {
    manifest: RunManifest,
    family: Family,
    n: usize,
    units: usize,
    coefficients: Vec<String>,
    reference: Reference,
    fits: Vec<FitEntry>,
}

/// Fits along the sorted distinct alphas, returned in input order.
fn fit_in_input_order(
    spec: &ModelSpec,
    alphas: &[f64],
    opts: &SolverOptions,
) -> Result<Vec<Result<FitResult, Error>>, Error> {
    let mut grid = alphas.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let mut path: Vec<Option<Result<FitResult, Error>>> =
        solver::fit_path_partial(spec, &grid, opts)?.into_iter().map(Some).collect();
    let mut out = Vec::with_capacity(alphas.len());
    for a in alphas {
        let k = grid.iter().position(|g| g == a).expect("alpha is on the grid");
        out.push(match path[k].take() {
            Some(r) => {
                if let Ok(f) = &r {
                    path[k] = Some(Ok(f.clone()));
                }
                r
            }
            None => Err(Error::Input(format!("fit at alpha = {a} failed (see above)"))),
        });
    }
    Ok(out)
}

fn cmd_fit(a: FitArgs) -> CmdResult {
    let (spec, dataset) = load_model(&a.model)?;
    let opts = a.solver.options();
    let results = fit_in_input_order(&spec, &a.alpha, &opts)?;
    let reference = match a.reference {
        RefArg::T => Reference::residual_t(&spec),
        RefArg::Normal => Reference::Normal,
    };
    let failed = results.iter().any(|r| r.is_err());
    for (alpha, r) in a.alpha.iter().zip(&results) {
        if let Err(e) = r {
            eprintln!("alpha = {alpha}: {e}");
        }
    }
    let manifest = RunManifest::new().with_dataset(dataset).with_solver(&opts);
    let entries: Vec<FitEntry> =
        a.alpha.iter().zip(&results).map(|(&al, r)| FitEntry::from_result(al, r, reference)).collect();
    let text = match a.format {
        Format::Json => to_json(&FitOutput {
            manifest: manifest.clone(),
            family: spec.family(),
            n: spec.n(),
            units: spec.units(),
            coefficients: spec.coef_names().to_vec(),
            reference,
            fits: entries,
        })?,
        Format::Table => fit_table(&spec, &entries),
        Format::Csv => fit_csv(&spec, &entries),
    };
    emit(a.out.as_deref(), &text, &manifest)?;
    Ok(if failed { Status::Convergence } else { Status::Success })
}

fn fit_table(spec: &ModelSpec, entries: &[FitEntry]) -> String {
    let mut s = format!("{:<18}", "alpha");
    for e in entries {
        s.push_str(&format!("{:>12}", e.alpha));
    }
    s.push('\n');
    let cell = |v: Option<f64>| v.map_or_else(|| format!("{:>12}", "-"), |x| format!("{x:>12.4}"));
    for (j, name) in spec.coef_names().iter().enumerate() {
        for (label, pick) in [("", 0), ("  se", 1), ("  p", 2)] {
            s.push_str(&format!("{:<18}", format!("{name}{label}")));
            for e in entries {
                let v = match pick {
                    0 => e.beta.as_ref().map(|b| b[j]),
                    1 => e.se.as_ref().map(|b| b[j]),
                    _ => e.p.as_ref().map(|b| b[j]),
                };
                s.push_str(&cell(v));
            }
            s.push('\n');
        }
    }
    s
}

fn fit_csv(spec: &ModelSpec, entries: &[FitEntry]) -> String {
    let mut s = String::from("alpha,coef,estimate,se,t,p\n");
    let opt = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), fmt17);
    for e in entries {
        for (j, name) in spec.coef_names().iter().enumerate() {
            s.push_str(&format!(
                "{},{},{},{},{},{}\n",
                fmt17(e.alpha),
                name,
                opt(e.beta.as_ref().map(|b| b[j])),
                opt(e.se.as_ref().map(|b| b[j])),
                opt(e.t.as_ref().map(|b| b[j])),
                opt(e.p.as_ref().map(|b| b[j]))
            ));
        }
    }
    s
}

fn cmd_reproduce(a: ReproduceArgs, exec: Execution) -> CmdResult {
    let opts =
        ReproduceOptions { replications: a.reps, seed: a.seed, reading: a.reading.into(), exec, ..Default::default() };
    let report = reproduce::reproduce(a.table, &opts)?;
    println!("{} ({}): {}", report.id, report.description, if report.passed { "PASS" } else { "FAIL" });
    println!("  {}", report.verdict);
    for c in &report.classes {
        println!(
            "  {:<14} {:>4} cells, {:>3} outside tolerance, max |deviation| {:.4}",
            format!("{:?}", c.kind),
            c.cells,
            c.failing,
            c.max_abs_deviation
        );
    }
    for c in report.failing() {
        let act = c.actual.map_or_else(|| "no fit".to_string(), |v| format!("{v:.4}"));
        println!("  outside: {} {} alpha={} {:?} expected {} got {act}", c.group, c.row, c.alpha, c.kind, c.expected);
    }
    for n in &report.notes {
        println!("  note: {n}");
    }
    for s in &report.curves {
        println!("  curve for pilot {} (chosen {}):", s.pilot_alpha, s.optimal_alpha);
        for e in &s.mse_curve {
            println!(
                "    alpha {:<5} bias^2 {:.6e} trace {:.6e} mse {:.6e}",
                e.alpha, e.bias_sq, e.variance_trace, e.mse
            );
        }
    }
    if let Some(dir) = &a.out_dir {
        std::fs::create_dir_all(dir)?;
        let manifest = RunManifest::new().with_seed(a.seed).with_solver(&opts.solver);
        let csv = dir.join(format!("{}.csv", report.id));
        std::fs::write(&csv, report.cells_csv())?;
        manifest.write_beside(&csv)?;
        let json = dir.join(format!("{}.json", report.id));
        std::fs::write(&json, to_json(&report)?)?;
        manifest.write_beside(&json)?;
    }
    Ok(if report.passed { Status::Success } else { Status::Tolerance })
}

fn parse_model_name(name: &str) -> Result<(SimFamily, Case), Error> {
    let lower = name.to_ascii_lowercase();
    let (fam, case) = lower
        .split_once("-case-")
        .ok_or_else(|| Error::Input(format!("model '{name}' should look like poisson-case-I")))?;
    Ok((SimFamily::parse(fam)?, Case::parse(case)?))
}

fn read_design(path: &Path) -> Result<Vec<Vec<f64>>, Error> {
    let t = data::read_csv(path)?;
    Ok(t.rows)
}

#[derive(Debug, Serialize)]
struct SensitivityRow {
    alpha: f64,
    i0: usize,
    sup_norm: f64,
    gross_error_sensitivity: Option<f64>,
    self_standardized_sensitivity: Option<f64>,
    unbounded: bool,
}

fn cmd_influence(a: InfluenceArgs, exec: Execution) -> CmdResult {
    let mut dataset = None;
    let opts = a.solver.options();
    let (spec, fits): (ModelSpec, Vec<FitResult>) = if a.model.is_some() || a.design.is_some() {
        let scenario = match (&a.model, &a.design) {
            (Some(name), _) => {
                let (fam, case) = parse_model_name(name)?;
                let mut s = Scenario::published(fam, case, a.n);
                if let Some(b) = &a.beta {
                    s.beta_true = b.clone();
                }
                s
            }
            (None, Some(path)) => {
                let rows = read_design(path)?;
                let mut s = Scenario::published(a.design_family.into(), Case::I, rows.len());
                s.case = None;
                s.covariates = CovariateRule::Explicit(rows);
                s.beta_true = a.beta.clone().unwrap_or_default();
                s
            }
            _ => unreachable!(),
        };
        let spec = scenario.truth_model()?;
        let theta = nalgebra::DVector::from_column_slice(&scenario.beta_true);
        let fits =
            a.alphas.iter().map(|&al| FitResult::at_parameters(&spec, &theta, al)).collect::<Result<Vec<_>, _>>()?;
        (spec, fits)
    } else {
        let (spec, d) = load_model(&a.data)?;
        dataset = d;
        let fits = fit_in_input_order(&spec, &a.alphas, &opts)?.into_iter().collect::<Result<Vec<_>, _>>()?;
        (spec, fits)
    };
    let policy = a.upper.map_or(GridPolicy::Default, GridPolicy::UpTo);
    let mut reports: Vec<InfluenceReport> = Vec::new();
    for fit in &fits {
        for &i0 in &a.i0 {
            reports.push(robustness::influence_report(&spec, fit, i0, &policy, exec)?);
        }
    }
    let manifest = RunManifest::new().with_dataset(dataset).with_solver(&opts);
    let mut buf = Vec::new();
    robustness::write_csv(&mut buf, &robustness::records(&spec, &reports))?;
    emit(a.out.as_deref(), &String::from_utf8_lossy(&buf), &manifest)?;
    let finite = |v: f64| v.is_finite().then_some(v);
    let rows: Vec<SensitivityRow> = reports
        .iter()
        .map(|r| SensitivityRow {
            alpha: r.alpha,
            i0: r.i0,
            sup_norm: r.sup_norm,
            gross_error_sensitivity: finite(r.gross_error_sensitivity),
            self_standardized_sensitivity: finite(r.self_standardized_sensitivity),
            unbounded: r.gross_error_sensitivity.is_infinite(),
        })
        .collect();
    for r in &rows {
        let show = |v: Option<f64>| v.map_or_else(|| "inf".to_string(), |x| format!("{x:.4}"));
        eprintln!(
            "alpha {:<5} i0 {:<4} gross-error {:>12} self-standardized {:>12}",
            r.alpha,
            r.i0,
            show(r.gross_error_sensitivity),
            show(r.self_standardized_sensitivity)
        );
    }
    if let Some(p) = &a.summary {
        std::fs::write(p, to_json(&rows)?)?;
        manifest.write_beside(p)?;
    }
    Ok(Status::Success)
}

#[derive(Debug, Serialize)]
struct SelectOutput<'a> {
    manifest: &'a RunManifest,
    selection: &'a AlphaSelection,
}

fn cmd_select(a: SelectArgs) -> CmdResult {
    let (spec, dataset) = load_model(&a.model)?;
    let opts = a.solver.options();
    let grid = alpha_select::grid(a.grid_step)?;
    let sel = alpha_select::select_alpha_partial(&spec, a.pilot, &grid, &opts)?;
    let partial = !sel.failed.is_empty();
    if partial {
        eprintln!("no usable fit at alpha {:?}", sel.failed);
        if !a.allow_partial {
            return Err(Error::PartialCurve { failed: sel.failed });
        }
    }
    eprintln!("pilot {} -> optimal alpha {}", sel.pilot_alpha, sel.optimal_alpha);
    let manifest = RunManifest::new().with_dataset(dataset).with_solver(&opts);
    let text = match a.format {
        Format::Json => to_json(&SelectOutput { manifest: &manifest, selection: &sel })?,
        Format::Csv => alpha_select::curve_csv(&sel),
        Format::Table => {
            let mut s = format!("pilot {}  optimal {}\n", sel.pilot_alpha, sel.optimal_alpha);
            s.push_str(&format!("{:>6} {:>12} {:>12} {:>12}\n", "alpha", "bias^2", "trace", "mse"));
            for e in &sel.mse_curve {
                s.push_str(&format!("{:>6} {:>12.4} {:>12.4} {:>12.4}\n", e.alpha, e.bias_sq, e.variance_trace, e.mse));
            }
            s
        }
    };
    emit(a.out.as_deref(), &text, &manifest)?;
    Ok(Status::Success)
}

fn cmd_simulate(a: SimulateArgs, exec: Execution) -> CmdResult {
    let fam: SimFamily = a.family.into();
    let mut s = match a.reading {
        ReadingArg::Published => Scenario::published(fam, a.case, a.n),
        ReadingArg::Tabulated => Scenario::tabulated(fam, a.case, a.n),
    }
    .with_replications(a.reps, a.seed);
    if let Some(al) = &a.alphas {
        s.alphas = al.clone();
    }
    let cond = sim::design_condition(&s)?;
    if !a.quiet {
        eprintln!("condition number of X'X: {cond:.3e}");
    }
    let total = a.reps;
    let quiet = a.quiet;
    let step = (total / 10).max(1);
    let result = sim::run_scenario_with(&s, exec, |done| {
        if !quiet && (done % step == 0 || done == total) {
            eprintln!("{done}/{total} replications");
        }
    })?;
    if result.failures > 0 {
        eprintln!("{} replications failed and were excluded", result.failures);
    }
    let manifest = RunManifest::new().with_seed(a.seed).with_solver(&SolverOptions::single_start());
    let text = match a.format {
        Format::Json => to_json(&serde_json::json!({ "manifest": manifest, "result": result }))?,
        _ => sim::render_table(std::slice::from_ref(&result)),
    };
    emit(a.out.as_deref(), &text, &manifest)?;
    Ok(Status::Success)
}

fn cmd_datasets(a: DatasetsArgs) -> CmdResult {
    if let Some(name) = a.show {
        print!("{}", data::bundled_text(&name)?);
        return Ok(Status::Success);
    }
    println!("{:<10} {:>5}  {:<64}  source", "dataset", "rows", "sha256");
    for d in data::manifest() {
        println!("{:<10} {:>5}  {:<64}  {}", d.name, d.rows, d.sha256, d.source);
    }
    println!();
    println!("{:<22} {:<10} description", "preset", "dataset");
    for p in data::PRESETS {
        println!("{:<22} {:<10} {}", p.name, p.dataset, p.description);
    }
    Ok(Status::Success)
}
