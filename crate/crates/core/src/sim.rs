//! Monte Carlo study of the asymptotic relative efficiency of the estimator
//! in Poisson and logistic regression.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Bernoulli, Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::asymptotics::{relative_efficiency, sandwich};
use crate::error::{Error, Result};
use crate::exec::{map_indexed, pairwise_sum, Execution};
use crate::family::Family;
use crate::golden;
use crate::model::ModelSpec;
use crate::solver::{fit_path, SolverOptions};

/// Largest tolerated share of failed replications.
pub const MAX_FAILURE_RATE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimFamily {
    Poisson,
    Logistic,
}

impl SimFamily {
    pub fn parse(s: &str) -> Result<SimFamily> {
        match s.to_ascii_lowercase().as_str() {
            "poisson" => Ok(SimFamily::Poisson),
            "logistic" | "bernoulli" => Ok(SimFamily::Logistic),
            _ => Err(Error::Input(format!("unknown simulation family '{s}'"))),
        }
    }

    fn family(self) -> Family {
        match self {
            SimFamily::Poisson => Family::Poisson,
            SimFamily::Logistic => Family::Bernoulli,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Case {
    I,
    II,
    III,
    IV,
    V,
    VI,
}

impl Case {
    pub const ALL: [Case; 6] = [Case::I, Case::II, Case::III, Case::IV, Case::V, Case::VI];

    pub fn parse(s: &str) -> Result<Case> {
        Case::ALL
            .into_iter()
            .find(|c| c.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Input(format!("unknown case '{s}' (expected I to VI)")))
    }
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Case::I => "I",
            Case::II => "II",
            Case::III => "III",
            Case::IV => "IV",
            Case::V => "V",
            Case::VI => "VI",
        };
        f.write_str(s)
    }
}

/// Covariate rows as a function of the 1-based index `i`; all include an intercept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovariateRule {
    /// `(1, sqrt i)`
    SqrtI,
    /// `(1, 1/i)`
    InvI,
    /// `(1, sqrt i, 1/i^2)`
    SqrtIInvISq,
    /// `(1, 1/i, 1/i^2)`
    InvIInvISq,
    /// `(1, 1/i, 1/i)`; rank deficient, only meaningful for influence plots.
    InvIInvI,
    /// Explicit design rows.
    Explicit(Vec<Vec<f64>>),
}

impl CovariateRule {
    pub fn row(&self, i: usize) -> Vec<f64> {
        let t = i as f64;
        match self {
            CovariateRule::SqrtI => vec![1.0, t.sqrt()],
            CovariateRule::InvI => vec![1.0, 1.0 / t],
            CovariateRule::SqrtIInvISq => vec![1.0, t.sqrt(), 1.0 / (t * t)],
            CovariateRule::InvIInvISq => vec![1.0, 1.0 / t, 1.0 / (t * t)],
            CovariateRule::InvIInvI => vec![1.0, 1.0 / t, 1.0 / t],
            CovariateRule::Explicit(rows) => rows[i - 1].clone(),
        }
    }

    pub fn design(&self, n: usize) -> Result<DMatrix<f64>> {
        if let CovariateRule::Explicit(rows) = self {
            if rows.len() != n {
                return Err(Error::Input(format!("explicit design has {} rows, expected {n}", rows.len())));
            }
            let p = rows.first().map_or(0, Vec::len);
            if p == 0 || rows.iter().any(|r| r.len() != p) {
                return Err(Error::Input("explicit design rows must share a positive length".into()));
            }
        }
        let rows: Vec<Vec<f64>> = (1..=n).map(|i| self.row(i)).collect();
        let p = rows[0].len();
        Ok(DMatrix::from_fn(n, p, |i, j| rows[i][j]))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub family: SimFamily,
    pub case: Option<Case>,
    pub n: usize,
    pub beta_true: Vec<f64>,
    pub covariates: CovariateRule,
    pub alphas: Vec<f64>,
    pub replications: usize,
    pub seed: u64,
}

pub const DEFAULT_REPLICATIONS: usize = 1000;
pub const DEFAULT_SEED: u64 = 42;

impl Scenario {
    /// The case exactly as defined in the simulation study.
    pub fn published(family: SimFamily, case: Case, n: usize) -> Scenario {
        let (beta, covariates) = match (family, case) {
            (SimFamily::Poisson, Case::I) => (vec![1.0, 1.0], CovariateRule::SqrtI),
            (SimFamily::Poisson, Case::II) => (vec![1.0, 0.5], CovariateRule::SqrtI),
            (SimFamily::Poisson, Case::III) => (vec![1.0, 1.0], CovariateRule::InvI),
            (SimFamily::Poisson, Case::IV) => (vec![1.0, 0.5], CovariateRule::InvI),
            (SimFamily::Poisson, Case::V) => (vec![1.0, 1.0, 1.0], CovariateRule::SqrtIInvISq),
            (SimFamily::Poisson, Case::VI) => (vec![2.0, 1.0, 0.5], CovariateRule::SqrtIInvISq),
            (SimFamily::Logistic, Case::I) => (vec![0.1, 0.1], CovariateRule::SqrtI),
            (SimFamily::Logistic, Case::II) => (vec![0.001, 0.0001], CovariateRule::SqrtI),
            (SimFamily::Logistic, Case::III) => (vec![1.0, 1.0], CovariateRule::InvI),
            (SimFamily::Logistic, Case::IV) => (vec![0.1, 0.1], CovariateRule::InvI),
            (SimFamily::Logistic, Case::V) => (vec![0.1, 0.1, 0.1], CovariateRule::SqrtIInvISq),
            (SimFamily::Logistic, Case::VI) => (vec![0.01, 0.001, 0.0001], CovariateRule::SqrtIInvISq),
        };
        Scenario {
            family,
            case: Some(case),
            n,
            beta_true: beta,
            covariates,
            alphas: golden::RE_ALPHAS.to_vec(),
            replications: DEFAULT_REPLICATIONS,
            seed: DEFAULT_SEED,
        }
    }

    /// The reading under which the printed efficiency tables are internally
    /// consistent: Poisson cases V and VI with covariates `(1, 1/i, 1/i^2)`,
    /// and the logistic fourth column at alpha 0.3.
    pub fn tabulated(family: SimFamily, case: Case, n: usize) -> Scenario {
        let mut s = Scenario::published(family, case, n);
        match family {
            SimFamily::Poisson => {
                if matches!(case, Case::V | Case::VI) {
                    s.covariates = CovariateRule::InvIInvISq;
                }
            }
            SimFamily::Logistic => s.alphas = golden::LOGISTIC_EFFECTIVE_ALPHAS.to_vec(),
        }
        s
    }

    pub fn with_replications(mut self, reps: usize, seed: u64) -> Scenario {
        self.replications = reps;
        self.seed = seed;
        self
    }

    pub fn design(&self) -> Result<DMatrix<f64>> {
        let x = self.covariates.design(self.n)?;
        if x.ncols() != self.beta_true.len() {
            return Err(Error::Input(format!(
                "design has {} columns but {} true coefficients were given",
                x.ncols(),
                self.beta_true.len()
            )));
        }
        Ok(x)
    }

    /// The fixed-design model at the true parameters, with the true means
    /// (rounded for counts) standing in as responses.
    pub fn truth_model(&self) -> Result<ModelSpec> {
        let x = self.design()?;
        let beta = DVector::from_column_slice(&self.beta_true);
        let fam = self.family.family();
        let y = (&x * &beta)
            .iter()
            .map(|&e| match fam {
                Family::Poisson => e.exp().round(),
                _ => f64::from(u8::from(e >= 0.0)),
            })
            .collect();
        let names = (0..self.beta_true.len()).map(|j| format!("beta{j}")).collect();
        ModelSpec::new(x, y, fam)?.with_coef_names(names)
    }

    fn validate(&self) -> Result<()> {
        if self.n < self.beta_true.len() + 1 {
            return Err(Error::Input("sample size too small for the number of coefficients".into()));
        }
        if self.replications == 0 {
            return Err(Error::Input("at least one replication is required".into()));
        }
        if self.alphas.is_empty() || self.alphas[0] != 0.0 {
            return Err(Error::Input("the alpha grid must start at 0, the reference fit".into()));
        }
        Ok(())
    }
}

/// Log of `cond(X'X)`, reported because some designs grow without bound.
pub fn design_condition(s: &Scenario) -> Result<f64> {
    let x = s.design()?;
    Ok(crate::asymptotics::condition_number(&(x.transpose() * &x)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub scenario: Scenario,
    /// `mean_re[j][k]`: coefficient `j` at `alphas[k]`.
    pub mean_re: Vec<Vec<f64>>,
    pub mc_se: Vec<Vec<f64>>,
    pub failures: usize,
    pub design_condition: f64,
}

/// One replication: relative efficiencies indexed `[coef][alpha]`.
fn replicate(s: &Scenario, x: &DMatrix<f64>, rep: usize, opts: &SolverOptions) -> Result<Vec<Vec<f64>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    rng.set_stream(rep as u64);
    let beta = DVector::from_column_slice(&s.beta_true);
    let eta = x * &beta;
    let y: Vec<f64> = match s.family {
        SimFamily::Poisson => eta
            .iter()
            .map(|&e| Poisson::new(e.exp()).map(|d| d.sample(&mut rng)))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Domain(e.to_string()))?,
        SimFamily::Logistic => eta
            .iter()
            .map(|&e| Bernoulli::new(1.0 / (1.0 + (-e).exp())).map(|d| f64::from(u8::from(d.sample(&mut rng)))))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Domain(e.to_string()))?,
    };
    let spec = ModelSpec::new(x.clone(), y, s.family.family())?;
    let fits = fit_path(&spec, &s.alphas, opts)?;
    let vcovs = fits
        .iter()
        .map(|f| f.vcov_matrix().ok_or_else(|| Error::Degenerate(f.inference_note.clone().unwrap_or_default())))
        .collect::<Result<Vec<_>>>()?;
    let p = s.beta_true.len();
    let mut out = vec![vec![0.0; s.alphas.len()]; p];
    for (k, v) in vcovs.iter().enumerate() {
        let re = relative_efficiency(&vcovs[0], v)?;
        for j in 0..p {
            out[j][k] = re[j];
        }
    }
    Ok(out)
}

/// Runs every replication and aggregates the efficiencies. Replications
/// that fail are excluded and counted; more than 1% failing is an error.
pub fn run_scenario(s: &Scenario, exec: Execution) -> Result<SimResult> {
    run_scenario_with(s, exec, |_| {})
}

/// As [`run_scenario`], calling `progress` with the number of completed
/// replications (in no particular order).
pub fn run_scenario_with<P>(s: &Scenario, exec: Execution, progress: P) -> Result<SimResult>
where
    P: Fn(usize) + Sync + Send,
{
    s.validate()?;
    let x = s.design()?;
    let opts = SolverOptions::single_start();
    let done = std::sync::atomic::AtomicUsize::new(0);
    let reps = map_indexed(exec, s.replications, |r| {
        let out = replicate(s, &x, r, &opts);
        progress(done.fetch_add(1, std::sync::atomic::Ordering::Relaxed) + 1);
        out
    });
    let ok: Vec<Vec<Vec<f64>>> = reps.into_iter().filter_map(|r| r.ok()).collect();
    let failures = s.replications - ok.len();
    if failures as f64 > MAX_FAILURE_RATE * s.replications as f64 || ok.is_empty() {
        return Err(Error::Simulation { failures, replications: s.replications });
    }
    let p = s.beta_true.len();
    let m = ok.len() as f64;
    let mut mean_re = vec![vec![0.0; s.alphas.len()]; p];
    let mut mc_se = vec![vec![0.0; s.alphas.len()]; p];
    for j in 0..p {
        for k in 0..s.alphas.len() {
            let v: Vec<f64> = ok.iter().map(|r| r[j][k]).collect();
            let mean = pairwise_sum(&v) / m;
            let dev: Vec<f64> = v.iter().map(|x| (x - mean).powi(2)).collect();
            let var = if ok.len() > 1 { pairwise_sum(&dev) / (m - 1.0) } else { 0.0 };
            mean_re[j][k] = mean;
            mc_se[j][k] = (var / m).sqrt();
        }
    }
    Ok(SimResult { scenario: s.clone(), mean_re, mc_se, failures, design_condition: design_condition(s)? })
}

/// Relative efficiency at the true parameters, without simulation.
pub fn re_at_truth(s: &Scenario) -> Result<Vec<Vec<f64>>> {
    let spec = s.truth_model()?;
    let theta = DVector::from_column_slice(&s.beta_true);
    let reference = sandwich(&spec, &theta, 0.0)?.av;
    let mut out = vec![vec![0.0; s.alphas.len()]; s.beta_true.len()];
    for (k, &a) in s.alphas.iter().enumerate() {
        let re = relative_efficiency(&reference, &sandwich(&spec, &theta, a)?.av)?;
        for (j, r) in re.into_iter().enumerate() {
            out[j][k] = r;
        }
    }
    Ok(out)
}

/// Renders results in the layout of the efficiency tables: one row per
/// case and coefficient, one column per alpha, one decimal.
pub fn render_table(results: &[SimResult]) -> String {
    let alphas: Vec<f64> =
        results.first().map(|r| r.scenario.alphas.clone()).unwrap_or_else(|| golden::RE_ALPHAS.to_vec());
    let mut s = String::from("case,coef");
    for a in &alphas {
        s.push_str(&format!(",alpha={a}"));
    }
    s.push('\n');
    for r in results {
        let case = r.scenario.case.map_or_else(|| "custom".to_string(), |c| c.to_string());
        for (j, row) in r.mean_re.iter().enumerate() {
            s.push_str(&format!("{case},beta{j}"));
            for v in row {
                s.push_str(&format!(",{v:.1}"));
            }
            s.push('\n');
        }
    }
    s
}
