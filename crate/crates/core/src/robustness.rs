//! Influence functions of the estimator and the sensitivities derived from them.

use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::asymptotics::{self, condition_number, MAX_CONDITION};
use crate::error::{Error, Result};
use crate::exec::{map_slice, Execution};
use crate::family::{Family, GammaSet};
use crate::model::ModelSpec;
use crate::solver::FitResult;

/// Contamination points at which the influence function is evaluated.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum GridPolicy {
    /// See [`default_grid`].
    #[default]
    Default,
    /// Integer points `0..=upper` (count families only).
    UpTo(u64),
    Points(Vec<f64>),
}

/// Influence of contamination in one observation direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfluenceReport {
    /// 1-based observation index.
    pub i0: usize,
    pub alpha: f64,
    pub grid: Vec<f64>,
    pub if_values: Vec<Vec<f64>>,
    /// Largest Euclidean norm of the influence over the grid.
    pub sup_norm: f64,
    pub gross_error_sensitivity: f64,
    pub self_standardized_sensitivity: f64,
}

/// Everything needed to evaluate `IF_{i0}(t)` repeatedly.
pub struct Influence<'a> {
    spec: &'a ModelSpec,
    alpha: f64,
    i0: usize,
    eta: f64,
    phi: f64,
    trials: u32,
    x: DVector<f64>,
    gamma: GammaSet,
    psi_inv: DMatrix<f64>,
    omega_inv: Option<DMatrix<f64>>,
}

impl<'a> Influence<'a> {
    /// Prepares evaluation at the fitted parameters; `i0` is 1-based.
    pub fn new(spec: &'a ModelSpec, fit: &FitResult, i0: usize) -> Result<Self> {
        if i0 == 0 || i0 > spec.n() {
            return Err(Error::Input(format!("direction {i0} outside 1..={}", spec.n())));
        }
        let theta = fit.theta();
        if theta.len() != spec.dim() {
            return Err(Error::Input("fit does not match the model dimension".into()));
        }
        let alpha = fit.alpha;
        let (psi, omega) = asymptotics::psi_omega(spec, &theta, alpha)?;
        let cond = condition_number(&psi);
        if !(cond < MAX_CONDITION) {
            return Err(Error::Inference(format!("Psi_n is singular (condition number {cond:e})")));
        }
        let psi_inv = psi.try_inverse().ok_or_else(|| Error::Inference("Psi_n could not be inverted".into()))?;
        let omega_inv = (condition_number(&omega) < MAX_CONDITION).then(|| omega.try_inverse()).flatten();
        let i = i0 - 1;
        let eta = spec.eta(&theta)[i];
        let phi = spec.phi_of(&theta);
        let trials = spec.trials(i);
        let gamma = spec.family().gamma_set(eta, phi, trials, alpha)?;
        Ok(Influence { spec, alpha, i0, eta, phi, trials, x: spec.row(i), gamma, psi_inv, omega_inv })
    }

    /// `n * (f(t)^a u(t) - N)`, the bracket before `Psi_n^-1 / n` is applied.
    fn bracket(&self, t: f64) -> Result<DVector<f64>> {
        let fam = self.spec.family();
        fam.check_response(t, self.trials)?;
        let w = if self.alpha == 0.0 {
            1.0
        } else {
            (self.alpha * fam.log_density_unchecked(t, self.eta, self.phi, self.trials)).exp()
        };
        let k1 = fam.k1(t, self.eta, self.phi, self.trials);
        let p = self.spec.p();
        let mut v = DVector::zeros(self.spec.dim());
        for a in 0..p {
            v[a] = (w * k1 - self.gamma.gamma1) * self.x[a];
        }
        if self.spec.scale_free() {
            v[p] = w * fam.k2(t, self.eta, self.phi) - self.gamma.gamma2;
        }
        Ok(v)
    }

    pub fn at(&self, t: f64) -> Result<DVector<f64>> {
        let v = self.bracket(t)?;
        Ok(&self.psi_inv * v / self.spec.n() as f64)
    }

    /// `sqrt(IF' AV^-1 IF)` at `t`.
    pub fn standardized(&self, t: f64) -> Result<f64> {
        let omega_inv = self.omega_inv.as_ref().ok_or_else(|| Error::Inference("Omega_n is singular".into()))?;
        let v = self.bracket(t)?;
        let q = v.dot(&(omega_inv * &v)).max(0.0);
        Ok(q.sqrt() / self.spec.n() as f64)
    }

    /// Both sensitivities are unbounded for maximum likelihood when the
    /// response has unbounded support.
    pub fn analytically_unbounded(&self) -> bool {
        self.alpha == 0.0 && self.spec.family().has_unbounded_support()
    }

    pub fn report(&self, grid: &[f64], exec: Execution) -> Result<InfluenceReport> {
        let evals = map_slice(exec, grid, |&t| -> Result<(Vec<f64>, f64, f64)> {
            let v = self.at(t)?;
            let s = if self.omega_inv.is_some() { self.standardized(t)? } else { f64::NAN };
            Ok((v.iter().copied().collect(), v.norm(), s))
        });
        let mut if_values = Vec::with_capacity(grid.len());
        let mut sup_norm = 0.0f64;
        let mut sup_std = 0.0f64;
        for e in evals {
            let (v, norm, s) = e?;
            sup_norm = sup_norm.max(norm);
            sup_std = sup_std.max(s);
            if_values.push(v);
        }
        if self.omega_inv.is_none() {
            sup_std = f64::NAN;
        }
        let (ges, sss) =
            if self.analytically_unbounded() { (f64::INFINITY, f64::INFINITY) } else { (sup_norm, sup_std) };
        Ok(InfluenceReport {
            i0: self.i0,
            alpha: self.alpha,
            grid: grid.to_vec(),
            if_values,
            sup_norm,
            gross_error_sensitivity: ges,
            self_standardized_sensitivity: sss,
        })
    }

    pub fn grid(&self, policy: &GridPolicy) -> Result<Vec<f64>> {
        match policy {
            GridPolicy::Default => Ok(default_grid(self.spec, self.eta, self.phi, self.trials)),
            GridPolicy::UpTo(upper) => match self.spec.family() {
                Family::Poisson | Family::Binomial => {
                    let hi = match self.spec.family() {
                        Family::Binomial => (*upper).min(self.trials as u64),
                        _ => *upper,
                    };
                    Ok((0..=hi).map(|t| t as f64).collect())
                }
                f => Err(Error::Input(format!("integer grids need a count family, not {}", f.name()))),
            },
            GridPolicy::Points(p) => Ok(p.clone()),
        }
    }
}

/// Default contamination grid for an observation with linear predictor `eta`.
///
/// Poisson: integers `0..=max(10 mu + 100, y_max + 50)`. Binary and binomial:
/// the full support. Gaussian: `mu -/+ 50 sd` in steps of `sd / 20`.
pub fn default_grid(spec: &ModelSpec, eta: f64, phi: f64, trials: u32) -> Vec<f64> {
    let fam = spec.family();
    match fam {
        Family::Poisson => {
            let mu = fam.mean(eta, trials);
            let ymax = spec.response().iter().cloned().fold(0.0, f64::max);
            let hi = (10.0 * mu + 100.0).max(ymax + 50.0).ceil() as u64;
            (0..=hi).map(|t| t as f64).collect()
        }
        Family::Bernoulli => vec![0.0, 1.0],
        Family::Binomial => (0..=trials).map(f64::from).collect(),
        Family::Gaussian => {
            let sd = phi.sqrt();
            (-1000..=1000).map(|k| eta + k as f64 * 0.05 * sd).collect()
        }
    }
}

/// `IF_{i0}(t)` at the fitted parameters; `i0` is 1-based.
pub fn influence(spec: &ModelSpec, fit: &FitResult, i0: usize, t: f64) -> Result<DVector<f64>> {
    Influence::new(spec, fit, i0)?.at(t)
}

pub fn influence_report(
    spec: &ModelSpec,
    fit: &FitResult,
    i0: usize,
    policy: &GridPolicy,
    exec: Execution,
) -> Result<InfluenceReport> {
    let inf = Influence::new(spec, fit, i0)?;
    let grid = inf.grid(policy)?;
    inf.report(&grid, exec)
}

/// Gross-error and self-standardized sensitivities over the grid.
pub fn sensitivities(spec: &ModelSpec, fit: &FitResult, i0: usize, policy: &GridPolicy) -> Result<(f64, f64)> {
    let r = influence_report(spec, fit, i0, policy, Execution::Sequential)?;
    Ok((r.gross_error_sensitivity, r.self_standardized_sensitivity))
}

/// One row of the long-format export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfluenceRecord {
    pub alpha: f64,
    pub i0: usize,
    pub t: f64,
    pub coef: String,
    pub if_value: f64,
}

pub fn records(spec: &ModelSpec, reports: &[InfluenceReport]) -> Vec<InfluenceRecord> {
    let mut names: Vec<String> = spec.coef_names().to_vec();
    if spec.scale_free() {
        names.push("phi".into());
    }
    let mut out = Vec::new();
    for r in reports {
        for (t, v) in r.grid.iter().zip(&r.if_values) {
            for (name, x) in names.iter().zip(v) {
                out.push(InfluenceRecord { alpha: r.alpha, i0: r.i0, t: *t, coef: name.clone(), if_value: *x });
            }
        }
    }
    out
}

/// Writes `alpha,i0,t,coef,if_value` with 17 significant digits.
pub fn write_csv<W: Write>(w: W, rows: &[InfluenceRecord]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["alpha", "i0", "t", "coef", "if_value"])?;
    for r in rows {
        wr.write_record([
            crate::fmt17(r.alpha),
            r.i0.to_string(),
            crate::fmt17(r.t),
            r.coef.clone(),
            crate::fmt17(r.if_value),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(r: R) -> Result<Vec<InfluenceRecord>> {
    let mut rd = csv::Reader::from_reader(r);
    rd.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// Exports influence functions for every fit and direction over one grid policy.
pub fn export<W: Write>(
    w: W,
    spec: &ModelSpec,
    fits: &[FitResult],
    directions: &[usize],
    policy: &GridPolicy,
    exec: Execution,
) -> Result<()> {
    let mut reports = Vec::new();
    for fit in fits {
        for &i0 in directions {
            reports.push(influence_report(spec, fit, i0, policy, exec)?);
        }
    }
    write_csv(w, &records(spec, &reports))
}
