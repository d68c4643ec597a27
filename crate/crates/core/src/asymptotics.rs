//! Sandwich covariance, Wald inference and asymptotic relative efficiency.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use crate::dpd::check_alpha;
use crate::error::{Error, Result};
use crate::model::ModelSpec;
use crate::solver::FitResult;

/// Condition number above which `Psi_n` is treated as singular.
pub const MAX_CONDITION: f64 = 1e14;

#[derive(Debug, Clone)]
pub struct Sandwich {
    pub psi: DMatrix<f64>,
    pub omega: DMatrix<f64>,
    /// `Psi^-1 Omega Psi^-1`, the asymptotic covariance of `sqrt(n)(theta_hat - theta)`.
    pub av: DMatrix<f64>,
    pub condition: f64,
}

fn accumulate(spec: &ModelSpec, theta: &DVector<f64>, alpha: f64) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    check_alpha(alpha)?;
    let fam = spec.family();
    let p = spec.p();
    let d = spec.dim();
    let phi = spec.phi_of(theta);
    let eta = spec.eta(theta);
    let x = spec.design();
    let mut psi = DMatrix::zeros(d, d);
    let mut omega = DMatrix::zeros(d, d);
    let mut u = DVector::zeros(d);
    let mut nvec = DVector::zeros(d);
    for i in 0..spec.n() {
        let m = spec.trials(i);
        let g = fam.gamma_set(eta[i], phi, m, alpha)?;
        let g2 = fam.gamma_set(eta[i], phi, m, 2.0 * alpha)?;
        for a in 0..p {
            u[a] = x[(i, a)];
            nvec[a] = g.gamma1 * x[(i, a)];
        }
        if spec.scale_free() {
            u[p] = 1.0;
            nvec[p] = g.gamma2;
        }
        for a in 0..d {
            for b in 0..=a {
                let (w1, w2) = match (a < p, b < p) {
                    (true, true) => (g.gamma11, g2.gamma11),
                    (false, true) | (true, false) => (g.gamma12, g2.gamma12),
                    (false, false) => (g.gamma22, g2.gamma22),
                };
                let uu = u[a] * u[b];
                psi[(a, b)] += w1 * uu;
                omega[(a, b)] += w2 * uu - nvec[a] * nvec[b];
            }
        }
    }
    let nf = spec.n() as f64;
    for a in 0..d {
        for b in 0..a {
            psi[(b, a)] = psi[(a, b)];
            omega[(b, a)] = omega[(a, b)];
        }
    }
    Ok((psi / nf, omega / nf))
}

/// `Psi_n` and `Omega_n` at `theta`.
pub fn psi_omega(spec: &ModelSpec, theta: &DVector<f64>, alpha: f64) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    accumulate(spec, theta, alpha)
}

pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let eig = m.clone().symmetric_eigen();
    let max = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

pub fn sandwich(spec: &ModelSpec, theta: &DVector<f64>, alpha: f64) -> Result<Sandwich> {
    let (psi, omega) = accumulate(spec, theta, alpha)?;
    let condition = condition_number(&psi);
    if !(condition < MAX_CONDITION) {
        return Err(Error::Inference(format!("Psi_n is singular or ill-conditioned (condition number {condition:e})")));
    }
    let lu = psi.clone().full_piv_lu();
    let a = lu.solve(&omega).ok_or_else(|| Error::Inference("Psi_n could not be factorised".into()))?;
    let av = lu.solve(&a.transpose()).ok_or_else(|| Error::Inference("Psi_n could not be factorised".into()))?;
    let av = (&av + av.transpose()) * 0.5;
    Ok(Sandwich { psi, omega, av, condition })
}

/// `100 * AV_ref[j,j] / AV[j,j]` for each parameter.
pub fn relative_efficiency(av_ref: &DMatrix<f64>, av: &DMatrix<f64>) -> Result<Vec<f64>> {
    if av_ref.shape() != av.shape() {
        return Err(Error::Input("covariance matrices differ in shape".into()));
    }
    (0..av.nrows())
        .map(|j| {
            let v = av[(j, j)];
            if v > 0.0 {
                Ok(100.0 * (av_ref[(j, j)] / v))
            } else {
                Err(Error::Degenerate(format!("zero asymptotic variance for parameter {j}")))
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Reference {
    /// Student t with the given degrees of freedom.
    StudentT {
        df: f64,
    },
    Normal,
}

impl Reference {
    /// Student t on `units - p` degrees of freedom.
    pub fn residual_t(spec: &ModelSpec) -> Reference {
        Reference::StudentT { df: spec.units().saturating_sub(spec.p()).max(1) as f64 }
    }

    pub fn two_sided_p(&self, statistic: f64) -> Result<f64> {
        let z = statistic.abs();
        let upper = match *self {
            Reference::Normal => Normal::new(0.0, 1.0).map(|d| d.sf(z)),
            Reference::StudentT { df } => StudentsT::new(0.0, 1.0, df).map(|d| d.sf(z)),
        }
        .map_err(|e| Error::Input(e.to_string()))?;
        Ok((2.0 * upper).min(1.0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaldRow {
    pub name: String,
    pub estimate: f64,
    pub se: f64,
    pub statistic: f64,
    pub p_value: f64,
}

/// Coefficient table for a fit; requires standard errors.
pub fn wald_table(fit: &FitResult, names: &[String], reference: Reference) -> Result<Vec<WaldRow>> {
    let se = fit.se.as_ref().ok_or_else(|| Error::Inference("fit has no standard errors".into()))?;
    fit.beta
        .iter()
        .enumerate()
        .map(|(j, &b)| {
            let s = se[j];
            if !(s > 0.0) {
                return Err(Error::Degenerate(format!("standard error of coefficient {j} is zero")));
            }
            let statistic = b / s;
            Ok(WaldRow {
                name: names.get(j).cloned().unwrap_or_else(|| format!("x{j}")),
                estimate: b,
                se: s,
                statistic,
                p_value: reference.two_sided_p(statistic)?,
            })
        })
        .collect()
}
