//! Data-driven choice of the tuning parameter by minimising an estimated
//! mean squared error against a pilot fit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelSpec;
use crate::solver::{self, FitResult, SolverOptions};

pub const DEFAULT_PILOT: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MseEntry {
    pub alpha: f64,
    pub bias_sq: f64,
    pub variance_trace: f64,
    pub mse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaSelection {
    pub pilot_alpha: f64,
    pub candidate_grid: Vec<f64>,
    /// Entries for the candidates that were fitted successfully, in grid order.
    pub mse_curve: Vec<MseEntry>,
    pub optimal_alpha: f64,
    /// Candidates without a usable fit.
    pub failed: Vec<f64>,
}

impl AlphaSelection {
    pub fn require_complete(self) -> Result<AlphaSelection> {
        if self.failed.is_empty() {
            Ok(self)
        } else {
            Err(Error::PartialCurve { failed: self.failed })
        }
    }
}

/// `0, step, 2 step, ..., 1`. The step must divide one.
pub fn grid(step: f64) -> Result<Vec<f64>> {
    let k = (1.0 / step).round();
    if !(step > 0.0) || k < 1.0 || ((k * step) - 1.0).abs() > 1e-9 {
        return Err(Error::Input(format!("grid step {step} does not divide 1")));
    }
    let k = k as usize;
    Ok((0..=k).map(|i| i as f64 / k as f64).collect())
}

pub fn default_grid() -> Vec<f64> {
    (0..=20).map(|i| i as f64 / 20.0).collect()
}

/// Squared distance to the pilot plus the trace of the candidate's
/// estimated covariance.
pub fn estimated_mse(candidate: &FitResult, pilot: &FitResult) -> Result<MseEntry> {
    let a = candidate.theta();
    let b = pilot.theta();
    if a.len() != b.len() {
        return Err(Error::Input("candidate and pilot fits have different dimensions".into()));
    }
    let vcov = candidate.vcov_matrix().ok_or_else(|| {
        Error::Inference(format!(
            "no covariance at alpha = {}: {}",
            candidate.alpha,
            candidate.inference_note.as_deref().unwrap_or("singular Psi_n")
        ))
    })?;
    let bias_sq = (&a - &b).norm_squared();
    let variance_trace = vcov.trace();
    Ok(MseEntry { alpha: candidate.alpha, bias_sq, variance_trace, mse: bias_sq + variance_trace })
}

fn same(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-12
}

/// Builds the curve from fits already computed along `grid`.
pub fn select_from_path(pilot: &FitResult, grid: &[f64], path: &[Result<FitResult>]) -> Result<AlphaSelection> {
    if grid.is_empty() || grid.len() != path.len() {
        return Err(Error::Input("candidate grid is empty or does not match the fits".into()));
    }
    if pilot.vcov.is_none() {
        return Err(Error::Inference(format!("pilot fit at alpha = {} has no covariance", pilot.alpha)));
    }
    let mut curve = Vec::new();
    let mut failed = Vec::new();
    for (&a, fit) in grid.iter().zip(path) {
        match fit.as_ref().ok().map(|f| estimated_mse(f, pilot)) {
            Some(Ok(e)) => curve.push(e),
            _ => failed.push(a),
        }
    }
    // Strict comparison keeps the smaller alpha on ties.
    let best = curve
        .iter()
        .fold(None::<&MseEntry>, |best, e| match best {
            Some(b) if b.mse <= e.mse => Some(b),
            _ => Some(e),
        })
        .ok_or(Error::PartialCurve { failed: failed.clone() })?;
    Ok(AlphaSelection {
        pilot_alpha: pilot.alpha,
        candidate_grid: grid.to_vec(),
        optimal_alpha: best.alpha,
        mse_curve: curve,
        failed,
    })
}

/// The pilot fit: taken from the path when the pilot lies on the grid.
pub fn pilot_fit(
    spec: &ModelSpec,
    pilot_alpha: f64,
    grid: &[f64],
    path: &[Result<FitResult>],
    opts: &SolverOptions,
) -> Result<FitResult> {
    match grid.iter().position(|&g| same(g, pilot_alpha)).and_then(|k| path[k].as_ref().ok()) {
        Some(f) => Ok(f.clone()),
        None => solver::fit(spec, pilot_alpha, opts),
    }
}

/// Selection that tolerates failed candidates; they are listed in `failed`.
pub fn select_alpha_partial(
    spec: &ModelSpec,
    pilot_alpha: f64,
    grid: &[f64],
    opts: &SolverOptions,
) -> Result<AlphaSelection> {
    if grid.is_empty() {
        return Err(Error::Input("candidate grid is empty".into()));
    }
    let path = solver::fit_path_partial(spec, grid, opts)?;
    let pilot = pilot_fit(spec, pilot_alpha, grid, &path, opts)?;
    select_from_path(&pilot, grid, &path)
}

/// Fits the pilot and every candidate, returning the arg-min of the
/// estimated MSE. Any failed candidate is an error.
pub fn select_alpha(spec: &ModelSpec, pilot_alpha: f64, grid: &[f64], opts: &SolverOptions) -> Result<AlphaSelection> {
    select_alpha_partial(spec, pilot_alpha, grid, opts)?.require_complete()
}

/// The curve as CSV with 17 significant digits.
pub fn curve_csv(sel: &AlphaSelection) -> String {
    let mut s = String::from("alpha,bias_sq,variance_trace,mse\n");
    for e in &sel.mse_curve {
        s.push_str(&format!(
            "{},{},{},{}\n",
            crate::fmt17(e.alpha),
            crate::fmt17(e.bias_sq),
            crate::fmt17(e.variance_trace),
            crate::fmt17(e.mse)
        ));
    }
    s
}
