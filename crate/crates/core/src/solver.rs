//! Newton-type minimisation of the DPD objective.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::asymptotics;
use crate::dpd::{self, check_alpha, Evaluation};
use crate::error::{Error, IterationRecord, Result};
use crate::family::Family;
use crate::model::ModelSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub max_iter: usize,
    /// Stop when the sup-norm of the estimating function is below
    /// `grad_tol * (1 + |H|)` ...
    pub grad_tol: f64,
    /// ... and the last accepted step is below `step_tol` in sup-norm.
    pub step_tol: f64,
    /// Also try the maximum likelihood fit and trimmed refits as starting
    /// points and keep the converged root with the smallest objective.
    pub multi_start: bool,
    /// Ignore any warm start.
    pub cold_start: bool,
    /// Fractions of the largest Pearson residuals removed for trimmed starts.
    pub trim_fractions: Vec<f64>,
    /// Number of random half-sample starts, each refined by concentration
    /// steps on the Pearson residuals.
    pub subset_starts: usize,
    /// Seed for the subset starts, so fits are reproducible.
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_iter: 200,
            grad_tol: 1e-8,
            step_tol: 1e-10,
            multi_start: true,
            cold_start: false,
            trim_fractions: vec![0.1, 0.2, 0.3],
            subset_starts: 20,
            seed: 20_130_101,
        }
    }
}

impl SolverOptions {
    /// Single-start options for simulation work, where the warm-started
    /// path is reliable and speed matters.
    pub fn single_start() -> Self {
        SolverOptions { multi_start: false, ..Self::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "alpha", rename_all = "snake_case")]
pub enum StartSource {
    /// The maximum likelihood fit.
    ColdStart,
    /// The root found at the previous value of alpha.
    WarmStart(f64),
    /// A likelihood fit with the given fraction of outlying rows removed.
    Trimmed(f64),
    /// A concentrated likelihood fit on the given random half-sample.
    Subset(usize),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitResult {
    pub alpha: f64,
    pub beta: Vec<f64>,
    /// Dispersion, reported for families where it is estimated or fixed by the user.
    pub phi: Option<f64>,
    pub objective: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub start_source: StartSource,
    /// `AV / n`; absent when the sandwich is singular.
    pub vcov: Option<Vec<Vec<f64>>>,
    pub se: Option<Vec<f64>>,
    pub inference_note: Option<String>,
    #[serde(skip)]
    pub trace: Vec<IterationRecord>,
}

impl FitResult {
    pub fn theta(&self) -> DVector<f64> {
        let mut v = self.beta.clone();
        if let Some(phi) = self.phi {
            v.push(phi);
        }
        DVector::from_vec(v)
    }

    pub fn vcov_matrix(&self) -> Option<DMatrix<f64>> {
        self.vcov.as_ref().map(|rows| {
            let d = rows.len();
            DMatrix::from_fn(d, d, |i, j| rows[i][j])
        })
    }

    /// Builds a result at given parameter values without optimising, for
    /// evaluating influence functions and efficiencies at the truth.
    pub fn at_parameters(spec: &ModelSpec, theta: &DVector<f64>, alpha: f64) -> Result<FitResult> {
        let objective = dpd::objective(spec, theta, alpha)?;
        let ef = dpd::estimating_function(spec, theta, alpha)?;
        let mut out = FitResult {
            alpha,
            beta: theta.rows(0, spec.p()).iter().copied().collect(),
            phi: spec.scale_free().then(|| theta[spec.p()]),
            objective,
            grad_norm: ef.amax(),
            iterations: 0,
            converged: false,
            start_source: StartSource::ColdStart,
            vcov: None,
            se: None,
            inference_note: None,
            trace: Vec::new(),
        };
        attach_inference(spec, &mut out);
        Ok(out)
    }
}

fn attach_inference(spec: &ModelSpec, fit: &mut FitResult) {
    match asymptotics::sandwich(spec, &fit.theta(), fit.alpha) {
        Ok(s) => {
            let v = &s.av / spec.n() as f64;
            fit.se = Some((0..v.nrows()).map(|i| v[(i, i)].max(0.0).sqrt()).collect());
            fit.vcov = Some((0..v.nrows()).map(|i| v.row(i).iter().copied().collect()).collect());
        }
        Err(e) => fit.inference_note = Some(e.to_string()),
    }
}

struct Local {
    theta: DVector<f64>,
    objective: f64,
    grad_norm: f64,
    iterations: usize,
    converged: bool,
    trace: Vec<IterationRecord>,
}

fn solve_spd(m: &DMatrix<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    let chol = m.clone().cholesky()?;
    let x = chol.solve(rhs);
    x.iter().all(|v| v.is_finite()).then_some(x)
}

fn newton(spec: &ModelSpec, alpha: f64, theta0: &DVector<f64>, opts: &SolverOptions) -> Result<Local> {
    let mut theta = theta0.clone();
    let mut ev: Evaluation = dpd::evaluate(spec, &theta, alpha)?;
    let mut last_step = f64::INFINITY;
    let mut trace = Vec::new();
    let scale = 1.0 + alpha;
    for it in 0..opts.max_iter {
        let g = ev.estimating.clone();
        let gn = g.amax();
        let grad_ok = gn < opts.grad_tol * (1.0 + ev.objective.abs());
        if grad_ok && last_step < opts.step_tol {
            return Ok(Local { objective: ev.objective, grad_norm: gn, iterations: it, converged: true, trace, theta });
        }
        let rhs = -&g;
        let mut newton_dir = true;
        let mut dir = ev.jacobian.as_ref().and_then(|j| solve_spd(j, &rhs));
        if dir.is_none() {
            newton_dir = false;
            dir = solve_spd(&ev.psi, &rhs);
        }
        let dir = dir.unwrap_or_else(|| rhs.clone());
        let slope = scale * g.dot(&dir);

        let mut t = 1.0;
        let mut accepted = None;
        while t > 1e-14 {
            let cand = &theta + &dir * t;
            if let Ok(e2) = dpd::evaluate(spec, &cand, alpha) {
                let armijo = e2.objective <= ev.objective + 1e-4 * t * slope;
                let flat = (e2.objective - ev.objective).abs() <= 1e-13 * (1.0 + ev.objective.abs())
                    && e2.estimating.amax() < gn;
                if armijo || flat {
                    accepted = Some((cand, e2));
                    break;
                }
            }
            t *= 0.5;
        }
        match accepted {
            Some((cand, e2)) if cand != theta => {
                last_step = (&cand - &theta).amax();
                trace.push(IterationRecord {
                    iteration: it + 1,
                    objective: e2.objective,
                    grad_norm: e2.estimating.amax(),
                    step_norm: last_step,
                    step_length: t,
                    newton: newton_dir,
                });
                theta = cand;
                ev = e2;
            }
            _ => {
                // No decrease possible: accept the point if it is stationary.
                return Ok(Local {
                    objective: ev.objective,
                    grad_norm: gn,
                    iterations: it,
                    converged: grad_ok,
                    trace,
                    theta,
                });
            }
        }
    }
    let gn = ev.estimating.amax();
    let converged = gn < opts.grad_tol * (1.0 + ev.objective.abs()) && last_step < opts.step_tol;
    Ok(Local { objective: ev.objective, grad_norm: gn, iterations: opts.max_iter, converged, trace, theta })
}

/// Maximum likelihood fit by iteratively reweighted least squares.
/// Returns the parameter vector including a free dispersion.
pub fn mle(spec: &ModelSpec) -> Result<DVector<f64>> {
    let x = spec.design();
    let y = spec.response();
    let n = spec.n();
    let fam = spec.family();
    if fam == Family::Gaussian {
        let beta = least_squares(x, &DVector::from_column_slice(y), None)?;
        let r = DVector::from_column_slice(y) - x * &beta;
        let mut v: Vec<f64> = beta.iter().copied().collect();
        if spec.scale_free() {
            v.push((r.norm_squared() / n as f64).max(1e-300));
        }
        return Ok(DVector::from_vec(v));
    }
    let eta0 = DVector::from_fn(n, |i, _| {
        let m = spec.trials(i) as f64;
        match fam {
            Family::Poisson => (y[i] + 0.5).ln(),
            _ => ((y[i] + 0.5) / (m - y[i] + 0.5)).ln(),
        }
    });
    let mut beta = least_squares(x, &eta0, None)?;
    let loglik = |b: &DVector<f64>| -> f64 {
        let eta = x * b;
        (0..n).map(|i| fam.log_density_unchecked(y[i], eta[i], 1.0, spec.trials(i))).sum()
    };
    let mut ll = loglik(&beta);
    for _ in 0..200 {
        let eta = x * &beta;
        let w = DVector::from_fn(n, |i, _| fam.k1_slope(eta[i], 1.0, spec.trials(i)).max(1e-300));
        let z = DVector::from_fn(n, |i, _| eta[i] + fam.k1(y[i], eta[i], 1.0, spec.trials(i)) / w[i]);
        let target = least_squares(x, &z, Some(&w))?;
        let mut step = &target - &beta;
        let mut new_ll = loglik(&(&beta + &step));
        let mut halvings = 0;
        while !(new_ll >= ll - 1e-12 * (1.0 + ll.abs())) && halvings < 40 {
            step *= 0.5;
            new_ll = loglik(&(&beta + &step));
            halvings += 1;
        }
        beta += &step;
        let done = (new_ll - ll).abs() < 1e-13 * (1.0 + ll.abs()) && step.amax() < 1e-10 * (1.0 + beta.amax());
        ll = new_ll;
        if done {
            return Ok(beta);
        }
    }
    if beta.iter().all(|v| v.is_finite()) && beta.amax() < 1e3 {
        Ok(beta)
    } else {
        Err(Error::Convergence { alpha: 0.0, iterations: 200, grad_norm: f64::NAN, trace: Vec::new() })
    }
}

fn least_squares(x: &DMatrix<f64>, z: &DVector<f64>, w: Option<&DVector<f64>>) -> Result<DVector<f64>> {
    let (xw, zw) = match w {
        Some(w) => {
            let s = w.map(f64::sqrt);
            let mut xw = x.clone();
            for (i, mut row) in xw.row_iter_mut().enumerate() {
                row *= s[i];
            }
            (xw, z.component_mul(&s))
        }
        None => (x.clone(), z.clone()),
    };
    let svd = xw.svd(true, true);
    let b = svd.solve(&zw, 1e-12).map_err(|e| Error::Input(format!("least squares failed: {e}")))?;
    if b.iter().all(|v| v.is_finite()) {
        Ok(b)
    } else {
        Err(Error::Domain("least squares produced non-finite values".into()))
    }
}

fn abs_pearson(spec: &ModelSpec, theta: &DVector<f64>) -> Vec<f64> {
    let fam = spec.family();
    let eta = spec.eta(theta);
    let phi = spec.phi_of(theta);
    (0..spec.n())
        .map(|i| {
            let m = spec.trials(i);
            let v = match fam {
                Family::Gaussian => phi,
                _ => fam.k1_slope(eta[i], 1.0, m),
            };
            ((spec.response()[i] - fam.mean(eta[i], m)) / v.max(1e-300).sqrt()).abs()
        })
        .collect()
}

fn fit_on_rows(spec: &ModelSpec, keep: &[usize]) -> Option<DVector<f64>> {
    let drop: Vec<usize> = (0..spec.n()).filter(|i| !keep.contains(i)).collect();
    let sub = spec.without_rows(&drop).ok()?;
    mle(&sub).ok().filter(|t| t.len() == spec.dim())
}

/// Starts from random half-samples, each improved by a few concentration
/// steps: refit on the half of the data with the smallest Pearson residuals.
pub fn subset_starts(spec: &ModelSpec, count: usize, seed: u64) -> Vec<(usize, DVector<f64>)> {
    use rand::seq::index::sample;
    use rand::SeedableRng;
    let n = spec.n();
    let h = (n + spec.dim()).div_ceil(2);
    if h >= n || count == 0 {
        return Vec::new();
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for k in 0..count {
        let mut keep: Vec<usize> = sample(&mut rng, n, h).into_vec();
        let mut theta = None;
        for _ in 0..3 {
            let Some(t) = fit_on_rows(spec, &keep) else { break };
            let r = abs_pearson(spec, &t);
            let mut idx: Vec<usize> = (0..n).collect();
            idx.sort_by(|&a, &b| r[a].total_cmp(&r[b]));
            keep = idx[..h].to_vec();
            theta = Some(t);
        }
        if let Some(t) = theta {
            out.push((k, t));
        }
    }
    out
}

/// Likelihood fit after removing the given fraction of rows with the
/// largest Pearson residuals at `base`.
pub fn trimmed_start(spec: &ModelSpec, base: &DVector<f64>, frac: f64) -> Option<DVector<f64>> {
    let n = spec.n();
    let drop = ((frac * n as f64).ceil() as usize).min(n.saturating_sub(spec.p() + 1));
    if drop == 0 {
        return None;
    }
    let r = abs_pearson(spec, base);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| r[b].total_cmp(&r[a]));
    let keep: Vec<usize> = idx[drop..].to_vec();
    fit_on_rows(spec, &keep)
}

/// 2 for a proper root, 1 for a stationary point where `Psi_n` is singular
/// (the estimate is running off to infinity), 0 otherwise.
fn root_rank(spec: &ModelSpec, alpha: f64, local: &Local) -> u8 {
    if !local.converged {
        return 0;
    }
    let Ok(ev) = dpd::evaluate(spec, &local.theta, alpha) else { return 1 };
    let x = spec.design();
    let scale = (x.transpose() * x / spec.n() as f64).symmetric_eigen().eigenvalues.amax();
    let eig = ev.psi.symmetric_eigen().eigenvalues;
    let (lo, hi) = (eig.min(), eig.max());
    if lo > 0.0 && hi / lo < asymptotics::MAX_CONDITION && lo > 1e-12 * scale {
        2
    } else {
        1
    }
}

fn finish(spec: &ModelSpec, alpha: f64, local: Local, source: StartSource) -> FitResult {
    let p = spec.p();
    let mut fit = FitResult {
        alpha,
        beta: local.theta.rows(0, p).iter().copied().collect(),
        phi: spec.scale_free().then(|| local.theta[p]),
        objective: local.objective,
        grad_norm: local.grad_norm,
        iterations: local.iterations,
        converged: local.converged,
        start_source: source,
        vcov: None,
        se: None,
        inference_note: None,
        trace: local.trace,
    };
    attach_inference(spec, &mut fit);
    fit
}

/// Fits at a single alpha from an optional warm start.
pub fn fit_from(
    spec: &ModelSpec,
    alpha: f64,
    warm: Option<(&DVector<f64>, f64)>,
    mle_theta: Option<&DVector<f64>>,
    opts: &SolverOptions,
) -> Result<FitResult> {
    check_alpha(alpha)?;
    let mle_owned;
    let mle_theta = match mle_theta {
        Some(t) => t,
        None => {
            mle_owned = mle(spec)?;
            &mle_owned
        }
    };
    let mut starts: Vec<(DVector<f64>, StartSource)> = Vec::new();
    if let (Some((w, prev)), false) = (warm, opts.cold_start) {
        starts.push((w.clone(), StartSource::WarmStart(prev)));
    }
    if starts.is_empty() || opts.multi_start || alpha == 0.0 {
        starts.push((mle_theta.clone(), StartSource::ColdStart));
    }
    if opts.multi_start && alpha > 0.0 {
        for &f in &opts.trim_fractions {
            if let Some(t) = trimmed_start(spec, mle_theta, f) {
                starts.push((t, StartSource::Trimmed(f)));
            }
        }
        for (k, t) in subset_starts(spec, opts.subset_starts, opts.seed) {
            starts.push((t, StartSource::Subset(k)));
        }
    }

    let mut best: Option<(Local, StartSource, u8)> = None;
    let mut seen: Vec<DVector<f64>> = Vec::new();
    let mut last_err = None;
    for (start, source) in starts {
        if seen.iter().any(|s| (s - &start).amax() < 1e-8) {
            continue;
        }
        seen.push(start.clone());
        let local = match newton(spec, alpha, &start, opts) {
            Ok(l) => l,
            Err(e) => {
                last_err = Some(e);
                continue;
            }
        };
        let rank = root_rank(spec, alpha, &local);
        let better = match &best {
            None => true,
            Some((b, _, brank)) => {
                rank > *brank || (rank == *brank && local.objective < b.objective - 1e-12 * (1.0 + b.objective.abs()))
            }
        };
        if better {
            best = Some((local, source, rank));
        }
    }
    match best {
        Some((local, source, 2)) => Ok(finish(spec, alpha, local, source)),
        Some((local, _, 1)) => Err(Error::Divergent { alpha, objective: local.objective }),
        Some((local, _, _)) => Err(Error::Convergence {
            alpha,
            iterations: local.iterations,
            grad_norm: local.grad_norm,
            trace: local.trace,
        }),
        None => {
            Err(last_err.unwrap_or(Error::Convergence { alpha, iterations: 0, grad_norm: f64::NAN, trace: Vec::new() }))
        }
    }
}

/// Minimises the DPD objective at one value of alpha.
pub fn fit(spec: &ModelSpec, alpha: f64, opts: &SolverOptions) -> Result<FitResult> {
    fit_from(spec, alpha, None, None, opts)
}

fn check_grid(alphas: &[f64]) -> Result<()> {
    for &a in alphas {
        check_alpha(a)?;
    }
    if alphas.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Input("alpha grid must be strictly increasing".into()));
    }
    Ok(())
}

/// Fits along an increasing grid of alpha values, warm-starting each fit
/// from the previous root. Fails on the first alpha without a root.
pub fn fit_path(spec: &ModelSpec, alphas: &[f64], opts: &SolverOptions) -> Result<Vec<FitResult>> {
    fit_path_partial(spec, alphas, opts)?
        .into_iter()
        .zip(alphas)
        .map(|(r, &a)| r.map_err(|e| Error::Path { alpha: a, source: Box::new(e) }))
        .collect()
}

/// Like [`fit_path`] but keeps going past failures, warm-starting from the
/// last successful root.
pub fn fit_path_partial(spec: &ModelSpec, alphas: &[f64], opts: &SolverOptions) -> Result<Vec<Result<FitResult>>> {
    check_grid(alphas)?;
    let mle_theta = mle(spec)?;
    let mut out: Vec<Result<FitResult>> = Vec::with_capacity(alphas.len());
    let mut last: Option<(DVector<f64>, f64)> = None;
    for &a in alphas {
        let warm = last.as_ref().map(|(t, a)| (t, *a));
        let fit = fit_from(spec, a, warm, Some(&mle_theta), opts);
        if let Ok(f) = &fit {
            last = Some((f.theta(), f.alpha));
        }
        out.push(fit);
    }
    Ok(out)
}
