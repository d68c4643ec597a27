//! The DPD objective, its estimating function and derivatives.
//!
//! With `theta = (beta, phi)` the objective is
//! `H(theta) = (1/n) sum_i [ int f_i^(1+a) - (1 + 1/a) f_i(y_i)^a ]`
//! for `a > 0` and the mean negative log-likelihood for `a = 0`.
//! The estimating function is `grad H / (1 + a)`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::family::{log_probs, Family, GammaSet};
use crate::model::ModelSpec;

/// Quantities needed by one Newton step.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub objective: f64,
    /// `(1/n) sum_i [gamma_i - u_i(y_i) f_i(y_i)^a]`.
    pub estimating: DVector<f64>,
    /// Expected Jacobian of the estimating function, `Psi_n`.
    pub psi: DMatrix<f64>,
    /// Exact Jacobian of the estimating function when available.
    pub jacobian: Option<DMatrix<f64>>,
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha.is_finite() && alpha >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("alpha must be a finite non-negative number, got {alpha}")))
    }
}

fn check_theta(spec: &ModelSpec, theta: &DVector<f64>) -> Result<f64> {
    if theta.len() != spec.dim() {
        return Err(Error::Input(format!(
            "parameter vector has length {} but the model needs {}",
            theta.len(),
            spec.dim()
        )));
    }
    if theta.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("non-finite parameter".into()));
    }
    let phi = spec.phi_of(theta);
    if !(phi > 0.0) {
        return Err(Error::Domain(format!("dispersion must be positive, got {phi}")));
    }
    Ok(phi)
}

struct ObsTerms {
    gamma: GammaSet,
    log_f: f64,
    k1: f64,
    k2: f64,
}

fn obs_terms(spec: &ModelSpec, i: usize, eta: f64, phi: f64, alpha: f64) -> Result<ObsTerms> {
    let fam = spec.family();
    let m = spec.trials(i);
    let y = spec.response()[i];
    let gamma = fam.gamma_set(eta, phi, m, alpha)?;
    Ok(ObsTerms {
        gamma,
        log_f: fam.log_density_unchecked(y, eta, phi, m),
        k1: fam.k1(y, eta, phi, m),
        k2: fam.k2(y, eta, phi),
    })
}

fn objective_term(t: &ObsTerms, alpha: f64) -> f64 {
    if alpha == 0.0 {
        -t.log_f
    } else {
        t.gamma.integral - (1.0 + 1.0 / alpha) * (alpha * t.log_f).exp()
    }
}

pub fn objective(spec: &ModelSpec, theta: &DVector<f64>, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let phi = check_theta(spec, theta)?;
    let eta = spec.eta(theta);
    let mut total = 0.0;
    for i in 0..spec.n() {
        let t = obs_terms(spec, i, eta[i], phi, alpha)?;
        total += objective_term(&t, alpha);
    }
    let h = total / spec.n() as f64;
    if h.is_finite() {
        Ok(h)
    } else {
        Err(Error::Domain("objective is not finite".into()))
    }
}

pub fn estimating_function(spec: &ModelSpec, theta: &DVector<f64>, alpha: f64) -> Result<DVector<f64>> {
    Ok(evaluate(spec, theta, alpha)?.estimating)
}

/// Gradient of the objective, `(1 + alpha)` times the estimating function.
pub fn gradient(spec: &ModelSpec, theta: &DVector<f64>, alpha: f64) -> Result<DVector<f64>> {
    Ok(estimating_function(spec, theta, alpha)? * (1.0 + alpha))
}

pub fn evaluate(spec: &ModelSpec, theta: &DVector<f64>, alpha: f64) -> Result<Evaluation> {
    check_alpha(alpha)?;
    let phi = check_theta(spec, theta)?;
    let n = spec.n();
    let p = spec.p();
    let d = spec.dim();
    let fam = spec.family();
    let x = spec.design();
    let eta = spec.eta(theta);
    let exact = fam.fixed_scale();

    let mut total = 0.0;
    let mut ef = DVector::zeros(d);
    let mut psi = DMatrix::zeros(d, d);
    let mut jac = DMatrix::zeros(p, p);
    for i in 0..n {
        let t = obs_terms(spec, i, eta[i], phi, alpha)?;
        total += objective_term(&t, alpha);
        let fa = (alpha * t.log_f).exp();
        let g = &t.gamma;
        let rb = g.gamma1 - t.k1 * fa;
        let w_jac = if exact {
            let s = fam.k1_slope(eta[i], phi, spec.trials(i));
            -s * g.integral + g.order * g.gamma11 + s * fa - alpha * t.k1 * t.k1 * fa
        } else {
            0.0
        };
        for a in 0..p {
            let xa = x[(i, a)];
            ef[a] += rb * xa;
            for b in 0..=a {
                let xab = xa * x[(i, b)];
                psi[(a, b)] += g.gamma11 * xab;
                jac[(a, b)] += w_jac * xab;
            }
        }
        if spec.scale_free() {
            ef[p] += g.gamma2 - t.k2 * fa;
            for a in 0..p {
                psi[(p, a)] += g.gamma12 * x[(i, a)];
            }
            psi[(p, p)] += g.gamma22;
        }
    }
    let nf = n as f64;
    for a in 0..d {
        for b in 0..a {
            psi[(b, a)] = psi[(a, b)];
        }
    }
    for a in 0..p {
        for b in 0..a {
            jac[(b, a)] = jac[(a, b)];
        }
    }
    let objective = total / nf;
    if !objective.is_finite() {
        return Err(Error::Domain("objective is not finite".into()));
    }
    Ok(Evaluation {
        objective,
        estimating: ef / nf,
        psi: psi / nf,
        jacobian: if exact { Some(jac / nf) } else { None },
    })
}

/// Logistic estimating function written with the explicit exponential
/// expressions for `gamma_1` and `f^a`, summed (not averaged).
pub fn logistic_equation_explicit(x: &DMatrix<f64>, y: &[f64], beta: &DVector<f64>, alpha: f64) -> DVector<f64> {
    let eta = x * beta;
    let mut out = DVector::zeros(x.ncols());
    for i in 0..x.nrows() {
        let e = eta[i];
        let ee = e.exp();
        let gamma1 = ee * ((alpha * e).exp() - 1.0) / (1.0 + ee).powf(2.0 + alpha);
        let mu = ee / (1.0 + ee);
        let fa = (alpha * e * y[i]).exp() / (1.0 + ee).powf(alpha);
        let w = gamma1 - (y[i] - mu) * fa;
        out += x.row(i).transpose() * w;
    }
    out
}

/// The same equation after cancelling terms for binary responses.
pub fn logistic_equation_simplified(x: &DMatrix<f64>, y: &[f64], beta: &DVector<f64>, alpha: f64) -> DVector<f64> {
    let eta = x * beta;
    let mut out = DVector::zeros(x.ncols());
    for i in 0..x.nrows() {
        let e = eta[i];
        let ee = e.exp();
        let w = (1.0 - 2.0 * y[i]) * (e * (1.0 - y[i])).exp() * ((alpha * e).exp() + ee) / (1.0 + ee).powf(2.0 + alpha);
        out += x.row(i).transpose() * w;
    }
    out
}

/// Gaussian coefficient equation in the form that drops the (vanishing)
/// model-integral term: `sum_i K1_i f_i^a x_i`.
pub fn gaussian_location_equation(spec: &ModelSpec, theta: &DVector<f64>, alpha: f64) -> Result<DVector<f64>> {
    if spec.family() != Family::Gaussian {
        return Err(Error::Unsupported("location shortcut applies to the Gaussian family only".into()));
    }
    let phi = check_theta(spec, theta)?;
    let eta = spec.eta(theta);
    let mut out = DVector::zeros(spec.p());
    for i in 0..spec.n() {
        let y = spec.response()[i];
        let fa = (alpha * Family::Gaussian.log_density_unchecked(y, eta[i], phi, 1)).exp();
        out += spec.row(i) * ((y - eta[i]) / phi * fa);
    }
    Ok(out)
}

/// Stable logistic `f(y)^a` for a binary response.
pub fn bernoulli_power(y: f64, eta: f64, alpha: f64) -> f64 {
    let (lp, lq) = log_probs(eta);
    (alpha * if y == 1.0 { lp } else { lq }).exp()
}
