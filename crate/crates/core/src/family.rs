//! Exponential-family densities and the power-weighted moment integrals
//! (`gamma` quantities) that drive the DPD estimating equations.
//!
//! All families use their canonical link. `K1` and `K2` denote the
//! derivatives of `log f` with respect to the linear predictor and the
//! dispersion respectively.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Poisson,
    Bernoulli,
    Binomial,
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Support {
    Counts,
    Binary,
    Trials(u32),
    Real,
}

/// Power-weighted moments of the score under `f^order`.
///
/// `gamma2`, `gamma12` and `gamma22` involve the dispersion score and are
/// zero for families whose scale is fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaSet {
    pub order: f64,
    /// Integral (or sum) of `f^order`.
    pub integral: f64,
    pub gamma1: f64,
    pub gamma11: f64,
    pub gamma2: f64,
    pub gamma12: f64,
    pub gamma22: f64,
}

/// Truncation policy for the Poisson series.
///
/// The sum runs outward from the mode. It always covers
/// `mu -/+ (sd_mult * sqrt(mu) + pad)` and then continues until
/// `tail_run` consecutive terms are each below `rel_tol` times the running
/// total, or until `max_terms` terms have been used. Wide series are
/// sampled every `h` integers (about eight nodes per standard deviation of
/// `f^(1+alpha)`) and the sum is scaled by `h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Truncation {
    pub sd_mult: f64,
    pub pad: f64,
    pub rel_tol: f64,
    pub tail_run: usize,
    pub max_terms: usize,
    /// Largest node spacing allowed for wide series; 1 sums every integer.
    pub max_stride: usize,
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation {
            sd_mult: 4.0,
            pad: 10.0,
            rel_tol: 1e-16,
            tail_run: 10,
            max_terms: 1_000_000,
            max_stride: usize::MAX,
        }
    }
}

const MAX_ETA_POISSON: f64 = 700.0;

fn softplus(x: f64) -> f64 {
    if x > 35.0 {
        x + (-x).exp()
    } else if x < -35.0 {
        x.exp()
    } else {
        x.exp().ln_1p()
    }
}

/// `(ln p, ln q)` for the logistic probability `p = 1 / (1 + exp(-eta))`.
pub fn log_probs(eta: f64) -> (f64, f64) {
    (-softplus(-eta), -softplus(eta))
}

fn sigmoid(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

fn is_integer(y: f64) -> bool {
    y.is_finite() && y.fract() == 0.0
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Poisson => "poisson",
            Family::Bernoulli => "bernoulli",
            Family::Binomial => "binomial",
            Family::Gaussian => "gaussian",
        }
    }

    pub fn parse(s: &str) -> Result<Family> {
        match s.to_ascii_lowercase().as_str() {
            "poisson" => Ok(Family::Poisson),
            "bernoulli" | "logistic" => Ok(Family::Bernoulli),
            "binomial" => Ok(Family::Binomial),
            "gaussian" | "normal" => Ok(Family::Gaussian),
            other => Err(Error::Input(format!("unknown family '{other}'"))),
        }
    }

    pub fn support(self, trials: u32) -> Support {
        match self {
            Family::Poisson => Support::Counts,
            Family::Bernoulli => Support::Binary,
            Family::Binomial => Support::Trials(trials),
            Family::Gaussian => Support::Real,
        }
    }

    /// Whether the dispersion is fixed at one by the family.
    pub fn fixed_scale(self) -> bool {
        !matches!(self, Family::Gaussian)
    }

    pub fn has_unbounded_support(self) -> bool {
        matches!(self, Family::Poisson | Family::Gaussian)
    }

    pub fn mean(self, eta: f64, trials: u32) -> f64 {
        match self {
            Family::Poisson => eta.exp(),
            Family::Bernoulli => sigmoid(eta),
            Family::Binomial => trials as f64 * sigmoid(eta),
            Family::Gaussian => eta,
        }
    }

    /// `-dK1/d eta`, which for a canonical link is the variance function
    /// divided by the dispersion.
    pub fn k1_slope(self, eta: f64, phi: f64, trials: u32) -> f64 {
        match self {
            Family::Poisson => eta.exp(),
            Family::Bernoulli | Family::Binomial => {
                let p = sigmoid(eta);
                let q = sigmoid(-eta);
                trials.max(1) as f64 * p * q
            }
            Family::Gaussian => 1.0 / phi,
        }
    }

    pub fn check_response(self, y: f64, trials: u32) -> Result<()> {
        let ok = match self {
            Family::Poisson => is_integer(y) && y >= 0.0,
            Family::Bernoulli => y == 0.0 || y == 1.0,
            Family::Binomial => is_integer(y) && y >= 0.0 && y <= trials as f64,
            Family::Gaussian => y.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!("response {y} outside the support of the {} family", self.name())))
        }
    }

    fn check_eta(self, eta: f64) -> Result<()> {
        if !eta.is_finite() || (self == Family::Poisson && eta > MAX_ETA_POISSON) {
            return Err(Error::Domain(format!("linear predictor {eta} out of range")));
        }
        Ok(())
    }

    /// `log f(y)` at linear predictor `eta`.
    pub fn log_density(self, y: f64, eta: f64, phi: f64, trials: u32) -> Result<f64> {
        self.check_response(y, trials)?;
        self.check_eta(eta)?;
        Ok(self.log_density_unchecked(y, eta, phi, trials))
    }

    pub(crate) fn log_density_unchecked(self, y: f64, eta: f64, phi: f64, trials: u32) -> f64 {
        match self {
            Family::Poisson => poisson_log_pmf(y, eta),
            Family::Bernoulli => {
                let (lp, lq) = log_probs(eta);
                if y == 1.0 {
                    lp
                } else {
                    lq
                }
            }
            Family::Binomial => {
                let m = trials as f64;
                let (lp, lq) = log_probs(eta);
                ln_choose(m, y) + y * lp + (m - y) * lq
            }
            Family::Gaussian => {
                let r = y - eta;
                -0.5 * (2.0 * std::f64::consts::PI * phi).ln() - r * r / (2.0 * phi)
            }
        }
    }

    pub fn density(self, y: f64, eta: f64, phi: f64, trials: u32) -> Result<f64> {
        Ok(self.log_density(y, eta, phi, trials)?.exp())
    }

    /// `d log f(y) / d eta`.
    pub fn k1(self, y: f64, eta: f64, phi: f64, trials: u32) -> f64 {
        match self {
            Family::Gaussian => (y - eta) / phi,
            _ => y - self.mean(eta, trials),
        }
    }

    /// `d log f(y) / d phi`; zero for fixed-scale families.
    pub fn k2(self, y: f64, eta: f64, phi: f64) -> f64 {
        match self {
            Family::Gaussian => {
                let r = y - eta;
                r * r / (2.0 * phi * phi) - 1.0 / (2.0 * phi)
            }
            _ => 0.0,
        }
    }

    /// Moments of the score under `f^(1 + alpha)`.
    pub fn gamma_set(self, eta: f64, phi: f64, trials: u32, alpha: f64) -> Result<GammaSet> {
        self.gamma_set_with(eta, phi, trials, alpha, &Truncation::default())
    }

    pub fn gamma_set_with(self, eta: f64, phi: f64, trials: u32, alpha: f64, trunc: &Truncation) -> Result<GammaSet> {
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return Err(Error::Domain(format!("alpha must be non-negative, got {alpha}")));
        }
        self.check_eta(eta)?;
        let order = 1.0 + alpha;
        match self {
            Family::Poisson => poisson_gamma(eta, order, trunc),
            Family::Bernoulli => Ok(bernoulli_gamma(eta, order)),
            Family::Binomial => Ok(binomial_gamma(eta, trials, order)),
            Family::Gaussian => {
                if !(phi > 0.0) {
                    return Err(Error::Domain(format!("dispersion must be positive, got {phi}")));
                }
                Ok(gaussian_gamma(phi, order))
            }
        }
    }
}

pub(crate) fn ln_choose(m: f64, y: f64) -> f64 {
    ln_gamma(m + 1.0) - ln_gamma(y + 1.0) - ln_gamma(m - y + 1.0)
}

fn bernoulli_gamma(eta: f64, order: f64) -> GammaSet {
    let (lp, lq) = log_probs(eta);
    let p = lp.exp();
    let q = lq.exp();
    let fp = (order * lp).exp();
    let fq = (order * lq).exp();
    GammaSet {
        order,
        integral: fp + fq,
        gamma1: q * fp - p * fq,
        gamma11: q * q * fp + p * p * fq,
        gamma2: 0.0,
        gamma12: 0.0,
        gamma22: 0.0,
    }
}

fn binomial_gamma(eta: f64, trials: u32, order: f64) -> GammaSet {
    let m = trials as f64;
    let (lp, lq) = log_probs(eta);
    let mu = m * lp.exp();
    let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
    let mut lc = 0.0;
    for y in 0..=trials {
        let yf = y as f64;
        if y > 0 {
            lc += (m - yf + 1.0).ln() - yf.ln();
        }
        let w = (order * (lc + yf * lp + (m - yf) * lq)).exp();
        let k = yf - mu;
        s0 += w;
        s1 += k * w;
        s2 += k * k * w;
    }
    GammaSet { order, integral: s0, gamma1: s1, gamma11: s2, gamma2: 0.0, gamma12: 0.0, gamma22: 0.0 }
}

fn gaussian_gamma(phi: f64, order: f64) -> GammaSet {
    let c = (2.0 * std::f64::consts::PI * phi).powf(-(order - 1.0) / 2.0) / order.sqrt();
    GammaSet {
        order,
        integral: c,
        gamma1: 0.0,
        gamma11: c / (order * phi),
        gamma2: c * (1.0 / order - 1.0) / (2.0 * phi),
        gamma12: 0.0,
        gamma22: c / (4.0 * phi * phi) * (3.0 / (order * order) - 2.0 / order + 1.0),
    }
}

#[derive(Default)]
struct Sums {
    s0: f64,
    s1: f64,
    s2: f64,
    terms: usize,
}

impl Sums {
    /// Adds the term at `y` and returns its size relative to the moments.
    fn add(&mut self, y: f64, lf: f64, mu: f64, order: f64) -> f64 {
        let w = (order * lf).exp();
        let k = y - mu;
        self.s0 += w;
        self.s1 += k * w;
        self.s2 += k * k * w;
        self.terms += 1;
        w * (1.0 + k * k)
    }

    fn total(&self) -> f64 {
        self.s0 + self.s2
    }
}

/// `lnGamma(y + 1) - (y + 1/2) ln y + y - ln sqrt(2 pi)`.
fn stirling_error(y: f64) -> f64 {
    const S: [f64; 5] = [1.0 / 12.0, 1.0 / 360.0, 1.0 / 1260.0, 1.0 / 1680.0, 1.0 / 1188.0];
    if y <= 15.0 {
        return ln_gamma(y + 1.0) - (y + 0.5) * y.ln() + y - 0.5 * (2.0 * std::f64::consts::PI).ln();
    }
    let yy = y * y;
    let series = if y > 500.0 {
        S[0] - S[1] / yy
    } else if y > 80.0 {
        S[0] - (S[1] - S[2] / yy) / yy
    } else if y > 35.0 {
        S[0] - (S[1] - (S[2] - S[3] / yy) / yy) / yy
    } else {
        S[0] - (S[1] - (S[2] - (S[3] - S[4] / yy) / yy) / yy) / yy
    };
    series / y
}

/// `y ln(y / mu) + mu - y`, accurate when `y` is close to `mu`.
fn deviance_part(y: f64, mu: f64) -> f64 {
    if (y - mu).abs() < 0.1 * (y + mu) {
        let v = (y - mu) / (y + mu);
        let mut s = (y - mu) * v;
        let mut ej = 2.0 * y * v;
        let v2 = v * v;
        for j in 1..1000 {
            ej *= v2;
            let next = s + ej / (2 * j + 1) as f64;
            if next == s {
                break;
            }
            s = next;
        }
        s
    } else {
        y * (y / mu).ln() + mu - y
    }
}

/// Poisson log-probability in saddle-point form, which avoids cancelling
/// `y eta` against `lnGamma(y + 1)` when the mean is large.
fn poisson_log_pmf(y: f64, eta: f64) -> f64 {
    let mu = eta.exp();
    if y < 1.0 {
        return -mu;
    }
    -stirling_error(y) - deviance_part(y, mu) - 0.5 * (2.0 * std::f64::consts::PI * y).ln()
}

/// Node spacing for the Poisson series. When the weight `f^order` spans many
/// integers the unit-step sum is a trapezoid rule on a smooth, near-Gaussian
/// integrand, and a coarser trapezoid rule with at least eight nodes per
/// standard deviation agrees with it to far below rounding error.
fn poisson_stride(mu: f64, order: f64, trunc: &Truncation) -> usize {
    let width = (mu / order).sqrt();
    ((width / 8.0).floor() as usize).clamp(1, trunc.max_stride.max(1))
}

fn poisson_gamma(eta: f64, order: f64, trunc: &Truncation) -> Result<GammaSet> {
    let mu = eta.exp();
    if order == 1.0 {
        return Ok(GammaSet {
            order,
            integral: 1.0,
            gamma1: 0.0,
            gamma11: mu,
            gamma2: 0.0,
            gamma12: 0.0,
            gamma22: 0.0,
        });
    }
    let sd = mu.sqrt();
    let mode = mu.floor();
    let hi_min = mu + trunc.sd_mult * sd + trunc.pad;
    let lo_min = (mu - trunc.sd_mult * sd - trunc.pad).max(0.0);
    let lf_mode = poisson_log_pmf(mode, eta);
    let h = poisson_stride(mu, order, trunc);
    let hf = h as f64;

    let mut sums = Sums::default();
    sums.add(mode, lf_mode, mu, order);

    // upward
    let mut y = mode;
    let mut small = 0usize;
    loop {
        y += hf;
        let lf = poisson_log_pmf(y, eta);
        let contrib = sums.add(y, lf, mu, order);
        if y >= hi_min {
            if contrib < trunc.rel_tol * sums.total() {
                small += 1;
                if small >= trunc.tail_run {
                    break;
                }
            } else {
                small = 0;
            }
        }
        if sums.terms >= trunc.max_terms {
            return Err(Error::Truncation { terms: sums.terms, tail_bound: contrib / sums.total() });
        }
    }

    // downward
    let mut y = mode;
    small = 0;
    while y >= hf {
        y -= hf;
        let lf = poisson_log_pmf(y, eta);
        let contrib = sums.add(y, lf, mu, order);
        if y <= lo_min {
            if contrib < trunc.rel_tol * sums.total() {
                small += 1;
                if small >= trunc.tail_run {
                    break;
                }
            } else {
                small = 0;
            }
        }
        if sums.terms >= trunc.max_terms {
            return Err(Error::Truncation { terms: sums.terms, tail_bound: contrib / sums.total() });
        }
    }

    let Sums { s0, s1, s2, .. } = sums;

    Ok(GammaSet {
        order,
        integral: hf * s0,
        gamma1: hf * s1,
        gamma11: hf * s2,
        gamma2: 0.0,
        gamma12: 0.0,
        gamma22: 0.0,
    })
}
