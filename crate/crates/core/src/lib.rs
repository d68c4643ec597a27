//! Minimum density power divergence estimation for generalized linear models.
//!
//! The estimator minimises
//! `H(theta) = (1/n) sum_i [ int f_i^(1+a) - (1 + 1/a) f_i(y_i)^a ]`
//! over the regression coefficients (and a free dispersion for the Gaussian
//! family). `a = 0` recovers maximum likelihood; larger `a` downweights
//! observations that are improbable under the fitted model.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod alpha_select;
pub mod asymptotics;
pub mod data;
pub mod dpd;
pub mod error;
pub mod exec;
pub mod family;
pub mod golden;
pub mod model;
pub mod reproduce;
pub mod robustness;
pub mod sim;
pub mod solver;

pub use asymptotics::{relative_efficiency, sandwich, wald_table, Reference, Sandwich, WaldRow};
pub use error::{Error, IterationRecord, Result};
pub use exec::Execution;
pub use family::{Family, GammaSet, Truncation};
pub use model::{ModelSpec, Scale};
pub use solver::{fit, fit_path, FitResult, SolverOptions, StartSource};

/// Formats a value with 17 significant digits, enough to round-trip any `f64`.
pub fn fmt17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}
