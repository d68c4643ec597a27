use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::Family;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Scale {
    /// Dispersion estimated jointly with the coefficients.
    Free,
    /// Dispersion held at the given value.
    Fixed(f64),
}

/// A validated GLM specification: design, response and family.
#[derive(Debug, Clone)]
pub struct ModelSpec {
    design: DMatrix<f64>,
    response: Vec<f64>,
    family: Family,
    trials: Option<Vec<u32>>,
    scale: Scale,
    coef_names: Vec<String>,
    units: usize,
}

impl ModelSpec {
    pub fn new(design: DMatrix<f64>, response: Vec<f64>, family: Family) -> Result<Self> {
        let scale = if family.fixed_scale() { Scale::Fixed(1.0) } else { Scale::Free };
        Self::build(design, response, family, None, scale)
    }

    pub fn binomial(design: DMatrix<f64>, response: Vec<f64>, trials: Vec<u32>) -> Result<Self> {
        Self::build(design, response, Family::Binomial, Some(trials), Scale::Fixed(1.0))
    }

    pub fn build(
        design: DMatrix<f64>,
        response: Vec<f64>,
        family: Family,
        trials: Option<Vec<u32>>,
        scale: Scale,
    ) -> Result<Self> {
        let (n, p) = design.shape();
        if response.len() != n {
            return Err(Error::Input(format!("design has {n} rows but response has {} entries", response.len())));
        }
        if p == 0 {
            return Err(Error::Input("design has no columns".into()));
        }
        if n < p {
            return Err(Error::Input(format!("{n} observations cannot identify {p} coefficients")));
        }
        if design.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("design contains non-finite values".into()));
        }
        match (family, &trials) {
            (Family::Binomial, None) => return Err(Error::Input("binomial family requires trial counts".into())),
            (Family::Binomial, Some(t)) if t.len() != n => {
                return Err(Error::Input("trial counts must match the number of rows".into()))
            }
            (Family::Binomial, Some(t)) if t.contains(&0) => {
                return Err(Error::Input("trial counts must be positive".into()))
            }
            (Family::Binomial, _) => {}
            (_, Some(_)) => {
                return Err(Error::Input(format!(
                    "trial counts are only meaningful for the binomial family, not {}",
                    family.name()
                )))
            }
            _ => {}
        }
        match scale {
            Scale::Free if family.fixed_scale() => {
                return Err(Error::Unsupported(format!("the {} family has no free dispersion", family.name())))
            }
            Scale::Fixed(v) if !(v > 0.0 && v.is_finite()) => {
                return Err(Error::Input(format!("fixed dispersion must be positive, got {v}")))
            }
            Scale::Fixed(v) if family.fixed_scale() && v != 1.0 => {
                return Err(Error::Unsupported(format!("the {} family has dispersion fixed at one", family.name())))
            }
            _ => {}
        }
        for (i, &y) in response.iter().enumerate() {
            let m = trials.as_ref().map_or(1, |t| t[i]);
            family.check_response(y, m).map_err(|e| Error::Input(format!("observation {}: {e}", i + 1)))?;
        }
        let rank = numerical_rank(&design);
        if rank < p {
            return Err(Error::Input(format!("design is rank deficient (rank {rank} < {p} columns)")));
        }
        let coef_names = (0..p).map(|j| format!("x{j}")).collect();
        Ok(ModelSpec { design, response, family, trials, scale, coef_names, units: n })
    }

    pub fn with_coef_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.p() {
            return Err(Error::Input(format!("{} names supplied for {} coefficients", names.len(), self.p())));
        }
        self.coef_names = names;
        Ok(self)
    }

    /// Sets the number of sampling units used for degrees of freedom, which
    /// differs from `n` when grouped data were expanded to binary rows.
    pub fn with_units(mut self, units: usize) -> Self {
        self.units = units;
        self
    }

    pub fn n(&self) -> usize {
        self.design.nrows()
    }
    pub fn p(&self) -> usize {
        self.design.ncols()
    }
    /// Length of the parameter vector (coefficients plus a free dispersion).
    pub fn dim(&self) -> usize {
        self.p() + usize::from(self.scale_free())
    }
    pub fn units(&self) -> usize {
        self.units
    }
    pub fn design(&self) -> &DMatrix<f64> {
        &self.design
    }
    pub fn response(&self) -> &[f64] {
        &self.response
    }
    pub fn family(&self) -> Family {
        self.family
    }
    pub fn scale(&self) -> Scale {
        self.scale
    }
    pub fn scale_free(&self) -> bool {
        matches!(self.scale, Scale::Free)
    }
    pub fn coef_names(&self) -> &[String] {
        &self.coef_names
    }
    pub fn trials(&self, i: usize) -> u32 {
        self.trials.as_ref().map_or(1, |t| t[i])
    }
    pub fn trials_vec(&self) -> Option<&[u32]> {
        self.trials.as_deref()
    }
    pub fn row(&self, i: usize) -> DVector<f64> {
        self.design.row(i).transpose()
    }

    /// Dispersion implied by a parameter vector.
    pub fn phi_of(&self, theta: &DVector<f64>) -> f64 {
        match self.scale {
            Scale::Free => theta[self.p()],
            Scale::Fixed(v) => v,
        }
    }

    pub fn eta(&self, theta: &DVector<f64>) -> DVector<f64> {
        &self.design * theta.rows(0, self.p())
    }

    /// A copy with a different response, used by the simulator.
    pub fn with_response(&self, response: Vec<f64>) -> Result<Self> {
        if response.len() != self.n() {
            return Err(Error::Input("response length changed".into()));
        }
        for (i, &y) in response.iter().enumerate() {
            self.family.check_response(y, self.trials(i))?;
        }
        let mut out = self.clone();
        out.response = response;
        Ok(out)
    }

    /// Drops the given zero-based rows.
    pub fn without_rows(&self, drop: &[usize]) -> Result<Self> {
        let keep: Vec<usize> = (0..self.n()).filter(|i| !drop.contains(i)).collect();
        let design = self.design.select_rows(keep.iter());
        let response = keep.iter().map(|&i| self.response[i]).collect();
        let trials = self.trials.as_ref().map(|t| keep.iter().map(|&i| t[i]).collect());
        let units = self.units.saturating_sub(self.n() - keep.len());
        let out = Self::build(design, response, self.family, trials, self.scale)?;
        Ok(Self { coef_names: self.coef_names.clone(), units, ..out })
    }

    /// Rewrites grouped binomial rows as individual Bernoulli trials.
    /// The number of sampling units stays at the number of groups.
    pub fn expand_to_bernoulli(&self) -> Result<Self> {
        if self.family != Family::Binomial {
            return Err(Error::Unsupported("only binomial models can be expanded".into()));
        }
        let p = self.p();
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for i in 0..self.n() {
            let m = self.trials(i) as usize;
            let s = self.response[i] as usize;
            for j in 0..m {
                rows.extend(self.design.row(i).iter().copied());
                y.push(if j < s { 1.0 } else { 0.0 });
            }
        }
        let design = DMatrix::from_row_slice(y.len(), p, &rows);
        let out = Self::new(design, y, Family::Bernoulli)?;
        Ok(Self { coef_names: self.coef_names.clone(), units: self.units, ..out })
    }
}

pub(crate) fn numerical_rank(x: &DMatrix<f64>) -> usize {
    let svd = x.clone().svd(false, false);
    let s = &svd.singular_values;
    let smax = s.iter().cloned().fold(0.0, f64::max);
    let tol = smax * (x.nrows().max(x.ncols()) as f64) * f64::EPSILON;
    s.iter().filter(|&&v| v > tol).count()
}
