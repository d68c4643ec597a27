use thiserror::Error;

/// One Newton iteration, kept so convergence failures can be diagnosed.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub objective: f64,
    pub grad_norm: f64,
    pub step_norm: f64,
    pub step_length: f64,
    pub newton: bool,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("not supported: {0}")]
    Unsupported(String),

    #[error("series truncation failed after {terms} terms (tail bound {tail_bound:e})")]
    Truncation { terms: usize, tail_bound: f64 },

    #[error("invalid input: {0}")]
    Input(String),

    #[error(
        "solver failed to converge at alpha = {alpha} after {iterations} iterations (gradient norm {grad_norm:e})"
    )]
    Convergence { alpha: f64, iterations: usize, grad_norm: f64, trace: Vec<IterationRecord> },

    #[error("estimate diverges at alpha = {alpha}: the objective keeps decreasing as coefficients grow (objective {objective})")]
    Divergent { alpha: f64, objective: f64 },

    #[error("fit failed at alpha = {alpha}: {source}")]
    Path { alpha: f64, source: Box<Error> },

    #[error("inference unavailable: {0}")]
    Inference(String),

    #[error("degenerate inference: {0}")]
    Degenerate(String),

    #[error("formula error: {0}")]
    Formula(String),

    #[error("data error at line {line}: {message}")]
    Ingestion { line: usize, message: String },

    #[error("unknown dataset or preset: {0}")]
    UnknownDataset(String),

    #[error("alpha selection incomplete: fits failed at alpha {failed:?}")]
    PartialCurve { failed: Vec<f64> },

    #[error("simulation failed: {failures} of {replications} replications did not converge")]
    Simulation { failures: usize, replications: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures of the numerical solver rather than of the input.
    pub fn is_convergence(&self) -> bool {
        match self {
            Error::Convergence { .. }
            | Error::Divergent { .. }
            | Error::Truncation { .. }
            | Error::Simulation { .. } => true,
            Error::Path { source, .. } => source.is_convergence(),
            Error::PartialCurve { .. } => true,
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
