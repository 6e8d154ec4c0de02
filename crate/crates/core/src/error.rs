use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("validation failed for {} row(s): {}", .rows.len(), format_rows(.rows))]
    Validation { rows: Vec<usize>, reason: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate risk: record {record} has zero probability mass in its window")]
    DegenerateRisk { record: usize },

    #[error("degenerate window: F(V) - F(U-) vanished for record {record}")]
    DegenerateWindow { record: usize },

    #[error("degenerate sampling probability at event value {at}")]
    DegenerateSampling { at: f64 },

    #[error("fit has not converged; refusing to derive {0}")]
    NotConverged(&'static str),

    #[error("non-positive sampling probability for record {record}")]
    Weight { record: usize },

    #[error("non-identifiable model: {0}")]
    NonIdentifiable(String),

    #[error("divergence after {iterations} iterations (|U|inf = {score_norm:e}, beta = {beta:?})")]
    Divergence {
        iterations: usize,
        score_norm: f64,
        beta: Vec<f64>,
    },

    #[error("too many failed resamples: {failures} failures for B = {b}")]
    ResampleFailure { failures: usize, b: usize },

    #[error("acceptance probability {0:e} is too small")]
    LowAcceptance(f64),

    #[error("group {label} cannot be estimated: {reason}")]
    Group { label: i64, reason: String },

    #[error("statistic undefined: {0}")]
    Undefined(String),

    #[error("zero variance: {0}")]
    ZeroVariance(String),

    #[error("configuration error: {0}")]
    Config(String),
}

fn format_rows(rows: &[usize]) -> String {
    const SHOWN: usize = 10;
    let mut out: Vec<String> = rows.iter().take(SHOWN).map(|r| r.to_string()).collect();
    if rows.len() > SHOWN {
        out.push(format!("... (+{})", rows.len() - SHOWN));
    }
    out.join(", ")
}

impl Error {
    /// Process exit code used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 1,
            Error::Schema(_) | Error::Parse { .. } | Error::InvalidArgument(_) | Error::Config(_) => 2,
            Error::Validation { .. } => 3,
            Error::NotConverged(_) | Error::Divergence { .. } => 4,
            _ => 5,
        }
    }

    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
