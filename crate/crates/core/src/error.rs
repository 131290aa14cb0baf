use thiserror::Error;

use crate::network::AdmissibilityReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("pooling factor {factor} does not divide grid size {n}")]
    Divisibility { factor: usize, n: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate frame: Littlewood-Paley sum vanishes at frequency {frequency:?}")]
    DegenerateFrame { frequency: Vec<f64> },

    #[error("frequency coverage too weak: Littlewood-Paley minimum {min:e} at {frequency:?} is below {threshold:e}")]
    Coverage {
        min: f64,
        frequency: Vec<f64>,
        threshold: f64,
    },

    #[error("atom range truncation leaves a tail of {tail:e} (limit {limit:e})")]
    Truncation { tail: f64, limit: f64 },

    #[error("unknown atom label or output atom misuse: {0}")]
    Label(String),

    #[error("module-sequence is not admissible")]
    NotAdmissible(Box<AdmissibilityReport>),

    #[error("signal is not band-limited enough for trigonometric interpolation: {0}")]
    NotBandlimited(String),

    #[error("theorem precondition violated: {0}")]
    Precondition(String),

    #[error("invalid eta profile: {0}")]
    Profile(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
