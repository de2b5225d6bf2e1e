use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("accuracy check failed: {what} = {value:.3e} exceeds {tolerance:.3e}")]
    Accuracy {
        what: String,
        value: f64,
        tolerance: f64,
    },

    #[error("consistency check `{check}` failed: defect {defect:.3e} exceeds {tolerance:.3e}")]
    Consistency {
        check: String,
        defect: f64,
        tolerance: f64,
    },

    #[error("spectral singularity: |s33| = {modulus:.3e} at k = {k}")]
    SpectralSingularity { k: f64, modulus: f64 },

    #[error("s33 has {count} zero(s) in the upper half plane; the datum carries solitons")]
    SolitonsPresent { count: i64 },

    #[error("arg s33 jumps by {jump:.3} rad near k = {k}; refine the k-grid")]
    Resolution { k: f64, jump: f64 },

    #[error(
        "oscillation budget exceeded (phase step {phase_step:.3} > pi/4 at x = {x}, t = {t}); \
         use the long-time asymptotics instead"
    )]
    OscillationBudget { x: f64, t: f64, phase_step: f64 },

    #[error("{what} = {value} outside the available range [{lo}, {hi}]")]
    Range {
        what: String,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("blow-up: non-finite field after t = {last_stable_t}")]
    BlowUp { last_stable_t: f64 },

    #[error("box too small: |u| = {edge_value:.3e} at the box edge at t = {t}")]
    BoxTooSmall { t: f64, edge_value: f64 },

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("format: {0}")]
    Format(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}
