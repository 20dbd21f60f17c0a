use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("quadrature refinement did not converge after {levels} doublings (last delta {last_delta:.3e}); integrand too rough")]
    NonConvergence { levels: usize, last_delta: f64 },

    #[error("resource limit: {0}")]
    Resource(String),

    #[error("density positivity failed: min value {f_min:.6e} below floor {floor:.6e}; reduce the amplitude")]
    Positivity { f_min: f64, floor: f64 },

    #[error("Besov norm tail not dominated: last-level share {share:.3e} exceeds 1e-6; raise j_max")]
    TailDominance { share: f64 },

    #[error("degenerate kernel: computed variance {0:.3e} is not positive")]
    DegenerateVariance(f64),

    #[error("fourth-moment truncation too aggressive: dropped-mass bound {bound:.3e} exceeds {limit:.3e} of diagonal mass; raise the truncation radius")]
    Truncation { bound: f64, limit: f64 },

    #[error("schedule does not determine a regime: {0}")]
    AmbiguousRegime(String),

    #[error("schedule inconsistent with requested regime: {0}")]
    RegimeMismatch(String),

    #[error("syntax error at column {column}: {message}")]
    Syntax { column: usize, message: String },

    #[error("missing contraction entries: {0}")]
    MissingEntries(String),

    #[error("non-finite sample entry at index {0}")]
    NonFiniteSample(usize),

    #[error("experiment failed at level j={j}: {source}")]
    AtLevel {
        j: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("file format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
