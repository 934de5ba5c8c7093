use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    /// A pivot fell below the singularity threshold of the working precision.
    #[error("matrix is singular at {digits} digits (pivot magnitude {pivot:e})")]
    Singular { pivot: f64, digits: u32 },

    /// Precision escalation hit its ceiling without a trustworthy result.
    #[error(
        "ill-conditioned evaluation: escalated to {digits} digits ({escalations} escalations), \
         min pivot {min_pivot:e}, estimated digits lost {digits_lost:.1}"
    )]
    IllConditioned {
        digits: u32,
        escalations: u32,
        min_pivot: f64,
        digits_lost: f64,
    },

    #[error("degenerate design: points {0} and {1} coincide exactly")]
    DegenerateDesign(usize, usize),

    #[error("invalid design: {0}")]
    InvalidDesign(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unsupported: {0}")]
    Unsupported(String),
}
