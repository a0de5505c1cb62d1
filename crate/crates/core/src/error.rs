use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid sphere context: {0}")]
    InvalidContext(String),

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("integer overflow while computing {0}")]
    Overflow(&'static str),

    #[error("series truncated at l_max = {l_max} leaves tail bound {tail_bound:e} above tolerance {tol:e}; try l_max >= {suggested_l_max}")]
    Truncation {
        l_max: usize,
        tail_bound: f64,
        tol: f64,
        suggested_l_max: usize,
    },

    #[error("evaluation point lies {distance:e} from the field source")]
    Singularity { distance: f64 },

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("flavor mismatch: expected {expected}, got {found}")]
    FlavorMismatch {
        expected: &'static str,
        found: &'static str,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
