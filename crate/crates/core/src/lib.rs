//! High-precision IMSPE evaluation and IMSPE-optimal design search for
//! Gaussian-process computer experiments on `[-1, 1]^D`.

pub mod error;
pub mod highprec;
pub mod imspe;
pub mod kernel;
pub mod search;
pub mod studies;

pub use error::{Error, Result};
pub use highprec::{BigReal, PrecisionContext};
pub use imspe::{imspe, imspe_gap, ImspeResult};
pub use kernel::{CovarianceParams, Design, TwinSpec};
pub use search::{ccd_minimize, multistart, SearchConfig, SearchResult};
pub use studies::{classify, PhaseLabel};
