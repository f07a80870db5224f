//! Error taxonomy shared by every module; the CLI maps each variant to a
//! distinct process exit code.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid parameters, grids, or data specifications.
    #[error("configuration error: {0}")]
    Config(String),

    /// The integration produced NaN/Inf values.
    #[error("{}", BlowupDisplay(.time, .last_good_slice))]
    Blowup {
        time: Option<f64>,
        last_good_slice: Option<usize>,
    },

    /// A requested operation exceeds what the grid can resolve in f64.
    #[error("spectral precision exceeded: {0}")]
    Precision(String),

    /// Solution mass reached the periodic seam, so x-weighted quantities
    /// no longer represent the real line.
    #[error("domain truncation contaminated: {0}")]
    Contamination(String),

    /// The Picard map failed to contract.
    #[error("iteration not contracting: {0}")]
    NonContraction(String),
}

struct BlowupDisplay<'a>(&'a Option<f64>, &'a Option<usize>);

impl fmt::Display for BlowupDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "integration blowup")?;
        if let Some(t) = self.0 {
            write!(f, " at t = {t:.6e}")?;
        }
        if let Some(i) = self.1 {
            write!(f, " (last good slice {i})")?;
        }
        Ok(())
    }
}

impl Error {
    /// Stable exit code for the CLI (0 is success).
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 1,
            Error::Blowup { .. } => 2,
            Error::Precision(_) => 3,
            Error::Contamination(_) => 4,
            Error::NonContraction(_) => 5,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
