//! Errors carrying the process exit code.

use std::fmt;

use potlab_core::{
    AnalysisError, FitError, HistogramError, IngestError, MaxEntError, SimError, ValuationError,
};

pub const EXIT_DATA: u8 = 2;
pub const EXIT_CONFIG: u8 = 3;

/// A failed run: exit code 2 for bad or unusable data, 3 for bad flags.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn data(error: impl Into<anyhow::Error>) -> Self {
        Self {
            code: EXIT_DATA,
            error: error.into(),
        }
    }

    pub fn config(error: impl Into<anyhow::Error>) -> Self {
        Self {
            code: EXIT_CONFIG,
            error: error.into(),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

pub type Outcome<T = ()> = Result<T, Failure>;

// file system and serialization problems count as data errors
impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Self::data(e)
    }
}

impl From<IngestError> for Failure {
    fn from(e: IngestError) -> Self {
        Self::data(e)
    }
}

impl From<ValuationError> for Failure {
    fn from(e: ValuationError) -> Self {
        match e {
            ValuationError::InvalidWindow | ValuationError::BasisOutOfRange(_) => Self::config(e),
            _ => Self::data(e),
        }
    }
}

impl From<HistogramError> for Failure {
    fn from(e: HistogramError) -> Self {
        match e {
            HistogramError::InvalidConfig(_) => Self::config(e),
            _ => Self::data(e),
        }
    }
}

impl From<FitError> for Failure {
    fn from(e: FitError) -> Self {
        match e {
            FitError::InvalidInput(_) => Self::config(e),
            _ => Self::data(e),
        }
    }
}

impl From<MaxEntError> for Failure {
    fn from(e: MaxEntError) -> Self {
        match e {
            MaxEntError::InvalidPotential(_) | MaxEntError::InvalidBeta(_) => Self::config(e),
            _ => Self::data(e),
        }
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        match e {
            SimError::InvalidConfig(_) => Self::config(e),
            SimError::StepTooLarge { .. } => Self::data(e),
        }
    }
}

impl From<AnalysisError> for Failure {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::InvalidPeriods(_) => Self::config(e),
            AnalysisError::Histogram { ref source, .. }
                if matches!(source, HistogramError::InvalidConfig(_)) =>
            {
                Self::config(e)
            }
            AnalysisError::Fit {
                source: FitError::InvalidInput(_),
                ..
            } => Self::config(e),
            _ => Self::data(e),
        }
    }
}
