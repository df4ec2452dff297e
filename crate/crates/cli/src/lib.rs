//! Command-line front end for `eulerband`.

pub mod certify;
pub mod commands;
pub mod config;
pub mod export;
pub mod svg;

pub use eulerband_core as core;

use std::fmt;

pub use certify::{run_certify, CertificationReport};
pub use config::RunConfig;

/// Pipeline stages of a certification run, in order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Steadiness,
    Census,
    Lyapunov,
    Decay,
    Bound,
    BandProfile,
    Annulus,
    Pseudospectrum,
    Raster,
    Output,
}

impl Stage {
    pub fn number(&self) -> usize {
        *self as usize + 1
    }

    pub fn name(&self) -> &'static str {
        match self {
            Stage::Steadiness => "steadiness",
            Stage::Census => "census",
            Stage::Lyapunov => "lyapunov",
            Stage::Decay => "decay",
            Stage::Bound => "bound",
            Stage::BandProfile => "band profile",
            Stage::Annulus => "annulus",
            Stage::Pseudospectrum => "pseudospectrum",
            Stage::Raster => "raster",
            Stage::Output => "output",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "stage {} ({})", self.number(), self.name())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: eulerband_core::Error,
    },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn stage(stage: Stage, source: eulerband_core::Error) -> Self {
        CliError::Stage { stage, source }
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            context: context.into(),
            source,
        }
    }

    /// The stage that failed, if the error came from the pipeline.
    pub fn failed_stage(&self) -> Option<Stage> {
        match self {
            CliError::Stage { stage, .. } => Some(*stage),
            _ => None,
        }
    }
}

/// Tags a core result with the stage it belongs to.
pub(crate) trait AtStage<T> {
    fn at(self, stage: Stage) -> Result<T, CliError>;
}

impl<T> AtStage<T> for eulerband_core::Result<T> {
    fn at(self, stage: Stage) -> Result<T, CliError> {
        self.map_err(|e| CliError::stage(stage, e))
    }
}

/// Exit status of a completed command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    VerdictFailure,
}

impl Outcome {
    pub fn from_pass(pass: bool) -> Self {
        if pass {
            Outcome::Pass
        } else {
            Outcome::VerdictFailure
        }
    }

    pub fn code(&self) -> i32 {
        match self {
            Outcome::Pass => 0,
            Outcome::VerdictFailure => 2,
        }
    }
}

pub const EXIT_ERROR: i32 = 1;

/// Time span searched for the fastest separatrix point used by decay checks.
pub const PEAK_SPAN: f64 = 20.0;
