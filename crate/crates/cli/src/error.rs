use std::path::{Path, PathBuf};
use std::process::ExitCode;

use thiserror::Error;

/// Exit status for each class of failure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitClass {
    Config = 2,
    Parse = 3,
    Numeric = 4,
    Io = 5,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] supercap::Error),

    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Parse {
        path: PathBuf,
        source: supercap::Error,
    },

    #[error("{path}: {reason}")]
    Json { path: PathBuf, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Attaches a file name to parse failures coming out of the core crate.
    pub fn in_file(path: &Path, e: supercap::Error) -> Self {
        match e {
            supercap::Error::Io(source) => CliError::io(path, source),
            e @ (supercap::Error::Parse { .. } | supercap::Error::InvalidTrace(_)) => CliError::Parse {
                path: path.to_path_buf(),
                source: e,
            },
            e => CliError::Core(e),
        }
    }

    pub fn class(&self) -> ExitClass {
        use supercap::Error as E;
        match self {
            CliError::Config(_) => ExitClass::Config,
            CliError::Parse { .. } | CliError::Json { .. } => ExitClass::Parse,
            CliError::Io { .. } => ExitClass::Io,
            CliError::Core(e) => match e {
                E::InvalidParameter { .. }
                | E::WindowTooNarrow { .. }
                | E::UnboundedCurrent
                | E::FitQualityTooLow { .. }
                | E::InfeasibleEnergyRequirement(_) => ExitClass::Config,
                E::Parse { .. } | E::InvalidTrace(_) => ExitClass::Parse,
                E::Io(_) => ExitClass::Io,
                E::LossesExceedDelivery { .. }
                | E::DynamicsDiverged { .. }
                | E::PhaseTimeout { .. }
                | E::NoCyclesFound
                | E::MalformedProtocol { .. }
                | E::NoJumpFound
                | E::InsufficientData(_)
                | E::RankDeficientFit => ExitClass::Numeric,
            },
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.class() as u8)
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
