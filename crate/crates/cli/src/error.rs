use sawfilm::dispersion::DispersionError;
use sawfilm::inversion::InversionError;
use sawfilm::materials::{DbError, MaterialError};
use sawfilm::signal::SignalError;
use sawfilm::units::UnitError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad configuration, arguments or input files.
    #[error("{0}")]
    Config(String),
    /// The forward model could not produce a mode.
    #[error("{0}")]
    Forward(String),
    /// No usable peaks in a spectrum.
    #[error("{0}")]
    Extraction(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Forward(_) => 3,
            CliError::Extraction(_) => 4,
        }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }
}

impl From<UnitError> for CliError {
    fn from(e: UnitError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<DbError> for CliError {
    fn from(e: DbError) -> Self {
        CliError::Config(format!("material database: {e}"))
    }
}

impl From<MaterialError> for CliError {
    fn from(e: MaterialError) -> Self {
        CliError::Config(format!("material: {e}"))
    }
}

impl From<DispersionError> for CliError {
    fn from(e: DispersionError) -> Self {
        match e {
            DispersionError::InvalidInput(_)
            | DispersionError::Csv { .. }
            | DispersionError::Material(_) => CliError::Config(e.to_string()),
            DispersionError::Points(ref failures) => {
                let list: Vec<String> = failures
                    .iter()
                    .map(|f| format!("{:.6e} Hz: {}", f.frequency, f.error))
                    .collect();
                CliError::Forward(format!("forward model failed at {}", list.join("; ")))
            }
            other => CliError::Forward(other.to_string()),
        }
    }
}

impl From<SignalError> for CliError {
    fn from(e: SignalError) -> Self {
        match e {
            SignalError::NoFundamental { .. } => CliError::Extraction(e.to_string()),
            SignalError::CoverageGap { .. } => CliError::Forward(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<InversionError> for CliError {
    fn from(e: InversionError) -> Self {
        match e {
            InversionError::Forward { .. } | InversionError::Dispersion(_) => {
                CliError::Forward(e.to_string())
            }
            _ => CliError::Config(e.to_string()),
        }
    }
}
