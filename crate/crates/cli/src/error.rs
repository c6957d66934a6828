use actuator_core::maxmin::MaxMinError;
use actuator_core::model::ModelError;
use actuator_core::riccati::RiccatiError;
use actuator_core::simulate::SimError;
use actuator_core::surrogate::SurrogateError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("solver error: {0}")]
    Solver(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("numerical error: {0}")]
    Numeric(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    /// 0 ok, 1 i/o, 2 config, 3 solver, 4 dimension, 5 numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Dimension(_) => 4,
            CliError::Numeric(_) => 5,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::DimensionMismatch { .. } => CliError::Dimension(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<RiccatiError> for CliError {
    fn from(e: RiccatiError) -> Self {
        match e {
            RiccatiError::DimensionMismatch(_) => CliError::Dimension(e.to_string()),
            _ => CliError::Solver(e.to_string()),
        }
    }
}

impl From<SurrogateError> for CliError {
    fn from(e: SurrogateError) -> Self {
        match e {
            SurrogateError::Solver { .. } => CliError::Solver(e.to_string()),
            SurrogateError::DimensionMismatch(_) => CliError::Dimension(e.to_string()),
            SurrogateError::NonFinite { .. } | SurrogateError::Numeric(_) => CliError::Numeric(e.to_string()),
            SurrogateError::Model { .. }
            | SurrogateError::EmptyDataset
            | SurrogateError::InvalidConfig(_)
            | SurrogateError::Format(_)
            | SurrogateError::Neural(_) => CliError::Config(e.to_string()),
        }
    }
}

impl From<MaxMinError> for CliError {
    fn from(e: MaxMinError) -> Self {
        match e {
            MaxMinError::NonFiniteIterate { .. } | MaxMinError::NonFiniteWeight => CliError::Numeric(e.to_string()),
            MaxMinError::DimensionMismatch(_) => CliError::Dimension(e.to_string()),
            MaxMinError::MissingGradient | MaxMinError::InvalidConfig(_) => CliError::Config(e.to_string()),
            MaxMinError::Io(_) => CliError::Io(e.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::NonFiniteState { .. } => CliError::Numeric(e.to_string()),
            SimError::InvalidConfig(_) => CliError::Config(e.to_string()),
            SimError::Numeric(_) => CliError::Dimension(e.to_string()),
            SimError::Io(_) => CliError::Io(e.to_string()),
        }
    }
}
