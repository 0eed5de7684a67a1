use thiserror::Error;

/// Error taxonomy shared by every module.
///
/// The variants map onto the CLI exit codes: `Domain` and `Geometry` are
/// caller mistakes (exit 2), `Accuracy` and `Solver` mean a computation did
/// not reach its tolerance (exit 3), and `Refusal` means a hypothesis of the
/// blow-up construction fails so no prediction is emitted (exit 4).
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("accuracy error: {0}")]
    Accuracy(String),
    #[error("solver error: {0}")]
    Solver(String),
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("refusal: {0}")]
    Refusal(String),
}

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_) | Error::Geometry(_) => 2,
            Error::Accuracy(_) | Error::Solver(_) => 3,
            Error::Refusal(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
