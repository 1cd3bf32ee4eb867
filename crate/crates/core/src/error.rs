use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("empty input")]
    EmptyInput,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),
    #[error("no ground found: {0}")]
    NoGroundFound(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invalid scene spec: {0}")]
    InvalidSpec(String),
    #[error("{}:{line}: {msg}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
