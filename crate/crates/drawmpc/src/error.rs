use std::path::PathBuf;

use drawmpc_core::Error as CoreError;

/// Process exit codes of the command-line tool.
pub mod exit {
    pub const OK: i32 = 0;
    pub const INPUT: i32 = 2;
    pub const STABILITY: i32 = 3;
    pub const SOLVER: i32 = 4;
}

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}:{line}: {message}")]
    Parse {
        file: String,
        line: u64,
        message: String,
    },
    #[error("{0}")]
    Input(String),
    #[error("stability check failed: {0}")]
    Stability(String),
    #[error(transparent)]
    Core(#[from] CoreError),
}

pub type AppResult<T> = std::result::Result<T, AppError>;

impl AppError {
    pub fn parse(file: &str, line: u64, message: impl Into<String>) -> Self {
        AppError::Parse {
            file: file.to_string(),
            line,
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        AppError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Io { .. } | AppError::Parse { .. } | AppError::Input(_) => exit::INPUT,
            AppError::Stability(_) => exit::STABILITY,
            AppError::Core(e) => core_exit_code(e),
        }
    }
}

fn core_exit_code(e: &CoreError) -> i32 {
    match e {
        CoreError::AtStep { source, .. } => match core_exit_code(source) {
            exit::INPUT => exit::SOLVER,
            code => code,
        },
        CoreError::SolverMaxIterations { .. } | CoreError::IntegrationFailure => exit::SOLVER,
        CoreError::EquilibriumResidual { .. } | CoreError::NoConvergence { .. } => exit::STABILITY,
        _ => exit::INPUT,
    }
}

pub(crate) fn read_to_string(path: &std::path::Path) -> AppResult<String> {
    std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))
}

pub(crate) fn write(path: &std::path::Path, contents: impl AsRef<[u8]>) -> AppResult<()> {
    std::fs::write(path, contents).map_err(|e| AppError::io(path, e))
}
