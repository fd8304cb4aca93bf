use std::io;
use std::path::{Path, PathBuf};

use raycalib_core::Error as CoreError;
use serde_json::json;

/// Failure of a command. Input problems exit with 2, numerical failures
/// with 3.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("file not found: {}", .0.display())]
    FileNotFound(PathBuf),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("cannot parse {}: {msg}", path.display())]
    Parse { path: PathBuf, msg: String },
    #[error("{0}")]
    Usage(String),
    #[error("unsupported LensFun model kind `{0}`")]
    UnsupportedModelKind(String),
    #[error(transparent)]
    Core(#[from] CoreError),
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

impl CliError {
    pub fn parse(path: &Path, msg: impl ToString) -> CliError {
        CliError::Parse {
            path: path.to_path_buf(),
            msg: msg.to_string(),
        }
    }

    pub fn io(path: &Path, source: io::Error) -> CliError {
        if source.kind() == io::ErrorKind::NotFound {
            CliError::FileNotFound(path.to_path_buf())
        } else {
            CliError::Io {
                path: path.to_path_buf(),
                source,
            }
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::FileNotFound(_) => "FileNotFound",
            CliError::Io { .. } => "IoError",
            CliError::Parse { .. } => "ParseError",
            CliError::Usage(_) => "UsageError",
            CliError::UnsupportedModelKind(_) => "UnsupportedModelKind",
            CliError::Core(e) => e.kind(),
        }
    }

    pub fn module(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.module(),
            CliError::UnsupportedModelKind(_) => "synth",
            _ => "cli",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(
                CoreError::InvalidModelString(_)
                | CoreError::DistCountMismatch { .. }
                | CoreError::InvalidArgument(_)
                | CoreError::DimensionMismatch(_)
                | CoreError::ThetaOutOfDomain,
            ) => EXIT_INPUT,
            CliError::Core(_) => EXIT_NUMERICAL,
            _ => EXIT_INPUT,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "error": {
                "kind": self.kind(),
                "module": self.module(),
                "message": self.to_string(),
            }
        })
    }
}

pub fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| CliError::io(path, e))
}

pub fn read_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}
