//! Reading and writing `FSZT` checkpoints and `FSZU` updates.

use std::fs;
use std::path::{Path, PathBuf};

use fedzip_core::pipeline::CompressedUpdate;
use fedzip_core::tensor::{decode_checkpoint, encode_checkpoint, StateDict};

#[derive(Debug, thiserror::Error)]
pub enum FileError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Format { path: PathBuf, source: fedzip_core::Error },
    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{}: {source}", path.display())]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{}: {message}", path.display())]
    Invalid { path: PathBuf, message: String },
}

impl FileError {
    pub fn path(&self) -> &Path {
        match self {
            FileError::Io { path, .. }
            | FileError::Format { path, .. }
            | FileError::Csv { path, .. }
            | FileError::Json { path, .. }
            | FileError::Invalid { path, .. } => path,
        }
    }

    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        FileError::Io { path: path.to_owned(), source }
    }

    pub(crate) fn format(path: &Path, source: fedzip_core::Error) -> Self {
        FileError::Format { path: path.to_owned(), source }
    }
}

pub fn read_file(path: &Path) -> Result<Vec<u8>, FileError> {
    fs::read(path).map_err(|e| FileError::io(path, e))
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), FileError> {
    fs::write(path, bytes).map_err(|e| FileError::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<StateDict, FileError> {
    decode_checkpoint(&read_file(path)?).map_err(|e| FileError::format(path, e))
}

pub fn save_checkpoint(path: &Path, state: &StateDict) -> Result<(), FileError> {
    write_file(path, &encode_checkpoint(state))
}

pub fn load_update(path: &Path) -> Result<CompressedUpdate, FileError> {
    CompressedUpdate::from_bytes(&read_file(path)?).map_err(|e| FileError::format(path, e))
}

pub fn save_update(path: &Path, update: &CompressedUpdate) -> Result<(), FileError> {
    write_file(path, &update.to_bytes())
}
