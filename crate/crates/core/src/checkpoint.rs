//! Versioned model checkpoints. JSON with full-precision floats: a reloaded
//! model resumes bitwise-identically, which the determinism guarantees rely
//! on.

use std::path::Path;

use crate::cell::LipschitzCell;
use crate::optim::OptimState;

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error("unsupported checkpoint version {0}")]
    Version(u32),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub cell: LipschitzCell,
    pub opt: Option<OptimState>,
    /// Number of completed training epochs.
    pub epochs_done: usize,
    pub seed: u64,
}

impl Checkpoint {
    pub fn capture(
        cell: &LipschitzCell,
        opt: Option<&OptimState>,
        epochs_done: usize,
        seed: u64,
    ) -> Self {
        Self {
            version: CHECKPOINT_VERSION,
            cell: cell.clone(),
            opt: opt.cloned(),
            epochs_done,
            seed,
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), CheckpointError> {
        let json = serde_json::to_string(self)?;
        std::fs::write(path, json)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Checkpoint, CheckpointError> {
        let text = std::fs::read_to_string(path)?;
        let ckpt: Checkpoint = serde_json::from_str(&text)?;
        if ckpt.version != CHECKPOINT_VERSION {
            return Err(CheckpointError::Version(ckpt.version));
        }
        Ok(ckpt)
    }
}
