//! Versioned parameter checkpoints in structured text (JSON).
//!
//! Layout (schema version 1): top-level `schema_version`, the codec
//! (dimensions, encoder and projector layer weights row-major with biases),
//! the frozen power-normalization scale, the decoder network, the schedule
//! parameters to rebuild the noise schedule, and optionally the baseline
//! network with its diffusion parameters.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::config::ScheduleParams;
use crate::jscc::CodecConfig;
use crate::model::MlpParams;
use crate::sampling::CdmConfig;

pub const CHECKPOINT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub schema_version: u32,
    pub codec: CodecConfig,
    /// Frozen per-symbol power-normalization scale calibrated after codec
    /// training.
    pub power_scale: f64,
    pub bridge: MlpParams,
    pub schedule: ScheduleParams,
    pub cdm: Option<MlpParams>,
    pub cdm_config: Option<CdmConfig>,
}

impl Checkpoint {
    pub fn save(&self, path: &Path) -> Result<()> {
        let text =
            serde_json::to_string_pretty(self).map_err(|e| Error::ConfigParse(e.to_string()))?;
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| Error::Io {
                path: parent.display().to_string(),
                source: e,
            })?;
        }
        std::fs::write(path, text).map_err(|e| Error::Io {
            path: path.display().to_string(),
            source: e,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        let ckpt: Checkpoint =
            serde_json::from_str(&text).map_err(|e| Error::ConfigParse(e.to_string()))?;
        if ckpt.schema_version != CHECKPOINT_SCHEMA_VERSION {
            return Err(Error::InvalidConfig(format!(
                "unsupported checkpoint schema {}",
                ckpt.schema_version
            )));
        }
        ckpt.codec.encoder.validate()?;
        ckpt.codec.projector.validate()?;
        ckpt.bridge.validate()?;
        Ok(ckpt)
    }
}
