//! JSON model files.
//!
//! ```json
//! {
//!   "format": "mgctm-model",
//!   "version": 1,
//!   "config": { ...HyperConfig... },
//!   "vocab_size": 50,
//!   "pi": [...],                       // J
//!   "gamma": [g1, g2],
//!   "local_priors": [[...]],           // J x K
//!   "global_prior": [...],             // R
//!   "local_topics": [[[...]]],         // J x K x V
//!   "global_topics": [[...]],          // R x V
//!   "assignments": [...]               // optional, one cluster id per training document
//! }
//! ```
//!
//! Floats are written in shortest round-trip form, so reading a file back
//! gives bit-identical parameters.

use serde::{Deserialize, Serialize};

use super::params::{HyperConfig, ModelParams};
use crate::error::{Error, Result};

pub const MODEL_FORMAT: &str = "mgctm-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub config: HyperConfig,
    pub vocab_size: usize,
    #[serde(flatten)]
    pub params: ModelParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assignments: Option<Vec<usize>>,
}

impl ModelFile {
    pub fn new(config: HyperConfig, params: ModelParams, assignments: Option<Vec<usize>>) -> Self {
        Self {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_VERSION,
            config,
            vocab_size: params.vocab_size(),
            params,
            assignments,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: Self = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        if file.format != MODEL_FORMAT {
            return Err(Error::Format(format!("expected format {MODEL_FORMAT:?}, found {:?}", file.format)));
        }
        if file.version != MODEL_VERSION {
            return Err(Error::Format(format!("unsupported model version {}", file.version)));
        }
        file.params.validate()?;
        if file.params.vocab_size() != file.vocab_size {
            return Err(Error::Format("vocab_size does not match topic rows".into()));
        }
        Ok(file)
    }
}
