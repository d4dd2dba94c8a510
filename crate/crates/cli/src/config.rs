//! Structured run configuration: config file, environment fallback, and
//! flag overrides layered on top.

use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use factsum_core::{
    EncoderConfig, Error, Result, SegmenterConfig, SelectionConfig, TrainingConfig,
};
use serde::{Deserialize, Serialize};

pub const CONFIG_ENV_VAR: &str = "FACTSUM_CONFIG";

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct FileConfig {
    pub segmenter: SegmenterConfig,
    pub encoder: EncoderConfig,
    pub training: TrainingConfig,
    pub selection: SelectionConfig,
}

/// Resolve the config: `--config` wins, then `FACTSUM_CONFIG`, then
/// built-in defaults. Returns the config and the path it came from.
pub fn load_config(flag: &Option<PathBuf>) -> Result<(FileConfig, Option<PathBuf>)> {
    let path = flag
        .clone()
        .or_else(|| std::env::var_os(CONFIG_ENV_VAR).map(PathBuf::from));
    match path {
        None => Ok((FileConfig::default(), None)),
        Some(p) => {
            let file = File::open(&p).map_err(|e| Error::Dataset {
                id: p.display().to_string(),
                msg: format!("cannot open config: {e}"),
            })?;
            let cfg: FileConfig =
                serde_json::from_reader(BufReader::new(file)).map_err(|e| Error::Dataset {
                    id: p.display().to_string(),
                    msg: format!("invalid config file: {e}"),
                })?;
            cfg.segmenter.validate()?;
            cfg.encoder.validate()?;
            cfg.training.validate()?;
            cfg.selection.validate()?;
            Ok((cfg, Some(p)))
        }
    }
}
