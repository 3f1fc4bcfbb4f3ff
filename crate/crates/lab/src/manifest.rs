use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::{Experiment, RunConfig};
use crate::error::{LabError, LabResult};

/// Record of a finished run. Embeds the resolved config so a replay sees the
/// same defaults even if they change later.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub dklab_version: String,
    pub core_version: String,
    pub experiment: Experiment,
    pub base_seed: u64,
    pub wall_time_s: f64,
    /// CSV file names, relative to the manifest's directory, that a replay
    /// must reproduce byte for byte.
    pub primary_csvs: Vec<String>,
    pub config: RunConfig,
}

impl Manifest {
    pub fn write(&self, path: &Path) -> LabResult<()> {
        let text =
            toml::to_string(self).map_err(|e| LabError::config("<manifest>", e.to_string()))?;
        std::fs::write(path, text).map_err(|e| LabError::io(path, e))
    }

    /// A missing or unreadable manifest is a configuration error.
    pub fn read(path: &Path) -> LabResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LabError::config("<manifest>", format!("{}: {e}", path.display())))?;
        let de = toml::Deserializer::parse(&text)
            .map_err(|e| LabError::config("<manifest>", e.to_string()))?;
        serde_path_to_error::deserialize(de).map_err(|e| {
            let key = e.path().to_string();
            LabError::config(
                format!("<manifest>{key}"),
                e.into_inner().message().to_string(),
            )
        })
    }
}
