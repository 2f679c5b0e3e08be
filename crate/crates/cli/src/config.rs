//! Optional TOML config file. Values here sit below flags and environment
//! variables and above built-in defaults.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub graph: Option<PathBuf>,
    pub scorer: Option<String>,
    pub hops: Option<usize>,
    pub beam: Option<usize>,
    pub top: Option<usize>,
    pub direction: Option<String>,
    pub workers: Option<usize>,
    pub seed: Option<u64>,
    pub max: Option<usize>,
    pub mask_rate: Option<f64>,
    pub stopwords: Option<PathBuf>,
    pub templates: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))
    }
}

/// First of flag (or env), config file, default.
pub fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

pub fn require<T>(flag: Option<T>, file: Option<T>, name: &str) -> Result<T, CliError> {
    flag.or(file).ok_or_else(|| {
        CliError::Usage(format!(
            "--{name} is required (flag, PATHKEEP_{} or config file)",
            name.to_uppercase()
        ))
    })
}
