//! Optional JSON run configuration: a flat object whose keys mirror the
//! command-line flags. Explicit flags always override config values.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

#[derive(Default)]
pub struct FileConfig {
    values: HashMap<String, serde_json::Value>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> resnet::Result<Self> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path)?;
        let values: HashMap<String, serde_json::Value> =
            serde_json::from_str(&text).map_err(|e| resnet::Error::Parse {
                path: path.display().to_string(),
                line: e.line(),
                message: e.to_string(),
            })?;
        Ok(FileConfig { values })
    }

    pub fn str_or(&self, key: &str, flag: Option<String>, default: &str) -> String {
        flag.or_else(|| {
            self.values
                .get(key)
                .and_then(|v| v.as_str().map(str::to_owned))
        })
        .unwrap_or_else(|| default.to_owned())
    }

    pub fn path_opt(&self, key: &str) -> Option<PathBuf> {
        self.values
            .get(key)
            .and_then(|v| v.as_str())
            .map(PathBuf::from)
    }

    pub fn path_or(&self, key: &str, flag: Option<PathBuf>, default: &str) -> PathBuf {
        flag.or_else(|| self.path_opt(key))
            .unwrap_or_else(|| PathBuf::from(default))
    }

    pub fn u64_opt(&self, key: &str) -> Option<u64> {
        self.values.get(key).and_then(|v| v.as_u64())
    }

    pub fn u64_or(&self, key: &str, flag: Option<u64>, default: u64) -> u64 {
        flag.or_else(|| self.u64_opt(key)).unwrap_or(default)
    }

    pub fn usize_or(&self, key: &str, flag: Option<usize>, default: usize) -> usize {
        flag.or_else(|| self.u64_opt(key).map(|v| v as usize))
            .unwrap_or(default)
    }

    pub fn f64_opt(&self, key: &str) -> Option<f64> {
        self.values.get(key).and_then(|v| v.as_f64())
    }

    pub fn f64_or(&self, key: &str, flag: Option<f64>, default: f64) -> f64 {
        flag.or_else(|| self.f64_opt(key)).unwrap_or(default)
    }
}
