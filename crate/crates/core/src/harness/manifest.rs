//! Run manifests: the resolved configuration, seed and versions of a CLI
//! run, in the same `key = value` format as the input.

use std::path::{Path, PathBuf};

use crate::error::Result;

use super::config::ConfigMap;

#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub command: String,
    pub master_seed: u64,
    pub config: ConfigMap,
    pub outputs: Vec<PathBuf>,
}

impl RunManifest {
    pub fn to_map(&self) -> ConfigMap {
        let mut m = ConfigMap::new();
        m.set("command", self.command.clone());
        m.set("master_seed", self.master_seed.to_string());
        m.set("crate_name", env!("CARGO_PKG_NAME"));
        m.set("crate_version", env!("CARGO_PKG_VERSION"));
        for (k, v) in self.config.iter() {
            m.set(&format!("config.{k}"), v);
        }
        for (i, o) in self.outputs.iter().enumerate() {
            m.set(&format!("output.{i}"), o.display().to_string());
        }
        m
    }

    pub fn to_text(&self) -> String {
        self.to_map().to_text()
    }

    /// Path of the manifest written next to `primary`.
    pub fn path_for(primary: &Path) -> PathBuf {
        let mut name = primary.file_name().map(|s| s.to_os_string()).unwrap_or_default();
        name.push(".manifest");
        primary.with_file_name(name)
    }

    pub fn write_next_to(&self, primary: &Path) -> Result<PathBuf> {
        let path = Self::path_for(primary);
        std::fs::write(&path, self.to_text())?;
        Ok(path)
    }
}
