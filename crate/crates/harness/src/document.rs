//! Result documents: schema-versioned JSON with content hashes.
//!
//! The content hash covers the schema, experiment, config and results but
//! not the wall-clock runtime, so identical configs hash identically across
//! runs while still recording how long each run took.

use crate::config::ExperimentConfig;
use landscape_core::error::Result;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;

pub const SCHEMA: &str = "lp-1";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Document {
    pub schema: String,
    pub experiment: String,
    pub config: ExperimentConfig,
    /// Hash of the canonical config JSON (the run's inputs).
    pub input_hash: String,
    pub results: serde_json::Value,
    pub pass: bool,
    /// Hash over schema, experiment, input hash, results and pass.
    pub content_hash: String,
    pub runtime_ms: u128,
    #[serde(skip)]
    pub csv: Option<String>,
}

fn sha256_hex(data: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(data.as_bytes());
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

impl Document {
    pub fn new(
        cfg: &ExperimentConfig,
        results: serde_json::Value,
        pass: bool,
        csv: Option<String>,
        runtime_ms: u128,
    ) -> Self {
        let input_hash = sha256_hex(&cfg.canonical_json());
        let payload = serde_json::json!({
            "schema": SCHEMA,
            "experiment": cfg.experiment,
            "input_hash": input_hash,
            "results": results,
            "pass": pass,
        });
        let content_hash = sha256_hex(&payload.to_string());
        Self {
            schema: SCHEMA.to_string(),
            experiment: cfg.experiment.clone(),
            config: cfg.clone(),
            input_hash,
            results,
            pass,
            content_hash,
            runtime_ms,
            csv,
        }
    }

    pub fn to_json_pretty(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent)?;
            }
        }
        std::fs::write(path, self.to_json_pretty()?)?;
        Ok(())
    }

    pub fn write_csv(&self, path: &Path) -> Result<bool> {
        match &self.csv {
            Some(rows) => {
                if let Some(parent) = path.parent() {
                    if !parent.as_os_str().is_empty() {
                        std::fs::create_dir_all(parent)?;
                    }
                }
                std::fs::write(path, rows)?;
                Ok(true)
            }
            None => Ok(false),
        }
    }
}
