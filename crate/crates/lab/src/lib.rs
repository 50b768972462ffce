//! Configuration, file formats, caching and the `abslit` command-line
//! driver on top of `abslit-core`.

pub mod cache;
pub mod commands;
pub mod config;
pub mod error;
pub mod formats;

use std::fs;
use std::path::Path;

use serde_json::json;

pub use commands::{execute, Artifacts};
pub use config::{Prepared, RunConfig};
pub use error::LabError;

/// Validates, solves, and writes the artifacts and `manifest.json` into
/// the configured output directory.
pub fn run(config: RunConfig) -> Result<Artifacts, LabError> {
    let prep = config.prepare()?;
    let out = execute(&prep)?;
    write_artifacts(&prep.config, &out, &prep.config.output)?;
    Ok(out)
}

pub fn manifest(config: &RunConfig, out: &Artifacts) -> serde_json::Value {
    let canonical = serde_json::to_string(config).expect("config serializes");
    let files: Vec<_> = out
        .files
        .iter()
        .map(|(name, content)| json!({"file": name, "bytes": content.len(), "sha256": cache::sha256_hex(content.as_bytes())}))
        .collect();
    let timings: serde_json::Map<String, serde_json::Value> =
        out.timings_ms.iter().map(|(k, v)| (k.clone(), json!(*v as u64))).collect();
    json!({
        "tool": "abslit",
        "version": env!("CARGO_PKG_VERSION"),
        "schema_version": config::SCHEMA_VERSION,
        "config_sha256": cache::sha256_hex(canonical.as_bytes()),
        "config": config,
        "artifacts": files,
        "timings_ms": timings,
    })
}

pub fn write_artifacts(config: &RunConfig, out: &Artifacts, dir: &Path) -> Result<(), LabError> {
    fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))?;
    for (name, content) in &out.files {
        let path = dir.join(name);
        fs::write(&path, content).map_err(|e| LabError::io(&path, e))?;
    }
    let path = dir.join("manifest.json");
    let text = format!("{}\n", serde_json::to_string_pretty(&manifest(config, out)).expect("manifest serializes"));
    fs::write(&path, text).map_err(|e| LabError::io(&path, e))
}
