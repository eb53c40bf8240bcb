//! Deterministic output files: CSV tables with `#` metadata lines and JSON
//! summaries. Every file embeds the resolved config hash; nothing
//! time-dependent is written, so identical (config, seed) runs produce
//! byte-identical files at any parallelism.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use sievedim::dimension::PointCloud;

use crate::config::ExperimentConfig;
use crate::CliError;

pub struct OutputWriter {
    dir: PathBuf,
    hash: String,
    version: &'static str,
}

impl OutputWriter {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self, CliError> {
        let dir = cfg.out_dir();
        fs::create_dir_all(&dir)
            .map_err(|e| CliError::Internal(anyhow::anyhow!("creating {}: {e}", dir.display())))?;
        Ok(Self { dir, hash: cfg.hash(), version: env!("CARGO_PKG_VERSION") })
    }

    pub fn csv<I>(&self, name: &str, header: &str, rows: I) -> Result<PathBuf, CliError>
    where
        I: IntoIterator<Item = String>,
    {
        let path = self.dir.join(name);
        let mut out = String::new();
        out.push_str(&format!("# config_hash={}\n", self.hash));
        out.push_str(&format!("# tool_version={}\n", self.version));
        out.push_str(header);
        out.push('\n');
        for row in rows {
            out.push_str(&row);
            out.push('\n');
        }
        write_atomic(&path, out.as_bytes())?;
        Ok(path)
    }

    /// JSON summary with the config hash embedded as a field; keys are
    /// emitted sorted, so serialization is deterministic.
    pub fn json(&self, name: &str, mut value: Value) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        if let Value::Object(map) = &mut value {
            map.insert("config_hash".into(), json!(self.hash));
            map.insert("tool_version".into(), json!(self.version));
        }
        let text = serde_json::to_string_pretty(&value)
            .map_err(|e| CliError::Internal(anyhow::anyhow!("serializing {name}: {e}")))?;
        write_atomic(&path, format!("{text}\n").as_bytes())?;
        Ok(path)
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let mut file = fs::File::create(path)
        .map_err(|e| CliError::Internal(anyhow::anyhow!("creating {}: {e}", path.display())))?;
    file.write_all(bytes)
        .map_err(|e| CliError::Internal(anyhow::anyhow!("writing {}: {e}", path.display())))?;
    Ok(())
}

/// Cloud CSV: `#` metadata lines, a header naming 1-3 of `x,p,h`, one row of
/// floats per point.
pub fn cloud_rows(cloud: &PointCloud) -> (String, Vec<String>) {
    let header = match cloud.dim {
        1 => "x",
        2 => "x,p",
        _ => "x,p,h",
    };
    let rows = cloud
        .points
        .iter()
        .map(|pt| {
            pt.iter()
                .take(cloud.dim)
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join(",")
        })
        .collect();
    (header.to_string(), rows)
}

pub fn read_cloud(path: &Path) -> Result<PointCloud, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read cloud {}: {e}", path.display())))?;
    let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| CliError::Input(format!("cloud {} is empty", path.display())))?;
    let dim = match header.trim() {
        "x" => 1,
        "x,p" => 2,
        "x,p,h" => 3,
        other => {
            return Err(CliError::Input(format!(
                "cloud header must be one of x | x,p | x,p,h; got {other:?}"
            )))
        }
    };
    let mut points = Vec::new();
    for (i, line) in lines.enumerate() {
        let mut pt = [0.0f64; 3];
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != dim {
            return Err(CliError::Input(format!(
                "cloud row {} has {} fields, expected {dim}",
                i + 1,
                fields.len()
            )));
        }
        for (a, f) in fields.iter().enumerate() {
            pt[a] = f.trim().parse().map_err(|e| {
                CliError::Input(format!("cloud row {}: bad number {f:?}: {e}", i + 1))
            })?;
        }
        points.push(pt);
    }
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    PointCloud::new(dim, points, format!("cloud file {name}"))
        .map_err(|e| CliError::Input(e.to_string()))
}
