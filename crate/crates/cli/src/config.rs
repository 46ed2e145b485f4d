//! Resolution of flag, config-file and default values, plus the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use golu_core::{Error, Precision};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    Error::Usage(msg.into()).into()
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Global {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub precision: Option<Precision>,
}

/// Subcommand options. Every field is optional until [`Options::fill_defaults`] runs.
pub trait Options: Serialize + DeserializeOwned + Default {
    fn fill_defaults(&mut self);
}

#[derive(Debug, Clone, Serialize)]
pub struct Resolved<T> {
    pub command: String,
    pub seed: u64,
    pub out: PathBuf,
    pub precision: Precision,
    pub options: T,
}

fn object(v: Value) -> Map<String, Value> {
    match v {
        Value::Object(m) => m,
        _ => Map::new(),
    }
}

/// Reads a config file. A previous run's `manifest.json` is also accepted.
fn read_config(path: &Path) -> Result<Map<String, Value>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| usage(format!("config {}: {e}", path.display())))?;
    let Value::Object(mut map) = value else {
        return Err(usage(format!("config {} is not a JSON object", path.display())));
    };
    if let Some(Value::Object(cfg)) = map.remove("config") {
        let mut flat = object(cfg.get("options").cloned().unwrap_or_default());
        for key in ["seed", "out", "precision"] {
            if let Some(v) = cfg.get(key) {
                flat.insert(key.into(), v.clone());
            }
        }
        return Ok(flat);
    }
    Ok(map)
}

/// Merges flags over the config file, then fills defaults.
pub fn resolve<T: Options>(
    command: &str,
    global: &Global,
    flags: &T,
    config: Option<&Path>,
) -> Result<Resolved<T>> {
    let allowed = object(serde_json::to_value(T::default())?);
    let mut merged = match config {
        Some(path) => read_config(path)?,
        None => Map::new(),
    };
    for key in merged.keys() {
        if !allowed.contains_key(key) && !matches!(key.as_str(), "seed" | "out" | "precision") {
            return Err(usage(format!("unknown config key '{key}' for {command}")));
        }
    }
    let mut overlay = object(serde_json::to_value(flags)?);
    overlay.extend(object(serde_json::to_value(global)?));
    for (k, v) in overlay {
        if !v.is_null() {
            merged.insert(k, v);
        }
    }
    let g: Global = serde_json::from_value(Value::Object(merged.clone()))
        .map_err(|e| usage(format!("config: {e}")))?;
    merged.retain(|k, _| allowed.contains_key(k));
    let mut options: T =
        serde_json::from_value(Value::Object(merged)).map_err(|e| usage(format!("config: {e}")))?;
    options.fill_defaults();
    Ok(Resolved {
        command: command.to_string(),
        seed: g.seed.unwrap_or(42),
        out: g.out.unwrap_or_else(|| PathBuf::from("runs").join(command)),
        precision: g.precision.unwrap_or(Precision::F64),
        options,
    })
}

impl<T> Resolved<T> {
    pub fn require_f64(&self) -> Result<()> {
        if self.precision != Precision::F64 {
            return Err(usage(format!("{} only runs in double precision", self.command)));
        }
        Ok(())
    }
}

/// Files produced by a run, written under the output directory.
#[derive(Debug, Default)]
pub struct Artifacts {
    files: Vec<(String, Vec<u8>)>,
}

impl Artifacts {
    pub fn text(&mut self, name: impl Into<String>, body: String) {
        self.files.push((name.into(), body.into_bytes()));
    }

    pub fn json<S: Serialize>(&mut self, name: impl Into<String>, value: &S) -> Result<()> {
        let mut body = serde_json::to_string_pretty(value)?;
        body.push('\n');
        self.text(name, body);
        Ok(())
    }

    pub fn bytes(&mut self, name: impl Into<String>, body: Vec<u8>) {
        self.files.push((name.into(), body));
    }

    pub fn names(&self) -> Vec<String> {
        self.files.iter().map(|(n, _)| n.clone()).collect()
    }

    pub fn write_all(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for (name, body) in &self.files {
            let path = dir.join(name);
            fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
        }
        Ok(())
    }
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a, T> {
    pub command: &'a str,
    pub config: &'a Resolved<T>,
    pub versions: Versions,
    pub threads: usize,
    pub artifacts: Vec<String>,
    pub passed: bool,
    pub wall_time_seconds: f64,
}

#[derive(Debug, Serialize)]
pub struct Versions {
    pub golu_lab: &'static str,
    pub golu_core: &'static str,
}

pub const VERSIONS: Versions = Versions { golu_lab: env!("CARGO_PKG_VERSION"), golu_core: golu_core::VERSION };
