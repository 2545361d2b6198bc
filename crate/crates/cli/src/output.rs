use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::{Map, Value};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// Writes files into an output directory via temp file + rename.
pub struct OutDir {
    dir: PathBuf,
    timestamp: bool,
}

impl OutDir {
    pub fn create(dir: &Path, timestamp: bool) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|source| CliError::Write { path: dir.display().to_string(), source })?;
        Ok(OutDir { dir: dir.to_path_buf(), timestamp })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write_bytes(&self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let target = self.path(name);
        let tmp = self.dir.join(format!(".{name}.tmp-{}", std::process::id()));
        let err = |source| CliError::Write { path: target.display().to_string(), source };
        let mut f = fs::File::create(&tmp).map_err(err)?;
        f.write_all(bytes).map_err(err)?;
        f.sync_all().map_err(err)?;
        drop(f);
        fs::rename(&tmp, &target).map_err(err)?;
        log::info!("wrote {}", target.display());
        Ok(())
    }

    pub fn write_text(&self, name: &str, text: &str) -> Result<(), CliError> {
        self.write_bytes(name, text.as_bytes())
    }

    /// Pretty JSON with `schema_version` and, unless disabled, `generated_at`.
    pub fn write_json(&self, name: &str, value: Value) -> Result<(), CliError> {
        let mut obj = match value {
            Value::Object(m) => m,
            other => {
                let mut m = Map::new();
                m.insert("result".into(), other);
                m
            }
        };
        obj.insert("schema_version".into(), Value::from(SCHEMA_VERSION));
        if self.timestamp {
            obj.insert("generated_at".into(), Value::from(chrono::Utc::now().to_rfc3339()));
        }
        let mut text = serde_json::to_string_pretty(&Value::Object(obj)).expect("JSON values serialize");
        text.push('\n');
        self.write_text(name, &text)
    }

    /// Pretty JSON exactly as given, for files that are read back as inputs.
    pub fn write_plain_json(&self, name: &str, value: &Value) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).expect("JSON values serialize");
        text.push('\n');
        self.write_text(name, &text)
    }

    /// Serialize `write` into a buffer and store it atomically.
    pub fn write_with<F>(&self, name: &str, write: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut Vec<u8>) -> bankruin::Result<()>,
    {
        let mut buf = Vec::new();
        write(&mut buf).map_err(|source| CliError::Data { context: format!("serializing {name}"), source })?;
        self.write_bytes(name, &buf)
    }
}

pub fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable output")
}
