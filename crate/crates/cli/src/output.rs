use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

/// Writes via a temporary file in the destination directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).with_context(|| format!("temp file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write_atomic(path, s.as_bytes())
}

/// `dir/name.json` -> `dir/name.<suffix>`
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "out".into());
    path.with_file_name(format!("{stem}.{suffix}"))
}

/// Result line printed on stdout by every successful command.
#[derive(Debug, Serialize)]
pub struct Done {
    pub status: &'static str,
    pub command: &'static str,
    pub artifacts: Vec<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary: Option<serde_json::Value>,
}

impl Done {
    pub fn new(command: &'static str, artifacts: Vec<PathBuf>) -> Self {
        Done { status: "ok", command, artifacts, summary: None }
    }

    pub fn with_summary(mut self, v: impl Serialize) -> Self {
        self.summary = serde_json::to_value(v).ok();
        self
    }
}

/// Machine-readable failure line for stderr.
pub fn error_line(kind: &str, message: &str) -> String {
    serde_json::json!({ "status": "error", "kind": kind, "message": message }).to_string()
}
