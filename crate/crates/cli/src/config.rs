//! TOML defaults. Values are spliced into the argument list ahead of the
//! user's own flags, which therefore win.

use std::ffi::OsString;
use std::path::Path;

use anyhow::{bail, Context, Result};

const GLOBAL_WITH_VALUE: [&str; 5] = ["--seed", "--jobs", "--mode", "--out", "--config"];

fn flag(key: &str) -> String {
    format!("--{}", key.replace('_', "-"))
}

fn push_value(out: &mut Vec<OsString>, key: &str, v: &toml::Value) -> Result<()> {
    match v {
        toml::Value::Boolean(true) => out.push(flag(key).into()),
        toml::Value::Boolean(false) => {}
        toml::Value::String(s) => out.extend([flag(key).into(), s.into()]),
        toml::Value::Integer(i) => out.extend([flag(key).into(), i.to_string().into()]),
        toml::Value::Float(f) => out.extend([flag(key).into(), f.to_string().into()]),
        toml::Value::Array(items) => {
            for it in items {
                push_value(out, key, it)?;
            }
        }
        other => bail!("config key {key}: unsupported value {other}"),
    }
    Ok(())
}

fn config_path(args: &[OsString]) -> Option<OsString> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(v) = s.strip_prefix("--config=") {
            return Some(v.into());
        }
    }
    None
}

/// Index of the subcommand name in `args` (after the program name).
fn subcommand_index(args: &[OsString]) -> Option<usize> {
    let mut i = 1;
    while i < args.len() {
        let s = args[i].to_string_lossy();
        if !s.starts_with('-') {
            return Some(i);
        }
        i += if !s.contains('=') && GLOBAL_WITH_VALUE.contains(&s.as_ref()) { 2 } else { 1 };
    }
    None
}

/// Returns `args` with the config file's values inserted.
pub fn apply(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let Some(path) = config_path(&args) else { return Ok(args) };
    let text = std::fs::read_to_string(Path::new(&path)).with_context(|| format!("reading config {path:?}"))?;
    let table: toml::Table = text.parse().with_context(|| format!("parsing config {path:?}"))?;
    let sub = subcommand_index(&args);
    let sub_name = sub.map(|i| args[i].to_string_lossy().into_owned());
    let mut globals = Vec::new();
    let mut section = Vec::new();
    for (k, v) in &table {
        match v {
            toml::Value::Table(t) => {
                if Some(k.as_str()) == sub_name.as_deref() {
                    for (k, v) in t {
                        push_value(&mut section, k, v)?;
                    }
                }
            }
            _ if k == "config" => {}
            _ => push_value(&mut globals, k, v)?,
        }
    }
    let mut out = vec![args[0].clone()];
    out.extend(globals);
    match sub {
        Some(i) => {
            out.extend_from_slice(&args[1..=i]);
            out.extend(section);
            out.extend_from_slice(&args[i + 1..]);
        }
        None => out.extend_from_slice(&args[1..]),
    }
    Ok(out)
}
