//! `key = value` text files: synthetic-corpus specs and CLI config files.
//!
//! Blank lines and lines starting with `#` are ignored. Keys may use `-` or
//! `_` interchangeably.

use std::ffi::OsString;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub line: usize,
    /// Normalized to `-` separators.
    pub key: String,
    pub value: String,
}

pub fn parse_key_values(text: &str) -> Result<Vec<Entry>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Spec {
            line: i + 1,
            message: format!("expected `key = value`, found {line:?}"),
        })?;
        let key = key.trim().replace('_', "-");
        if key.is_empty() {
            return Err(Error::Spec {
                line: i + 1,
                message: "empty key".into(),
            });
        }
        out.push(Entry {
            line: i + 1,
            key,
            value: value.trim().to_string(),
        });
    }
    Ok(out)
}

pub fn read_key_values(path: &Path) -> Result<Vec<Entry>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_key_values(&text)
}

/// Parses `entry.value` as `T`, naming the key and line on failure.
pub fn parse_value<T: std::str::FromStr>(entry: &Entry) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    entry.value.parse().map_err(|e: T::Err| Error::Spec {
        line: entry.line,
        message: format!("{}: {e}", entry.key),
    })
}

/// Turns config entries into command-line flags: `k = v` becomes
/// `--k v`, `k = true` becomes `--k`, and `k = false` is dropped.
pub fn entries_to_args(entries: &[Entry]) -> Vec<OsString> {
    let mut args = Vec::new();
    for e in entries {
        match e.value.as_str() {
            "true" => args.push(format!("--{}", e.key).into()),
            "false" => {}
            v => {
                args.push(format!("--{}", e.key).into());
                args.push(v.into());
            }
        }
    }
    args
}

/// Removes every `--config FILE` (or `--config=FILE`) from `args` and splices
/// the file's flags in right after the subcommand name, so flags given on
/// the command line come later and override them.
pub fn expand_config_args(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let mut rest = Vec::with_capacity(args.len());
    let mut files = Vec::new();
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            let path = it
                .next()
                .ok_or_else(|| Error::InvalidArgument("--config needs a file".into()))?;
            files.push(path);
        } else if let Some(path) = s.strip_prefix("--config=") {
            files.push(path.into());
        } else {
            rest.push(a);
        }
    }
    if files.is_empty() {
        return Ok(rest);
    }
    let mut injected = Vec::new();
    for f in &files {
        injected.extend(entries_to_args(&read_key_values(Path::new(f))?));
    }
    // argv[0], then the first non-flag argument is the subcommand
    let sub = rest
        .iter()
        .skip(1)
        .position(|a| !a.to_string_lossy().starts_with('-'))
        .map(|p| p + 2)
        .unwrap_or(rest.len());
    let tail = rest.split_off(sub);
    rest.extend(injected);
    rest.extend(tail);
    Ok(rest)
}
