//! `key=value` defaults merged under the command line.

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use crate::args::{COMMANDS, SWITCHES};

/// Finds `--config` in raw arguments without a full parse.
fn config_path(argv: &[OsString]) -> Option<PathBuf> {
    let mut it = argv.iter().skip(1);
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Some(PathBuf::from(p));
        }
    }
    None
}

/// Turns file lines into flags. Blank lines and `#` comments are ignored.
pub fn parse(text: &str) -> Result<Vec<OsString>, String> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("config line {}: expected key=value, got `{line}`", i + 1))?;
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        if key.is_empty() {
            return Err(format!("config line {}: empty key", i + 1));
        }
        if key == "config" {
            return Err(format!("config line {}: nested config files are not supported", i + 1));
        }
        if SWITCHES.contains(&key.as_str()) {
            match value {
                "true" | "1" | "yes" => out.push(format!("--{key}").into()),
                "false" | "0" | "no" => {}
                _ => return Err(format!("config line {}: `{key}` expects true or false", i + 1)),
            }
        } else {
            out.push(format!("--{key}").into());
            out.push(value.into());
        }
    }
    Ok(out)
}

/// Inserts config-file flags right after the subcommand so that anything on
/// the real command line, which comes later, overrides them.
pub fn merge(argv: Vec<OsString>) -> Result<(Vec<OsString>, Option<PathBuf>), String> {
    let Some(path) = config_path(&argv) else {
        return Ok((argv, None));
    };
    let text = fs::read_to_string(&path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    let extra = parse(&text)?;
    let Some(pos) = argv.iter().position(|a| COMMANDS.iter().any(|c| a == c)) else {
        return Ok((argv, Some(path)));
    };
    let mut merged = argv[..=pos].to_vec();
    merged.extend(extra);
    merged.extend_from_slice(&argv[pos + 1..]);
    Ok((merged, Some(path)))
}
