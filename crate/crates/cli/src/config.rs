//! Flat `key = value` experiment files for `--config`.
//!
//! The file's entries become ordinary flags placed right after the
//! subcommand, ahead of everything typed on the command line. Every argument
//! overrides itself, so a flag given on the command line wins over the file.

use std::fs;

use phisub::{Error, Result};

/// Parses a config file body into `--key value` tokens.
pub fn parse_config(text: &str) -> Result<Vec<String>> {
    let mut tokens = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("config line {}: expected key = value, got {line:?}", lineno + 1)))?;
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        let value = value.trim();
        if key.is_empty() {
            return Err(Error::Config(format!("config line {}: empty key", lineno + 1)));
        }
        if key == "config" {
            return Err(Error::Config("config files cannot include other config files".into()));
        }
        match value {
            "true" => tokens.push(format!("--{key}")),
            "false" => {}
            v => {
                tokens.push(format!("--{key}"));
                tokens.push(v.to_string());
            }
        }
    }
    Ok(tokens)
}

/// Finds `--config PATH` / `--config=PATH` in `argv`.
fn config_path(argv: &[String]) -> Result<Option<String>> {
    let mut found = None;
    let mut it = argv.iter().skip(1);
    while let Some(arg) = it.next() {
        if arg == "--" {
            break;
        }
        let path = if arg == "--config" {
            Some(it.next().ok_or_else(|| Error::Config("--config needs a file path".into()))?.clone())
        } else {
            arg.strip_prefix("--config=").map(str::to_string)
        };
        if path.is_some() {
            found = path;
        }
    }
    Ok(found)
}

/// Returns `argv` with the config file's flags spliced in after the
/// subcommand. Without `--config` the input is returned unchanged.
pub fn expand_argv(argv: &[String]) -> Result<Vec<String>> {
    let Some(path) = config_path(argv)? else {
        return Ok(argv.to_vec());
    };
    let text = fs::read_to_string(&path).map_err(|e| Error::Io(format!("cannot read config {path}: {e}")))?;
    let injected = parse_config(&text)?;
    // The subcommand is the first argument that is not a global option.
    let mut split = None;
    let mut i = 1;
    while i < argv.len() {
        let a = &argv[i];
        if a == "--config" || a == "--precision" || a == "--out" {
            i += 2;
            continue;
        }
        if !a.starts_with('-') {
            split = Some(i + 1);
            break;
        }
        i += 1;
    }
    let Some(split) = split else {
        return Ok(argv.to_vec());
    };
    let mut out = argv[..split].to_vec();
    out.extend(injected);
    out.extend_from_slice(&argv[split..]);
    Ok(out)
}
