//! Splicing a JSON run-configuration file into the command line.
//!
//! The file is a flat object whose keys are long option names (`_` and `-`
//! are interchangeable) plus an optional `"subcommand"`. Its options are
//! inserted right after the subcommand, ahead of the user's own options, so
//! anything given on the command line wins.

use std::ffi::OsString;
use std::path::Path;

use serde_json::Value;

use crate::error::{CliError, CliResult};

pub const SUBCOMMANDS: [&str; 11] =
    ["simulate", "exact", "mc", "blocks", "percolate", "formulas", "q0", "theta", "drift", "chains", "preset"];

/// Options taking a value that may precede the subcommand.
const GLOBAL_VALUED: [&str; 2] = ["--threads", "--config"];

fn take_config(args: &mut Vec<OsString>) -> CliResult<Option<OsString>> {
    let mut i = 1;
    while i < args.len() {
        let a = args[i].to_string_lossy().into_owned();
        if a == "--" {
            break;
        }
        if a == "--config" {
            if i + 1 >= args.len() {
                return Err(CliError::Usage("--config needs a file".into()));
            }
            let path = args.remove(i + 1);
            args.remove(i);
            return Ok(Some(path));
        }
        if let Some(p) = a.strip_prefix("--config=") {
            let path = OsString::from(p);
            args.remove(i);
            return Ok(Some(path));
        }
        i += 1;
    }
    Ok(None)
}

fn subcommand_position(args: &[OsString]) -> Option<usize> {
    let mut i = 1;
    while i < args.len() {
        let a = args[i].to_string_lossy();
        if GLOBAL_VALUED.contains(&a.as_ref()) {
            i += 2;
            continue;
        }
        if SUBCOMMANDS.contains(&a.as_ref()) {
            return Some(i);
        }
        i += 1;
    }
    None
}

fn scalar(key: &str, v: &Value) -> CliResult<String> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        other => Err(CliError::Config(format!("unsupported value for `{key}`: {other}"))),
    }
}

/// Command-line tokens equivalent to a config object.
pub fn config_tokens(obj: &serde_json::Map<String, Value>) -> CliResult<(Option<String>, Vec<OsString>)> {
    let mut sub = None;
    let mut positional = None;
    let mut out = Vec::new();
    for (key, v) in obj {
        match key.as_str() {
            "subcommand" => {
                sub = Some(scalar(key, v)?);
                continue;
            }
            // the preset name is positional
            "name" | "preset" => {
                positional = Some(scalar(key, v)?);
                continue;
            }
            _ => {}
        }
        let flag = format!("--{}", key.replace('_', "-"));
        match v {
            Value::Null | Value::Bool(false) => {}
            Value::Bool(true) => out.push(flag.into()),
            Value::Array(items) => {
                let joined = items.iter().map(|x| scalar(key, x)).collect::<CliResult<Vec<_>>>()?.join(",");
                out.push(flag.into());
                out.push(joined.into());
            }
            Value::Object(_) => return Err(CliError::Config(format!("nested object for `{key}`"))),
            other => {
                out.push(flag.into());
                out.push(scalar(key, other)?.into());
            }
        }
    }
    if let Some(p) = positional {
        out.insert(0, p.into());
    }
    Ok((sub, out))
}

fn read_config(path: &Path) -> CliResult<serde_json::Map<String, Value>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    match serde_json::from_str::<Value>(&text)? {
        Value::Object(m) => Ok(m),
        _ => Err(CliError::Config("top level must be a JSON object".into())),
    }
}

/// Argument vector with any `--config FILE` expanded in place.
pub fn expand(mut args: Vec<OsString>) -> CliResult<Vec<OsString>> {
    let Some(path) = take_config(&mut args)? else {
        return Ok(args);
    };
    let (sub, tokens) = config_tokens(&read_config(Path::new(&path))?)?;
    match subcommand_position(&args) {
        Some(pos) => {
            let given = args[pos].to_string_lossy().into_owned();
            if let Some(s) = sub.filter(|s| *s != given) {
                return Err(CliError::Config(format!("file is for `{s}` but `{given}` was requested")));
            }
            // a positional already on the command line takes precedence
            let skip_positional = given == "preset"
                && args.get(pos + 1).is_some_and(|a| !a.to_string_lossy().starts_with('-'))
                && tokens.first().is_some_and(|t| !t.to_string_lossy().starts_with('-'));
            let tokens = if skip_positional { tokens[1..].to_vec() } else { tokens };
            let tail = args.split_off(pos + 1);
            args.extend(tokens);
            args.extend(tail);
        }
        None => {
            let s = sub.ok_or_else(|| CliError::Config("no subcommand on the command line or in the file".into()))?;
            args.push(s.into());
            args.extend(tokens);
        }
    }
    Ok(args)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn tokens_from_object() {
        let v: Value = serde_json::json!({"graph": "cycle:6", "p": 0.3, "event_log": true, "thetas": [0.5, 0.9], "quiet": false});
        let (sub, t) = config_tokens(v.as_object().unwrap()).unwrap();
        assert!(sub.is_none());
        assert_eq!(t, os(&["--event-log", "--graph", "cycle:6", "--p", "0.3", "--thetas", "0.5,0.9"]));
    }

    #[test]
    fn file_options_precede_command_line_ones() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        std::fs::write(&path, r#"{"subcommand": "exact", "graph": "cycle:6", "p": 0.3}"#).unwrap();
        let p = path.to_str().unwrap();
        let a = expand(os(&["bslab", "--config", p, "exact", "--p", "0.5"])).unwrap();
        assert_eq!(a, os(&["bslab", "exact", "--graph", "cycle:6", "--p", "0.3", "--p", "0.5"]));
        let b = expand(os(&["bslab", "--threads", "2", &format!("--config={p}")])).unwrap();
        assert_eq!(b, os(&["bslab", "--threads", "2", "exact", "--graph", "cycle:6", "--p", "0.3"]));
        assert!(expand(os(&["bslab", "--config", p, "mc"])).is_err());
    }
}
