//! Flat `key = value` config files merged under the command line.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;

use clap::CommandFactory;

use crate::error::CliError;
use crate::Cli;

fn parse_config(text: &str, path: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(CliError::usage(format!("{path}:{}: expected `key = value`", no + 1)));
        };
        let key = k.trim().replace('_', "-");
        if out.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(CliError::usage(format!("{path}:{}: duplicate key `{key}`", no + 1)));
        }
    }
    Ok(out)
}

fn flag_value<'a>(args: &'a [String], name: &str) -> Option<&'a str> {
    let long = format!("--{name}");
    let eq = format!("--{name}=");
    args.iter().enumerate().find_map(|(i, a)| {
        if a == &long {
            args.get(i + 1).map(String::as_str)
        } else {
            a.strip_prefix(&eq)
        }
    })
}

fn has_flag(args: &[String], name: &str) -> bool {
    let long = format!("--{name}");
    let eq = format!("--{name}=");
    args.iter().any(|a| a == &long || a.starts_with(&eq))
}

/// Appends config-file settings that the command line does not already
/// set. Keys are long flag names of the chosen subcommand.
pub fn merge_config(argv: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let args: Vec<String> = argv.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let Some(path) = flag_value(&args, "config") else {
        return Ok(argv);
    };
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::data(format!("cannot read config {path}: {e}")))?;
    let entries = parse_config(&text, path)?;
    let cmd = Cli::command();
    let Some(sub) = args.get(1).and_then(|s| cmd.find_subcommand(s)) else {
        // let clap report the missing or unknown subcommand
        return Ok(argv);
    };
    let mut merged = argv.clone();
    for (key, value) in entries {
        let arg = sub
            .get_arguments()
            .find(|a| a.get_long() == Some(key.as_str()))
            .ok_or_else(|| {
                CliError::usage(format!("{path}: `{key}` is not an option of `{}`", sub.get_name()))
            })?;
        if key == "config" || has_flag(&args, &key) {
            continue;
        }
        let is_switch = matches!(arg.get_action(), clap::ArgAction::SetTrue);
        if is_switch {
            match value.as_str() {
                "true" | "yes" | "1" => merged.push(format!("--{key}").into()),
                "false" | "no" | "0" => {}
                _ => return Err(CliError::usage(format!("{path}: `{key}` expects true or false"))),
            }
        } else {
            merged.push(format!("--{key}={value}").into());
        }
    }
    Ok(merged)
}
