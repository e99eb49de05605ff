//! Plain-text `key = value` configuration merged into the command line.
//!
//! Keys are long flag names. A key is applied only to subcommands that
//! define that flag and only when the flag was not given explicitly, so
//! flags always win and one file can serve every subcommand.

use anyhow::{bail, Context, Result};
use clap::Command;

pub fn parse_config(text: &str) -> Result<Vec<(String, String)>> {
    let mut out: Vec<(String, String)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("config line {}: expected 'key = value'", i + 1);
        };
        let key = key.trim().to_string();
        if key.is_empty() {
            bail!("config line {}: empty key", i + 1);
        }
        if out.iter().any(|(k, _)| *k == key) {
            bail!("config line {}: duplicate key '{key}'", i + 1);
        }
        out.push((key, value.trim().to_string()));
    }
    Ok(out)
}

/// Value of `--config` in `argv`, if present.
pub fn config_path(argv: &[String]) -> Option<String> {
    argv.iter().enumerate().find_map(|(i, a)| {
        if a == "--config" {
            argv.get(i + 1).cloned()
        } else {
            a.strip_prefix("--config=").map(str::to_string)
        }
    })
}

fn given(argv: &[String], long: &str) -> bool {
    let flag = format!("--{long}");
    let prefix = format!("--{long}=");
    argv.iter().any(|a| *a == flag || a.starts_with(&prefix))
}

/// Inserts `--key value` for every config entry the selected subcommand
/// accepts and the user did not pass. Returns the new argv.
pub fn inject(argv: &[String], config: &[(String, String)], root: &Command) -> Result<Vec<String>> {
    let mut cmd = root;
    let mut insert_at = None;
    let mut skip_next = false;
    for (i, tok) in argv.iter().enumerate().skip(1) {
        if skip_next {
            skip_next = false;
            continue;
        }
        if tok == "--config" {
            skip_next = true;
            continue;
        }
        if tok.starts_with('-') {
            continue;
        }
        match cmd.find_subcommand(tok) {
            Some(sub) => {
                cmd = sub;
                insert_at = Some(i + 1);
            }
            None => break,
        }
    }
    let Some(at) = insert_at else {
        return Ok(argv.to_vec());
    };

    let mut extra = Vec::new();
    for (key, value) in config {
        let Some(arg) = cmd.get_arguments().find(|a| a.get_long() == Some(key.as_str())) else {
            log::debug!("config key '{key}' does not apply to '{}'", cmd.get_name());
            continue;
        };
        if key == "config" || given(argv, key) {
            continue;
        }
        if arg.get_action().takes_values() {
            extra.push(format!("--{key}"));
            extra.push(value.clone());
        } else {
            match value.as_str() {
                "true" => extra.push(format!("--{key}")),
                "false" => {}
                other => bail!("config key '{key}' is a switch; expected true or false, got '{other}'"),
            }
        }
    }
    let mut out = argv[..at].to_vec();
    out.extend(extra);
    out.extend_from_slice(&argv[at..]);
    Ok(out)
}

/// Reads `--config` (if any) and merges it into `argv`.
pub fn merge(argv: Vec<String>, root: &Command) -> Result<Vec<String>> {
    let Some(path) = config_path(&argv) else {
        return Ok(argv);
    };
    let text = std::fs::read_to_string(&path).with_context(|| format!("reading config {path}"))?;
    let config = parse_config(&text).with_context(|| format!("in config {path}"))?;
    inject(&argv, &config, root)
}

/// `argv` without the program name and any `--config` flag, used as the
/// canonical description of a run.
pub fn effective_args(argv: &[String]) -> Vec<String> {
    let mut out = Vec::new();
    let mut it = argv.iter().skip(1);
    while let Some(a) = it.next() {
        if a == "--config" {
            it.next();
        } else if !a.starts_with("--config=") {
            out.push(a.clone());
        }
    }
    out
}
