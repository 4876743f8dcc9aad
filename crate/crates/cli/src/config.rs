//! `key=value` experiment files.
//!
//! Each entry becomes `--key value` inserted right after the subcommand, so
//! clap validates it like any flag (unknown keys are usage errors) and flags
//! given on the command line override it.

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use crate::error::CliError;

/// Parse config text into flag tokens.
pub fn config_tokens(text: &str) -> Result<Vec<OsString>, CliError> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected key=value", lineno + 1)))?;
        let key = key.trim().trim_start_matches("--");
        let value = value.trim();
        if key.is_empty() || key.contains(char::is_whitespace) {
            return Err(CliError::Usage(format!("config line {}: bad key `{key}`", lineno + 1)));
        }
        if key == "config" {
            return Err(CliError::Usage(format!(
                "config line {}: config files cannot include other config files",
                lineno + 1
            )));
        }
        match value {
            "true" => out.push(format!("--{key}").into()),
            "false" => {}
            _ => {
                out.push(format!("--{key}").into());
                out.push(value.into());
            }
        }
    }
    Ok(out)
}

fn config_path(args: &[OsString]) -> Option<PathBuf> {
    let mut it = args.iter();
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

/// Splice the entries of `--config PATH` (if present) into `argv`.
pub fn expand(argv: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let Some(path) = config_path(&argv[1.min(argv.len())..]) else {
        return Ok(argv);
    };
    let text = fs::read_to_string(&path)
        .map_err(|e| CliError::Usage(format!("--config {}: {e}", path.display())))?;
    let tokens = config_tokens(&text)?;
    // argv[1] is the subcommand when one is given; otherwise let clap complain
    let at = match argv.get(1) {
        Some(a) if !a.to_string_lossy().starts_with('-') => 2,
        _ => return Ok(argv),
    };
    let mut out = argv[..at].to_vec();
    out.extend(tokens);
    out.extend_from_slice(&argv[at..]);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn tokens() {
        let t = config_tokens("# comment\nk = 3\n\nfamily=first\njson = true\nexact=false\n").unwrap();
        assert_eq!(t, os(&["--k", "3", "--family", "first", "--json"]));
        assert!(config_tokens("noequals").is_err());
        assert!(config_tokens("config = x").is_err());
    }

    #[test]
    fn splices_after_subcommand() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        fs::write(&path, "k = 2\n").unwrap();
        let argv = os(&["narrowlab", "lindex", "--config", path.to_str().unwrap(), "--k", "3"]);
        let out = expand(argv).unwrap();
        assert_eq!(
            out,
            os(&["narrowlab", "lindex", "--k", "2", "--config", path.to_str().unwrap(), "--k", "3"])
        );
    }
}
