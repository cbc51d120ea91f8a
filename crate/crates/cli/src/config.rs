//! Flat `key = value` run configs. Keys are long flag names of the
//! subcommand; each line becomes `--key value` ahead of the real arguments,
//! skipped when the same flag is also given on the command line.

use std::ffi::OsString;
use std::path::Path;

use clap::{ArgAction, CommandFactory};

use crate::Cli;

/// Expand `--config` for the subcommand in `argv`. Errors are rendered
/// `path:line: message`.
pub fn expand(argv: Vec<OsString>) -> Result<Vec<OsString>, String> {
    let strings: Vec<String> = argv.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let Some(sub_pos) = strings.iter().skip(1).position(|a| !a.starts_with('-')).map(|p| p + 1) else {
        return Ok(argv);
    };
    let mut config_path = None;
    for (i, a) in strings.iter().enumerate().skip(sub_pos + 1) {
        if a == "--" {
            break;
        }
        if a == "--config" {
            config_path = strings.get(i + 1).cloned();
        } else if let Some(p) = a.strip_prefix("--config=") {
            config_path = Some(p.to_string());
        }
    }
    let Some(path) = config_path else {
        return Ok(argv);
    };
    let cli = Cli::command();
    let Some(sub) = cli.find_subcommand(&strings[sub_pos]) else {
        return Ok(argv);
    };
    let given = |key: &str| {
        strings[sub_pos + 1..]
            .iter()
            .any(|a| a == &format!("--{key}") || a.starts_with(&format!("--{key}=")))
    };
    let text = std::fs::read_to_string(&path).map_err(|e| format!("{path}: cannot read config: {e}"))?;
    let mut injected: Vec<OsString> = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let at = |msg: String| format!("{}:{}: {msg}", Path::new(&path).display(), n + 1);
        let (key, value) = line
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or_else(|| at(format!("expected 'key = value', got '{line}'")))?;
        let arg = sub
            .get_arguments()
            .find(|a| a.get_long() == Some(key) && key != "config" && key != "help")
            .ok_or_else(|| at(format!("unknown key '{key}' for '{}'", sub.get_name())))?;
        if given(key) {
            continue;
        }
        if matches!(arg.get_action(), ArgAction::SetTrue) {
            match value {
                "true" | "yes" | "1" => injected.push(format!("--{key}").into()),
                "false" | "no" | "0" => {}
                _ => return Err(at(format!("'{key}' takes true or false, got '{value}'"))),
            }
        } else {
            injected.push(format!("--{key}={value}").into());
        }
    }
    let mut out = argv;
    out.splice(sub_pos + 1..sub_pos + 1, injected);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn args(list: &[&str]) -> Vec<OsString> {
        list.iter().map(OsString::from).collect()
    }

    #[test]
    fn cli_flags_win() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(
            f,
            "# defaults\nvs = 2kV\nduration = 5s\nvary = RS=1Meg:2Meg:2\nfreeze-mechanics = true"
        )
        .unwrap();
        let path = f.path().to_str().unwrap();
        let out = expand(args(&["elastonet", "sweep", "--config", path, "--vs", "3kV"])).unwrap();
        let out: Vec<String> = out.into_iter().map(|a| a.into_string().unwrap()).collect();
        assert_eq!(
            out[2..6],
            [
                "--duration=5s",
                "--vary=RS=1Meg:2Meg:2",
                "--freeze-mechanics",
                "--config"
            ]
        );
        assert!(!out.iter().any(|a| a == "--vs=2kV"));
    }

    #[test]
    fn unknown_key_is_reported_with_line() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "vs = 2kV\n\ncolour = red").unwrap();
        let path = f.path().to_str().unwrap().to_string();
        let err = expand(args(&["elastonet", "simulate", "--config", &path])).unwrap_err();
        assert!(err.ends_with(":3: unknown key 'colour' for 'simulate'"), "{err}");
    }
}
