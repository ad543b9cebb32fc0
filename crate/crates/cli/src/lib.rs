//! Pipelines behind the `dicert` command.

pub mod args;
pub mod commands;
pub mod error;

use std::ffi::OsString;

pub use error::CliError;

/// Replaces `--config FILE` with the flags named by the keys of the JSON object in FILE.
/// Flags given on the command line after it take precedence.
pub fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let Some(pos) = args.iter().position(|a| a == "--config") else {
        return Ok(args);
    };
    let path = args.get(pos + 1).ok_or_else(|| CliError::Config("--config needs a file".into()))?;
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.to_string_lossy())))?;
    let obj: serde_json::Map<String, serde_json::Value> =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.to_string_lossy())))?;
    let mut flags = Vec::new();
    for (k, v) in obj {
        if k == "command" {
            continue;
        }
        let flag = OsString::from(format!("--{}", k.replace('_', "-")));
        match v {
            serde_json::Value::Null => {}
            serde_json::Value::Bool(true) => flags.push(flag),
            serde_json::Value::Bool(false) => {}
            serde_json::Value::String(s) => flags.extend([flag, s.into()]),
            serde_json::Value::Number(n) => flags.extend([flag, n.to_string().into()]),
            other => return Err(CliError::Config(format!("unsupported value for {k}: {other}"))),
        }
    }
    let mut out: Vec<OsString> = args[..pos].to_vec();
    out.extend(flags);
    out.extend(args[pos + 2..].iter().cloned());
    Ok(out)
}

/// Sizes the global thread pool from `DICERT_THREADS`.
pub fn init_threads() -> Result<(), CliError> {
    if let Ok(v) = std::env::var("DICERT_THREADS") {
        let n: usize = v.parse().map_err(|_| CliError::Config(format!("DICERT_THREADS={v:?} is not a count")))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Config(e.to_string()))?;
    }
    Ok(())
}
