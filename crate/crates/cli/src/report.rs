//! Report assembly and emission.

use std::io::Write;

use serde::Serialize;
use serde_json::Value;

use crate::config::{Format, Params};
use crate::error::CliError;

pub const TOOL: &str = "entropy-lab";

/// What a command produced, before formatting.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub result: Value,
    pub bounds: Value,
    /// Table rows rendered as CSV, for commands that produce tables.
    pub csv: Option<Vec<u8>>,
    /// A check the command asserts failed; the report is still written.
    pub failure: Option<String>,
}

impl Outcome {
    pub fn single(result: impl Serialize, bounds: Value) -> Result<Self, CliError> {
        Ok(Self {
            result: to_value(result)?,
            bounds,
            csv: None,
            failure: None,
        })
    }

    pub fn table<R: Serialize>(rows: &[R], result: Value, bounds: Value) -> Result<Self, CliError> {
        Ok(Self {
            result,
            bounds,
            csv: Some(to_csv(rows)?),
            failure: None,
        })
    }
}

pub fn to_value(x: impl Serialize) -> Result<Value, CliError> {
    serde_json::to_value(x).map_err(|e| CliError::Numeric(format!("unserializable result: {e}")))
}

pub fn to_csv<R: Serialize>(rows: &[R]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)
            .map_err(|e| CliError::Numeric(format!("csv: {e}")))?;
    }
    w.into_inner()
        .map_err(|e| CliError::Numeric(format!("csv: {e}")))
}

#[derive(Serialize)]
struct Report<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    config: &'a Params,
    result: &'a Value,
    bounds: &'a Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    runtime_ms: Option<f64>,
}

/// Renders the outcome in the requested format.
pub fn render(
    command: &str,
    config: &Params,
    outcome: &Outcome,
    runtime_ms: Option<f64>,
) -> Result<Vec<u8>, CliError> {
    let format = config.format.unwrap_or(if outcome.csv.is_some() {
        Format::Csv
    } else {
        Format::Json
    });
    match format {
        Format::Csv => outcome.csv.clone().ok_or_else(|| {
            CliError::Validation(format!("{command} produces a single result; use --format json"))
        }),
        Format::Json => {
            let report = Report {
                tool: TOOL,
                version: env!("CARGO_PKG_VERSION"),
                command,
                config,
                result: &outcome.result,
                bounds: &outcome.bounds,
                runtime_ms,
            };
            let mut bytes = serde_json::to_vec_pretty(&report)
                .map_err(|e| CliError::Numeric(format!("json: {e}")))?;
            bytes.push(b'\n');
            Ok(bytes)
        }
    }
}

pub fn emit(bytes: &[u8], config: &Params) -> Result<(), CliError> {
    match &config.out {
        Some(path) => std::fs::write(path, bytes)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[derive(Serialize)]
    struct Row {
        a: f64,
        b: u32,
    }

    #[test]
    fn csv_header_and_rows() {
        let bytes = to_csv(&[Row { a: 0.5, b: 1 }, Row { a: 0.25, b: 2 }]).unwrap();
        assert_eq!(String::from_utf8(bytes).unwrap(), "a,b\n0.5,1\n0.25,2\n");
    }

    #[test]
    fn csv_rejected_for_single_results() {
        let o = Outcome::single(json!({"x": 1}), json!({})).unwrap();
        let cfg = Params {
            format: Some(Format::Csv),
            ..Params::default()
        };
        assert!(matches!(render("qsolve", &cfg, &o, None), Err(CliError::Validation(_))));
        let text = render("qsolve", &Params::default(), &o, None).unwrap();
        let v: Value = serde_json::from_slice(&text).unwrap();
        assert_eq!(v["tool"], TOOL);
        assert!(v.get("runtime_ms").is_none());
    }
}
