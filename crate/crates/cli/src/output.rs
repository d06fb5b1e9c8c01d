use std::io::Write;
use std::path::Path;

use serde_json::{Map, Value};
use transprod::ConvergenceReport;

use crate::args::Format;
use crate::error::CliError;

/// What a command produced. `negative` is set when the computation ran but
/// a verdict came out negative; it selects exit code 2.
pub struct Outcome {
    pub report: Map<String, Value>,
    pub table: Option<ConvergenceReport>,
    pub negative: bool,
}

impl Outcome {
    pub fn new(report: Value, negative: bool) -> Outcome {
        let report = match report {
            Value::Object(m) => m,
            other => Map::from_iter([("value".to_string(), other)]),
        };
        Outcome { report, table: None, negative }
    }

    pub fn with_table(mut self, table: ConvergenceReport) -> Outcome {
        self.table = Some(table);
        self
    }
}

pub fn render(out: &Outcome, format: Format, timestamp: Option<String>) -> Result<Vec<u8>, CliError> {
    match format {
        Format::Json => {
            let mut m = out.report.clone();
            if let Some(t) = timestamp {
                m.insert("timestamp".into(), Value::String(t));
            }
            let mut bytes = serde_json::to_vec_pretty(&Value::Object(m)).map_err(CliError::json)?;
            bytes.push(b'\n');
            Ok(bytes)
        }
        Format::Csv => {
            let table = out.table.as_ref().ok_or_else(|| {
                CliError::usage("csv output needs a convergence table; this command produces none")
            })?;
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["level", "m", "delta", "value_json"]).map_err(CliError::csv)?;
            for l in &table.levels {
                let value = serde_json::to_string(&l.value).map_err(CliError::json)?;
                let delta = l.delta.map(|d| d.to_string()).unwrap_or_default();
                w.write_record([l.level.to_string(), l.m.to_string(), delta, value]).map_err(CliError::csv)?;
            }
            w.into_inner().map_err(|e| CliError::io(e.to_string()))
        }
    }
}

pub fn emit(bytes: &[u8], out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(p) => std::fs::write(p, bytes).map_err(|e| CliError::io(format!("{}: {e}", p.display()))),
        None => std::io::stdout().lock().write_all(bytes).map_err(|e| CliError::io(e.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;
    use transprod::Element;

    #[test]
    fn json_timestamp_is_optional() {
        let out = Outcome::new(json!({"a": 1}), false);
        let plain = String::from_utf8(render(&out, Format::Json, None).unwrap()).unwrap();
        assert!(!plain.contains("timestamp"));
        let stamped = String::from_utf8(render(&out, Format::Json, Some("t".into())).unwrap()).unwrap();
        assert!(stamped.contains("\"timestamp\": \"t\""));
    }

    #[test]
    fn bare_values_are_wrapped() {
        let out = Outcome::new(json!(3), true);
        assert_eq!(out.report["value"], 3);
        assert!(out.negative);
    }

    #[test]
    fn csv_rows_follow_levels() {
        let table =
            ConvergenceReport::from_levels(vec![(1, Element::scalar(1.0)), (2, Element::scalar(1.5))], 1e-3);
        let out = Outcome::new(json!({}), false).with_table(table);
        let text = String::from_utf8(render(&out, Format::Csv, None).unwrap()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "level,m,delta,value_json");
        assert!(lines[1].starts_with("0,1,,"));
        assert!(lines[2].starts_with("1,2,0.5,"));
        assert!(render(&Outcome::new(json!({}), false), Format::Csv, None).is_err());
    }
}
