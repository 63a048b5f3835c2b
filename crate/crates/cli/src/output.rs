use std::io::Write;
use std::path::Path;

use clap::ValueEnum;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Serialize)]
pub struct Column {
    pub name: &'static str,
    pub unit: &'static str,
}

pub const fn col(name: &'static str, unit: &'static str) -> Column {
    Column { name, unit }
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputTable {
    pub metadata: Map<String, Value>,
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<f64>>,
}

impl OutputTable {
    pub fn new(columns: Vec<Column>, metadata: Map<String, Value>) -> Self {
        OutputTable {
            metadata,
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, format: Format) -> CliResult<Vec<u8>> {
        match format {
            Format::Json => {
                let mut out = serde_json::to_vec_pretty(self).map_err(|e| CliError::Usage(e.to_string()))?;
                out.push(b'\n');
                Ok(out)
            }
            Format::Csv => self.render_csv(),
        }
    }

    /// `# key: value` metadata lines, a header, then one record per row with
    /// every number in `{:.16e}` (17 significant digits).
    fn render_csv(&self) -> CliResult<Vec<u8>> {
        let mut out = Vec::new();
        for (k, v) in &self.metadata {
            let text = match v {
                Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            writeln!(out, "# {k}: {}", text.replace('\n', " "))?;
        }
        writeln!(
            out,
            "# units: {}",
            self.columns.iter().map(|c| c.unit).collect::<Vec<_>>().join(",")
        )?;
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| CliError::Usage(format!("csv error: {e}"));
        w.write_record(self.columns.iter().map(|c| c.name)).map_err(csv_err)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|x| format!("{x:.16e}"))).map_err(csv_err)?;
        }
        w.into_inner().map_err(|e| CliError::Usage(format!("csv error: {e}")))
    }

    pub fn emit(&self, format: Format, out: Option<&Path>) -> CliResult<()> {
        let bytes = self.render(format)?;
        match out {
            Some(path) => std::fs::write(path, bytes)
                .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display()))),
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout.write_all(&bytes)?;
                stdout.flush()?;
                Ok(())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> OutputTable {
        let mut meta = Map::new();
        meta.insert("tool_version".into(), Value::String("0.1.0".into()));
        let mut t = OutputTable::new(vec![col("alpha", "probability"), col("estimate", "statistic")], meta);
        t.push(vec![0.05, 1.0 / 3.0]);
        t.push(vec![0.1, -2.5e-300]);
        t
    }

    #[test]
    fn csv_round_trips_numbers() {
        let bytes = table().render(Format::Csv).unwrap();
        let text = String::from_utf8(bytes).unwrap();
        assert!(text.starts_with("# tool_version: 0.1.0\n# units: probability,statistic\nalpha,estimate\n"));
        let body: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
        let parsed: Vec<Vec<f64>> = body
            .iter()
            .map(|l| l.split(',').map(|s| s.parse().unwrap()).collect())
            .collect();
        assert_eq!(parsed, table().rows);
    }

    #[test]
    fn json_has_three_blocks() {
        let v: Value = serde_json::from_slice(&table().render(Format::Json).unwrap()).unwrap();
        assert_eq!(v["columns"][1]["name"], "estimate");
        assert_eq!(v["rows"][0][1].as_f64().unwrap(), 1.0 / 3.0);
        assert_eq!(v["metadata"]["tool_version"], "0.1.0");
    }
}
