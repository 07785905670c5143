use std::fmt;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value as Json};

use super::config::ExperimentConfig;
use super::CliError;

#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Int(i64),
    Float(f64),
    Text(String),
    Bool(bool),
}

impl Value {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Int(v) => Some(*v as f64),
            Value::Float(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Value::Text(s) => Some(s),
            _ => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::Float(v) if *v == 0.0 || !v.is_finite() || (1e-4..1e15).contains(&v.abs()) => write!(f, "{v}"),
            Value::Float(v) => write!(f, "{v:e}"),
            Value::Text(s) => f.write_str(s),
            Value::Bool(b) => write!(f, "{b}"),
        }
    }
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Float(v)
    }
}

impl From<usize> for Value {
    fn from(v: usize) -> Self {
        Value::Int(v as i64)
    }
}

impl From<u64> for Value {
    fn from(v: u64) -> Self {
        Value::Int(v as i64)
    }
}

impl From<bool> for Value {
    fn from(v: bool) -> Self {
        Value::Bool(v)
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::Text(v.to_string())
    }
}

impl From<String> for Value {
    fn from(v: String) -> Self {
        Value::Text(v)
    }
}

/// Rows of one experiment plus a metadata block for the JSON sidecar.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultTable {
    columns: Vec<String>,
    rows: Vec<Vec<Value>>,
    metadata: Map<String, Json>,
}

impl ResultTable {
    pub fn new(columns: &[&str]) -> Self {
        ResultTable { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new(), metadata: Map::new() }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        assert_eq!(row.len(), self.columns.len(), "row width does not match the header");
        self.rows.push(row);
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<Value>] {
        &self.rows
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn value(&self, row: usize, column: &str) -> Option<&Value> {
        self.column_index(column).and_then(|c| self.rows.get(row).map(|r| &r[c]))
    }

    /// Rows whose `column` holds the text `value`.
    pub fn rows_where<'a>(&'a self, column: &str, value: &'a str) -> impl Iterator<Item = &'a Vec<Value>> + 'a {
        let c = self.column_index(column);
        self.rows.iter().filter(move |r| c.is_some_and(|c| r[c].as_str() == Some(value)))
    }

    pub fn set_meta(&mut self, key: &str, value: impl Into<Json>) {
        self.metadata.insert(key.to_string(), value.into());
    }

    pub fn metadata(&self) -> &Map<String, Json> {
        &self.metadata
    }

    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.columns).map_err(|e| CliError::Io(e.to_string()))?;
        for r in &self.rows {
            w.write_record(r.iter().map(|v| v.to_string())).map_err(|e| CliError::Io(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| CliError::Io(e.to_string()))
    }

    /// The sidecar document: config echo, seed, toolkit version and wall time.
    pub fn sidecar(&self, subcommand: &str, config: &ExperimentConfig, wall_time_s: f64) -> Json {
        json!({
            "subcommand": subcommand,
            "seed": config.seed,
            "toolkit_version": env!("CARGO_PKG_VERSION"),
            "wall_time_s": wall_time_s,
            "rows": self.rows.len(),
            "columns": self.columns,
            "config": config,
            "metadata": self.metadata,
        })
    }

    /// Writes `path` (CSV) and `path` with a `.json` extension (sidecar).
    pub fn write(
        &self,
        path: &Path,
        subcommand: &str,
        config: &ExperimentConfig,
        wall_time_s: f64,
    ) -> Result<PathBuf, CliError> {
        write_file(path, self.to_csv()?.as_bytes())?;
        let sidecar = path.with_extension("json");
        let doc = serde_json::to_string_pretty(&self.sidecar(subcommand, config, wall_time_s))
            .map_err(|e| CliError::Io(e.to_string()))?;
        write_file(&sidecar, format!("{doc}\n").as_bytes())?;
        Ok(sidecar)
    }
}

pub(super) fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Mean, population standard deviation and nearest-rank 90th percentile.
pub fn summarize(values: &[f64]) -> (f64, f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = ((0.9 * n).ceil() as usize).clamp(1, sorted.len());
    (mean, var.sqrt(), sorted[rank - 1])
}
