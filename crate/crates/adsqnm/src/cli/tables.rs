//! CSV schemas, writers and the JSON export.

use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use super::config::schema_errors;
use super::CliError;

/// Bumped whenever a header below changes.
pub const CSV_SCHEMA_VERSION: u32 = 1;

/// Published schema for the JSON export.
pub const EXPORT_SCHEMA: &str = include_str!("../../schemas/export.schema.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TableSchema {
    pub name: &'static str,
    /// File name relative to the output directory.
    pub file: &'static str,
    pub header: &'static [&'static str],
}

pub const QNF: TableSchema =
    TableSchema { name: "qnf", file: "qnf.csv", header: &["ell_hint", "k", "re_lambda", "im_lambda", "residual", "converged"] };
pub const SCAN: TableSchema = TableSchema { name: "scan", file: "scan.csv", header: &["re_z", "im_z", "inv_sigma_min"] };
pub const MATCH: TableSchema = TableSchema {
    name: "match",
    file: "match.csv",
    header: &["ell", "lambda_sharp", "quasimode_residual", "re_pole", "im_pole", "distance"],
};
pub const QUASIMODES: TableSchema = TableSchema {
    name: "quasimodes",
    file: "quasimodes.csv",
    header: &["ell", "lambda_sharp", "residual", "r1", "transition_width"],
};
pub const ENERGY: TableSchema = TableSchema {
    name: "energy",
    file: "energy.csv",
    header: &[
        "case",
        "field",
        "n_radial",
        "re_lambda",
        "im_lambda",
        "time_derivative_term",
        "boundary_y_term",
        "horizon_term",
        "bulk_term",
        "residual",
        "mode_residual",
        "non_converged",
    ],
};
pub const INDICIAL: TableSchema = TableSchema {
    name: "indicial",
    file: "indicial.csv",
    header: &["k", "re_lambda", "im_lambda", "s_re", "s_im", "root2_re", "root2_im"],
};
pub const TWIST: TableSchema =
    TableSchema { name: "twist", file: "twist.csv", header: &["nu", "twist_exponent", "decay_power", "max_abs_shifted"] };
pub const PROBE: TableSchema =
    TableSchema { name: "probe", file: "probe.csv", header: &["re_lambda", "im_lambda", "resolvent_norm", "product"] };
pub const FLOW_SUMMARY: TableSchema = TableSchema {
    name: "flow_summary",
    file: "flow_summary.csv",
    header: &[
        "seed",
        "r",
        "theta",
        "z",
        "forward_exit",
        "backward_exit",
        "escapes",
        "source_then_leaves",
        "max_scaled_drift",
        "max_drift",
    ],
};
/// One file per trajectory under `flow/`; `exit_reason` is filled on the last row only.
pub const TRAJECTORY: TableSchema = TableSchema {
    name: "trajectory",
    file: "flow/seed_NNN_DIRECTION.csv",
    header: &["t", "r", "theta", "xi_r", "xi_theta", "xi_phi", "p", "exit_reason"],
};

pub const ALL_TABLES: [TableSchema; 10] =
    [QNF, SCAN, MATCH, QUASIMODES, ENERGY, INDICIAL, TWIST, PROBE, FLOW_SUMMARY, TRAJECTORY];

/// Schema governing a file, looked up by its path relative to the output directory.
pub fn schema_for(relative: &str) -> Option<TableSchema> {
    if relative.starts_with("flow/") && relative.ends_with(".csv") {
        return Some(TRAJECTORY);
    }
    ALL_TABLES.iter().copied().find(|t| t.file == relative)
}

/// Shortest round-trip form (exponent notation for very small or large magnitudes); the
/// same bits always print the same way.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

/// Buffered rows for one table.
pub struct Table {
    pub schema: TableSchema,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(schema: TableSchema) -> Self {
        Self { schema, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.schema.header.len(), "{}", self.schema.name);
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Write under `dir` at `relative` (defaults to the schema's file name).
    pub fn write(&self, dir: &Path, relative: Option<&str>) -> Result<String, CliError> {
        let rel = relative.unwrap_or(self.schema.file).to_string();
        let path = dir.join(&rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let mut w = csv::Writer::from_path(&path).map_err(csv_err)?;
        w.write_record(self.schema.header).map_err(csv_err)?;
        for r in &self.rows {
            w.write_record(r).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(rel)
    }
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Io(std::io::Error::other(e.to_string()))
}

/// Header and rows of a CSV file.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>), CliError> {
    if !path.is_file() {
        return Err(CliError::MissingStageOutput(path.display().to_string()));
    }
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let header = r.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        rows.push(rec.map_err(csv_err)?.iter().map(str::to_string).collect());
    }
    Ok((header, rows))
}

/// Header of `path` against its documented schema.
pub fn check_header(dir: &Path, relative: &str) -> Result<(), CliError> {
    let schema = schema_for(relative).ok_or_else(|| CliError::MissingStageOutput(format!("no schema for {relative}")))?;
    let (header, _) = read_csv(&dir.join(relative))?;
    if header.iter().map(String::as_str).eq(schema.header.iter().copied()) {
        Ok(())
    } else {
        Err(CliError::SchemaMismatch { file: relative.to_string(), found: header.join(",") })
    }
}

fn cell(s: &str) -> Value {
    if s.is_empty() {
        return Value::Null;
    }
    match s {
        "true" => return Value::Bool(true),
        "false" => return Value::Bool(false),
        _ => {}
    }
    if let Ok(i) = s.parse::<i64>() {
        return json!(i);
    }
    match s.parse::<f64>() {
        Ok(x) if x.is_finite() => json!(x),
        _ => Value::String(s.to_string()),
    }
}

/// Every CSV among `outputs`, as one JSON document.
pub fn export_json(dir: &Path, outputs: &[String], config_hash: &str) -> Result<Value, CliError> {
    let mut tables = Map::new();
    for rel in outputs.iter().filter(|f| f.ends_with(".csv")) {
        let (header, rows) = read_csv(&dir.join(rel))?;
        let key = rel.trim_end_matches(".csv").replace('/', ".");
        let rows: Vec<Value> = rows.iter().map(|r| Value::Array(r.iter().map(|c| cell(c)).collect())).collect();
        tables.insert(key, json!({ "file": rel, "header": header, "rows": rows }));
    }
    Ok(json!({ "schema_version": CSV_SCHEMA_VERSION, "config_hash": config_hash, "tables": tables }))
}

pub fn validate_export(value: &Value) -> Result<(), CliError> {
    let errors = schema_errors(EXPORT_SCHEMA, value);
    if errors.is_empty() {
        Ok(())
    } else {
        Err(CliError::SchemaMismatch { file: "export.json".into(), found: errors.join("; ") })
    }
}

pub fn write_json(path: &PathBuf, value: &Value) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(std::io::Error::other(e)))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}
