use std::fmt::Write as _;
use std::path::Path;

use serde_json::{json, Map, Value};

use crate::config::ExperimentConfig;
use crate::error::CliError;

/// A CSV table; values are printed with 17 significant digits.
pub struct Table {
    text: String,
    columns: usize,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { text: format!("{}\n", header.join(",")), columns: header.len() }
    }

    pub fn row(&mut self, values: &[f64]) {
        debug_assert_eq!(values.len(), self.columns);
        for (i, v) in values.iter().enumerate() {
            if i > 0 {
                self.text.push(',');
            }
            write!(self.text, "{v:.16e}").expect("writing to a String");
        }
        self.text.push('\n');
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }
}

fn io(path: &Path, e: std::io::Error) -> CliError {
    CliError::Config(format!("cannot write {}: {e}", path.display()))
}

pub fn prepare_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| io(dir, e))
}

pub fn write_table(dir: &Path, name: &str, table: &Table) -> Result<(), CliError> {
    let path = dir.join(name);
    std::fs::write(&path, table.as_str()).map_err(|e| io(&path, e))
}

pub fn manifest(
    cfg: &ExperimentConfig,
    force_dt: bool,
    outputs: &[&str],
    diagnostics: Map<String, Value>,
    status: &str,
) -> Value {
    let g = cfg.grid;
    json!({
        "tool": "nlgauge",
        "version": env!("CARGO_PKG_VERSION"),
        "config": cfg,
        "force_dt": force_dt,
        "grid": {
            "dimension": g.dimension,
            "n": g.n,
            "length": g.length,
            "dx": g.length / g.n as f64,
        },
        "outputs": outputs,
        "status": status,
        "diagnostics": diagnostics,
    })
}

pub fn write_manifest(dir: &Path, value: &Value) -> Result<(), CliError> {
    let path = dir.join("manifest.json");
    let mut text = serde_json::to_string_pretty(value).expect("manifest serializes");
    text.push('\n');
    std::fs::write(&path, text).map_err(|e| io(&path, e))
}
