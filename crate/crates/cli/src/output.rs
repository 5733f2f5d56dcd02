//! JSON and CSV emission.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::Serialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Floats are written with 17 significant digits so values survive a
/// round trip through the CSV.
pub fn num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v:.16e}")
    }
}

pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// A CSV table with a fixed column order.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(headers: &[&str]) -> Self {
        Table { headers: headers.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.headers).map_err(|e| CliError::Input(e.to_string()))?;
        for r in &self.rows {
            w.write_record(r).map_err(|e| CliError::Input(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Input(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv is utf-8"))
    }
}

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("results serialize") + "\n"
}

pub fn write_text(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Input(format!("{}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(|e| CliError::Input(format!("stdout: {e}")))
        }
    }
}

/// Where results go and in which format.
pub struct Sink {
    pub path: Option<PathBuf>,
    pub format: Format,
}

impl Sink {
    pub fn emit<T: Serialize + ?Sized>(&self, value: &T, table: impl FnOnce() -> Table) -> Result<(), CliError> {
        let text = match self.format {
            Format::Json => to_json(value),
            Format::Csv => table().to_csv()?,
        };
        write_text(self.path.as_deref(), &text)
    }
}
