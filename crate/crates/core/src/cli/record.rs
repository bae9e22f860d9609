//! Result records and their JSON / CSV serialization.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::error::{Error, Result};

pub const VERSION_TAG: &str = concat!("acsq ", env!("CARGO_PKG_VERSION"));

/// A square complex matrix in row-major order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixRecord {
    pub name: String,
    pub n: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl MatrixRecord {
    pub fn new(name: impl Into<String>, m: &Array2<Complex64>) -> Self {
        Self {
            name: name.into(),
            n: m.nrows(),
            re: m.iter().map(|z| z.re).collect(),
            im: m.iter().map(|z| z.im).collect(),
        }
    }
}

/// A plot series `(x_k, y_k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesRecord {
    pub name: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub command: String,
    pub version: String,
    /// Canonicalized configuration; with `grid_order_used` it re-runs the command exactly.
    pub config: ExperimentConfig,
    pub grid_order_used: usize,
    /// Non-finite values are stored as `null`.
    pub scalars: BTreeMap<String, Option<f64>>,
    pub matrices: Vec<MatrixRecord>,
    pub series: Vec<SeriesRecord>,
    pub verdicts: BTreeMap<String, String>,
    pub tolerances: BTreeMap<String, f64>,
    pub notes: Vec<String>,
    pub error: Option<String>,
    pub wall_time_seconds: f64,
}

impl ResultRecord {
    pub fn new(command: &str, config: ExperimentConfig, grid_order_used: usize) -> Self {
        Self {
            command: command.to_string(),
            version: VERSION_TAG.to_string(),
            config,
            grid_order_used,
            scalars: BTreeMap::new(),
            matrices: Vec::new(),
            series: Vec::new(),
            verdicts: BTreeMap::new(),
            tolerances: BTreeMap::new(),
            notes: Vec::new(),
            error: None,
            wall_time_seconds: 0.0,
        }
    }

    pub fn scalar(&mut self, key: impl Into<String>, v: f64) {
        self.scalars.insert(key.into(), v.is_finite().then_some(v));
    }

    pub fn verdict(&mut self, key: impl Into<String>, v: impl Into<String>) {
        self.verdicts.insert(key.into(), v.into());
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Numeric(format!("cannot serialize record: {e}")))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Config(format!("malformed result record: {e}")))
    }

    /// CSV rows `series,row,col,re,im`: matrix entries, then plot series, then scalars.
    pub fn to_csv(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Row<'a> {
            series: &'a str,
            row: Option<usize>,
            col: Option<usize>,
            re: Option<f64>,
            im: Option<f64>,
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Io(e.to_string());
        for m in &self.matrices {
            for (k, (re, im)) in m.re.iter().zip(&m.im).enumerate() {
                w.serialize(Row { series: &m.name, row: Some(k / m.n), col: Some(k % m.n), re: Some(*re), im: Some(*im) })
                    .map_err(io)?;
            }
        }
        for s in &self.series {
            for (k, (x, y)) in s.x.iter().zip(&s.y).enumerate() {
                w.serialize(Row { series: &s.name, row: Some(k), col: None, re: Some(*x), im: Some(*y) }).map_err(io)?;
            }
        }
        for (name, v) in &self.scalars {
            w.serialize(Row { series: name, row: None, col: None, re: *v, im: None }).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
    }

    /// Human-readable summary for standard output.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} ({}), N = {}, grid order {}", self.command, self.config.name, self.config.basis.size, self.grid_order_used);
        let width = self.scalars.keys().chain(self.verdicts.keys()).map(|k| k.len()).max().unwrap_or(0);
        for (k, v) in &self.scalars {
            let v = v.map_or("non-finite".to_string(), |v| format!("{v:.10e}"));
            let _ = writeln!(out, "  {k:<width$}  {v}");
        }
        for (k, v) in &self.verdicts {
            let _ = writeln!(out, "  {k:<width$}  [{v}]");
        }
        for n in &self.notes {
            let _ = writeln!(out, "  note: {n}");
        }
        if let Some(e) = &self.error {
            let _ = writeln!(out, "  error: {e}");
        }
        let _ = writeln!(out, "  wall time {:.2} s", self.wall_time_seconds);
        out
    }

    /// Writes `<name>.result.json` and `<name>.table.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir)?;
        let json = dir.join(format!("{}.result.json", self.config.name));
        let csv = dir.join(format!("{}.table.csv", self.config.name));
        write_atomic(&json, self.to_json()?.as_bytes())?;
        write_atomic(&csv, self.to_csv()?.as_bytes())?;
        Ok((json, csv))
    }
}

/// Writes to a sibling temporary file, then renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}
