//! CSV and manifest persistence.
//!
//! Floats are written as `{:.16e}` (17 significant digits) so every value
//! round-trips exactly and reruns can be compared byte for byte.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use crate::observation::MeasurementSet;

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// One CSV cell.
#[derive(Debug, Clone, Copy)]
pub enum Cell {
    Int(u64),
    Float(f64),
}

impl Cell {
    fn render(self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Float(v) => fmt_f64(v),
        }
    }
}

pub fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<Cell>>) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.into_iter().map(Cell::render))?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct MeasurementRow {
    i: u64,
    x: f64,
    y: f64,
}

/// Columns `i, x, y`.
pub fn write_measurements(path: &Path, data: &MeasurementSet) -> Result<()> {
    let rows = data
        .xs
        .iter()
        .zip(&data.ys)
        .enumerate()
        .map(|(i, (&x, &y))| vec![Cell::Int(i as u64), Cell::Float(x), Cell::Float(y)]);
    write_csv(path, &["i", "x", "y"], rows)
}

pub fn read_measurements(path: &Path, sigma: f64, seed: Option<u64>) -> Result<MeasurementSet> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for row in r.deserialize() {
        let row: MeasurementRow = row.with_context(|| format!("parsing {}", path.display()))?;
        xs.push(row.x);
        ys.push(row.y);
    }
    Ok(MeasurementSet::new(xs, ys, sigma, seed)?)
}

/// Run manifest: the resolved configuration plus summary numbers.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: serde_json::Value,
    pub summary: serde_json::Value,
}

impl Manifest {
    pub fn new(command: &str, config: &impl Serialize, summary: serde_json::Value) -> Result<Self> {
        Ok(Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config: serde_json::to_value(config)?,
            summary,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut f = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
        serde_json::to_writer_pretty(&mut f, self)?;
        f.write_all(b"\n")?;
        f.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for v in [0.1, -1.0 / 3.0, 1e-300, 183.156_388_887_341_8, f64::MIN_POSITIVE] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(fmt_f64(1.0), "1.0000000000000000e0");
    }

    #[test]
    fn measurement_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        let data = MeasurementSet::new(vec![-2.5, 1.25], vec![0.1, -7.0 / 3.0], 1e-3, Some(1)).unwrap();
        write_measurements(&path, &data).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("i,x,y\n0,"));
        let back = read_measurements(&path, 1e-3, Some(1)).unwrap();
        assert_eq!(back, data);
    }
}
