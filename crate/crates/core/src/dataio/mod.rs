//! On-disk formats: single-spectrum CSV, batch CSV, dark statistics JSON and
//! dataset manifests.
//!
//! Numbers are written with 17 significant digits so a write/read cycle is
//! bit-exact.

mod manifest;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::noisemodel::DarkStats;
use crate::spectrum::{Spectrum, SpectrumGrid};

pub use manifest::{
    BasisRef, DarkRef, DatasetKind, DatasetManifest, ExampleRecord, GridSpec, LoadedSplit, SplitEntry, SplitFiles,
    SCHEMA_VERSION,
};

pub const SPECTRUM_HEADER: &str = "wavenumber,intensity";

/// Relative deviation from the nominal grid tolerated when reading a file.
const GRID_SLACK: f64 = 1e-6;

pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

/// Rectangular set of spectra sharing one grid; the in-memory form of a
/// batch CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchFile {
    pub grid: SpectrumGrid,
    pub columns: Vec<Vec<f64>>,
}

impl BatchFile {
    pub fn from_spectra(spectra: &[Spectrum]) -> Result<Self> {
        let first = spectra
            .first()
            .ok_or_else(|| Error::Validation("batch needs at least one spectrum".into()))?;
        let grid = *first.grid();
        for s in spectra {
            grid.ensure_same(s.grid())?;
        }
        Ok(Self {
            grid,
            columns: spectra.iter().map(|s| s.values().to_vec()).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn spectra(&self) -> Result<Vec<Spectrum>> {
        self.columns
            .iter()
            .map(|c| Spectrum::new(self.grid, c.clone()))
            .collect()
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

pub fn write_spectrum(path: impl AsRef<Path>, s: &Spectrum) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    let mut body = String::with_capacity(48 * s.len());
    body.push_str(SPECTRUM_HEADER);
    body.push('\n');
    for (i, v) in s.values().iter().enumerate() {
        body.push_str(&format_value(s.grid().point(i)));
        body.push(',');
        body.push_str(&format_value(*v));
        body.push('\n');
    }
    w.write_all(body.as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn write_batch(path: impl AsRef<Path>, batch: &BatchFile) -> Result<()> {
    let path = path.as_ref();
    if batch.is_empty() {
        return Err(Error::Validation(format!("{}: batch has no spectra", path.display())));
    }
    let mut w = create(path)?;
    let mut header = String::from("wavenumber");
    for j in 0..batch.len() {
        header.push_str(&format!(",spec_{j}"));
    }
    header.push('\n');
    w.write_all(header.as_bytes()).map_err(|e| Error::io(path, e))?;
    let mut line = String::new();
    for i in 0..batch.grid.len() {
        line.clear();
        line.push_str(&format_value(batch.grid.point(i)));
        for col in &batch.columns {
            line.push(',');
            line.push_str(&format_value(col[i]));
        }
        line.push('\n');
        w.write_all(line.as_bytes()).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_spectra(path: impl AsRef<Path>, spectra: &[Spectrum]) -> Result<()> {
    write_batch(path, &BatchFile::from_spectra(spectra)?)
}

/// Header plus numeric rows; line numbers are 1-based file lines.
struct Table {
    header: Vec<String>,
    rows: Vec<(u64, Vec<f64>)>,
}

fn read_table(path: &Path) -> Result<Table> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(file);
    let parse_err = |line: u64, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut header = None;
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            match e.into_kind() {
                csv::ErrorKind::Io(io) => Error::io(path, io),
                other => parse_err(line, format!("{other:?}")),
            }
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        if header.is_none() {
            header = Some(rec.iter().map(|f| f.trim().to_string()).collect::<Vec<_>>());
            continue;
        }
        if rec.len() == 1 && rec[0].trim().is_empty() {
            continue;
        }
        let width = header.as_ref().map_or(0, |h| h.len());
        if rec.len() != width {
            return Err(parse_err(line, format!("expected {width} fields, found {}", rec.len())));
        }
        let values = rec
            .iter()
            .enumerate()
            .map(|(k, f)| {
                let v: f64 = f
                    .trim()
                    .parse()
                    .map_err(|_| parse_err(line, format!("field {} is not a number: '{f}'", k + 1)))?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(parse_err(line, format!("field {} is not finite", k + 1)))
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push((line, values));
    }
    let header = header.ok_or_else(|| parse_err(1, "empty file".into()))?;
    Ok(Table { header, rows })
}

/// Wavenumber column of `table` plus checks that it is strictly increasing.
fn wavenumbers(path: &Path, table: &Table) -> Result<Vec<f64>> {
    if table.rows.len() < 2 {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            msg: format!("need at least 2 data rows, found {}", table.rows.len()),
        });
    }
    let wn: Vec<f64> = table.rows.iter().map(|(_, r)| r[0]).collect();
    for k in 1..wn.len() {
        if !(wn[k] > wn[k - 1]) {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: table.rows[k].0,
                msg: format!("wavenumber {} does not increase", wn[k]),
            });
        }
    }
    Ok(wn)
}

fn uniform_grid(path: &Path, table: &Table, wn: &[f64]) -> Result<SpectrumGrid> {
    let grid = SpectrumGrid::new(wn[0], wn[wn.len() - 1], wn.len())?;
    let slack = GRID_SLACK * grid.spacing();
    for (k, &w) in wn.iter().enumerate() {
        if (w - grid.point(k)).abs() > slack {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: table.rows[k].0,
                msg: format!("wavenumber {w} is off the uniform grid (expected {})", grid.point(k)),
            });
        }
    }
    Ok(grid)
}

fn check_header(path: &Path, table: &Table, expected: &[String]) -> Result<()> {
    if table.header != expected {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            msg: format!("expected header '{}', found '{}'", expected.join(","), table.header.join(",")),
        });
    }
    Ok(())
}

/// Raw `(wavenumber, intensity)` columns of a spectrum file; the axis need
/// only be strictly increasing.
pub fn read_spectrum_samples(path: impl AsRef<Path>) -> Result<(Vec<f64>, Vec<f64>)> {
    let path = path.as_ref();
    let table = read_table(path)?;
    check_header(path, &table, &["wavenumber".into(), "intensity".into()])?;
    let wn = wavenumbers(path, &table)?;
    Ok((wn, table.rows.iter().map(|(_, r)| r[1]).collect()))
}

pub fn read_spectrum(path: impl AsRef<Path>) -> Result<Spectrum> {
    let path = path.as_ref();
    let table = read_table(path)?;
    check_header(path, &table, &["wavenumber".into(), "intensity".into()])?;
    let wn = wavenumbers(path, &table)?;
    let grid = uniform_grid(path, &table, &wn)?;
    Spectrum::new(grid, table.rows.iter().map(|(_, r)| r[1]).collect())
}

pub fn read_batch(path: impl AsRef<Path>) -> Result<BatchFile> {
    let path = path.as_ref();
    let table = read_table(path)?;
    let width = table.header.len();
    if width < 2 {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            msg: "batch needs a wavenumber column and at least one spectrum column".into(),
        });
    }
    let mut expected = vec!["wavenumber".to_string()];
    expected.extend((0..width - 1).map(|j| format!("spec_{j}")));
    check_header(path, &table, &expected)?;
    let wn = wavenumbers(path, &table)?;
    let grid = uniform_grid(path, &table, &wn)?;
    let columns = (1..width)
        .map(|j| table.rows.iter().map(|(_, r)| r[j]).collect())
        .collect();
    Ok(BatchFile { grid, columns })
}

pub fn read_spectra(path: impl AsRef<Path>) -> Result<Vec<Spectrum>> {
    read_batch(path)?.spectra()
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Validation(format!("{}: {e}", path.display())))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line() as u64,
        msg: e.to_string(),
    })
}

pub fn write_dark_stats(path: impl AsRef<Path>, stats: &DarkStats) -> Result<()> {
    stats.validate()?;
    write_json(path, stats)
}

pub fn read_dark_stats(path: impl AsRef<Path>) -> Result<DarkStats> {
    let path = path.as_ref();
    let stats: DarkStats = read_json(path)?;
    stats
        .validate()
        .map_err(|e| Error::Validation(format!("{}: {e}", path.display())))?;
    Ok(stats)
}
