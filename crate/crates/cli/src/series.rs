//! CSV tables and observable series.
//!
//! Series files have the header `t,y1..ym[,u1..uq]` and one row per sample.
//! Floats are written with 17 significant digits, which round-trips every
//! `f64` exactly.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use koopid_core::{Matrix, ObservableSeries};
use serde::{Deserialize, Serialize};

use crate::config::{InputConfig, SystemConfig};

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes a numeric table with a header row.
pub fn write_table<I>(path: &Path, header: &[String], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<f64>>,
{
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(header)?;
    for row in rows {
        ensure!(
            row.len() == header.len(),
            "table row has {} fields, header has {}",
            row.len(),
            header.len()
        );
        w.write_record(row.iter().map(|v| fmt_f64(*v)))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a numeric table written by [`write_table`].
pub fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r =
        csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .with_context(|| {
                format!("{}: row {} has a non-numeric field", path.display(), i + 1)
            })?;
        ensure!(
            row.len() == header.len(),
            "{}: row {} has {} fields",
            path.display(),
            i + 1,
            row.len()
        );
        rows.push(row);
    }
    Ok((header, rows))
}

pub fn series_header(m: usize, q: usize) -> Vec<String> {
    std::iter::once("t".to_string())
        .chain((1..=m).map(|i| format!("y{i}")))
        .chain((1..=q).map(|i| format!("u{i}")))
        .collect()
}

/// Writes `series` with sample `i` at time `i·dt`.
pub fn write_series(path: &Path, series: &ObservableSeries) -> Result<()> {
    let (m, q) = (series.m(), series.q());
    let rows = (0..series.len()).map(|j| {
        let mut row = Vec::with_capacity(1 + m + q);
        row.push(j as f64 * series.dt);
        row.extend_from_slice(series.y.col(j));
        if let Some(u) = &series.u {
            row.extend_from_slice(u.col(j));
        }
        row
    });
    write_table(path, &series_header(m, q), rows)
}

/// Reads a series file. The sample interval comes from the sidecar manifest
/// when one exists, otherwise from the first two time stamps.
pub fn read_series(path: &Path) -> Result<ObservableSeries> {
    let (header, rows) = read_table(path)?;
    ensure!(
        header.first().map(String::as_str) == Some("t"),
        "{}: first column must be t",
        path.display()
    );
    let m = header.iter().filter(|h| h.starts_with('y')).count();
    let q = header.len() - 1 - m;
    if header != series_header(m, q) {
        bail!(
            "{}: header must be t,y1..ym[,u1..uq], got {}",
            path.display(),
            header.join(",")
        );
    }
    ensure!(m > 0, "{}: no observable columns", path.display());
    ensure!(
        rows.len() >= 2,
        "{}: need at least two samples",
        path.display()
    );
    let dt = match SeriesManifest::load(&manifest_path(path)) {
        Ok(man) => man.dt,
        Err(_) => rows[1][0] - rows[0][0],
    };
    let t = rows.len();
    let y = Matrix::from_fn(m, t, |i, j| rows[j][1 + i])?;
    let u = (q > 0)
        .then(|| Matrix::from_fn(q, t, |i, j| rows[j][1 + m + i]))
        .transpose()?;
    Ok(ObservableSeries::new(y, u, dt)?)
}

/// Sidecar written next to every simulated series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesManifest {
    pub samples: usize,
    pub dt: f64,
    pub m: usize,
    pub q: usize,
    pub seed: u64,
    pub system: Option<SystemConfig>,
    pub input: Option<InputConfig>,
}

impl SeriesManifest {
    pub fn save(&self, path: &Path) -> Result<()> {
        let text = toml::to_string(self)?;
        File::create(path)
            .and_then(|mut f| f.write_all(text.as_bytes()))
            .with_context(|| format!("writing {}", path.display()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(toml::from_str(&text)?)
    }
}

/// `series.csv` → `series.toml`.
pub fn manifest_path(series: &Path) -> PathBuf {
    series.with_extension("toml")
}
