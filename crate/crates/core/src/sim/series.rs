//! Recorded trajectories and window statistics.

use std::io::{self, Write};

use serde::Serialize;

use crate::error::{Error, Result};

/// Row-major samples with a named column schema. Column 0 is time.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TimeSeries {
    columns: Vec<String>,
    data: Vec<f64>,
}

impl TimeSeries {
    pub fn new(columns: Vec<String>) -> Self {
        Self { columns, data: Vec::new() }
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn n_rows(&self) -> usize {
        if self.columns.is_empty() {
            0
        } else {
            self.data.len() / self.columns.len()
        }
    }

    pub fn push_row(&mut self, row: &[f64]) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.data.extend_from_slice(row);
    }

    pub fn row(&self, k: usize) -> &[f64] {
        let w = self.columns.len();
        &self.data[k * w..(k + 1) * w]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.index_of(name)?;
        Some((0..self.n_rows()).map(|k| self.row(k)[j]).collect())
    }

    pub fn time(&self) -> Vec<f64> {
        (0..self.n_rows()).map(|k| self.row(k)[0]).collect()
    }

    /// CSV with a header row. Values use the shortest representation that
    /// round-trips to the same double; NaN is written as an empty field.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{}", self.columns.join(","))?;
        let mut line = String::new();
        for k in 0..self.n_rows() {
            line.clear();
            for (j, v) in self.row(k).iter().enumerate() {
                if j > 0 {
                    line.push(',');
                }
                if !v.is_nan() {
                    line.push_str(&v.to_string());
                }
            }
            line.push('\n');
            w.write_all(line.as_bytes())?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("CSV is ASCII")
    }
}

/// Statistics of one column over a window. NaN entries are skipped.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ColumnStats {
    pub name: String,
    pub mean: f64,
    pub rms: f64,
    pub min: f64,
    pub max: f64,
    /// `max |x − mean|`.
    pub max_dev: f64,
    pub samples: usize,
}

/// Statistics over rows with `t_from ≤ t < t_to`.
pub fn window_stats(ts: &TimeSeries, t_from: f64, t_to: f64) -> Result<Vec<ColumnStats>> {
    let rows: Vec<usize> = (0..ts.n_rows())
        .filter(|&k| {
            let t = ts.row(k)[0];
            t >= t_from && t < t_to
        })
        .collect();
    if rows.is_empty() {
        return Err(Error::InvalidConfig(format!("no samples in window [{t_from}, {t_to})")));
    }
    Ok(ts
        .columns()
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let vals: Vec<f64> = rows.iter().map(|&k| ts.row(k)[j]).filter(|v| !v.is_nan()).collect();
            let n = vals.len();
            if n == 0 {
                return ColumnStats {
                    name: name.clone(),
                    mean: f64::NAN,
                    rms: f64::NAN,
                    min: f64::NAN,
                    max: f64::NAN,
                    max_dev: f64::NAN,
                    samples: 0,
                };
            }
            let mean = vals.iter().sum::<f64>() / n as f64;
            let rms = (vals.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
            let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
            let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let max_dev = vals.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
            ColumnStats {
                name: name.clone(),
                mean,
                rms,
                min,
                max,
                max_dev,
                samples: n,
            }
        })
        .collect())
}

/// Statistics over the trailing `window` seconds of the record.
pub fn steady_window_stats(ts: &TimeSeries, window: f64) -> Result<Vec<ColumnStats>> {
    let t = ts.time();
    let (Some(&t0), Some(&t_end)) = (t.first(), t.last()) else {
        return Err(Error::InvalidConfig("empty time series".into()));
    };
    if window > t_end - t0 {
        return Err(Error::InvalidConfig(format!(
            "window {window} s exceeds the recorded span {} s",
            t_end - t0
        )));
    }
    window_stats(ts, t_end - window - 1e-12 * t_end.abs().max(1.0), f64::INFINITY)
}

pub fn find<'a>(stats: &'a [ColumnStats], name: &str) -> Option<&'a ColumnStats> {
    stats.iter().find(|s| s.name == name)
}
