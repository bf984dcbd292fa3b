//! Plain CSV series for external plotting. Nothing is rendered here.

use std::fs;
use std::path::Path;

use symplanar::{Characteristic, Vector};

use crate::HarnessError;

/// A CSV file to be written under the output directory.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    /// Path relative to the output directory.
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: impl Into<String>, header: &[&str]) -> Self {
        Self {
            name: name.into(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// Writes the table, creating parent directories. An empty table is a
    /// header-only file.
    pub fn write(&self, dir: &Path) -> Result<(), HarnessError> {
        let path = dir.join(&self.name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| io_error(parent, e))?;
        }
        let mut w = csv::Writer::from_path(&path).map_err(|e| io_error(&path, e))?;
        w.write_record(&self.header).map_err(|e| io_error(&path, e))?;
        for row in &self.rows {
            w.write_record(row).map_err(|e| io_error(&path, e))?;
        }
        w.flush().map_err(|e| io_error(&path, e))
    }
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Io(format!("{}: {e}", path.display()))
}

/// Full-precision float formatting that round-trips.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// `p1, q1, ..., pn, qn`.
pub fn coordinate_names(dim: usize) -> Vec<String> {
    (0..dim)
        .map(|k| format!("{}{}", if k % 2 == 0 { "p" } else { "q" }, k / 2 + 1))
        .collect()
}

/// Table with a leading column followed by the phase-space coordinates.
pub fn point_table(name: impl Into<String>, first: &str, dim: usize) -> Table {
    let mut header = vec![first.to_string()];
    header.extend(coordinate_names(dim));
    Table {
        name: name.into(),
        header,
        rows: Vec::new(),
    }
}

pub fn point_row(first: String, z: &Vector) -> Vec<String> {
    std::iter::once(first).chain(z.iter().map(|&x| num(x))).collect()
}

/// Orbit dump with columns `t, p1, q1, ..., pn, qn`.
pub fn orbit_table(name: impl Into<String>, ch: &Characteristic) -> Table {
    let dim = ch.start.len();
    let mut t = point_table(name, "t", dim);
    for (time, z) in ch.times.iter().zip(&ch.samples) {
        t.push(point_row(num(*time), z));
    }
    t
}

/// Equal-width bins over `[min, max]` of the finite values.
pub fn histogram(name: impl Into<String>, values: &[f64], bins: usize) -> Table {
    let mut t = Table::new(name, &["bin_start", "bin_end", "count"]);
    let values: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    let Some(lo) = values.iter().copied().reduce(f64::min) else {
        return t;
    };
    let hi = values.iter().copied().fold(lo, f64::max);
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let mut counts = vec![0usize; bins];
    for x in &values {
        let k = (((x - lo) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    for (k, c) in counts.into_iter().enumerate() {
        let a = lo + width * k as f64;
        t.push(vec![num(a), num(a + width), c.to_string()]);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_counts_everything() {
        let t = histogram("h.csv", &[0.0, 0.1, 0.5, 1.0, f64::NAN], 4);
        assert_eq!(t.rows.len(), 4);
        let total: usize = t.rows.iter().map(|r| r[2].parse::<usize>().unwrap()).sum();
        assert_eq!(total, 4);
        assert_eq!(t.rows[3][2], "1");
    }

    #[test]
    fn empty_histogram_is_header_only() {
        assert!(histogram("h.csv", &[], 5).rows.is_empty());
        let t = histogram("h.csv", &[2.0, 2.0], 3);
        assert_eq!(t.rows[0][2], "2");
    }

    #[test]
    fn coordinates_are_interleaved() {
        assert_eq!(coordinate_names(4), ["p1", "q1", "p2", "q2"]);
    }

    #[test]
    fn numbers_round_trip() {
        let x = std::f64::consts::PI / 3.0;
        assert_eq!(num(x).parse::<f64>().unwrap(), x);
        assert_eq!(opt_num(None), "");
    }
}
