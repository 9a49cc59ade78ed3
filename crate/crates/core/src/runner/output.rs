//! Deterministic CSV/JSON rendering and file bookkeeping.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::spectral::BinnedStatistic;

/// Scientific notation with 17 significant digits; `NaN` and infinities are
/// written as in Rust.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

/// An in-memory CSV table, rendered with `\n` line endings.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }

    /// Per-bin `(epsilon_bin_center, <value>, <variance>, count)`.
    pub fn from_binned(stat: &BinnedStatistic, value: &str, variance: &str) -> Self {
        let mut t = Table::new(&["epsilon_bin_center", value, variance, "count"]);
        for (c, b) in stat.centers().iter().zip(&stat.bins) {
            t.push(vec![fmt_f64(*c), fmt_opt(b.mean), fmt_opt(b.variance), b.count.to_string()]);
        }
        t
    }
}

/// Rows of a CSV file as string maps keyed by header.
pub fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut r = csv::Reader::from_path(path).map_err(|e| crate::Error::Cache {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    let header = r
        .headers()
        .map_err(|e| crate::Error::Config(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| crate::Error::Config(format!("{}: {e}", path.display())))?;
        rows.push(rec.iter().map(str::to_string).collect());
    }
    Ok((header, rows))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileRecord {
    /// Relative to the output directory, `/`-separated.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes `bytes` to `root/relative` and returns its record.
pub fn emit_file(root: &Path, relative: &str, bytes: &[u8]) -> Result<FileRecord> {
    let path = root.join(relative);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(&path, bytes)?;
    Ok(FileRecord {
        path: relative.to_string(),
        sha256: sha256_hex(bytes),
        bytes: bytes.len() as u64,
    })
}

/// Compact, deterministic float token for identifiers: shortest round-trip
/// form with `-` kept and `.` as is.
pub fn id_float(x: f64) -> String {
    let s = format!("{x}");
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_has_17_significant_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(-2.5), "-2.5000000000000000e0");
        assert_eq!(fmt_f64(0.0), "0.0000000000000000e0");
        assert_eq!(fmt_opt(None), "");
        for x in [std::f64::consts::PI, 1e-300, 6.02e23, -7.0 / 3.0] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn table_rendering() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec!["1".into(), fmt_f64(0.5)]);
        assert_eq!(String::from_utf8(t.to_bytes()).unwrap(), "a,b\n1,5.0000000000000000e-1\n");
    }

    #[test]
    fn ids() {
        assert_eq!(id_float(1.0), "1");
        assert_eq!(id_float(0.65), "0.65");
        assert_eq!(id_float(-0.0), "0");
        assert_eq!(id_float(-5.0), "-5");
    }

    #[test]
    fn emit_and_read_back() {
        let dir = tempfile::tempdir().unwrap();
        let mut t = Table::new(&["x"]);
        t.push(vec!["3".into()]);
        let rec = emit_file(dir.path(), "sub/t.csv", &t.to_bytes()).unwrap();
        assert_eq!(rec.bytes, 4);
        let (h, rows) = read_table(&dir.path().join("sub/t.csv")).unwrap();
        assert_eq!((h, rows), (vec!["x".to_string()], vec![vec!["3".to_string()]]));
    }
}
