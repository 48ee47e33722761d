//! CSV tables with fixed headers, `%g`-style floats and atomic file writes.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::{Error, Result};

/// Significant digits used for every float written to disk.
pub const FLOAT_DIGITS: usize = 9;

/// Formats like C's `%.9g`: fixed notation for exponents in `[-4, 9)`,
/// scientific otherwise, trailing zeros trimmed.
pub fn fmt_float(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", FLOAT_DIGITS - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..FLOAT_DIGITS as i32).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{m}e{sign}{:02}", exp.abs());
    }
    let decimals = (FLOAT_DIGITS as i32 - 1 - exp).max(0) as usize;
    trim_zeros(&format!("{:.*}", decimals, v)).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// An in-memory table written in one shot.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
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

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    fn render(&self) -> String {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
    }

    /// `None` for an empty text or rows whose width differs from the header.
    pub fn parse(text: &str) -> Option<Self> {
        let mut r = csv::ReaderBuilder::new().has_headers(false).from_reader(text.as_bytes());
        let mut records = r.records();
        let header: Vec<String> = records.next()?.ok()?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for rec in records {
            rows.push(rec.ok()?.iter().map(str::to_string).collect());
        }
        Some(Self { header, rows })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::parse(&text).ok_or_else(|| Error::Csv {
            path: path.to_path_buf(),
            reason: "ragged or empty table".into(),
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.render().as_bytes())
    }

    /// Parses column `name` of every row as f64.
    pub fn f64_column(&self, name: &str) -> Option<Vec<f64>> {
        let c = self.column(name)?;
        self.rows.iter().map(|r| r[c].parse().ok()).collect()
    }
}

impl fmt::Display for CsvTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// Writes to a sibling temp file and renames it into place, so readers never
/// observe a half-written file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let tmp = tmp_path(path);
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

fn tmp_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".tmp");
    path.with_file_name(name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_match_printf_g() {
        // Expected strings are what `printf '%.9g'` prints.
        let cases = [
            (1.0, "1"),
            (-0.25, "-0.25"),
            (0.1, "0.1"),
            (1.0 / 3.0, "0.333333333"),
            (123456789.0, "123456789"),
            (1234567890.0, "1.23456789e+09"),
            (0.0001, "0.0001"),
            (0.00001, "1e-05"),
            (2.5e-7, "2.5e-07"),
            (-1e20, "-1e+20"),
            (99.99999999, "100"),
            (f64::NAN, "nan"),
        ];
        for (v, s) in cases {
            assert_eq!(fmt_float(v), s, "{v}");
        }
    }

    #[test]
    fn round_trip_is_close() {
        for v in [std::f64::consts::PI, -7.123456789123e-3, 4.2e11] {
            let back: f64 = fmt_float(v).parse().unwrap();
            assert!(((back - v) / v).abs() < 1e-8);
        }
    }

    #[test]
    fn atomic_write_and_parse() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/t.csv");
        let mut t = CsvTable::new(&["a", "b"]);
        t.push(vec!["1".into(), fmt_float(0.5)]);
        t.write(&p).unwrap();
        assert!(!dir.path().join("sub/t.csv.tmp").exists());
        let back = CsvTable::read(&p).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.f64_column("b").unwrap(), vec![0.5]);
        assert!(CsvTable::parse("a,b\n1\n").is_none());
        assert!(CsvTable::parse("").is_none());
    }
}
