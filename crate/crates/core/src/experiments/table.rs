//! Column-oriented result table with CSV serialization.

use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Result curve: one row per grid point, plus `key=value` metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub metadata: Vec<(String, String)>,
}

impl CurveTable {
    pub fn new(columns: Vec<String>) -> Self {
        Self { columns, rows: Vec::new(), metadata: Vec::new() }
    }

    pub fn push_row(&mut self, row: Vec<f64>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::Dimension(format!("row has {} values for {} columns", row.len(), self.columns.len())));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn with_meta(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.metadata.push((key.into(), value.into()));
        self
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    /// Metadata as `# key=value` lines, then the header and the rows.
    /// Values use the shortest representation that parses back exactly.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.metadata {
            let _ = writeln!(s, "# {k}={v}");
        }
        let _ = writeln!(s, "{}", self.columns.join(","));
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format_value(*v)).collect();
            let _ = writeln!(s, "{}", cells.join(","));
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut metadata = Vec::new();
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = loop {
            let line = lines.next().ok_or_else(|| Error::Dimension("CSV has no header".into()))?;
            match line.strip_prefix('#') {
                Some(m) => {
                    let (k, v) = m.trim_start().split_once('=').unwrap_or((m.trim(), ""));
                    metadata.push((k.to_string(), v.to_string()));
                }
                None => break line,
            }
        };
        let columns: Vec<String> = header.split(',').map(|c| c.trim().to_string()).collect();
        let mut table = Self { columns, rows: Vec::new(), metadata };
        for line in lines {
            let row = line
                .split(',')
                .map(|c| parse_value(c.trim()))
                .collect::<Result<Vec<f64>>>()?;
            table.push_row(row)?;
        }
        Ok(table)
    }
}

fn format_value(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:?}")
    }
}

fn parse_value(s: &str) -> Result<f64> {
    match s {
        "nan" => Ok(f64::NAN),
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        _ => s.parse().map_err(|_| Error::Dimension(format!("`{s}` is not a number"))),
    }
}

/// 64-bit FNV-1a, hex encoded; a stable id for a configuration echo.
pub fn run_id(text: &str) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in text.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    format!("{h:016x}")
}
