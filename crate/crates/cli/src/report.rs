//! CSV emission and the matching reader.
//!
//! Numbers are written in scientific notation with a fixed number of
//! significant digits, comma separated, LF terminated.

use std::path::Path;

use anyhow::{Context, Result};

pub const PRECISION_ENV: &str = "ELSWAP_PRECISION";

/// Precision from the environment if set, else `configured`.
pub fn resolve_precision(configured: usize) -> Result<usize> {
    match std::env::var(PRECISION_ENV) {
        Ok(v) => {
            let p: usize = v.trim().parse().with_context(|| format!("{PRECISION_ENV}={v}"))?;
            anyhow::ensure!((1..=17).contains(&p), "{PRECISION_ENV} must lie in 1..=17, got {p}");
            Ok(p)
        }
        Err(_) => Ok(configured),
    }
}

#[derive(Debug, Clone, Copy)]
pub struct NumberFormat {
    pub significant: usize,
}

impl NumberFormat {
    pub fn format(&self, x: f64) -> String {
        format!("{:.*e}", self.significant - 1, x)
    }
}

/// A CSV cell: a number to be formatted or verbatim text.
pub enum Cell {
    Num(f64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Text(if b { "pass" } else { "fail" }.to_string())
    }
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<Cell>], fmt: NumberFormat) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .with_context(|| format!("creating {}", path.display()))?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|c| match c {
            Cell::Num(x) => fmt.format(*x),
            Cell::Text(s) => s.clone(),
        }))?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .with_context(|| format!("no column {name}"))
    }

    /// Numeric values of a column.
    pub fn numbers(&self, name: &str) -> Result<Vec<f64>> {
        let j = self.column(name)?;
        self.rows
            .iter()
            .map(|r| {
                r[j].parse::<f64>()
                    .with_context(|| format!("column {name}: {:?}", r[j]))
            })
            .collect()
    }
}

pub fn read_csv(path: &Path) -> Result<Table> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let header = r.headers()?.iter().map(str::to_string).collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|r| r.iter().map(str::to_string).collect()))
        .collect::<std::result::Result<_, _>>()?;
    Ok(Table { header, rows })
}
