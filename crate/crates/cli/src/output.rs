use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use toml::{Table, Value};

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(u64),
    Float(f64),
}

impl Cell {
    fn render(&self, out: &mut String) {
        // 17 significant digits.
        let _ = match self {
            Cell::Int(v) => write!(out, "{v}"),
            Cell::Float(v) => write!(out, "{:.16e}", v + 0.0),
        };
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CsvTable {
    header: Vec<String>,
    rows: Vec<Vec<Cell>>,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for row in &self.rows {
            for (i, c) in row.iter().enumerate() {
                if i > 0 {
                    s.push(',');
                }
                c.render(&mut s);
            }
            s.push('\n');
        }
        s
    }
}

pub fn write_csv(path: &Path, table: &CsvTable) -> std::io::Result<()> {
    fs::write(path, table.render())
}

pub struct Meta<'a> {
    pub version: &'a str,
    pub wall_time: f64,
    pub workers: usize,
    pub config: Table,
    pub results: Table,
    pub violations: &'a [String],
    pub files: Vec<String>,
}

pub fn write_meta(path: &Path, meta: Meta<'_>) -> std::io::Result<()> {
    let mut run = Table::new();
    run.insert("version".into(), Value::String(meta.version.into()));
    run.insert("wall_time_seconds".into(), Value::Float(meta.wall_time));
    run.insert("worker_threads".into(), Value::Integer(meta.workers as i64));
    run.insert("files".into(), Value::Array(meta.files.into_iter().map(Value::String).collect()));
    run.insert("violations".into(), Value::Array(meta.violations.iter().cloned().map(Value::String).collect()));
    let mut doc = Table::new();
    doc.insert("run".into(), Value::Table(run));
    doc.insert("config".into(), Value::Table(meta.config));
    if !meta.results.is_empty() {
        doc.insert("results".into(), Value::Table(meta.results));
    }
    let text = toml::to_string(&doc).map_err(std::io::Error::other)?;
    fs::write(path, text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_float_format() {
        let mut t = CsvTable::new(&["a", "b"]);
        t.push(vec![Cell::Int(3), Cell::Float(0.1)]);
        t.push(vec![Cell::Int(0), Cell::Float(f64::NAN)]);
        t.push(vec![Cell::Int(1), Cell::Float(-0.0)]);
        assert_eq!(t.render(), "a,b\n3,1.0000000000000001e-1\n0,NaN\n1,0.0000000000000000e0\n");
    }
}
