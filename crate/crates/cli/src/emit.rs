//! Report values and their JSON / CSV rendering.

use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use anyhow::{Context, Result};
use clap::ValueEnum;
use serde::Serialize;
use serde_json::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Rows for `--format csv`.
#[derive(Clone, Debug, Default)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(headers: &[&str]) -> Self {
        Table {
            headers: headers.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push<I, T>(&mut self, row: I)
    where
        I: IntoIterator<Item = T>,
        T: ToString,
    {
        self.rows
            .push(row.into_iter().map(|c| c.to_string()).collect());
    }

    pub fn key_values(rows: Vec<(String, String)>) -> Self {
        let mut t = Table::new(&["key", "value"]);
        for (k, v) in rows {
            t.push([k, v]);
        }
        t
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.headers)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// What a subcommand produced. A report with a `violation` is still
/// written out, then the process exits nonzero.
#[derive(Debug)]
pub struct Report {
    pub json: Value,
    pub table: Table,
    pub violation: Option<String>,
}

impl Report {
    pub fn new<T: Serialize>(json: &T, table: Table) -> Self {
        Report {
            json: serde_json::to_value(json).expect("plain data"),
            table,
            violation: None,
        }
    }

    pub fn violation(mut self, why: impl Into<String>) -> Self {
        self.violation = Some(why.into());
        self
    }

    pub fn write(&self, format: Format, out: Option<&Path>) -> Result<()> {
        match out {
            Some(path) => {
                let file =
                    File::create(path).with_context(|| format!("creating {}", path.display()))?;
                self.render(format, io::BufWriter::new(file))
            }
            None => self.render(format, io::stdout().lock()),
        }
    }

    fn render<W: Write>(&self, format: Format, mut out: W) -> Result<()> {
        match format {
            Format::Json => {
                serde_json::to_writer_pretty(&mut out, &self.json)?;
                writeln!(out)?;
                out.flush()?;
                Ok(())
            }
            Format::Csv => self.table.write_csv(out),
        }
    }
}

/// Serialize `rows` as CSV to `path`.
pub fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w =
        csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
