//! Uniform table output as aligned text, CSV or JSON.

use std::fmt::Write as _;

use charsum_core::Rational;
use clap::ValueEnum;
use serde_json::{json, Map, Value};

pub const SCHEMA_VERSION: &str = "v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Csv,
    Json,
}

#[derive(Debug, Clone)]
pub enum Cell {
    Int(i128),
    Float(f64),
    Rat(Rational),
    Bool(bool),
    Str(String),
    Null,
}

impl From<i128> for Cell {
    fn from(v: i128) -> Self {
        Cell::Int(v)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i128)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<Rational> for Cell {
    fn from(v: Rational) -> Self {
        Cell::Rat(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Str(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Str(v.to_string())
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Null, Into::into)
    }
}

/// `%.12g`: twelve significant digits, trailing zeros removed, exponent form
/// outside `[1e-5, 1e12)`.
pub fn fmt_g12(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let sci = format!("{v:.11e}");
    let (mant, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent digits");
    if !(-5..12).contains(&exp) {
        let mant = trim_zeros(mant);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{mant}e{sign}{:02}", exp.abs());
    }
    let prec = (11 - exp).max(0) as usize;
    trim_zeros(&format!("{v:.prec$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

impl Cell {
    fn text(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => fmt_g12(*v),
            Cell::Rat(r) => r.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Str(s) => s.clone(),
            Cell::Null => String::new(),
        }
    }

    fn csv(&self) -> String {
        let t = self.text();
        if t.contains([',', '"', '\n']) {
            format!("\"{}\"", t.replace('"', "\"\""))
        } else {
            t
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(v) => match i64::try_from(*v) {
                Ok(x) => json!(x),
                Err(_) => json!(v.to_string()),
            },
            // round-trips through the 12-digit rendering so JSON and CSV agree
            Cell::Float(v) if v.is_finite() => json!(fmt_g12(*v).parse::<f64>().expect("float")),
            Cell::Float(v) => json!(v.to_string()),
            Cell::Rat(r) => json!(r.to_string()),
            Cell::Bool(b) => json!(b),
            Cell::Str(s) => json!(s),
            Cell::Null => Value::Null,
        }
    }
}

/// One command's result: named columns, rows, and free-form notes for the
/// text rendering.
#[derive(Debug, Clone)]
pub struct Table {
    pub command: &'static str,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    pub notes: Vec<String>,
}

impl Table {
    pub fn new(command: &'static str, columns: &[&'static str]) -> Self {
        Table { command, columns: columns.to_vec(), rows: Vec::new(), notes: Vec::new() }
    }

    pub fn row(&mut self, cells: Vec<Cell>) {
        debug_assert_eq!(cells.len(), self.columns.len());
        self.rows.push(cells);
    }

    pub fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => {
                let mut out = self.columns.join(",");
                out.push('\n');
                for r in &self.rows {
                    let line: Vec<String> = r.iter().map(Cell::csv).collect();
                    out.push_str(&line.join(","));
                    out.push('\n');
                }
                out
            }
            Format::Json => {
                let rows: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|r| {
                        let mut m = Map::new();
                        for (c, v) in self.columns.iter().zip(r) {
                            m.insert(c.to_string(), v.json());
                        }
                        Value::Object(m)
                    })
                    .collect();
                let doc = json!({
                    "schema": SCHEMA_VERSION,
                    "command": self.command,
                    "columns": self.columns,
                    "rows": rows,
                    "notes": self.notes,
                });
                let mut s = serde_json::to_string_pretty(&doc).expect("json");
                s.push('\n');
                s
            }
            Format::Text => {
                let cells: Vec<Vec<String>> = self.rows.iter().map(|r| r.iter().map(Cell::text).collect()).collect();
                let mut widths: Vec<usize> = self.columns.iter().map(|c| c.chars().count()).collect();
                for r in &cells {
                    for (w, c) in widths.iter_mut().zip(r) {
                        *w = (*w).max(c.chars().count());
                    }
                }
                let mut out = String::new();
                for n in &self.notes {
                    let _ = writeln!(out, "{n}");
                }
                if !self.rows.is_empty() {
                    let line = |items: Vec<&str>| {
                        items
                            .iter()
                            .zip(&widths)
                            .map(|(s, w)| format!("{s:>w$}", w = *w))
                            .collect::<Vec<_>>()
                            .join("  ")
                    };
                    let _ = writeln!(out, "{}", line(self.columns.clone()));
                    for r in &cells {
                        let _ = writeln!(out, "{}", line(r.iter().map(String::as_str).collect()));
                    }
                }
                out
            }
        }
    }
}
