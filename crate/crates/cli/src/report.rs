//! Report assembly and the three output formats.

use crate::CliError;
use lzeta::zeta::CValue;
use num_complex::Complex64;
use serde_json::{json, Value};

/// The result of a command in every format it supports.
pub struct Report {
    pub json: Value,
    pub text: String,
    /// Header and rows of the sweep, for commands that produce one.
    pub csv: Option<(Vec<String>, Vec<Vec<String>>)>,
    /// Failed cross-checks; a non-empty list turns into exit code 3 after
    /// the report is written.
    pub failures: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Text,
    Csv,
}

impl Format {
    pub fn parse(s: &str) -> Result<Format, CliError> {
        match s {
            "json" => Ok(Format::Json),
            "text" => Ok(Format::Text),
            "csv" => Ok(Format::Csv),
            other => Err(CliError::Validation(format!("unknown format '{other}'"))),
        }
    }
}

impl Report {
    pub fn render(&self, format: Format) -> Result<String, CliError> {
        match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&self.json).map_err(|e| CliError::Numerical(e.to_string()))?;
                s.push('\n');
                Ok(s)
            }
            Format::Text => Ok(self.text.clone()),
            Format::Csv => {
                let Some((header, rows)) = &self.csv else {
                    return Err(CliError::Validation("this command has no sweep data; use json or text".into()));
                };
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(header).map_err(|e| CliError::Numerical(e.to_string()))?;
                for r in rows {
                    w.write_record(r).map_err(|e| CliError::Numerical(e.to_string()))?;
                }
                let bytes = w.into_inner().map_err(|e| CliError::Numerical(e.to_string()))?;
                Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
            }
        }
    }
}

/// `{value, error}` for a real quantity.
pub fn real(value: f64, error: f64) -> Value {
    // + 0.0 turns -0.0 into 0.0
    json!({ "value": value + 0.0, "error": error })
}

/// `{re, im, error}` for a complex quantity.
pub fn complex(v: CValue) -> Value {
    json!({ "re": v.value.re + 0.0, "im": v.value.im + 0.0, "error": v.error })
}

pub fn fmt_real(x: f64) -> String {
    format!("{x:+.12e}")
}

pub fn fmt_complex(z: Complex64) -> String {
    format!("{:+.12e} {:+.12e}i", z.re, z.im)
}

pub fn fmt_err(e: f64) -> String {
    format!("{e:.2e}")
}

/// Left-aligned columns separated by two spaces.
pub fn table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut width: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (w, cell) in width.iter_mut().zip(r) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: Vec<&str>| -> String {
        let mut s = String::new();
        for (i, (c, w)) in cells.iter().zip(&width).enumerate() {
            if i > 0 {
                s.push_str("  ");
            }
            s.push_str(c);
            if i + 1 < cells.len() {
                s.extend(std::iter::repeat_n(' ', w - c.chars().count()));
            }
        }
        s.push('\n');
        s
    };
    let mut out = line(header.to_vec());
    let rule: Vec<String> = width.iter().map(|w| "-".repeat(*w)).collect();
    out.push_str(&line(rule.iter().map(String::as_str).collect()));
    for r in rows {
        out.push_str(&line(r.iter().map(String::as_str).collect()));
    }
    out
}

pub fn verdict(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "FAIL"
    }
}
