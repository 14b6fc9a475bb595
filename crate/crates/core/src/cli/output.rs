use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::OutputFormat;
use super::CliError;
use crate::analytics::IterationTrace;

/// Shortest decimal string that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

/// `x` rounded to `digits` significant digits, trailing zeros dropped, in
/// positional notation when the exponent is moderate.
pub fn fmt_sig(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.*e}", digits.saturating_sub(1), x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let (sign, mantissa) = match mantissa.strip_prefix('-') {
        Some(rest) => ("-", rest),
        None => ("", mantissa),
    };
    let all: String = mantissa.chars().filter(|c| *c != '.').collect();
    if !(-5..digits as i32).contains(&exp) {
        let trimmed = mantissa.trim_end_matches('0').trim_end_matches('.');
        return format!("{sign}{trimmed}e{exp}");
    }
    let body = if exp < 0 {
        format!("0.{}{}", "0".repeat((-exp - 1) as usize), all)
    } else {
        let split = exp as usize + 1;
        format!("{}.{}", &all[..split], &all[split..])
    };
    let body = body.trim_end_matches('0').trim_end_matches('.');
    format!("{sign}{body}")
}

/// Writes the files of one command into the output directory and remembers
/// their names for the manifest.
#[derive(Debug)]
pub struct Artifacts {
    dir: PathBuf,
    format: OutputFormat,
    files: Vec<String>,
}

impl Artifacts {
    pub fn new(dir: &Path, format: OutputFormat) -> Result<Self, CliError> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            format,
            files: Vec::new(),
        })
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }

    fn write(&mut self, name: String, body: String) -> Result<(), CliError> {
        fs::write(self.dir.join(&name), body)?;
        self.files.push(name);
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut body = serde_json::to_string_pretty(value)
            .map_err(|e| CliError::Failed(format!("serializing {name}: {e}")))?;
        body.push('\n');
        self.write(name.to_string(), body)
    }

    /// `header` names the columns; each row is rendered with [`fmt_f64`]
    /// except integral columns, which are given already formatted.
    pub fn table(
        &mut self,
        stem: &str,
        header: &[&str],
        rows: &[Vec<Cell>],
    ) -> Result<(), CliError> {
        match self.format {
            OutputFormat::Csv => {
                let mut body = header.join(",");
                body.push('\n');
                for row in rows {
                    let line: Vec<String> = row.iter().map(Cell::render).collect();
                    let _ = writeln!(body, "{}", line.join(","));
                }
                self.write(format!("{stem}.csv"), body)
            }
            OutputFormat::Json => {
                let objects: Vec<serde_json::Map<String, serde_json::Value>> = rows
                    .iter()
                    .map(|row| {
                        header
                            .iter()
                            .zip(row)
                            .map(|(h, c)| (h.to_string(), c.json()))
                            .collect()
                    })
                    .collect();
                self.json(&format!("{stem}.json"), &objects)
            }
        }
    }

    pub fn trace(&mut self, stem: &str, trace: &IterationTrace) -> Result<(), CliError> {
        let rows: Vec<Vec<Cell>> = trace
            .records
            .iter()
            .map(|r| {
                vec![
                    Cell::Int(r.n as u64),
                    Cell::Real(r.mean),
                    Cell::Real(r.survival),
                    Cell::Real(r.h_m),
                    Cell::Real(r.h1_m),
                    Cell::Real(r.delta),
                    Cell::Real(r.defect),
                ]
            })
            .collect();
        self.table(stem, &TRACE_HEADER, &rows)
    }
}

pub const TRACE_HEADER: [&str; 7] = ["n", "mean", "survival", "h_m", "h1_m", "delta", "defect"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Int(u64),
    Real(f64),
}

impl Cell {
    fn render(&self) -> String {
        match *self {
            Cell::Int(v) => v.to_string(),
            Cell::Real(v) => fmt_f64(v),
        }
    }

    fn json(&self) -> serde_json::Value {
        match *self {
            Cell::Int(v) => v.into(),
            Cell::Real(v) => v.into(),
        }
    }
}
