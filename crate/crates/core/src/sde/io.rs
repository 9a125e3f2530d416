//! Delimited `time, X1, X2` text for observations and simulated paths.

use std::fmt::Write as _;
use std::path::Path;

use super::SdePath;
use crate::error::{Error, Result};

/// Parse rows of `time X1 X2`, separated by commas, tabs or spaces. A
/// non-numeric first row is taken as a header; `#` lines are comments.
pub fn parse_observations(text: &str) -> Result<SdePath> {
    let mut times = Vec::new();
    let mut states = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|f| !f.is_empty())
            .collect();
        let parsed: std::result::Result<Vec<f64>, _> =
            fields.iter().map(|f| f.parse::<f64>()).collect();
        match parsed {
            Ok(v) if v.len() == 3 => {
                times.push(v[0]);
                states.push([v[1], v[2]]);
            }
            Err(_) if times.is_empty() && states.is_empty() => continue,
            _ => {
                return Err(Error::Parse(format!(
                    "line {}: expected three numeric columns (time, X1, X2)",
                    idx + 1
                )))
            }
        }
    }
    if times.is_empty() {
        return Err(Error::Parse("no observations found".into()));
    }
    SdePath::observed(times, states).map_err(|e| Error::Parse(e.to_string()))
}

pub fn format_observations(path: &SdePath) -> String {
    let mut out = String::from("time,x1,x2\n");
    for (t, x) in path.times().iter().zip(path.states()) {
        let _ = writeln!(out, "{t},{},{}", x[0], x[1]);
    }
    out
}

pub fn read_observations(path: &Path) -> Result<SdePath> {
    parse_observations(&std::fs::read_to_string(path)?)
}
