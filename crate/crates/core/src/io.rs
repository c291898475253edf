//! Plain-text file formats.
//!
//! * Signal files: UTF-8 CSV with header `index,re,im`, one entry per line with a
//!   0-based index. Absent lines or non-finite values mark unobserved entries.
//! * Mask files: one 0-based index per line.
//! * Configuration: JSON object with the field names of [`HsgdConfig`].

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::mask::ObservationMask;
use crate::solver::HsgdConfig;
use crate::C64;

pub const SIGNAL_HEADER: &str = "index,re,im";

/// Entries read from a signal file, indexed densely; missing entries are NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalFile {
    pub values: Vec<C64>,
}

impl SignalFile {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Indices holding finite values.
    pub fn finite_indices(&self) -> Vec<usize> {
        (0..self.values.len())
            .filter(|&i| self.values[i].is_finite())
            .collect()
    }
}

fn parse_err(path: &str, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_string(),
        line,
        msg: msg.into(),
    }
}

/// Parses signal CSV text. `length` fixes `n`; otherwise `n` is one past the largest index.
pub fn parse_signal(text: &str, origin: &str, length: Option<usize>) -> Result<SignalFile> {
    let mut entries: Vec<(usize, C64, usize)> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = raw.trim();
        if line.is_empty() || (lineno == 1 && line.replace(' ', "") == SIGNAL_HEADER) {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(parse_err(
                origin,
                lineno,
                format!("expected 3 fields `index,re,im`, found {}", fields.len()),
            ));
        }
        let index = fields[0]
            .parse::<usize>()
            .map_err(|e| parse_err(origin, lineno, format!("bad index `{}`: {e}", fields[0])))?;
        let re = fields[1].parse::<f64>().map_err(|e| {
            parse_err(
                origin,
                lineno,
                format!("bad real part `{}`: {e}", fields[1]),
            )
        })?;
        let im = fields[2].parse::<f64>().map_err(|e| {
            parse_err(
                origin,
                lineno,
                format!("bad imaginary part `{}`: {e}", fields[2]),
            )
        })?;
        entries.push((index, C64::new(re, im), lineno));
    }
    let n = match length {
        Some(n) => n,
        None => entries.iter().map(|e| e.0 + 1).max().unwrap_or(0),
    };
    if n == 0 {
        return Err(parse_err(origin, 1, "no signal entries"));
    }
    let mut values = vec![C64::new(f64::NAN, f64::NAN); n];
    let mut seen = vec![false; n];
    for (index, value, lineno) in entries {
        if index >= n {
            return Err(parse_err(
                origin,
                lineno,
                format!("index {index} exceeds length {n}"),
            ));
        }
        if std::mem::replace(&mut seen[index], true) {
            return Err(parse_err(
                origin,
                lineno,
                format!("duplicate index {index}"),
            ));
        }
        values[index] = value;
    }
    Ok(SignalFile { values })
}

pub fn read_signal(path: &Path, length: Option<usize>) -> Result<SignalFile> {
    let text = fs::read_to_string(path)?;
    parse_signal(&text, &path.display().to_string(), length)
}

pub fn format_signal(values: &[C64]) -> String {
    let mut out = String::with_capacity(32 * values.len() + 16);
    out.push_str(SIGNAL_HEADER);
    out.push('\n');
    for (i, v) in values.iter().enumerate() {
        let _ = writeln!(out, "{i},{},{}", v.re, v.im);
    }
    out
}

pub fn write_signal(path: &Path, values: &[C64]) -> Result<()> {
    fs::write(path, format_signal(values))?;
    Ok(())
}

pub fn parse_mask(text: &str, origin: &str, n: usize) -> Result<ObservationMask> {
    let mut indices = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let i = line
            .parse::<usize>()
            .map_err(|e| parse_err(origin, lineno + 1, format!("bad index `{line}`: {e}")))?;
        if i >= n {
            return Err(parse_err(
                origin,
                lineno + 1,
                format!("index {i} out of range for signal length {n}"),
            ));
        }
        indices.push(i);
    }
    ObservationMask::new(indices, n).map_err(|e| parse_err(origin, 0, e.to_string()))
}

pub fn read_mask(path: &Path, n: usize) -> Result<ObservationMask> {
    let text = fs::read_to_string(path)?;
    parse_mask(&text, &path.display().to_string(), n)
}

pub fn format_mask(mask: &ObservationMask) -> String {
    let mut out = String::new();
    for i in mask.indices() {
        let _ = writeln!(out, "{i}");
    }
    out
}

pub fn write_mask(path: &Path, mask: &ObservationMask) -> Result<()> {
    fs::write(path, format_mask(mask))?;
    Ok(())
}

pub fn read_config(path: &Path) -> Result<HsgdConfig> {
    let text = fs::read_to_string(path)?;
    let cfg: HsgdConfig = serde_json::from_str(&text)?;
    Ok(cfg)
}
