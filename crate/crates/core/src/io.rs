//! Plain-text field and exponent files.
//!
//! ```text
//! vlp-field v1; n=1; L=2; N=4
//! 0.0
//! 0.5
//! 1.0
//! 0.5
//! ```
//!
//! Exponent files use the same layout with the `vlp-exponent v1` tag.
//! Values are written with Rust's shortest round-trip formatting, which is
//! locale-independent.

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::grid::{Field, Grid, GridError};

pub const FIELD_TAG: &str = "vlp-field v1";
pub const EXPONENT_TAG: &str = "vlp-exponent v1";

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Fs {
        path: String,
        source: std::io::Error,
    },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Grid(#[from] GridError),
}

fn parse_err(line: usize, msg: impl Into<String>) -> IoError {
    IoError::Parse {
        line,
        msg: msg.into(),
    }
}

/// Serializes a field with the given header tag.
pub fn format_field(field: &Field, tag: &str) -> String {
    let g = field.grid();
    let mut out = String::with_capacity(24 * field.len() + 64);
    let _ = writeln!(
        out,
        "{tag}; n={}; L={:?}; N={}",
        g.dim(),
        g.half_len(),
        g.points()
    );
    for v in field.values() {
        let _ = writeln!(out, "{v:?}");
    }
    out
}

/// Parses a field file, requiring the given header tag.
pub fn parse_field(text: &str, tag: &str) -> Result<Field, IoError> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let mut parts = header.split(';').map(str::trim);
    if parts.next() != Some(tag) {
        return Err(parse_err(1, format!("expected header tag `{tag}`")));
    }
    let (mut n, mut l, mut pts) = (None, None, None);
    for part in parts {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| parse_err(1, format!("malformed header item `{part}`")))?;
        let bad = || parse_err(1, format!("bad value for `{key}`"));
        match key.trim() {
            "n" => n = Some(value.trim().parse::<usize>().map_err(|_| bad())?),
            "L" => l = Some(value.trim().parse::<f64>().map_err(|_| bad())?),
            "N" => pts = Some(value.trim().parse::<usize>().map_err(|_| bad())?),
            other => return Err(parse_err(1, format!("unknown header key `{other}`"))),
        }
    }
    let missing = |k: &str| parse_err(1, format!("header is missing `{k}`"));
    let grid = Grid::new(
        n.ok_or_else(|| missing("n"))?,
        l.ok_or_else(|| missing("L"))?,
        pts.ok_or_else(|| missing("N"))?,
    )?;
    let values = lines
        .map(|(i, line)| {
            line.trim()
                .parse::<f64>()
                .map_err(|_| parse_err(i + 1, format!("not a number: `{}`", line.trim())))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Field::new(grid, values)?)
}

pub fn read_field(path: &Path, tag: &str) -> Result<Field, IoError> {
    let text = std::fs::read_to_string(path).map_err(|source| IoError::Fs {
        path: path.display().to_string(),
        source,
    })?;
    parse_field(&text, tag)
}

pub fn write_field(path: &Path, field: &Field, tag: &str) -> Result<(), IoError> {
    std::fs::write(path, format_field(field, tag)).map_err(|source| IoError::Fs {
        path: path.display().to_string(),
        source,
    })
}
