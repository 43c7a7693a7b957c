//! Comma-separated datasets: header of column names, one row per line, empty
//! field for `Missing`, no quoting.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use pnrsynth_core::data::{Cell, ColumnKind, Dataset, Schema};

use crate::error::{Error, ParseError, Result, WithPath};

/// Typed cell from its text under column `j`, or a message naming the problem.
pub(crate) fn parse_cell(schema: &Schema, j: usize, text: &str) -> Result<Cell, String> {
    let spec = schema.column(j);
    if text.is_empty() {
        return if spec.nullable { Ok(Cell::Missing) } else { Err("missing value in non-nullable column".into()) };
    }
    match &spec.kind {
        ColumnKind::Numerical { lo, hi } => {
            let v: f64 = text.parse().map_err(|_| format!("cannot parse `{text}` as a number"))?;
            if !(v >= *lo && v <= *hi) {
                return Err(format!("value {v} outside [{lo}, {hi}]"));
            }
            Ok(Cell::Numeric(v))
        }
        ColumnKind::Categorical { levels } | ColumnKind::Binary { levels } => levels
            .iter()
            .position(|l| l == text)
            .map(|i| Cell::Categorical(i as u32))
            .ok_or_else(|| format!("unknown level `{text}`")),
    }
}

/// Parses CSV text; errors carry the 1-based line and the column name.
pub fn parse_csv(text: &str, schema: &Arc<Schema>) -> Result<Dataset, ParseError> {
    let mut lines: Vec<&str> = text.split('\n').map(|l| l.strip_suffix('\r').unwrap_or(l)).collect();
    if lines.last() == Some(&"") {
        lines.pop();
    }
    let Some((header, body)) = lines.split_first() else {
        return Err(ParseError::Line(1, "missing header row".into()));
    };
    let names: Vec<&str> = header.split(',').collect();
    if !names.iter().copied().eq(schema.names()) {
        let expected: Vec<&str> = schema.names().collect();
        return Err(ParseError::Line(1, format!("header `{header}` does not match schema columns `{}`", expected.join(","))));
    }
    let mut d = Dataset::empty(schema.clone());
    let mut row = Vec::with_capacity(schema.len());
    for (i, line) in body.iter().enumerate() {
        let lineno = i + 2;
        row.clear();
        for (j, field) in line.split(',').enumerate() {
            if j >= schema.len() {
                return Err(ParseError::Line(lineno, format!("more than {} fields", schema.len())));
            }
            let cell = parse_cell(schema, j, field)
                .map_err(|msg| ParseError::Line(lineno, format!("column `{}`: {msg}", schema.column(j).name)))?;
            row.push(cell);
        }
        if row.len() != schema.len() {
            return Err(ParseError::Line(lineno, format!("expected {} fields, got {}", schema.len(), row.len())));
        }
        d.push_row(&row).map_err(|e| ParseError::Line(lineno, e.to_string()))?;
    }
    Ok(d)
}

/// CSV text of `d`, ending with a newline.
pub fn format_csv(d: &Dataset) -> String {
    let schema = d.schema();
    let mut out = schema.names().collect::<Vec<_>>().join(",");
    out.push('\n');
    for row in d.rows() {
        for (j, &cell) in row.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            match cell {
                Cell::Missing => {}
                Cell::Numeric(v) => write!(out, "{v}").unwrap(),
                Cell::Categorical(l) => out.push_str(&schema.column(j).levels().unwrap()[l as usize]),
            }
        }
        out.push('\n');
    }
    out
}

pub fn load_csv(path: &Path, schema: &Arc<Schema>) -> Result<Dataset> {
    let text = std::fs::read_to_string(path).map_err(Error::io(path))?;
    parse_csv(&text, schema).at(path)
}

pub fn write_csv(d: &Dataset, path: &Path) -> Result<()> {
    std::fs::write(path, format_csv(d)).map_err(Error::io(path))
}
