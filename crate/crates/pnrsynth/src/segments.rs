//! Segment messages: one record per line, each record a run of segments
//! `TAG+elem1+elem2...'`. The schema maps `(TAG, element)` to columns.

use std::path::Path;
use std::sync::Arc;

use pnrsynth_core::data::{Cell, Dataset, Schema};

use crate::csv::parse_cell;
use crate::error::{Error, ParseError, Result, WithPath};

/// Parses one dataset row per non-blank line. Absent segments or elements
/// give `Missing`; errors name the line and the 0-based record index.
pub fn parse_pnr_segments(text: &str, schema: &Arc<Schema>) -> Result<Dataset, ParseError> {
    // Declared element count per tag.
    let mut tags: Vec<(&str, usize)> = Vec::new();
    for c in schema.columns() {
        if let Some(s) = &c.segment {
            match tags.iter_mut().find(|(t, _)| *t == s.tag) {
                Some((_, n)) => *n = (*n).max(s.element),
                None => tags.push((&s.tag, s.element)),
            }
        }
    }

    let mut d = Dataset::empty(schema.clone());
    let mut row = Vec::with_capacity(schema.len());
    let mut record = 0;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| ParseError::Line(i + 1, format!("record {record}: {msg}"));
        let Some(body) = line.strip_suffix('\'') else {
            return Err(err("record does not end with `'`".into()));
        };
        let mut seen: Vec<(&str, Vec<&str>)> = Vec::new();
        for segment in body.split('\'') {
            let mut parts = segment.split('+');
            let tag = parts.next().unwrap_or_default();
            if tag.is_empty() {
                return Err(err(format!("segment `{segment}` has no tag")));
            }
            let Some(&(_, declared)) = tags.iter().find(|(t, _)| *t == tag) else {
                return Err(err(format!("undeclared segment tag `{tag}`")));
            };
            if seen.iter().any(|(t, _)| *t == tag) {
                return Err(err(format!("duplicate segment `{tag}`")));
            }
            let elements: Vec<&str> = parts.collect();
            if elements.len() > declared {
                return Err(err(format!("segment `{tag}` has {} elements, {declared} declared", elements.len())));
            }
            seen.push((tag, elements));
        }
        row.clear();
        for (j, c) in schema.columns().iter().enumerate() {
            let text = c
                .segment
                .as_ref()
                .and_then(|s| seen.iter().find(|(t, _)| *t == s.tag)?.1.get(s.element.checked_sub(1)?).copied())
                .unwrap_or("");
            let cell: Cell = parse_cell(schema, j, text).map_err(|m| err(format!("column `{}`: {m}", c.name)))?;
            row.push(cell);
        }
        d.push_row(&row).map_err(|e| err(e.to_string()))?;
        record += 1;
    }
    Ok(d)
}

pub fn load_segments(path: &Path, schema: &Arc<Schema>) -> Result<Dataset> {
    let text = std::fs::read_to_string(path).map_err(Error::io(path))?;
    parse_pnr_segments(&text, schema).at(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use pnrsynth_core::data::{pnr_schema, ColumnSpec, COUNTRIES};

    fn two_columns() -> Arc<Schema> {
        Arc::new(
            Schema::new(vec![
                ColumnSpec::categorical("Origin", &COUNTRIES, false).with_segment("ORG", 1),
                ColumnSpec::categorical("Destination", &COUNTRIES, true).with_segment("DST", 1),
            ])
            .unwrap(),
        )
    }

    #[test]
    fn one_row_per_record() {
        let s = two_columns();
        let d = parse_pnr_segments("ORG+FR'DST+DE'\n\nDST+IT'ORG+ES'\nORG+US'\n", &s).unwrap();
        assert_eq!(d.n_rows(), 3);
        assert_eq!(d.cell_text(0, d.row(0)[0]), "FR");
        assert_eq!(d.cell_text(1, d.row(0)[1]), "DE");
        assert_eq!(d.cell_text(0, d.row(1)[0]), "ES");
        assert_eq!(d.row(2)[1], Cell::Missing);
    }

    #[test]
    fn contract_violations_name_the_record() {
        let s = two_columns();
        for (text, needle) in [
            ("ORG+FR'\nORG+FR+EXTRA'", "record 1"),
            ("ORG+FR'ORG+DE'", "duplicate"),
            ("+FR'", "no tag"),
            ("ORG+FR'XYZ+1'", "undeclared"),
            ("DST+DE'", "Origin"),
            ("ORG+XX'", "unknown level"),
            ("ORG+FR", "does not end"),
        ] {
            let e = parse_pnr_segments(text, &s).unwrap_err().to_string();
            assert!(e.contains(needle), "{text}: {e}");
        }
    }

    #[test]
    fn missing_age_segment_gives_missing_age() {
        let text = "ORG+FR'DST+DE'OFF+FR'SAT+1'ANT+10'PAX+2'STY+5'GEN+M'CHD+0'NAT+FR'SEG+0'\n";
        let d = parse_pnr_segments(text, &pnr_schema()).unwrap();
        assert_eq!(d.row(0)[9], Cell::Missing);
        assert_eq!(d.row(0)[4], Cell::Numeric(10.0));
    }
}
