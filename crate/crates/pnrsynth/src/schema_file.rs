//! Schema sidecar: one column per line,
//! `column=<name>;kind=<numerical|categorical|binary>;range=<lo>:<hi>|levels=<l1|l2|...>;nullable=<0|1>;segment=<TAG>:<element>`.
//! Blank lines and lines starting with `#` are ignored.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use pnrsynth_core::data::{ColumnKind, ColumnSpec, Schema, SegmentRef};

use crate::error::{Error, ParseError, Result, WithPath};

/// Splits `k1=v1;k2=v2` into pairs, rejecting duplicates and unknown keys.
pub(crate) fn fields<'a>(line: &'a str, known: &[&str]) -> Result<Vec<(&'a str, &'a str)>, String> {
    let mut out: Vec<(&str, &str)> = Vec::new();
    for part in line.split(';') {
        let (k, v) = part.split_once('=').ok_or_else(|| format!("`{part}` is not key=value"))?;
        if !known.contains(&k) {
            return Err(format!("unknown key `{k}`"));
        }
        if out.iter().any(|(seen, _)| *seen == k) {
            return Err(format!("duplicate key `{k}`"));
        }
        out.push((k, v));
    }
    Ok(out)
}

pub(crate) fn get<'a>(fields: &[(&str, &'a str)], key: &str) -> Result<&'a str, String> {
    fields.iter().find(|(k, _)| *k == key).map(|(_, v)| *v).ok_or_else(|| format!("missing key `{key}`"))
}

pub(crate) fn parse_flag(v: &str) -> Result<bool, String> {
    match v {
        "0" => Ok(false),
        "1" => Ok(true),
        _ => Err(format!("expected 0 or 1, got `{v}`")),
    }
}

pub(crate) fn parse_num<T: std::str::FromStr>(v: &str) -> Result<T, String> {
    v.parse().map_err(|_| format!("cannot parse `{v}`"))
}

pub(crate) fn parse_column(line: &str) -> Result<ColumnSpec, String> {
    let f = fields(line, &["column", "kind", "range", "levels", "nullable", "segment"])?;
    let name = get(&f, "column")?;
    let nullable = parse_flag(get(&f, "nullable")?)?;
    let levels = || get(&f, "levels").map(|l| l.split('|').map(String::from).collect::<Vec<_>>());
    let kind = match get(&f, "kind")? {
        "numerical" => {
            let (lo, hi) = get(&f, "range")?.split_once(':').ok_or("range must be <lo>:<hi>")?;
            ColumnKind::Numerical { lo: parse_num(lo)?, hi: parse_num(hi)? }
        }
        "categorical" => ColumnKind::Categorical { levels: levels()? },
        "binary" => ColumnKind::Binary { levels: levels()? },
        other => return Err(format!("unknown kind `{other}`")),
    };
    let segment = match f.iter().find(|(k, _)| *k == "segment") {
        None => None,
        Some((_, v)) => {
            let (tag, element) = v.split_once(':').ok_or("segment must be <TAG>:<element>")?;
            Some(SegmentRef { tag: tag.to_string(), element: parse_num(element)? })
        }
    };
    Ok(ColumnSpec { name: name.to_string(), kind, nullable, segment })
}

pub(crate) fn format_column(out: &mut String, c: &ColumnSpec) {
    write!(out, "column={};", c.name).unwrap();
    match &c.kind {
        ColumnKind::Numerical { lo, hi } => write!(out, "kind=numerical;range={lo}:{hi}"),
        ColumnKind::Categorical { levels } => write!(out, "kind=categorical;levels={}", levels.join("|")),
        ColumnKind::Binary { levels } => write!(out, "kind=binary;levels={}", levels.join("|")),
    }
    .unwrap();
    write!(out, ";nullable={}", c.nullable as u8).unwrap();
    if let Some(s) = &c.segment {
        write!(out, ";segment={}:{}", s.tag, s.element).unwrap();
    }
    out.push('\n');
}

/// Lines worth parsing, with 1-based line numbers.
pub(crate) fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

pub fn parse_schema(text: &str) -> Result<Arc<Schema>, ParseError> {
    let mut columns = Vec::new();
    for (n, line) in content_lines(text) {
        columns.push(parse_column(line).map_err(|m| ParseError::Line(n, m))?);
    }
    Ok(Arc::new(Schema::new(columns)?))
}

pub fn format_schema(schema: &Schema) -> String {
    let mut out = String::new();
    for c in schema.columns() {
        format_column(&mut out, c);
    }
    out
}

pub fn load_schema(path: &Path) -> Result<Arc<Schema>> {
    let text = std::fs::read_to_string(path).map_err(Error::io(path))?;
    parse_schema(&text).at(path)
}

pub fn write_schema(schema: &Schema, path: &Path) -> Result<()> {
    std::fs::write(path, format_schema(schema)).map_err(Error::io(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use pnrsynth_core::data::pnr_schema;

    #[test]
    fn pnr_schema_round_trips() {
        let s = pnr_schema();
        let text = format_schema(&s);
        assert!(text.starts_with("column=CountryOrigin;kind=categorical;levels="));
        assert!(text.contains("column=Age;kind=numerical;range=0:99;nullable=1;segment=AGE:1\n"));
        assert_eq!(parse_schema(&text).unwrap(), s);
    }

    #[test]
    fn keys_may_come_in_any_order_and_segment_is_optional() {
        let s = parse_schema("# comment\n\nkind=binary;nullable=0;levels=a|b;column=x\ncolumn=y;kind=numerical;range=-1.5:2;nullable=1\n")
            .unwrap();
        assert_eq!(s.column(0), &ColumnSpec::binary("x", ["a", "b"], false));
        assert_eq!(s.column(1), &ColumnSpec::numerical("y", -1.5, 2.0, true));
    }

    #[test]
    fn rejects_bad_lines() {
        for (text, line) in [
            ("column=x;kind=numerical;range=1:0;nullable=0", None),
            ("column=x;kind=binary;levels=a|b|c;nullable=0", None),
            ("column=x;kind=numeric;range=0:1;nullable=0", Some(1)),
            ("column=x;kind=numerical;range=0-1;nullable=0", Some(1)),
            ("\ncolumn=x;kind=numerical;range=0:1;nullable=2", Some(2)),
            ("column=x;kind=numerical;range=0:1;nullable=0;color=red", Some(1)),
            ("column=x;column=y;kind=numerical;range=0:1;nullable=0", Some(1)),
        ] {
            match (parse_schema(text), line) {
                (Err(ParseError::Line(n, _)), Some(l)) => assert_eq!(n, l, "{text}"),
                (Err(ParseError::Core(_)), None) => {}
                (r, _) => panic!("{text}: {r:?}"),
            }
        }
    }
}
