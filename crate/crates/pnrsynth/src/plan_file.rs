//! Text form of a fitted [`EncodingPlan`] and [`BandCodec`].
//!
//! A plan file holds the schema (sidecar lines) followed by one `coding=` line
//! per column. A codec file holds one `band=` line per discrete block.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use pnrsynth_core::data::Schema;
use pnrsynth_core::preprocess::{BandCodec, BandInterval, BlockKind, ColumnCoding, EncodingPlan};

use crate::error::{Error, ParseError, Result, WithPath};
use crate::schema_file::{content_lines, fields, format_column, get, parse_column, parse_flag, parse_num};

pub fn format_plan(plan: &EncodingPlan) -> String {
    let mut out = String::new();
    for c in plan.schema().columns() {
        format_column(&mut out, c);
    }
    for (spec, coding) in plan.schema().columns().iter().zip(plan.columns()) {
        match coding {
            ColumnCoding::Numeric { min, max, decimals, indicator } => {
                let decimals = decimals.map_or("none".to_string(), |d| d.to_string());
                writeln!(out, "coding={};type=numeric;min={min};max={max};decimals={decimals};indicator={}", spec.name, *indicator as u8)
            }
            ColumnCoding::Categorical { levels, unk } => {
                writeln!(out, "coding={};type=categorical;levels={};unk={}", spec.name, levels.join("|"), *unk as u8)
            }
        }
        .unwrap();
    }
    out
}

fn parse_coding(line: &str, expected: &str) -> Result<ColumnCoding, String> {
    let f = fields(line, &["coding", "type", "min", "max", "decimals", "indicator", "levels", "unk"])?;
    let name = get(&f, "coding")?;
    if name != expected {
        return Err(format!("coding for `{name}` where `{expected}` was expected"));
    }
    match get(&f, "type")? {
        "numeric" => Ok(ColumnCoding::Numeric {
            min: parse_num(get(&f, "min")?)?,
            max: parse_num(get(&f, "max")?)?,
            decimals: match get(&f, "decimals")? {
                "none" => None,
                d => Some(parse_num(d)?),
            },
            indicator: parse_flag(get(&f, "indicator")?)?,
        }),
        "categorical" => Ok(ColumnCoding::Categorical {
            levels: get(&f, "levels")?.split('|').map(String::from).collect(),
            unk: parse_flag(get(&f, "unk")?)?,
        }),
        other => Err(format!("unknown coding type `{other}`")),
    }
}

pub fn parse_plan(text: &str) -> Result<EncodingPlan, ParseError> {
    let mut columns = Vec::new();
    let mut codings = Vec::new();
    for (n, line) in content_lines(text) {
        if line.starts_with("column=") {
            if !codings.is_empty() {
                return Err(ParseError::Line(n, "column line after coding lines".into()));
            }
            columns.push(parse_column(line).map_err(|m| ParseError::Line(n, m))?);
        } else if line.starts_with("coding=") {
            let Some(spec) = columns.get(codings.len()) else {
                return Err(ParseError::Line(n, "more coding lines than columns".into()));
            };
            codings.push(parse_coding(line, &spec.name).map_err(|m| ParseError::Line(n, m))?);
        } else {
            return Err(ParseError::Line(n, format!("unrecognized line `{line}`")));
        }
    }
    let schema = Arc::new(Schema::new(columns)?);
    Ok(EncodingPlan::from_parts(schema, codings)?)
}

pub fn format_codec(plan: &EncodingPlan, codec: &BandCodec) -> String {
    let mut out = String::new();
    for (block, ivs) in plan.band_layout().discrete_blocks().zip(codec.intervals()) {
        let kind = if block.kind == BlockKind::Indicator { "indicator" } else { "categorical" };
        let ivs: Vec<String> = ivs.iter().map(|iv| format!("{}:{}", iv.a, iv.b)).collect();
        writeln!(out, "band={};block={kind};intervals={}", plan.schema().column(block.source).name, ivs.join("|")).unwrap();
    }
    out
}

pub fn parse_codec(text: &str, plan: &EncodingPlan) -> Result<BandCodec, ParseError> {
    let blocks: Vec<_> = plan.band_layout().discrete_blocks().collect();
    let mut intervals = Vec::new();
    for (n, line) in content_lines(text) {
        let parsed = (|| {
            let f = fields(line, &["band", "block", "intervals"])?;
            let block = blocks.get(intervals.len()).ok_or("more band lines than discrete blocks")?;
            let name = &plan.schema().column(block.source).name;
            let kind = if block.kind == BlockKind::Indicator { "indicator" } else { "categorical" };
            if get(&f, "band")? != name || get(&f, "block")? != kind {
                return Err(format!("expected the {kind} block of `{name}`"));
            }
            get(&f, "intervals")?
                .split('|')
                .map(|iv| {
                    let (a, b) = iv.split_once(':').ok_or_else(|| format!("interval `{iv}` is not <a>:<b>"))?;
                    Ok(BandInterval { a: parse_num(a)?, b: parse_num(b)? })
                })
                .collect::<Result<Vec<_>, String>>()
        })();
        intervals.push(parsed.map_err(|m| ParseError::Line(n, m))?);
    }
    Ok(BandCodec::from_parts(plan, intervals)?)
}

pub fn load_plan(path: &Path) -> Result<EncodingPlan> {
    let text = std::fs::read_to_string(path).map_err(Error::io(path))?;
    parse_plan(&text).at(path)
}

pub fn write_plan(plan: &EncodingPlan, path: &Path) -> Result<()> {
    std::fs::write(path, format_plan(plan)).map_err(Error::io(path))
}

pub fn load_codec(path: &Path, plan: &EncodingPlan) -> Result<BandCodec> {
    let text = std::fs::read_to_string(path).map_err(Error::io(path))?;
    parse_codec(&text, plan).at(path)
}

pub fn write_codec(plan: &EncodingPlan, codec: &BandCodec, path: &Path) -> Result<()> {
    std::fs::write(path, format_codec(plan, codec)).map_err(Error::io(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use pnrsynth_core::data::make_surrogate;
    use pnrsynth_core::preprocess::{fit_band, fit_plan};

    #[test]
    fn plan_and_codec_round_trip() {
        let d = make_surrogate(500, 1);
        let plan = fit_plan(&d).unwrap();
        let text = format_plan(&plan);
        assert!(text.contains("coding=Age;type=numeric;"));
        assert!(text.contains("indicator=1\n"));
        assert!(text.contains("coding=Gender;type=categorical;levels=F|M|UNK;unk=1\n"));
        assert_eq!(parse_plan(&text).unwrap(), plan);

        let codec = fit_band(&d, &plan).unwrap();
        let ctext = format_codec(&plan, &codec);
        assert_eq!(ctext.lines().count(), plan.band_layout().discrete_blocks().count());
        assert_eq!(parse_codec(&ctext, &plan).unwrap(), codec);
    }

    #[test]
    fn mismatched_lines_are_rejected() {
        let d = make_surrogate(200, 2);
        let plan = fit_plan(&d).unwrap();
        let text = format_plan(&plan);
        let swapped = text.replacen("coding=CountryOrigin", "coding=Nationality", 1);
        assert!(matches!(parse_plan(&swapped), Err(ParseError::Line(..))));
        let truncated: String = text.lines().take(text.lines().count() - 1).map(|l| format!("{l}\n")).collect();
        assert!(matches!(parse_plan(&truncated), Err(ParseError::Core(_))));
        let codec = format_codec(&plan, &fit_band(&d, &plan).unwrap());
        let bad = codec.replacen("intervals=", "intervals=0:0.5|", 1);
        assert!(parse_codec(&bad, &plan).is_err());
    }
}
