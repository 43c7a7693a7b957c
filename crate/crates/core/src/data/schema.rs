use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Where a column lives inside a segment message: `TAG+e1+e2...'`, 1-based element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentRef {
    pub tag: String,
    pub element: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ColumnKind {
    /// Real values in the inclusive range `[lo, hi]`.
    Numerical { lo: f64, hi: f64 },
    Categorical { levels: Vec<String> },
    /// A categorical column with exactly two levels.
    Binary { levels: Vec<String> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
    pub nullable: bool,
    pub segment: Option<SegmentRef>,
}

impl ColumnSpec {
    pub fn numerical(name: &str, lo: f64, hi: f64, nullable: bool) -> Self {
        ColumnSpec { name: name.to_string(), kind: ColumnKind::Numerical { lo, hi }, nullable, segment: None }
    }

    pub fn categorical<S: AsRef<str>>(name: &str, levels: &[S], nullable: bool) -> Self {
        let levels = levels.iter().map(|l| l.as_ref().to_string()).collect();
        ColumnSpec { name: name.to_string(), kind: ColumnKind::Categorical { levels }, nullable, segment: None }
    }

    pub fn binary<S: AsRef<str>>(name: &str, levels: [S; 2], nullable: bool) -> Self {
        let levels = levels.iter().map(|l| l.as_ref().to_string()).collect();
        ColumnSpec { name: name.to_string(), kind: ColumnKind::Binary { levels }, nullable, segment: None }
    }

    pub fn with_segment(mut self, tag: &str, element: usize) -> Self {
        self.segment = Some(SegmentRef { tag: tag.to_string(), element });
        self
    }

    /// Level list for categorical and binary columns.
    pub fn levels(&self) -> Option<&[String]> {
        match &self.kind {
            ColumnKind::Categorical { levels } | ColumnKind::Binary { levels } => Some(levels),
            ColumnKind::Numerical { .. } => None,
        }
    }

    pub fn range(&self) -> Option<(f64, f64)> {
        match self.kind {
            ColumnKind::Numerical { lo, hi } => Some((lo, hi)),
            _ => None,
        }
    }

    pub fn is_numerical(&self) -> bool {
        matches!(self.kind, ColumnKind::Numerical { .. })
    }

    pub fn level_index(&self, level: &str) -> Option<usize> {
        self.levels()?.iter().position(|l| l == level)
    }

    fn validate(&self) -> Result<()> {
        let err = |msg: String| Err(Error::Schema(format!("column `{}`: {msg}", self.name)));
        if self.name.is_empty() {
            return Err(Error::Schema("empty column name".into()));
        }
        match &self.kind {
            ColumnKind::Numerical { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                    return err(format!("numerical range requires lo < hi, got [{lo}, {hi}]"));
                }
            }
            ColumnKind::Categorical { levels } => {
                if levels.len() < 2 {
                    return err("categorical column needs at least 2 levels".into());
                }
            }
            ColumnKind::Binary { levels } => {
                if levels.len() != 2 {
                    return err(format!("binary column needs exactly 2 levels, got {}", levels.len()));
                }
            }
        }
        if let Some(levels) = self.levels() {
            for (i, l) in levels.iter().enumerate() {
                if l.is_empty() {
                    return err("empty level name".into());
                }
                if levels[..i].contains(l) {
                    return err(format!("duplicate level `{l}`"));
                }
            }
        }
        if let Some(seg) = &self.segment {
            if seg.tag.is_empty() || seg.element == 0 {
                return err("segment reference needs a tag and a 1-based element index".into());
            }
        }
        Ok(())
    }
}

/// Ordered column list with unique names.
#[derive(Debug, Clone, PartialEq)]
pub struct Schema {
    columns: Vec<ColumnSpec>,
}

impl Schema {
    pub fn new(columns: Vec<ColumnSpec>) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::Schema("no columns".into()));
        }
        for (i, c) in columns.iter().enumerate() {
            c.validate()?;
            if columns[..i].iter().any(|o| o.name == c.name) {
                return Err(Error::Schema(format!("duplicate column name `{}`", c.name)));
            }
            if let Some(seg) = &c.segment {
                if columns[..i].iter().any(|o| o.segment.as_ref() == Some(seg)) {
                    return Err(Error::Schema(format!(
                        "segment position {}:{} mapped twice",
                        seg.tag, seg.element
                    )));
                }
            }
        }
        Ok(Schema { columns })
    }

    pub fn columns(&self) -> &[ColumnSpec] {
        &self.columns
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn column(&self, i: usize) -> &ColumnSpec {
        &self.columns[i]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().map(|c| c.name.as_str())
    }

    /// Schema without column `i` (used to drop a prediction target from features).
    pub fn without(&self, i: usize) -> Result<Self> {
        let mut columns = self.columns.clone();
        columns.remove(i);
        Schema::new(columns)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn rejects_bad_columns() {
        assert!(Schema::new(vec![ColumnSpec::numerical("a", 1.0, 1.0, false)]).is_err());
        assert!(Schema::new(vec![ColumnSpec::categorical("c", &["x"], false)]).is_err());
        assert!(Schema::new(vec![ColumnSpec::categorical("c", &["x", "x"], false)]).is_err());
        let bin = ColumnSpec {
            name: "b".into(),
            kind: ColumnKind::Binary { levels: vec!["0".into(), "1".into(), "2".into()] },
            nullable: false,
            segment: None,
        };
        assert!(Schema::new(vec![bin]).is_err());
        assert!(Schema::new(vec![
            ColumnSpec::numerical("a", 0.0, 1.0, false),
            ColumnSpec::numerical("a", 0.0, 2.0, false)
        ])
        .is_err());
        assert!(Schema::new(vec![]).is_err());
    }

    #[test]
    fn rejects_duplicate_segment_positions() {
        let cols = vec![
            ColumnSpec::numerical("a", 0.0, 1.0, false).with_segment("X", 1),
            ColumnSpec::numerical("b", 0.0, 1.0, false).with_segment("X", 1),
        ];
        assert!(Schema::new(cols).is_err());
    }

    #[test]
    fn lookups() {
        let s = Schema::new(vec![
            ColumnSpec::numerical("age", 0.0, 99.0, true),
            ColumnSpec::binary("g", ["F", "M"], true),
        ])
        .unwrap();
        assert_eq!(s.index_of("g"), Some(1));
        assert_eq!(s.column(1).level_index("M"), Some(1));
        assert_eq!(s.without(0).unwrap().len(), 1);
    }
}
