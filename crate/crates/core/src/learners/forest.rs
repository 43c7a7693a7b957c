use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::data::{Cell, ColumnKind, Dataset};
use crate::error::{invalid, Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ForestConfig {
    pub trees: usize,
    /// Smallest number of training rows a leaf may hold.
    pub min_leaf: usize,
    /// Features drawn per split; `None` uses `ceil(sqrt(features))`.
    pub max_features: Option<usize>,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig { trees: 100, min_leaf: 2, max_features: None }
    }
}

/// Column-major feature view. Categorical Missing is its own level (the
/// last); numeric Missing is NaN.
enum Feature {
    Numeric(Vec<f64>),
    Categorical { codes: Vec<u32>, levels: usize },
}

fn features(x: &Dataset) -> Vec<Feature> {
    x.schema()
        .columns()
        .iter()
        .enumerate()
        .map(|(j, spec)| match &spec.kind {
            ColumnKind::Numerical { .. } => Feature::Numeric(x.column(j).map(|c| c.as_f64().unwrap_or(f64::NAN)).collect()),
            ColumnKind::Categorical { levels } | ColumnKind::Binary { levels } => {
                let missing = levels.len() as u32;
                Feature::Categorical {
                    codes: x
                        .column(j)
                        .map(|c| match c {
                            Cell::Categorical(l) => l,
                            _ => missing,
                        })
                        .collect(),
                    levels: levels.len() + 1,
                }
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Rule {
    /// Left when `value <= threshold`; Missing goes left iff `missing_left`.
    Threshold { threshold: f64, missing_left: bool },
    /// Left when the level equals this code.
    Level(u32),
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Leaf { counts: Vec<usize> },
    Split { feature: usize, rule: Rule, left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq)]
struct Tree {
    nodes: Vec<Node>,
}

/// Index of the largest count, lowest index on ties.
fn majority(counts: &[usize]) -> usize {
    let mut best = 0;
    for (k, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = k;
        }
    }
    best
}

fn gini_sum(counts: &[usize], n: usize) -> f64 {
    // n · Gini impurity, so that child terms add up directly.
    if n == 0 {
        return 0.0;
    }
    let sq: f64 = counts.iter().map(|&c| (c * c) as f64).sum();
    n as f64 - sq / n as f64
}

struct Builder<'a> {
    feats: &'a [Feature],
    y: &'a [usize],
    n_classes: usize,
    min_leaf: usize,
    max_features: usize,
    rng: rng::Rng,
    nodes: Vec<Node>,
}

struct Candidate {
    score: f64,
    feature: usize,
    rule: Rule,
}

impl Builder<'_> {
    fn counts(&self, rows: &[usize]) -> Vec<usize> {
        let mut c = vec![0; self.n_classes];
        for &r in rows {
            c[self.y[r]] += 1;
        }
        c
    }

    fn goes_left(&self, feature: usize, rule: Rule, row: usize) -> bool {
        go_left(&self.feats[feature], rule, row)
    }

    fn best_numeric(&self, f: usize, values: &[f64], rows: &[usize], total: &[usize]) -> Option<Candidate> {
        let mut present: Vec<(f64, usize)> = Vec::with_capacity(rows.len());
        let mut missing = vec![0usize; self.n_classes];
        let mut n_missing = 0;
        for &r in rows {
            let v = values[r];
            if v.is_nan() {
                missing[self.y[r]] += 1;
                n_missing += 1;
            } else {
                present.push((v, self.y[r]));
            }
        }
        present.sort_by(|a, b| a.0.total_cmp(&b.0));
        let n_present = present.len();
        let mut left = vec![0usize; self.n_classes];
        let mut best: Option<Candidate> = None;
        let mut right = vec![0usize; self.n_classes];
        for i in 0..n_present.saturating_sub(1) {
            left[present[i].1] += 1;
            if present[i].0 == present[i + 1].0 {
                continue;
            }
            let nl = i + 1;
            let nr = n_present - nl;
            let missing_left = nl >= nr;
            for k in 0..self.n_classes {
                right[k] = total[k] - missing[k] - left[k];
            }
            let (l_n, r_n) = if missing_left { (nl + n_missing, nr) } else { (nl, nr + n_missing) };
            if l_n < self.min_leaf || r_n < self.min_leaf {
                continue;
            }
            let score = if missing_left {
                let lc: Vec<usize> = left.iter().zip(&missing).map(|(a, b)| a + b).collect();
                gini_sum(&lc, l_n) + gini_sum(&right, r_n)
            } else {
                let rc: Vec<usize> = right.iter().zip(&missing).map(|(a, b)| a + b).collect();
                gini_sum(&left, l_n) + gini_sum(&rc, r_n)
            };
            if best.as_ref().is_none_or(|b| score < b.score) {
                let threshold = 0.5 * (present[i].0 + present[i + 1].0);
                // Midpoints of adjacent doubles can round up to the larger one.
                let threshold = if threshold < present[i + 1].0 { threshold } else { present[i].0 };
                best = Some(Candidate { score, feature: f, rule: Rule::Threshold { threshold, missing_left } });
            }
        }
        best
    }

    fn best_categorical(&self, f: usize, codes: &[u32], levels: usize, rows: &[usize], total: &[usize]) -> Option<Candidate> {
        let mut per_level = vec![vec![0usize; self.n_classes]; levels];
        let mut sizes = vec![0usize; levels];
        for &r in rows {
            per_level[codes[r] as usize][self.y[r]] += 1;
            sizes[codes[r] as usize] += 1;
        }
        let n = rows.len();
        let mut best: Option<Candidate> = None;
        let mut rest = vec![0usize; self.n_classes];
        for l in 0..levels {
            let nl = sizes[l];
            if nl < self.min_leaf || n - nl < self.min_leaf {
                continue;
            }
            for k in 0..self.n_classes {
                rest[k] = total[k] - per_level[l][k];
            }
            let score = gini_sum(&per_level[l], nl) + gini_sum(&rest, n - nl);
            if best.as_ref().is_none_or(|b| score < b.score) {
                best = Some(Candidate { score, feature: f, rule: Rule::Level(l as u32) });
            }
        }
        best
    }

    fn build(&mut self, rows: Vec<usize>) -> usize {
        let counts = self.counts(&rows);
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { counts: counts.clone() });
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if pure || rows.len() < 2 * self.min_leaf {
            return id;
        }
        let mut order: Vec<usize> = (0..self.feats.len()).collect();
        order.shuffle(&mut self.rng);
        let mut best: Option<Candidate> = None;
        let mut tried = 0;
        for f in order {
            let c = match &self.feats[f] {
                Feature::Numeric(v) => self.best_numeric(f, v, &rows, &counts),
                Feature::Categorical { codes, levels } => self.best_categorical(f, codes, *levels, &rows, &counts),
            };
            // Features without any valid split do not count toward the draw.
            let Some(c) = c else { continue };
            tried += 1;
            if best.as_ref().is_none_or(|b| c.score < b.score) {
                best = Some(c);
            }
            if tried == self.max_features {
                break;
            }
        }
        let Some(best) = best else { return id };
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
            rows.iter().partition(|&&r| self.goes_left(best.feature, best.rule, r));
        drop(rows);
        let left = self.build(left_rows);
        let right = self.build(right_rows);
        self.nodes[id] = Node::Split { feature: best.feature, rule: best.rule, left, right };
        id
    }
}

fn go_left(feature: &Feature, rule: Rule, row: usize) -> bool {
    match (feature, rule) {
        (Feature::Numeric(v), Rule::Threshold { threshold, missing_left }) => {
            let x = v[row];
            if x.is_nan() {
                missing_left
            } else {
                x <= threshold
            }
        }
        (Feature::Categorical { codes, .. }, Rule::Level(l)) => codes[row] == l,
        _ => unreachable!("rule kind follows feature kind"),
    }
}

impl Tree {
    fn leaf(&self, feats: &[Feature], row: usize) -> &[usize] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { counts } => return counts,
                Node::Split { feature, rule, left, right } => {
                    i = if go_left(&feats[*feature], *rule, row) { *left } else { *right };
                }
            }
        }
    }
}

/// Bagged CART classifier over typed rows.
#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    trees: Vec<Tree>,
    n_classes: usize,
    schema: alloc::sync::Arc<crate::data::Schema>,
}

impl ForestModel {
    /// Fits `cfg.trees` trees; tree `t` draws its bootstrap and feature
    /// subsets from seed `derive(seed, t)`.
    pub fn fit(x: &Dataset, y: &[usize], cfg: &ForestConfig, seed: u64) -> Result<Self> {
        if x.n_rows() != y.len() {
            return Err(invalid!("{} rows but {} labels", x.n_rows(), y.len()));
        }
        if x.is_empty() || x.n_cols() == 0 {
            return Err(invalid!("random forest needs at least one row and one feature"));
        }
        if cfg.trees == 0 || cfg.min_leaf == 0 {
            return Err(invalid!("tree count and leaf size must be positive"));
        }
        let feats = features(x);
        let n_classes = y.iter().max().copied().unwrap_or(0) + 1;
        let p = feats.len();
        let max_features = cfg.max_features.unwrap_or(libm::ceil(libm::sqrt(p as f64)) as usize).clamp(1, p);
        let n = x.n_rows();
        let trees = (0..cfg.trees)
            .map(|t| {
                let mut r = rng::seeded(rng::derive(seed, t as u64));
                let rows: Vec<usize> = (0..n).map(|_| r.random_range(0..n)).collect();
                let mut b = Builder { feats: &feats, y, n_classes, min_leaf: cfg.min_leaf, max_features, rng: r, nodes: Vec::new() };
                b.build(rows);
                Tree { nodes: b.nodes }
            })
            .collect();
        Ok(ForestModel { trees, n_classes, schema: x.schema().clone() })
    }

    /// Majority vote of the trees' leaf classes, lowest class on ties.
    pub fn predict(&self, x: &Dataset) -> Result<Vec<usize>> {
        if **x.schema() != *self.schema {
            return Err(Error::Schema("prediction rows use a different schema".into()));
        }
        let feats = features(x);
        let mut votes = vec![0usize; self.n_classes];
        Ok((0..x.n_rows())
            .map(|row| {
                votes.iter_mut().for_each(|v| *v = 0);
                for t in &self.trees {
                    votes[majority(t.leaf(&feats, row))] += 1;
                }
                majority(&votes)
            })
            .collect())
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }
}

/// Fits a forest on `(train_x, train_y)` and predicts `test_x`.
pub fn rf_fit_predict(train_x: &Dataset, train_y: &[usize], test_x: &Dataset, cfg: &ForestConfig, seed: u64) -> Result<Vec<usize>> {
    ForestModel::fit(train_x, train_y, cfg, seed)?.predict(test_x)
}

/// Fraction of equal entries.
pub fn accuracy(predicted: &[usize], truth: &[usize]) -> f64 {
    assert_eq!(predicted.len(), truth.len(), "prediction and label counts differ");
    if truth.is_empty() {
        return 0.0;
    }
    predicted.iter().zip(truth).filter(|(a, b)| a == b).count() as f64 / truth.len() as f64
}
