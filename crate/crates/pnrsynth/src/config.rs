//! Flat `key = value` run configuration. Unset keys keep their defaults;
//! later assignments (command-line flags come last) override earlier ones.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use pnrsynth_core::evalsuite::EvalConfig;
use pnrsynth_core::gan::{GanConfig, Variant};

use crate::error::{Error, ParseError, Result, WithPath};
use crate::schema_file::content_lines;

/// Everything one command needs besides its input files.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub gan: GanConfig,
    pub variant: Variant,
    pub seed: u64,
    pub eval: EvalConfig,
    /// Fraction of rows held out when `synth-data` writes a test file.
    pub test_fraction: f64,
    pub data: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            gan: GanConfig::for_variant(Variant::CrganCnet),
            variant: Variant::CrganCnet,
            seed: 0,
            eval: EvalConfig::default(),
            test_fraction: 0.2,
            data: None,
            test: None,
            out: None,
        }
    }
}

pub const KEYS: &[&str] = &[
    "variant",
    "seed",
    "iterations",
    "lr",
    "beta1",
    "beta2",
    "adam_eps",
    "batch_size",
    "lambda",
    "n_critic",
    "noise_dim",
    "gen_widths",
    "h_widths",
    "cross_layers",
    "leaky_slope",
    "embed_dims",
    "k_nn",
    "runs",
    "max_points",
    "mds_points",
    "trees",
    "targets",
    "test_fraction",
    "data",
    "test",
    "out",
];

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, String> {
    v.parse().map_err(|_| format!("cannot parse `{v}` as the value of `{key}`"))
}

fn list(key: &str, v: &str) -> Result<Vec<usize>, String> {
    v.split(',').map(|x| num(key, x.trim())).collect()
}

impl RunConfig {
    /// Defaults with `pairs` applied in order. The variant is applied first so
    /// explicit `cross_layers` values refine it rather than being reset by it.
    /// Errors carry the index of the offending pair, if one is to blame.
    pub fn from_pairs(pairs: &[(String, String)]) -> Result<RunConfig, (Option<usize>, String)> {
        let mut c = RunConfig::default();
        if let Some(i) = pairs.iter().rposition(|(k, _)| k == "variant") {
            let v = &pairs[i].1;
            c.variant = v.parse().map_err(|_| (Some(i), format!("unknown variant `{v}`")))?;
            c.gan = c.gan.with_variant(c.variant);
        }
        for (i, (k, v)) in pairs.iter().enumerate() {
            c.set(k, v.trim()).map_err(|m| (Some(i), m))?;
        }
        c.validate().map_err(|m| (None, m))?;
        Ok(c)
    }

    fn set(&mut self, key: &str, v: &str) -> Result<(), String> {
        let g = &mut self.gan;
        match key {
            "variant" => {}
            "seed" => self.seed = num(key, v)?,
            "iterations" => g.iterations = num(key, v)?,
            "lr" => g.adam.lr = num(key, v)?,
            "beta1" => g.adam.beta1 = num(key, v)?,
            "beta2" => g.adam.beta2 = num(key, v)?,
            "adam_eps" => g.adam.eps = num(key, v)?,
            "batch_size" => g.batch_size = num(key, v)?,
            "lambda" => g.lambda = num(key, v)?,
            "n_critic" => g.n_critic = num(key, v)?,
            "noise_dim" => g.noise_dim = num(key, v)?,
            "gen_widths" => g.gen_widths = list(key, v)?,
            "h_widths" => g.h_widths = list(key, v)?,
            "cross_layers" => g.cross_layers = num(key, v)?,
            "leaky_slope" => g.leaky_slope = num(key, v)?,
            "embed_dims" => g.embed_dims = if v == "auto" { None } else { Some(list(key, v)?) },
            "k_nn" => self.eval.k_nn = num(key, v)?,
            "runs" => self.eval.runs = num(key, v)?,
            "max_points" => self.eval.max_points = num(key, v)?,
            "mds_points" => self.eval.mds_points = num(key, v)?,
            "trees" => self.eval.forest.trees = num(key, v)?,
            "targets" => {
                self.eval.targets = v.split(',').map(str::trim).filter(|t| !t.is_empty()).map(String::from).collect()
            }
            "test_fraction" => self.test_fraction = num(key, v)?,
            "data" => self.data = Some(PathBuf::from(v)),
            "test" => self.test = Some(PathBuf::from(v)),
            "out" => self.out = Some(PathBuf::from(v)),
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    fn validate(&self) -> Result<(), String> {
        self.gan.validate().map_err(|e| e.to_string())?;
        if (self.gan.cross_layers > 0) != (self.variant.cross_layers() > 0) {
            return Err(format!(
                "variant {} {} cross layers, got cross_layers = {}",
                self.variant,
                if self.variant.cross_layers() > 0 { "needs" } else { "has no" },
                self.gan.cross_layers
            ));
        }
        if self.eval.k_nn == 0 || self.eval.runs == 0 || self.eval.forest.trees == 0 {
            return Err("k_nn, runs and trees must be positive".into());
        }
        if self.eval.max_points == 0 || self.eval.mds_points < 2 {
            return Err("max_points must be positive and mds_points at least 2".into());
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err("test_fraction must lie in (0, 1)".into());
        }
        Ok(())
    }
}

/// `key = value` pairs of a config file with their line numbers; blank and
/// `#` lines are skipped.
fn parse_lines(text: &str) -> Result<Vec<(usize, (String, String))>, ParseError> {
    content_lines(text)
        .map(|(n, line)| {
            let (k, v) = line.split_once('=').ok_or_else(|| ParseError::Line(n, format!("`{line}` is not key = value")))?;
            let k = k.trim();
            if !KEYS.contains(&k) {
                return Err(ParseError::Line(n, format!("unknown key `{k}`")));
            }
            Ok((n, (k.to_string(), v.trim().to_string())))
        })
        .collect()
}

/// Config file text followed by `overrides`, resolved to a [`RunConfig`].
/// Errors in the text carry its line number; other errors use line 0.
pub fn parse_config_with(text: &str, overrides: &[(String, String)]) -> Result<RunConfig, ParseError> {
    let lines = parse_lines(text)?;
    let mut pairs: Vec<(String, String)> = lines.iter().map(|(_, kv)| kv.clone()).collect();
    pairs.extend_from_slice(overrides);
    RunConfig::from_pairs(&pairs).map_err(|(i, msg)| {
        let line = i.and_then(|i| lines.get(i)).map_or(0, |(n, _)| *n);
        ParseError::Line(line, msg)
    })
}

pub fn parse_config(text: &str) -> Result<RunConfig, ParseError> {
    parse_config_with(text, &[])
}

/// Reads the optional config file and applies `overrides` on top. Problems
/// traced to the file are format errors; the rest are usage errors.
pub fn load_config(path: Option<&Path>, overrides: &[(String, String)]) -> Result<RunConfig> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p).map_err(Error::io(p))?,
        None => String::new(),
    };
    match (parse_config_with(&text, overrides), path) {
        (Err(ParseError::Line(0, msg)), _) => Err(Error::Usage(msg)),
        (r, Some(p)) => r.at(p),
        (r, None) => r.map_err(|e| Error::Usage(e.to_string())),
    }
}

fn join(v: &[usize]) -> String {
    v.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}

/// Every setting as config text that [`parse_config`] reads back to `c`.
pub fn format_config(c: &RunConfig) -> String {
    let g = &c.gan;
    let mut out = String::new();
    let mut kv = |k: &str, v: String| writeln!(out, "{k} = {v}").unwrap();
    kv("variant", c.variant.to_string());
    kv("seed", c.seed.to_string());
    kv("iterations", g.iterations.to_string());
    kv("lr", g.adam.lr.to_string());
    kv("beta1", g.adam.beta1.to_string());
    kv("beta2", g.adam.beta2.to_string());
    kv("adam_eps", g.adam.eps.to_string());
    kv("batch_size", g.batch_size.to_string());
    kv("lambda", g.lambda.to_string());
    kv("n_critic", g.n_critic.to_string());
    kv("noise_dim", g.noise_dim.to_string());
    kv("gen_widths", join(&g.gen_widths));
    kv("h_widths", join(&g.h_widths));
    kv("cross_layers", g.cross_layers.to_string());
    kv("leaky_slope", g.leaky_slope.to_string());
    kv("embed_dims", g.embed_dims.as_deref().map_or("auto".into(), join));
    kv("k_nn", c.eval.k_nn.to_string());
    kv("runs", c.eval.runs.to_string());
    kv("max_points", c.eval.max_points.to_string());
    kv("mds_points", c.eval.mds_points.to_string());
    kv("trees", c.eval.forest.trees.to_string());
    kv("targets", c.eval.targets.join(","));
    kv("test_fraction", c.test_fraction.to_string());
    for (k, p) in [("data", &c.data), ("test", &c.test), ("out", &c.out)] {
        if let Some(p) = p {
            kv(k, p.display().to_string());
        }
    }
    out
}
