//! `pnrsynth` subcommands. Diagnostics go to standard error; machine output
//! only to the files named by flags.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use pnrsynth_core::data::{make_surrogate, pnr_schema, split_dataset, Dataset, Schema};
use pnrsynth_core::evalsuite::{full_report, two_sample_score, Learner};
use pnrsynth_core::gan::{generate, GanModel, IterMetrics, Trainer, Variant};
use pnrsynth_core::preprocess::{fit_plan, EncodingPlan};
use pnrsynth_core::rng;

use crate::checkpoint::{read_checkpoint, write_checkpoint};
use crate::config::{format_config, load_config, parse_config, RunConfig};
use crate::csv::{load_csv, write_csv};
use crate::error::{Error, Result, WithPath};
use crate::plan_file::{load_codec, load_plan, write_codec, write_plan};
use crate::report::write_report;
use crate::schema_file::load_schema;
use crate::segments::load_segments;

/// Files inside a model directory written by `train`.
pub const PLAN_FILE: &str = "plan.txt";
pub const CODEC_FILE: &str = "codec.txt";
pub const CHECKPOINT_FILE: &str = "model.ckpt";
pub const CONFIG_FILE: &str = "model.config";
pub const METRICS_FILE: &str = "metrics.csv";

/// Iterations between progress lines.
const PROGRESS_EVERY: usize = 100;

#[derive(Parser)]
#[command(name = "pnrsynth", version, about = "Train a Cramér GAN on tabular booking records and evaluate its samples")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write surrogate booking records as CSV.
    SynthData {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        rows: usize,
        /// Also write a held-out split (`test_fraction` of the rows) here.
        #[arg(long)]
        test: Option<PathBuf>,
    },
    /// Fit scaling bounds and level lists on training data.
    FitPlan {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        input: Input,
    },
    /// Train a model; `--out` is the model directory.
    Train {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        training: Training,
        /// Plan from `fit-plan`; fitted on the training data when absent.
        #[arg(long)]
        plan: Option<PathBuf>,
    },
    /// Sample synthetic records from a trained model.
    Generate {
        #[command(flatten)]
        common: Common,
        /// Model directory written by `train`.
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        rows: usize,
    },
    /// Write the evaluation report of a model into the `--out` directory.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        test: Option<PathBuf>,
        #[arg(long = "k-nn")]
        k_nn: Option<usize>,
        #[arg(long)]
        runs: Option<usize>,
    },
    /// Train every variant and tabulate its two-sample score.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        test: Option<PathBuf>,
        #[arg(long)]
        iters: Option<usize>,
        #[arg(long = "n-critic")]
        n_critic: Option<usize>,
        #[arg(long)]
        plan: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override any configuration key.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Suppress progress output.
    #[arg(long)]
    quiet: bool,
}

#[derive(Args)]
struct Input {
    /// Training records: CSV, or segment messages when the name ends in `.edi`.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Schema sidecar; the built-in booking schema when absent.
    #[arg(long)]
    schema: Option<PathBuf>,
}

#[derive(Args)]
struct Training {
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    variant: Option<String>,
    #[arg(long = "n-critic")]
    n_critic: Option<usize>,
}

/// Configuration assignments implied by flags, applied after the config file.
#[derive(Default)]
struct Overrides(Vec<(String, String)>);

impl Overrides {
    fn from_common(c: &Common) -> Result<Self> {
        let mut o = Overrides::default();
        for s in &c.set {
            let (k, v) = s.split_once('=').ok_or_else(|| Error::Usage(format!("--set expects KEY=VALUE, got `{s}`")))?;
            o.push(k.trim(), v.trim());
        }
        o.opt("seed", c.seed);
        o.opt("out", c.out.as_ref().map(|p| p.display()));
        Ok(o)
    }

    fn push(&mut self, k: &str, v: impl ToString) {
        self.0.push((k.to_string(), v.to_string()));
    }

    fn opt(&mut self, k: &str, v: Option<impl ToString>) {
        if let Some(v) = v {
            self.push(k, v);
        }
    }

    fn input(&mut self, i: &Input) {
        self.opt("data", i.data.as_ref().map(|p| p.display()));
    }

    fn training(&mut self, t: &Training) {
        self.opt("iterations", t.iters);
        self.opt("variant", t.variant.as_ref());
        self.opt("n_critic", t.n_critic);
    }
}

fn required<'a>(p: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    p.as_deref().ok_or_else(|| Error::Usage(format!("missing required flag --{flag}")))
}

fn schema_for(input: &Input) -> Result<Arc<Schema>> {
    match &input.schema {
        Some(p) => load_schema(p),
        None => Ok(pnr_schema()),
    }
}

/// Loads records by file extension: `.edi` segment messages, otherwise CSV.
pub fn load_records(path: &Path, schema: &Arc<Schema>) -> Result<Dataset> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("edi") => load_segments(path, schema),
        _ => load_csv(path, schema),
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(Error::io(path))
}

struct Progress {
    quiet: bool,
}

impl Progress {
    fn say(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }
}

pub fn metrics_csv(log: &[IterMetrics]) -> String {
    let mut out = String::from("iter,loss_g,loss_d,gp\n");
    for m in log {
        writeln!(out, "{},{},{},{}", m.iter + 1, m.loss_g, m.loss_d, m.gp).unwrap();
    }
    out
}

/// Trains `cfg.gan.iterations` iterations, logging progress. On divergence the
/// metrics so far are returned alongside the error.
fn train_logged(
    train: &Dataset,
    cfg: &RunConfig,
    plan: &EncodingPlan,
    progress: &Progress,
    label: &str,
) -> (Vec<IterMetrics>, Result<GanModel>) {
    let mut log = Vec::with_capacity(cfg.gan.iterations);
    let mut trainer = match Trainer::new(train, &cfg.gan, plan, cfg.seed) {
        Ok(t) => t,
        Err(e) => return (log, Err(e.into())),
    };
    let total = cfg.gan.iterations;
    for _ in 0..total {
        match trainer.step() {
            Ok(m) => {
                if (m.iter + 1) % PROGRESS_EVERY == 0 || m.iter + 1 == total {
                    progress.say(format!(
                        "{label}iter {}/{total} loss_g={:.5} loss_d={:.5} gp={:.5}",
                        m.iter + 1,
                        m.loss_g,
                        m.loss_d,
                        m.gp
                    ));
                }
                log.push(m);
            }
            Err(e) => return (log, Err(e.into())),
        }
    }
    (log, Ok(trainer.model()))
}

/// Writes plan, codec, checkpoint, config echo and metrics into `dir`.
fn save_model(dir: &Path, plan: &EncodingPlan, model: &GanModel, cfg: &RunConfig) -> Result<()> {
    write_plan(plan, &dir.join(PLAN_FILE))?;
    if let Some(codec) = &model.band {
        write_codec(plan, codec, &dir.join(CODEC_FILE))?;
    }
    let named = model.named_tensors(plan)?;
    write_checkpoint(&dir.join(CHECKPOINT_FILE), named.iter().map(|(n, t)| (n.as_str(), *t)))?;
    // The echo describes the model, not the invocation that produced it.
    let echo = RunConfig { data: None, test: None, out: None, ..cfg.clone() };
    write_text(&dir.join(CONFIG_FILE), &format_config(&echo))
}

/// Reads a model directory written by `train`.
pub fn load_model(dir: &Path) -> Result<(EncodingPlan, GanModel, RunConfig)> {
    let plan = load_plan(&dir.join(PLAN_FILE))?;
    let config_path = dir.join(CONFIG_FILE);
    let text = std::fs::read_to_string(&config_path).map_err(Error::io(&config_path))?;
    let cfg = parse_config(&text).at(&config_path)?;
    let band = match cfg.gan.encoding.layout_encoding() {
        pnrsynth_core::preprocess::Encoding::Band => Some(load_codec(&dir.join(CODEC_FILE), &plan)?),
        pnrsynth_core::preprocess::Encoding::OneHot => None,
    };
    let tensors = read_checkpoint(&dir.join(CHECKPOINT_FILE))?;
    let model = GanModel::from_named(&cfg.gan, &plan, band, tensors)?;
    Ok((plan, model, cfg))
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::SynthData { common, rows, test } => {
            let cfg = load_config(common.config.as_deref(), &Overrides::from_common(&common)?.0)?;
            let out = required(&cfg.out, "out")?;
            let d = make_surrogate(rows, cfg.seed);
            match test {
                None => write_csv(&d, out),
                Some(test) => {
                    let (train, held) = split_dataset(&d, cfg.test_fraction, rng::derive(cfg.seed, 1))?;
                    write_csv(&train, out)?;
                    write_csv(&held, &test)
                }
            }
        }
        Command::FitPlan { common, input } => {
            let mut o = Overrides::from_common(&common)?;
            o.input(&input);
            let cfg = load_config(common.config.as_deref(), &o.0)?;
            let (data, out) = (required(&cfg.data, "data")?, required(&cfg.out, "out")?);
            let d = load_records(data, &schema_for(&input)?)?;
            write_plan(&fit_plan(&d)?, out)
        }
        Command::Train { common, input, training, plan } => {
            let mut o = Overrides::from_common(&common)?;
            o.input(&input);
            o.training(&training);
            let cfg = load_config(common.config.as_deref(), &o.0)?;
            let (data, out) = (required(&cfg.data, "data")?, required(&cfg.out, "out")?);
            let progress = Progress { quiet: common.quiet };
            let (d, plan) = match plan {
                Some(p) => {
                    let plan = load_plan(&p)?;
                    (load_records(data, plan.schema())?, plan)
                }
                None => {
                    let d = load_records(data, &schema_for(&input)?)?;
                    let plan = fit_plan(&d)?;
                    (d, plan)
                }
            };
            std::fs::create_dir_all(out).map_err(Error::io(out))?;
            progress.say(format!("training {} on {} rows for {} iterations", cfg.variant, d.n_rows(), cfg.gan.iterations));
            let (log, model) = train_logged(&d, &cfg, &plan, &progress, "");
            write_text(&out.join(METRICS_FILE), &metrics_csv(&log))?;
            save_model(out, &plan, &model?, &cfg)
        }
        Command::Generate { common, model, rows } => {
            let cfg = load_config(common.config.as_deref(), &Overrides::from_common(&common)?.0)?;
            let out = required(&cfg.out, "out")?;
            let (plan, model, _) = load_model(&model)?;
            write_csv(&generate(&model, rows, &plan, cfg.seed)?, out)
        }
        Command::Evaluate { common, input, model, test, k_nn, runs } => {
            let mut o = Overrides::from_common(&common)?;
            o.input(&input);
            o.opt("test", test.as_ref().map(|p| p.display()));
            o.opt("k_nn", k_nn);
            o.opt("runs", runs);
            let cfg = load_config(common.config.as_deref(), &o.0)?;
            let (data, test, out) = (required(&cfg.data, "data")?, required(&cfg.test, "test")?, required(&cfg.out, "out")?);
            let (plan, model, _) = load_model(&model)?;
            let train = load_records(data, plan.schema())?;
            let test = load_records(test, plan.schema())?;
            Progress { quiet: common.quiet }.say(format!("evaluating on {} training and {} test rows", train.n_rows(), test.n_rows()));
            let report = full_report(&train, &test, &model, &plan, &cfg.eval, cfg.seed)?;
            write_report(&report, out)
        }
        Command::Sweep { common, input, test, iters, n_critic, plan } => {
            let mut o = Overrides::from_common(&common)?;
            o.input(&input);
            o.opt("test", test.as_ref().map(|p| p.display()));
            o.opt("iterations", iters);
            o.opt("n_critic", n_critic);
            let base = load_config(common.config.as_deref(), &o.0)?;
            let (data, test, out) = (required(&base.data, "data")?, required(&base.test, "test")?, required(&base.out, "out")?);
            let progress = Progress { quiet: common.quiet };
            let (train, plan) = match plan {
                Some(p) => {
                    let plan = load_plan(&p)?;
                    (load_records(data, plan.schema())?, plan)
                }
                None => {
                    let d = load_records(data, &schema_for(&input)?)?;
                    let plan = fit_plan(&d)?;
                    (d, plan)
                }
            };
            let test = load_records(test, plan.schema())?;
            let mut table = String::from("variant,two_sample_rf\n");
            for v in Variant::ALL {
                let mut cfg = base.clone();
                cfg.variant = v;
                cfg.gan = cfg.gan.with_variant(v);
                if v.cross_layers() > 0 && base.variant.cross_layers() > 0 {
                    cfg.gan.cross_layers = base.gan.cross_layers;
                }
                let (_, model) = train_logged(&train, &cfg, &plan, &progress, &format!("{v}: "));
                let model = model?;
                let synth = generate(&model, test.n_rows(), &plan, rng::derive(cfg.seed, 1))?;
                let score = two_sample_score(&test, &synth, Learner::Rf, &cfg.eval.forest, rng::derive(cfg.seed, 2))?;
                progress.say(format!("{v}: two-sample score {score:.4}"));
                writeln!(table, "{v},{score}").unwrap();
            }
            write_text(out, &table)
        }
    }
}

/// Runs the command line `argv` (program name first) and returns the exit code:
/// 0 success, 1 usage error, 2 data or contract error, 3 numeric failure.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(std::io::stderr(), "pnrsynth: error: {e}");
            e.exit_code()
        }
    }
}
