//! Command-line front end: `synth`, `train`, `train-baseline`, `eval`,
//! `reproduce`.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage error (unknown flag,
//! missing argument, unreadable input, malformed config). Every command
//! prints a final `RESULT <json>` line and writes `effective_config.json`
//! into its output directory.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::aucmetrics::{auc_exact, ScoredSample};
use crate::bagdata::{
    read_bags, read_labeled_csv, synthesize_collection, write_bags, write_instances_csv,
    GaussianPoolSpec, ImbalanceMode, Instance, Label, PriorKind, PriorSpec,
};
use crate::baseline::{train_pairwise, PairwiseConfig};
use crate::bench::{ExperimentSpec, Suite};
use crate::rng::{self, Stream};
use crate::scorer::{read_checkpoint, write_checkpoint, ModelKind, ModelSpec, Scorer};
use crate::trainer::{evaluate_auc, train, TrainConfig};
use crate::Error;

#[derive(Debug, Parser)]
#[command(
    name = "umauc",
    version,
    about = "AUC maximization from multiple unlabeled bags with ordered class priors"
)]
pub struct Cli {
    /// Print progress to stderr.
    #[arg(short, long, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw ordered bags and a labeled test split from a pool.
    Synth(SynthArgs),
    /// Train a multi-head scorer with the min-max objective.
    Train(TrainArgs),
    /// Train a single-head scorer on the pairwise loss over all bag pairs.
    TrainBaseline(BaselineArgs),
    /// Compute a test AUC from score/label files or a checkpoint.
    Eval(EvalArgs),
    /// Run a named experiment suite and write its report.
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output directory for the manifest, bag files and test.csv.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON config with the keys below.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// `gaussian`, a pool spec `.json`, or a labeled `.csv`.
    #[arg(long)]
    pub pool: Option<String>,
    /// Prior law (`uniform`, `biased`, `concentrated`, `biased_concentrated`,
    /// or `D_u`-style aliases) or a comma-separated list of priors.
    #[arg(long)]
    pub priors: Option<String>,
    #[arg(long)]
    pub m: Option<usize>,
    /// `none`, `tau=X` or `random`.
    #[arg(long)]
    pub imbalance: Option<String>,
    #[arg(long)]
    pub n_train: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub pool: String,
    pub priors: String,
    pub m: usize,
    pub imbalance: String,
    pub n_train: Option<usize>,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            pool: "gaussian".into(),
            priors: "uniform".into(),
            m: 10,
            imbalance: "none".into(),
            n_train: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Bag directory written by `synth` (or by hand).
    #[arg(long)]
    pub bags: Option<PathBuf>,
    /// `linear` or `mlp`.
    #[arg(long)]
    pub model: Option<String>,
    /// MLP trunk widths, e.g. `64,64`.
    #[arg(long, value_delimiter = ',')]
    pub hidden: Option<Vec<usize>>,
    /// JSON config: `{"model": {...}, "train": {...}}`.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Checkpoint path; the log and effective config go next to it.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Labeled test CSV. Defaults to `<bags>/test.csv` when present.
    #[arg(long)]
    pub test: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr_primal: Option<f64>,
    #[arg(long)]
    pub lr_dual: Option<f64>,
    #[arg(long)]
    pub momentum: Option<f64>,
    #[arg(long)]
    pub weight_decay: Option<f64>,
    #[arg(long)]
    pub lr_decay: Option<f64>,
    #[arg(long)]
    pub lr_decay_every: Option<usize>,
    #[arg(long)]
    pub margin: Option<f64>,
    /// `true` keeps alpha >= 0.
    #[arg(long)]
    pub constrained: Option<bool>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub eval_every: Option<usize>,
    #[arg(long)]
    pub batch_exact: Option<bool>,
    #[arg(long)]
    pub label_sampling: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainFile {
    pub model: Option<ModelSpec>,
    pub train: TrainConfig,
}

#[derive(Debug, Args)]
pub struct BaselineArgs {
    #[arg(long)]
    pub bags: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long, value_delimiter = ',')]
    pub hidden: Option<Vec<usize>>,
    /// JSON config: `{"model": {...}, "pairwise": {...}}`.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub test: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub momentum: Option<f64>,
    #[arg(long)]
    pub weight_decay: Option<f64>,
    #[arg(long)]
    pub margin: Option<f64>,
    #[arg(long)]
    pub full_batch: Option<bool>,
    #[arg(long)]
    pub pair_batch: Option<usize>,
    #[arg(long)]
    pub pair_cap: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub eval_every: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineFile {
    pub model: Option<ModelSpec>,
    pub pairwise: PairwiseConfig,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// One score per line.
    #[arg(long)]
    pub scores: Option<PathBuf>,
    /// One label per line (`+1`/`1` or `-1`/`0`).
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long)]
    pub ckpt: Option<PathBuf>,
    /// Labeled CSV scored with `--ckpt`.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Directory for `effective_config.json`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    /// `priors`, `imbalance`, `excess-risk` or `equivalence`.
    #[arg(long)]
    pub suite: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Experiment spec JSON replacing the suite default.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub repeats: Option<usize>,
    /// First seed; runs use `seed, seed + 1, ...`.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epochs: Option<usize>,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Runtime(e)
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn require<T>(v: Option<T>, flag: &str) -> CliResult<T> {
    v.ok_or_else(|| usage(format!("missing {flag}")))
}

fn readable(path: &Path, flag: &str) -> CliResult<()> {
    std::fs::metadata(path)
        .map(|_| ())
        .map_err(|e| usage(format!("cannot read {flag} {}: {e}", path.display())))
}

fn load_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    readable(path, "--config")?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read --config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| usage(format!("bad config {}: {e}", path.display())))
}

fn write_effective(dir: &Path, value: &serde_json::Value) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(Error::from)?;
    let text = serde_json::to_string_pretty(value).map_err(Error::from)?;
    std::fs::write(dir.join("effective_config.json"), text + "\n").map_err(Error::from)?;
    Ok(())
}

fn parent_dir(path: &Path) -> PathBuf {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

fn model_spec(
    from_file: Option<ModelSpec>,
    kind: Option<&str>,
    hidden: Option<Vec<usize>>,
) -> CliResult<ModelSpec> {
    let mut spec = from_file.unwrap_or_else(ModelSpec::linear);
    if let Some(k) = kind {
        spec.kind = k.parse::<ModelKind>().map_err(|e| usage(e.to_string()))?;
    }
    if let Some(h) = hidden {
        spec.hidden = h;
    }
    Ok(spec)
}

macro_rules! override_fields {
    ($cfg:expr, $args:expr, $($f:ident),+) => {
        $(if let Some(v) = $args.$f.clone() { $cfg.$f = v; })+
    };
}

/// Parses `argv` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            if code == 0 {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return code;
        }
    };
    let verbose = cli.verbose;
    let result = match cli.command {
        Command::Synth(a) => synth(a, out),
        Command::Train(a) => train_cmd(a, verbose, out, err),
        Command::TrainBaseline(a) => baseline_cmd(a, out),
        Command::Eval(a) => eval_cmd(a, out),
        Command::Reproduce(a) => reproduce(a, verbose, out, err),
    };
    match result {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            let _ = writeln!(err, "run `umauc --help` for usage");
            2
        }
        Err(CliError::Runtime(e)) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}

/// Entry point for the binary.
pub fn main_with_args() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}

fn result_line(out: &mut dyn Write, value: serde_json::Value) -> CliResult<()> {
    writeln!(out, "RESULT {value}").map_err(Error::from)?;
    Ok(())
}

fn load_pool(
    source: &str,
    n_train: Option<usize>,
    seed: u64,
) -> CliResult<(Vec<Instance>, Vec<Instance>, serde_json::Value)> {
    match source {
        "gaussian" | "default" => {
            let mut spec = GaussianPoolSpec::default();
            if let Some(n) = n_train {
                spec = spec.with_train_size(n);
            }
            let pool = spec.generate(seed)?;
            Ok((pool.train, pool.test, json!(spec)))
        }
        path if path.ends_with(".json") => {
            let mut spec: GaussianPoolSpec = load_json(Path::new(path))?;
            if let Some(n) = n_train {
                spec = spec.with_train_size(n);
            }
            let pool = spec.generate(seed)?;
            Ok((pool.train, pool.test, json!(spec)))
        }
        path if path.ends_with(".csv") => {
            readable(Path::new(path), "--pool")?;
            let mut rows = read_labeled_csv(Path::new(path))?;
            rows.shuffle(&mut rng::stream(seed, Stream::Pool));
            let n_test = rows.len() / 5;
            let train = rows.split_off(n_test);
            Ok((train, rows, json!({ "file": path })))
        }
        other => Err(usage(format!(
            "unknown pool `{other}` (gaussian, <spec>.json or <pool>.csv)"
        ))),
    }
}

fn synth(a: SynthArgs, out: &mut dyn Write) -> CliResult<()> {
    let dir = require(a.out.clone(), "--out")?;
    let mut cfg: SynthConfig = match &a.config {
        Some(p) => load_json(p)?,
        None => SynthConfig::default(),
    };
    override_fields!(cfg, a, pool, priors, m, imbalance, seed);
    if a.n_train.is_some() {
        cfg.n_train = a.n_train;
    }
    let kind: PriorKind = cfg
        .priors
        .parse()
        .map_err(|e: Error| usage(e.to_string()))?;
    if let PriorKind::Explicit(p) = &kind {
        if a.m.is_none() {
            cfg.m = p.len();
        }
    }
    let imbalance: ImbalanceMode = cfg
        .imbalance
        .parse()
        .map_err(|e: Error| usage(e.to_string()))?;
    let (train_pool, test, pool_json) = load_pool(&cfg.pool, cfg.n_train, cfg.seed)?;
    let n_train = cfg.n_train.unwrap_or(train_pool.len());
    let bags = synthesize_collection(
        &train_pool,
        &PriorSpec::new(kind, cfg.m),
        &imbalance,
        n_train,
        cfg.seed,
    )?;
    write_bags(&bags, &dir)?;
    write_instances_csv(&test, &dir.join("test.csv"))?;
    write_effective(
        &dir,
        &json!({ "command": "synth", "config": cfg, "pool_spec": pool_json, "out": dir }),
    )?;
    result_line(
        out,
        json!({
            "command": "synth",
            "out": dir,
            "m": bags.m(),
            "d": bags.d(),
            "sizes": bags.sizes(),
            "true_priors": bags.true_priors(),
            "n_test": test.len(),
            "seed": cfg.seed,
        }),
    )
}

fn load_test(
    explicit: Option<PathBuf>,
    bags_dir: &Path,
) -> CliResult<Option<(PathBuf, Vec<Instance>)>> {
    let path = match explicit {
        Some(p) => {
            readable(&p, "--test")?;
            p
        }
        None => {
            let p = bags_dir.join("test.csv");
            if !p.exists() {
                return Ok(None);
            }
            p
        }
    };
    let rows = read_labeled_csv(&path)?;
    Ok(Some((path, rows)))
}

fn train_cmd(
    a: TrainArgs,
    verbose: bool,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> CliResult<()> {
    let bags_dir = require(a.bags.clone(), "--bags")?;
    readable(&bags_dir.join("manifest.json"), "--bags")?;
    let file: TrainFile = match &a.config {
        Some(p) => load_json(p)?,
        None => TrainFile::default(),
    };
    let spec = model_spec(file.model, a.model.as_deref(), a.hidden.clone())?;
    let mut cfg = file.train;
    override_fields!(
        cfg,
        a,
        epochs,
        batch_size,
        lr_primal,
        lr_dual,
        momentum,
        weight_decay,
        lr_decay,
        lr_decay_every,
        margin,
        constrained,
        seed,
        eval_every,
        batch_exact,
        label_sampling
    );
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    let ckpt = a.out.clone().unwrap_or_else(|| PathBuf::from("model.ckpt"));
    let out_dir = parent_dir(&ckpt);
    let test = load_test(a.test.clone(), &bags_dir)?;

    let bags = read_bags(&bags_dir)?;
    let model = spec.build(bags.d(), bags.m() - 1, cfg.seed)?;
    if verbose {
        let _ = writeln!(
            err,
            "training {} parameters on {} instances in {} bags",
            model.param_count(),
            bags.total(),
            bags.m()
        );
    }
    write_effective(
        &out_dir,
        &json!({
            "command": "train",
            "bags": bags_dir,
            "test": test.as_ref().map(|t| &t.0),
            "out": ckpt,
            "model": spec,
            "train": cfg,
        }),
    )?;
    let trained = train(&bags, model, &cfg, test.as_ref().map(|t| t.1.as_slice()))?;
    if verbose {
        for r in &trained.log.rows {
            let _ = writeln!(
                err,
                "epoch {:>4} train macro AUC {:.4} test AUC {:?}",
                r.epoch, r.train_macro_auc, r.test_auc
            );
        }
    }
    write_checkpoint(&ckpt, &trained.model, Some(&trained.state))?;
    let log_path = out_dir.join("train_log.csv");
    trained.log.write_csv(&log_path)?;
    let last = trained.log.last();
    result_line(
        out,
        json!({
            "command": "train",
            "checkpoint": ckpt,
            "log": log_path,
            "epochs": cfg.epochs,
            "train_macro_auc": last.map(|r| r.train_macro_auc),
            "test_auc": last.and_then(|r| r.test_auc),
            "seconds": trained.epoch_seconds.iter().sum::<f64>(),
        }),
    )
}

fn baseline_cmd(a: BaselineArgs, out: &mut dyn Write) -> CliResult<()> {
    let bags_dir = require(a.bags.clone(), "--bags")?;
    readable(&bags_dir.join("manifest.json"), "--bags")?;
    let file: BaselineFile = match &a.config {
        Some(p) => load_json(p)?,
        None => BaselineFile::default(),
    };
    let spec = model_spec(file.model, a.model.as_deref(), a.hidden.clone())?;
    let mut cfg = file.pairwise;
    override_fields!(
        cfg,
        a,
        epochs,
        lr,
        momentum,
        weight_decay,
        margin,
        full_batch,
        pair_batch,
        pair_cap,
        seed,
        eval_every
    );
    if a.pair_batch.is_some() && a.full_batch.is_none() {
        cfg.full_batch = false;
    }
    let ckpt = a
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("baseline.ckpt"));
    let out_dir = parent_dir(&ckpt);
    let test = load_test(a.test.clone(), &bags_dir)?;
    let bags = read_bags(&bags_dir)?;
    let model = spec.build(bags.d(), 1, cfg.seed)?;
    write_effective(
        &out_dir,
        &json!({
            "command": "train-baseline",
            "bags": bags_dir,
            "test": test.as_ref().map(|t| &t.0),
            "out": ckpt,
            "model": spec,
            "pairwise": cfg,
        }),
    )?;
    let trained = train_pairwise(&bags, model, &cfg, test.as_ref().map(|t| t.1.as_slice()))?;
    write_checkpoint(&ckpt, &trained.model, None)?;
    let log_path = out_dir.join("baseline_log.csv");
    std::fs::write(&log_path, trained.log.to_csv()).map_err(Error::from)?;
    let last = trained.log.rows.last();
    result_line(
        out,
        json!({
            "command": "train-baseline",
            "checkpoint": ckpt,
            "log": log_path,
            "epochs": cfg.epochs,
            "risk": last.map(|r| r.risk),
            "test_auc": last.and_then(|r| r.test_auc),
        }),
    )
}

fn read_column(path: &Path, flag: &str) -> CliResult<Vec<String>> {
    readable(path, flag)?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read {flag} {}: {e}", path.display())))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect())
}

fn parse_eval_label(s: &str) -> Option<Label> {
    match s {
        "+1" | "1" | "pos" | "positive" => Some(Label::Positive),
        "-1" | "0" | "neg" | "negative" => Some(Label::Negative),
        _ => None,
    }
}

fn eval_cmd(a: EvalArgs, out: &mut dyn Write) -> CliResult<()> {
    let (auc, n, source) = match (&a.scores, &a.labels, &a.ckpt, &a.data) {
        (Some(s), Some(l), None, None) => {
            let mut scores = read_column(s, "--scores")?;
            let mut labels = read_column(l, "--labels")?;
            // tolerate a header row
            if scores.first().is_some_and(|v| v.parse::<f64>().is_err()) {
                scores.remove(0);
            }
            if labels
                .first()
                .is_some_and(|v| parse_eval_label(v).is_none())
            {
                labels.remove(0);
            }
            if scores.len() != labels.len() {
                return Err(usage(format!(
                    "{} scores but {} labels",
                    scores.len(),
                    labels.len()
                )));
            }
            let samples = scores
                .iter()
                .zip(&labels)
                .enumerate()
                .map(|(i, (s, l))| {
                    let score = s
                        .parse::<f64>()
                        .map_err(|_| usage(format!("line {}: bad score `{s}`", i + 1)))?;
                    let label = parse_eval_label(l)
                        .ok_or_else(|| usage(format!("line {}: bad label `{l}`", i + 1)))?;
                    Ok(ScoredSample::new(score, label))
                })
                .collect::<CliResult<Vec<_>>>()?;
            (
                auc_exact(&samples)?,
                samples.len(),
                json!({ "scores": s, "labels": l }),
            )
        }
        (None, None, Some(c), Some(d)) => {
            readable(c, "--ckpt")?;
            readable(d, "--data")?;
            let ck = read_checkpoint(c)?;
            let data = read_labeled_csv(d)?;
            (
                evaluate_auc(&ck.model, &data)?,
                data.len(),
                json!({ "ckpt": c, "data": d }),
            )
        }
        (None, None, None, None) => {
            return Err(usage("missing --scores/--labels or --ckpt/--data"))
        }
        (Some(_), None, _, _) => return Err(usage("missing --labels")),
        (None, Some(_), _, _) => return Err(usage("missing --scores")),
        (_, _, Some(_), None) => return Err(usage("missing --data")),
        (_, _, None, Some(_)) => return Err(usage("missing --ckpt")),
        _ => {
            return Err(usage(
                "use either --scores/--labels or --ckpt/--data, not both",
            ))
        }
    };
    if let Some(dir) = &a.out {
        write_effective(dir, &json!({ "command": "eval", "inputs": source }))?;
    }
    writeln!(out, "{auc}").map_err(Error::from)?;
    result_line(out, json!({ "command": "eval", "auc": auc, "n": n }))
}

fn reproduce(
    a: ReproduceArgs,
    verbose: bool,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> CliResult<()> {
    let suite: Suite = require(a.suite.as_deref(), "--suite")?
        .parse()
        .map_err(|e: Error| usage(e.to_string()))?;
    let dir = require(a.out.clone(), "--out")?;
    let mut spec: ExperimentSpec = match &a.config {
        Some(p) => load_json(p)?,
        None => suite.spec(),
    };
    if let Some(r) = a.repeats {
        spec.repeats = r;
    }
    if let Some(s) = a.seed {
        spec.base_seed = s;
    }
    if let Some(e) = a.epochs {
        spec.train.epochs = e;
    }
    spec.validate().map_err(|e| usage(e.to_string()))?;
    write_effective(
        &dir,
        &json!({ "command": "reproduce", "suite": suite, "spec": spec, "digest": spec.digest() }),
    )?;
    if verbose {
        let _ = writeln!(err, "running suite {suite:?}, digest {}", spec.digest());
    }
    let report = suite.run(&spec)?;
    report.write(&dir)?;
    if verbose {
        let _ = write!(err, "{}", report.to_markdown());
    }
    let cells: Vec<serde_json::Value> = report
        .cells
        .iter()
        .map(|c| {
            json!({
                "prior": c.key.prior,
                "m": c.key.m,
                "imbalance": c.key.imbalance.to_string(),
                "n_train": c.key.n_train,
                "solver": c.key.solver,
                "mean_auc": c.mean_auc,
                "std_auc": c.std_auc,
            })
        })
        .collect();
    result_line(
        out,
        json!({ "command": "reproduce", "suite": suite, "out": dir, "digest": report.digest, "cells": cells }),
    )
}
