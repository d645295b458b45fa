//! Command-line front end.
//!
//! Every option can also be given in a flat `key = value` file passed with
//! `--config`; keys are the long option names with `-` replaced by `_`.
//! Command-line flags override the file, which overrides built-in defaults.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use crate::attention::{AttentionLevel, HopConfig};
use crate::baselines::{memnet_forward, memnet_select_hops, run_baseline, BaselineMethod, BaselineReport, MemNetConfig, SimpleBaselineKind};
use crate::checkpoint::{load_checkpoint, save_checkpoint};
use crate::data::{corrupt_transcript, load_dataset, load_embedding_table, prune_dataset, save_dataset, save_embedding_table, Dataset, EmbeddingTable, Example, Split};
use crate::error::{Error, Result};
use crate::export::export_attention;
use crate::model::{Amrnn, LossKind};
use crate::synth::{generate, synthetic_embeddings, TaskKind, TaskSpec};
use crate::train::{accuracy, mix_seed, predictions, train, tune_hops, write_history, TrainConfig};
use crate::vocab::{Vocab, UNK};

#[derive(Debug, Parser)]
#[command(name = "amrnn", version, about = "Multi-hop attention network for multiple-choice listening comprehension")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub options: Options,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Train a model and write a checkpoint plus a history file.
    Train,
    /// Report accuracy of a checkpoint, optionally on corrupted transcripts.
    Eval,
    /// Run comparison baselines and write a report.
    Baseline,
    /// Write a synthetic dataset and a matching embedding file.
    GenSynthetic,
    /// Write attention heatmaps for one or all examples of a split.
    ExportAttention,
    /// Train one model per hop count and report dev accuracies.
    TuneHops,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Options {
    /// Flat key = value configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[arg(long, global = true)]
    pub dataset: Option<PathBuf>,
    /// Word embedding file (baselines, pruning).
    #[arg(long, global = true)]
    pub embeddings: Option<PathBuf>,
    #[arg(long, global = true)]
    pub checkpoint: Option<PathBuf>,
    /// Training history file; defaults to `<checkpoint>.history.jsonl`.
    #[arg(long, global = true)]
    pub history: Option<PathBuf>,
    /// Report file for eval, baseline and tune-hops.
    #[arg(long, global = true)]
    pub report: Option<PathBuf>,
    /// Output directory for gen-synthetic and export-attention.
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,
    /// Split to evaluate or export: train, dev or test.
    #[arg(long, global = true)]
    pub split: Option<String>,

    #[arg(long, global = true)]
    pub hidden_size: Option<usize>,
    /// Word embedding size inside the model.
    #[arg(long, global = true)]
    pub input_size: Option<usize>,
    #[arg(long, global = true)]
    pub n_hops: Option<usize>,
    /// word or sentence.
    #[arg(long, global = true)]
    pub level: Option<String>,
    #[arg(long, global = true)]
    pub learning_rate: Option<f64>,
    #[arg(long, global = true)]
    pub momentum: Option<f64>,
    #[arg(long, global = true)]
    pub rms_decay: Option<f64>,
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,
    #[arg(long, global = true)]
    pub dropout_rate: Option<f64>,
    #[arg(long, global = true)]
    pub batch_size: Option<usize>,
    #[arg(long, global = true)]
    pub max_epochs: Option<usize>,
    /// Comma-separated hop counts, e.g. 1,2,3.
    #[arg(long, global = true)]
    pub hop_search: Option<String>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// squared_error or cross_entropy.
    #[arg(long, global = true)]
    pub loss: Option<String>,
    /// Fraction of utterances kept by question-based pruning.
    #[arg(long, global = true)]
    pub keep_fraction: Option<f64>,

    /// Word error rate applied to transcripts before eval.
    #[arg(long, global = true)]
    pub corrupt_rate: Option<f64>,
    #[arg(long, global = true)]
    pub corrupt_seed: Option<u64>,

    /// Comma-separated baseline methods, or `all`.
    #[arg(long, global = true)]
    pub method: Option<String>,
    #[arg(long, global = true)]
    pub memnet_embedding_size: Option<usize>,
    #[arg(long, global = true)]
    pub memnet_learning_rate: Option<f64>,
    #[arg(long, global = true)]
    pub memnet_max_epochs: Option<usize>,
    #[arg(long, global = true)]
    pub memnet_shared: Option<bool>,

    /// keyword_match or two_fact.
    #[arg(long, global = true)]
    pub task: Option<String>,
    #[arg(long, global = true)]
    pub vocab_size: Option<usize>,
    #[arg(long, global = true)]
    pub story_utterances: Option<usize>,
    #[arg(long, global = true)]
    pub words_per_utterance: Option<usize>,
    #[arg(long, global = true)]
    pub n_train: Option<usize>,
    #[arg(long, global = true)]
    pub n_dev: Option<usize>,
    #[arg(long, global = true)]
    pub n_test: Option<usize>,
    #[arg(long, global = true)]
    pub embedding_dim: Option<usize>,

    /// Only export this example.
    #[arg(long, global = true)]
    pub example_id: Option<String>,
}

const FILE_KEYS: &[&str] = &[
    "dataset",
    "embeddings",
    "checkpoint",
    "history",
    "report",
    "output_dir",
    "split",
    "hidden_size",
    "input_size",
    "n_hops",
    "level",
    "learning_rate",
    "momentum",
    "rms_decay",
    "epsilon",
    "dropout_rate",
    "batch_size",
    "max_epochs",
    "hop_search",
    "seed",
    "loss",
    "keep_fraction",
    "corrupt_rate",
    "corrupt_seed",
    "method",
    "memnet_embedding_size",
    "memnet_learning_rate",
    "memnet_max_epochs",
    "memnet_shared",
    "task",
    "vocab_size",
    "story_utterances",
    "words_per_utterance",
    "n_train",
    "n_dev",
    "n_test",
    "embedding_dim",
    "example_id",
];

/// Values read from a configuration file, kept as text until typed lookup.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FileConfig {
    values: BTreeMap<String, String>,
}

impl FileConfig {
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let table: toml::Table = toml::from_str(text).map_err(|e| Error::Config(format!("{}: {e}", origin.display())))?;
        let mut values = BTreeMap::new();
        for (key, value) in table {
            if !FILE_KEYS.contains(&key.as_str()) {
                return Err(Error::Config(format!("{}: unknown key '{key}'", origin.display())));
            }
            let text = match value {
                toml::Value::String(s) => s,
                toml::Value::Integer(i) => i.to_string(),
                toml::Value::Float(f) => f.to_string(),
                toml::Value::Boolean(b) => b.to_string(),
                toml::Value::Array(items) => items
                    .iter()
                    .map(|v| match v {
                        toml::Value::String(s) => s.clone(),
                        other => other.to_string(),
                    })
                    .collect::<Vec<_>>()
                    .join(","),
                _ => return Err(Error::Config(format!("{}: key '{key}' must be a plain value", origin.display()))),
            };
            values.insert(key, text);
        }
        Ok(FileConfig { values })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.values
            .get(key)
            .map(|v| v.parse::<T>().map_err(|e| Error::Config(format!("config key '{key}': {e}"))))
            .transpose()
    }
}

/// Fills every unset option from the file.
fn merge(cli: Options, file: &FileConfig) -> Result<Options> {
    macro_rules! fill {
        ($($field:ident),* $(,)?) => {
            Options {
                config: cli.config,
                $($field: match cli.$field {
                    Some(v) => Some(v),
                    None => file.get(stringify!($field))?,
                },)*
            }
        };
    }
    Ok(fill!(
        dataset,
        embeddings,
        checkpoint,
        history,
        report,
        output_dir,
        split,
        hidden_size,
        input_size,
        n_hops,
        level,
        learning_rate,
        momentum,
        rms_decay,
        epsilon,
        dropout_rate,
        batch_size,
        max_epochs,
        hop_search,
        seed,
        loss,
        keep_fraction,
        corrupt_rate,
        corrupt_seed,
        method,
        memnet_embedding_size,
        memnet_learning_rate,
        memnet_max_epochs,
        memnet_shared,
        task,
        vocab_size,
        story_utterances,
        words_per_utterance,
        n_train,
        n_dev,
        n_test,
        embedding_dim,
        example_id,
    ))
}

/// Fully resolved settings for one invocation.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub options: Options,
    pub train: TrainConfig,
    pub hidden_size: usize,
    pub input_size: usize,
    pub hops: HopConfig,
    pub split: Split,
}

fn parse_split(s: &str) -> Result<Split> {
    match s {
        "train" => Ok(Split::Train),
        "dev" => Ok(Split::Dev),
        "test" => Ok(Split::Test),
        other => Err(Error::Config(format!("unknown split '{other}'"))),
    }
}

fn parse_loss(s: &str) -> Result<LossKind> {
    match s {
        "squared_error" => Ok(LossKind::SquaredError),
        "cross_entropy" => Ok(LossKind::CrossEntropy),
        other => Err(Error::Config(format!("unknown loss '{other}'"))),
    }
}

fn parse_list(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|x| x.trim().parse::<usize>().map_err(|_| Error::Config(format!("bad hop list '{s}'"))))
        .collect()
}

impl RunConfig {
    pub fn resolve(cli: Cli) -> Result<Self> {
        let file = match &cli.options.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let o = merge(cli.options, &file)?;
        let d = TrainConfig::default();
        let train = TrainConfig {
            learning_rate: o.learning_rate.unwrap_or(d.learning_rate),
            momentum: o.momentum.unwrap_or(d.momentum),
            rms_decay: o.rms_decay.unwrap_or(d.rms_decay),
            epsilon: o.epsilon.unwrap_or(d.epsilon),
            dropout_rate: o.dropout_rate.unwrap_or(d.dropout_rate),
            batch_size: o.batch_size.unwrap_or(d.batch_size),
            max_epochs: o.max_epochs.unwrap_or(d.max_epochs),
            hop_search: o.hop_search.as_deref().map(parse_list).transpose()?.unwrap_or(d.hop_search),
            seed: o.seed.unwrap_or(d.seed),
            loss: o.loss.as_deref().map(parse_loss).transpose()?.unwrap_or(d.loss),
        };
        train.validate()?;
        let level = o.level.as_deref().map(str::parse::<AttentionLevel>).transpose()?.unwrap_or(AttentionLevel::Word);
        let hops = HopConfig {
            n_hops: o.n_hops.unwrap_or(1),
            level,
        };
        if hops.n_hops == 0 {
            return Err(Error::Config("n_hops must be at least 1".into()));
        }
        let split = parse_split(o.split.as_deref().unwrap_or("test"))?;
        let cfg = RunConfig {
            command: cli.command,
            hidden_size: o.hidden_size.unwrap_or(128),
            input_size: o.input_size.unwrap_or(128),
            options: o,
            train,
            hops,
            split,
        };
        if cfg.hidden_size == 0 || cfg.input_size == 0 {
            return Err(Error::Config("hidden_size and input_size must be positive".into()));
        }
        cfg.check_paths()?;
        Ok(cfg)
    }

    fn check_paths(&self) -> Result<()> {
        let o = &self.options;
        let need = |present: bool, name: &str| {
            if present {
                Ok(())
            } else {
                Err(Error::Config(format!("--{name} is required for this command")))
            }
        };
        match self.command {
            Command::Train => {
                need(o.dataset.is_some(), "dataset")?;
                need(o.checkpoint.is_some(), "checkpoint")
            }
            Command::Eval => {
                need(o.dataset.is_some(), "dataset")?;
                need(o.checkpoint.is_some(), "checkpoint")
            }
            Command::Baseline => need(o.dataset.is_some(), "dataset"),
            Command::GenSynthetic => {
                need(o.output_dir.is_some(), "output-dir")?;
                need(o.task.is_some(), "task")
            }
            Command::ExportAttention => {
                need(o.dataset.is_some(), "dataset")?;
                need(o.checkpoint.is_some(), "checkpoint")?;
                need(o.output_dir.is_some(), "output-dir")
            }
            Command::TuneHops => need(o.dataset.is_some(), "dataset"),
        }
    }
}

fn path(p: &Option<PathBuf>) -> &Path {
    p.as_deref().expect("checked by RunConfig::resolve")
}

fn write_file(p: &Path, text: &str) -> Result<()> {
    if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(p, text).map_err(|e| Error::io(p, e))
}

fn json_line(value: &impl Serialize) -> String {
    let mut s = serde_json::to_string(value).expect("report record serializes");
    s.push('\n');
    s
}

/// Loads the dataset and applies pruning when `keep_fraction` is set.
fn dataset(cfg: &RunConfig) -> Result<Dataset> {
    let ds = load_dataset(path(&cfg.options.dataset))?;
    match cfg.options.keep_fraction {
        Some(f) if f < 1.0 => {
            let table = embeddings(cfg)?;
            prune_dataset(&ds, f, &table)
        }
        Some(f) if f > 1.0 || f.is_nan() => Err(Error::Config(format!("keep_fraction must be in (0, 1], got {f}"))),
        _ => Ok(ds),
    }
}

fn embeddings(cfg: &RunConfig) -> Result<EmbeddingTable> {
    match &cfg.options.embeddings {
        Some(p) => load_embedding_table(p),
        None => Err(Error::Config("--embeddings is required for this command".into())),
    }
}

fn fresh_model(cfg: &RunConfig, ds: &Dataset, hops: HopConfig) -> Amrnn {
    Amrnn::new(Vocab::from_training_split(ds), cfg.input_size, cfg.hidden_size, hops, cfg.train.seed)
}

fn run_train(cfg: &RunConfig) -> Result<()> {
    let ds = dataset(cfg)?;
    let outcome = train(fresh_model(cfg, &ds, cfg.hops), &ds, &cfg.train)?;
    let ck = path(&cfg.options.checkpoint);
    if let Some(dir) = ck.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    save_checkpoint(&outcome.model, ck)?;
    let history = cfg.options.history.clone().unwrap_or_else(|| {
        let mut name = ck.as_os_str().to_owned();
        name.push(".history.jsonl");
        PathBuf::from(name)
    });
    write_history(&outcome.history, &history)?;
    let best = outcome.history.iter().filter_map(|r| r.dev_accuracy).fold(None, |b: Option<f64>, a| Some(b.map_or(a, |b| b.max(a))));
    match best {
        Some(acc) => println!("trained {} epochs, best dev accuracy {acc}", outcome.history.len()),
        None => println!("trained {} epochs", outcome.history.len()),
    }
    Ok(())
}

#[derive(Serialize)]
struct EvalRecord<'a> {
    id: &'a str,
    chosen: usize,
    correct: bool,
}

#[derive(Serialize)]
struct EvalSummary<'a> {
    split: &'a str,
    accuracy: f64,
    n: usize,
    corrupt_rate: f64,
}

fn split_name(s: Split) -> &'static str {
    match s {
        Split::Train => "train",
        Split::Dev => "dev",
        Split::Test => "test",
    }
}

/// Replaces each story by a corrupted copy; example `i` uses a seed derived from `seed` and `i`.
pub fn corrupt_examples(examples: &[Example], rate: f64, seed: u64, lexicon: &[String]) -> Result<Vec<Example>> {
    examples
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let story = corrupt_transcript(&e.story, rate, mix_seed(&[seed, i as u64]), lexicon)?;
            Ok(Example { story, ..e.clone() })
        })
        .collect()
}

/// Corruption lexicon: the model vocabulary without the unknown-word slot.
pub fn model_lexicon(model: &Amrnn) -> Vec<String> {
    model.encoder.vocab.words().iter().filter(|w| *w != UNK).cloned().collect()
}

fn run_eval(cfg: &RunConfig) -> Result<()> {
    let ds = dataset(cfg)?;
    let model = load_checkpoint(path(&cfg.options.checkpoint))?;
    let rate = cfg.options.corrupt_rate.unwrap_or(0.0);
    let examples = ds.split(cfg.split);
    if examples.is_empty() {
        return Err(Error::Precondition(format!("split {} is empty", split_name(cfg.split))));
    }
    let examples = if rate > 0.0 {
        corrupt_examples(examples, rate, cfg.options.corrupt_seed.unwrap_or(0), &model_lexicon(&model))?
    } else if rate == 0.0 {
        examples.to_vec()
    } else {
        return Err(Error::Config(format!("corrupt_rate must be in [0, 1], got {rate}")));
    };
    let chosen = predictions(&model, &examples)?;
    let acc = accuracy(&chosen, &examples);
    println!("accuracy {acc} on {} {} examples", examples.len(), split_name(cfg.split));
    if let Some(report) = &cfg.options.report {
        let mut out = String::new();
        for (e, &c) in examples.iter().zip(&chosen) {
            out.push_str(&json_line(&EvalRecord {
                id: &e.id,
                chosen: c,
                correct: c == e.answer,
            }));
        }
        out.push_str(&json_line(&EvalSummary {
            split: split_name(cfg.split),
            accuracy: acc,
            n: examples.len(),
            corrupt_rate: rate,
        }));
        write_file(report, &out)?;
    }
    Ok(())
}

enum MethodChoice {
    Fixed(BaselineMethod),
    MemNet,
}

fn parse_methods(spec: &str) -> Result<Vec<MethodChoice>> {
    if spec == "all" {
        let mut all: Vec<MethodChoice> = SimpleBaselineKind::ALL
            .into_iter()
            .map(|k| MethodChoice::Fixed(BaselineMethod::Simple(k)))
            .collect();
        all.push(MethodChoice::Fixed(BaselineMethod::SlidingWindow(5)));
        all.push(MethodChoice::MemNet);
        return Ok(all);
    }
    spec.split(',')
        .map(str::trim)
        .map(|m| {
            if m == "memnet" {
                Ok(MethodChoice::MemNet)
            } else {
                m.parse().map(MethodChoice::Fixed)
            }
        })
        .collect()
}

fn run_baseline_command(cfg: &RunConfig) -> Result<()> {
    let ds = dataset(cfg)?;
    let examples = ds.split(cfg.split);
    let methods = parse_methods(cfg.options.method.as_deref().unwrap_or("all"))?;
    let mut report = BaselineReport::default();
    let mut table: Option<EmbeddingTable> = None;
    for m in methods {
        match m {
            MethodChoice::Fixed(method) => {
                if table.is_none() {
                    table = Some(embeddings(cfg)?);
                }
                let chosen = run_baseline(method, examples, table.as_ref().expect("loaded above"))?;
                report.add(&method.to_string(), examples, &chosen);
            }
            MethodChoice::MemNet => {
                let d = MemNetConfig::default();
                let mcfg = MemNetConfig {
                    embedding_size: cfg.options.memnet_embedding_size.unwrap_or(d.embedding_size),
                    learning_rate: cfg.options.memnet_learning_rate.unwrap_or(d.learning_rate),
                    max_epochs: cfg.options.memnet_max_epochs.unwrap_or(d.max_epochs),
                    shared_embeddings: cfg.options.memnet_shared.unwrap_or(d.shared_embeddings),
                    batch_size: cfg.options.batch_size.unwrap_or(d.batch_size),
                    hop_search: cfg.train.hop_search.clone(),
                    seed: cfg.train.seed,
                    ..d
                };
                let (net, _) = memnet_select_hops(&ds, &mcfg)?;
                let chosen = examples
                    .par_iter()
                    .map(|e| memnet_forward(&net, e).map(|o| o.chosen))
                    .collect::<Result<Vec<_>>>()?;
                report.add("memnet", examples, &chosen);
            }
        }
    }
    for s in &report.summaries {
        println!("{} accuracy {} on {} examples", s.method, s.accuracy, s.n);
    }
    if let Some(p) = &cfg.options.report {
        write_file(p, &report.to_json_lines())?;
    }
    Ok(())
}

fn run_gen(cfg: &RunConfig) -> Result<()> {
    let o = &cfg.options;
    let kind: TaskKind = o.task.as_deref().expect("checked").parse()?;
    let seed = o.seed.unwrap_or(0);
    let base = match kind {
        TaskKind::KeywordMatch => TaskSpec::keyword_match(seed),
        TaskKind::TwoFact => TaskSpec::two_fact(seed),
    };
    let spec = TaskSpec {
        vocab_size: o.vocab_size.unwrap_or(base.vocab_size),
        story_utterances: o.story_utterances.unwrap_or(base.story_utterances),
        words_per_utterance: o.words_per_utterance.unwrap_or(base.words_per_utterance),
        n_train: o.n_train.unwrap_or(base.n_train),
        n_dev: o.n_dev.unwrap_or(base.n_dev),
        n_test: o.n_test.unwrap_or(base.n_test),
        ..base
    };
    let ds = generate(&spec)?;
    let table = synthetic_embeddings(&spec, o.embedding_dim.unwrap_or(50))?;
    let dir = path(&o.output_dir);
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    save_dataset(&ds, dir.join("dataset.jsonl"))?;
    save_embedding_table(&table, dir.join("embeddings.txt"))?;
    let (tr, dv, te) = ds.sizes();
    println!("wrote {kind} dataset ({tr} train, {dv} dev, {te} test) to {}", dir.display());
    Ok(())
}

fn run_export(cfg: &RunConfig) -> Result<()> {
    let ds = dataset(cfg)?;
    let model = load_checkpoint(path(&cfg.options.checkpoint))?;
    let level = match &cfg.options.level {
        Some(l) => l.parse()?,
        None => model.hops.level,
    };
    let dir = path(&cfg.options.output_dir);
    let selected: Vec<&Example> = match &cfg.options.example_id {
        Some(id) => {
            let found = ds.iter().find(|(_, e)| &e.id == id).map(|(_, e)| e);
            vec![found.ok_or_else(|| Error::Config(format!("no example with id '{id}'")))?]
        }
        None => ds.split(cfg.split).iter().collect(),
    };
    for e in &selected {
        export_attention(&model, e, level, dir)?;
    }
    println!("wrote {} heatmap pairs to {}", selected.len(), dir.display());
    Ok(())
}

#[derive(Serialize)]
struct HopRecord {
    n_hops: usize,
    dev_accuracy: f64,
}

#[derive(Serialize)]
struct HopChoice {
    best: usize,
}

fn run_tune(cfg: &RunConfig) -> Result<()> {
    let ds = dataset(cfg)?;
    let search = tune_hops(|n| fresh_model(cfg, &ds, HopConfig { n_hops: n, ..cfg.hops }), &ds, &cfg.train)?;
    let mut out = String::new();
    for &(n, acc) in &search.dev_accuracy {
        println!("n_hops {n} dev accuracy {acc}");
        out.push_str(&json_line(&HopRecord { n_hops: n, dev_accuracy: acc }));
    }
    println!("best n_hops {}", search.best);
    out.push_str(&json_line(&HopChoice { best: search.best }));
    if let Some(p) = &cfg.options.report {
        write_file(p, &out)?;
    }
    Ok(())
}

pub fn run(cfg: &RunConfig) -> Result<()> {
    match cfg.command {
        Command::Train => run_train(cfg),
        Command::Eval => run_eval(cfg),
        Command::Baseline => run_baseline_command(cfg),
        Command::GenSynthetic => run_gen(cfg),
        Command::ExportAttention => run_export(cfg),
        Command::TuneHops => run_tune(cfg),
    }
}

/// 1 usage or configuration, 2 data validation, 3 runtime or numeric.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Io { .. } => 1,
        Error::Parse { .. } | Error::Format { .. } | Error::Validation { .. } => 2,
        Error::Dimension { .. } | Error::Rank { .. } | Error::Precondition(_) | Error::Numeric(_) => 3,
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match RunConfig::resolve(cli).and_then(|cfg| run(&cfg)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
