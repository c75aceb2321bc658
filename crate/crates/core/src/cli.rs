//! The `relembed` command line: `prepare`, `stats`, `train`, `eval`, `nn`
//! and `export`.
//!
//! Every setting resolves as flag > `--config` file > built-in default, and
//! `prepare`, `train` and `eval` write the resolved settings to
//! `<out>/config.resolved` so `relembed <command> --config <out>/config.resolved`
//! replays the run. The config file is flat `key = value` text; `#` starts a
//! comment.
//!
//! Exit codes: 0 success, 2 usage or configuration, 3 I/O, 4 data (parse,
//! vocabulary, checkpoint), 5 numeric failure during training.

use std::collections::{BTreeMap, HashMap};
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::analysis::{self, ExportTarget};
use crate::checkpoint::{load_checkpoint_for, save_checkpoint};
use crate::data::{classify_relations, Interner, RelationCategory, Split, TripletStore, Vocabulary};
use crate::error::Error;
use crate::eval::{EvalSetting, Evaluator};
use crate::params::{Hyperparams, ModelParams, PretrainedVectors};
use crate::scoring::{Activation, ModelKind};
use crate::train::{train_with_observer, LossTrace, TrainConfig};

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_DATA: i32 = 4;
pub const EXIT_NUMERIC: i32 = 5;

/// Default value of every configuration key.
const DEFAULTS: &[(&str, &str)] = &[
    ("data", ""),
    ("train", ""),
    ("valid", ""),
    ("test", ""),
    ("out", ""),
    ("checkpoint", ""),
    ("min_relation_count", "1"),
    ("model", "distmult"),
    ("slices", "auto"),
    ("dim", "100"),
    ("epochs", "100"),
    ("lr", "0.1"),
    ("reg", "0.0001"),
    ("minibatches", "10"),
    ("margin", "1"),
    ("activation", "identity"),
    ("seed", "0"),
    ("adagrad_epsilon", "1e-8"),
    ("shuffle", "true"),
    ("checkpoint_every", "0"),
    ("init_entity_vectors", ""),
    ("entity_token_map", ""),
    ("init_word_vectors", ""),
    ("entity_name_map", ""),
    ("filtered", "true"),
    ("type_constrained", "false"),
    ("metrics", "mrr,hits@10"),
    ("by_category", "false"),
    ("category_threshold", "1.5"),
    ("split", "test"),
    ("relation", ""),
    ("k", "3"),
    ("what", "relations"),
    ("output", ""),
    ("workers", "0"),
];

const DATA_KEYS: &[&str] = &["data", "train", "valid", "test"];

fn command_keys(command: &str) -> Vec<&'static str> {
    let specific: &[&str] = match command {
        "prepare" => &["out", "min_relation_count"],
        "stats" => &["category_threshold"],
        "train" => &[
            "out",
            "model",
            "slices",
            "dim",
            "epochs",
            "lr",
            "reg",
            "minibatches",
            "margin",
            "activation",
            "seed",
            "adagrad_epsilon",
            "shuffle",
            "checkpoint_every",
            "init_entity_vectors",
            "entity_token_map",
            "init_word_vectors",
            "entity_name_map",
            "workers",
        ],
        "eval" => &[
            "checkpoint",
            "out",
            "filtered",
            "type_constrained",
            "metrics",
            "by_category",
            "category_threshold",
            "split",
            "workers",
        ],
        "nn" => &["checkpoint", "relation", "k"],
        "export" => &["checkpoint", "what", "output"],
        _ => &[],
    };
    DATA_KEYS.iter().chain(specific).copied().collect()
}

#[derive(Parser, Debug)]
#[command(name = "relembed", version, about = "Multi-relational embeddings for knowledge base completion")]
pub struct Cli {
    /// Log progress to stderr; repeat for more detail
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Load triplet files, optionally keep frequent relations, write a dataset directory
    Prepare(PrepareArgs),
    /// Print dataset statistics
    Stats(StatsArgs),
    /// Train a model
    Train(Box<TrainArgs>),
    /// Evaluate a checkpoint on link prediction
    Eval(EvalArgs),
    /// Nearest relations in parameter space
    Nn(NnArgs),
    /// Export entity or relation parameters as TSV
    Export(ExportArgs),
}

#[derive(Args, Debug, Default)]
pub struct DataArgs {
    /// Flat key = value config file; flags override it
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Dataset directory written by `prepare`
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Training triplets, one tab-separated subject, relation, object per line
    #[arg(long)]
    pub train: Option<PathBuf>,
    /// Validation triplets
    #[arg(long)]
    pub valid: Option<PathBuf>,
    /// Test triplets
    #[arg(long)]
    pub test: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct PrepareArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Keep relations with at least this many training triplets
    #[arg(long)]
    pub min_relation_count: Option<usize>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct StatsArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Average counterparts per argument separating 1 from n (default 1.5)
    #[arg(long)]
    pub category_threshold: Option<f64>,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// distance | single-layer | transe | bilinear | distmult | bilinear-linear | ntn, optionally with a -tanh suffix
    #[arg(long)]
    pub model: Option<String>,
    /// Hidden width for distance, single-layer and ntn
    #[arg(long)]
    pub slices: Option<usize>,
    /// Entity dimension
    #[arg(long)]
    pub dim: Option<usize>,
    /// Training epochs
    #[arg(long)]
    pub epochs: Option<usize>,
    /// AdaGrad learning rate
    #[arg(long)]
    pub lr: Option<f64>,
    /// L2 weight on relation parameters
    #[arg(long)]
    pub reg: Option<f64>,
    /// Mini-batches per epoch
    #[arg(long)]
    pub minibatches: Option<usize>,
    /// Hinge margin
    #[arg(long)]
    pub margin: Option<f64>,
    /// identity | tanh
    #[arg(long)]
    pub activation: Option<String>,
    /// Seed of every random draw
    #[arg(long)]
    pub seed: Option<u64>,
    /// AdaGrad epsilon
    #[arg(long)]
    pub adagrad_epsilon: Option<f64>,
    /// Keep the training order fixed across epochs
    #[arg(long)]
    pub no_shuffle: bool,
    /// Also write a checkpoint every this many epochs
    #[arg(long)]
    pub checkpoint_every: Option<usize>,
    /// Pre-trained entity vectors (word2vec text format)
    #[arg(long)]
    pub init_entity_vectors: Option<PathBuf>,
    /// TSV: entity name, token in the entity vector file
    #[arg(long)]
    pub entity_token_map: Option<PathBuf>,
    /// Pre-trained word vectors for word-averaged initialization
    #[arg(long)]
    pub init_word_vectors: Option<PathBuf>,
    /// TSV: entity name, display name to split into words
    #[arg(long)]
    pub entity_name_map: Option<PathBuf>,
    /// Worker threads; 0 uses every core
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Checkpoint written by `train`
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Keep known positives among the candidates
    #[arg(long, conflicts_with = "filtered")]
    pub raw: bool,
    /// Drop known positives from the candidates (the default)
    #[arg(long)]
    pub filtered: bool,
    /// Restrict candidates to entities seen on the queried side of the relation
    #[arg(long)]
    pub type_constrained: bool,
    /// Comma-separated: mrr, hits@K, map
    #[arg(long)]
    pub metrics: Option<String>,
    /// Add the HITS@k table by relation category
    #[arg(long)]
    pub by_category: bool,
    /// Average counterparts per argument separating 1 from n (default 1.5)
    #[arg(long)]
    pub category_threshold: Option<f64>,
    /// test | valid
    #[arg(long)]
    pub split: Option<String>,
    /// Worker threads; 0 uses every core
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Args, Debug)]
pub struct NnArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Checkpoint written by `train`
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Relation name; repeat for several
    #[arg(long)]
    pub relation: Vec<String>,
    /// Neighbors per relation
    #[arg(long)]
    pub k: Option<usize>,
}

#[derive(Args, Debug)]
pub struct ExportArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Checkpoint written by `train`
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// entities | relations
    #[arg(long)]
    pub what: Option<String>,
    /// Output TSV path
    #[arg(long)]
    pub output: Option<PathBuf>,
}

/// Failure with its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Io { .. } => EXIT_IO,
            Error::Config(_) => EXIT_USAGE,
            Error::NonFinite { .. } => EXIT_NUMERIC,
            Error::Parse { .. } | Error::Vocabulary { .. } | Error::Checkpoint { .. } | Error::Data(_) => EXIT_DATA,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Resolved settings for one command.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: String,
    values: BTreeMap<String, String>,
}

impl RunConfig {
    /// Defaults, then `file` entries, then `overrides`; only the command's
    /// keys are accepted.
    pub fn resolve(command: &str, file: Option<&Path>, overrides: Vec<(&'static str, String)>) -> CliResult<Self> {
        let keys = command_keys(command);
        let mut values: BTreeMap<String, String> = DEFAULTS
            .iter()
            .filter(|(k, _)| keys.contains(k))
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        if let Some(path) = file {
            let text = fs::read_to_string(path).map_err(|e| CliError::from(Error::io(path, e)))?;
            for (k, v) in parse_config(&text, path)? {
                if !keys.contains(&k.as_str()) {
                    return Err(CliError::usage(format!(
                        "{}: key `{k}` does not apply to `{command}`",
                        path.display()
                    )));
                }
                values.insert(k, v);
            }
        }
        for (k, v) in overrides {
            debug_assert!(keys.contains(&k), "{k} missing from command keys");
            values.insert(k.to_owned(), v);
        }
        let mut config = RunConfig {
            command: command.to_owned(),
            values,
        };
        config.normalize_model()?;
        Ok(config)
    }

    // `distmult-tanh` is `model = distmult`, `activation = tanh`; `slices =
    // auto` becomes the family default.
    fn normalize_model(&mut self) -> CliResult<()> {
        let Some(model) = self.values.get("model").cloned() else {
            return Ok(());
        };
        if let Some(base) = model.strip_suffix("-tanh") {
            self.values.insert("model".into(), base.to_owned());
            self.values.insert("activation".into(), "tanh".into());
        }
        let model = self.get("model").to_owned();
        if self.get("slices") == "auto" {
            let slices = match model.as_str() {
                "ntn" | "single-layer" => "4".to_owned(),
                "distance" => self.get("dim").to_owned(),
                _ => "1".to_owned(),
            };
            self.values.insert("slices".into(), slices);
        }
        if model == "bilinear-linear" && self.get("slices") != "1" {
            return Err(CliError::usage("bilinear-linear has exactly one slice"));
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or("")
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> CliResult<T> {
        self.get(key)
            .parse()
            .map_err(|_| CliError::usage(format!("invalid value `{}` for `{key}`", self.get(key))))
    }

    fn flag(&self, key: &str) -> CliResult<bool> {
        match self.get(key) {
            "true" | "1" | "yes" => Ok(true),
            "false" | "0" | "no" => Ok(false),
            other => Err(CliError::usage(format!("`{key}` must be true or false, got `{other}`"))),
        }
    }

    fn path(&self, key: &str) -> Option<PathBuf> {
        let v = self.get(key);
        (!v.is_empty()).then(|| PathBuf::from(v))
    }

    fn required_path(&self, key: &str) -> CliResult<PathBuf> {
        self.path(key)
            .ok_or_else(|| CliError::usage(format!("`--{}` is required", key.replace('_', "-"))))
    }

    /// `key = value` lines in key order.
    pub fn to_text(&self) -> String {
        let mut s = format!("# relembed {} (resolved configuration)\n", self.command);
        for (k, v) in &self.values {
            s.push_str(&format!("{k} = {v}\n"));
        }
        s
    }

    fn echo(&self, out_dir: &Path) -> CliResult<()> {
        let path = out_dir.join("config.resolved");
        fs::write(&path, self.to_text()).map_err(|e| Error::io(&path, e).into())
    }

    pub fn hyperparams(&self) -> CliResult<Hyperparams> {
        let activation: Activation = self.get("activation").parse().map_err(CliError::from)?;
        let hyper = Hyperparams {
            entity_dim: self.parse("dim")?,
            margin: self.parse("margin")?,
            learning_rate: self.parse("lr")?,
            l2_reg: self.parse("reg")?,
            minibatch_count: self.parse("minibatches")?,
            epochs: self.parse("epochs")?,
            activation,
            seed: self.parse("seed")?,
        };
        hyper.validate()?;
        Ok(hyper)
    }

    pub fn model_kind(&self) -> CliResult<ModelKind> {
        Ok(ModelKind::from_name(self.get("model"), self.parse("slices")?)?)
    }
}

fn parse_config(text: &str, path: &Path) -> CliResult<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            CliError::usage(format!("{}:{}: expected `key = value`", path.display(), i + 1))
        })?;
        out.push((k.trim().to_owned(), v.trim().to_owned()));
    }
    Ok(out)
}

fn push<T: ToString>(out: &mut Vec<(&'static str, String)>, key: &'static str, value: Option<T>) {
    if let Some(v) = value {
        out.push((key, v.to_string()));
    }
}

// Absolute, so the echoed configuration replays from any directory.
fn path_str(p: &Option<PathBuf>) -> Option<String> {
    p.as_ref()
        .map(|p| std::path::absolute(p).unwrap_or_else(|_| p.clone()).display().to_string())
}

impl DataArgs {
    fn overrides(&self, out: &mut Vec<(&'static str, String)>) {
        push(out, "data", path_str(&self.data));
        push(out, "train", path_str(&self.train));
        push(out, "valid", path_str(&self.valid));
        push(out, "test", path_str(&self.test));
    }
}

/// Parses `args` (program name first) and runs the command, writing
/// human-readable output to `stdout`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write) -> CliResult<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| {
        let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
        CliError {
            code,
            message: e.to_string(),
        }
    })?;
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    // a second run in the same process keeps the first logger
    let _ = env_logger::Builder::new().filter_level(level).try_init();
    let mut o = Vec::new();
    let (name, data) = match &cli.command {
        Command::Prepare(a) => {
            push(&mut o, "min_relation_count", a.min_relation_count);
            push(&mut o, "out", path_str(&a.out));
            ("prepare", &a.data)
        }
        Command::Stats(a) => {
            push(&mut o, "category_threshold", a.category_threshold);
            ("stats", &a.data)
        }
        Command::Train(a) => {
            push(&mut o, "out", path_str(&a.out));
            push(&mut o, "model", a.model.clone());
            push(&mut o, "slices", a.slices);
            push(&mut o, "dim", a.dim);
            push(&mut o, "epochs", a.epochs);
            push(&mut o, "lr", a.lr);
            push(&mut o, "reg", a.reg);
            push(&mut o, "minibatches", a.minibatches);
            push(&mut o, "margin", a.margin);
            push(&mut o, "activation", a.activation.clone());
            push(&mut o, "seed", a.seed);
            push(&mut o, "adagrad_epsilon", a.adagrad_epsilon);
            push(&mut o, "shuffle", a.no_shuffle.then_some(false));
            push(&mut o, "checkpoint_every", a.checkpoint_every);
            push(&mut o, "init_entity_vectors", path_str(&a.init_entity_vectors));
            push(&mut o, "entity_token_map", path_str(&a.entity_token_map));
            push(&mut o, "init_word_vectors", path_str(&a.init_word_vectors));
            push(&mut o, "entity_name_map", path_str(&a.entity_name_map));
            push(&mut o, "workers", a.workers);
            ("train", &a.data)
        }
        Command::Eval(a) => {
            push(&mut o, "checkpoint", path_str(&a.checkpoint));
            push(&mut o, "out", path_str(&a.out));
            push(&mut o, "filtered", a.raw.then_some(false).or(a.filtered.then_some(true)));
            push(&mut o, "type_constrained", a.type_constrained.then_some(true));
            push(&mut o, "metrics", a.metrics.clone());
            push(&mut o, "by_category", a.by_category.then_some(true));
            push(&mut o, "category_threshold", a.category_threshold);
            push(&mut o, "split", a.split.clone());
            push(&mut o, "workers", a.workers);
            ("eval", &a.data)
        }
        Command::Nn(a) => {
            push(&mut o, "checkpoint", path_str(&a.checkpoint));
            if !a.relation.is_empty() {
                o.push(("relation", a.relation.join("\u{1f}")));
            }
            push(&mut o, "k", a.k);
            ("nn", &a.data)
        }
        Command::Export(a) => {
            push(&mut o, "checkpoint", path_str(&a.checkpoint));
            push(&mut o, "what", a.what.clone());
            push(&mut o, "output", path_str(&a.output));
            ("export", &a.data)
        }
    };
    data.overrides(&mut o);
    let config = RunConfig::resolve(name, data.config.as_deref(), o)?;
    execute(&config, stdout)
}

/// Runs an already resolved configuration.
pub fn execute(config: &RunConfig, stdout: &mut dyn Write) -> CliResult<()> {
    if config.values.contains_key("workers") {
        let workers: usize = config.parse("workers")?;
        if workers > 0 {
            // only the first call in a process can size the global pool
            let _ = rayon::ThreadPoolBuilder::new().num_threads(workers).build_global();
        }
    }
    match config.command.as_str() {
        "prepare" => cmd_prepare(config, stdout),
        "stats" => cmd_stats(config, stdout),
        "train" => cmd_train(config, stdout),
        "eval" => cmd_eval(config, stdout),
        "nn" => cmd_nn(config, stdout),
        "export" => cmd_export(config, stdout),
        other => Err(CliError::usage(format!("unknown command `{other}`"))),
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| Error::io(path, e).into()
}

fn write_out(stdout: &mut dyn Write, text: &str) -> CliResult<()> {
    stdout
        .write_all(text.as_bytes())
        .map_err(|e| CliError { code: EXIT_IO, message: format!("stdout: {e}") })
}

const VOCAB_ENTITIES: &str = "entities.tsv";
const VOCAB_RELATIONS: &str = "relations.tsv";

fn write_names(names: &Interner, path: &Path) -> CliResult<()> {
    let mut text = String::new();
    for (id, name) in names.iter() {
        text.push_str(&format!("{id}\t{name}\n"));
    }
    fs::write(path, text).map_err(io_err(path))
}

fn read_names(path: &Path) -> CliResult<Interner> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut names = Interner::new();
    for (i, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let (id, name) = line.split_once('\t').ok_or_else(|| {
            CliError::from(Error::Parse {
                path: path.to_owned(),
                line: i + 1,
                message: "expected `id<TAB>name`".into(),
            })
        })?;
        if id.parse::<usize>().ok() != Some(names.len()) || names.id(name).is_some() {
            return Err(Error::Parse {
                path: path.to_owned(),
                line: i + 1,
                message: format!("ids must be dense and names unique, found `{id}` `{name}`"),
            }
            .into());
        }
        names.intern(name);
    }
    Ok(names)
}

/// Loads either a prepared directory or three raw split files.
pub fn load_store(config: &RunConfig) -> CliResult<TripletStore> {
    if let Some(dir) = config.path("data") {
        let mut vocab = Vocabulary::new();
        vocab.entities = read_names(&dir.join(VOCAB_ENTITIES))?;
        vocab.relations = read_names(&dir.join(VOCAB_RELATIONS))?;
        return Ok(TripletStore::load_with_vocabulary(
            vocab,
            dir.join("train.tsv"),
            dir.join("valid.tsv"),
            dir.join("test.tsv"),
        )?);
    }
    let train = config.required_path("train")?;
    let valid = config.required_path("valid")?;
    let test = config.required_path("test")?;
    Ok(TripletStore::load(train, valid, test)?)
}

fn category_summary(store: &TripletStore, threshold: f64) -> CliResult<String> {
    let table = classify_relations(store, threshold)?;
    let mut s = format!("# relation categories (threshold {threshold})\n");
    for c in RelationCategory::ALL {
        let n = table.categories.iter().filter(|&&x| x == c).count();
        s.push_str(&format!("category\t{}\t{n}\n", c.label()));
    }
    Ok(s)
}

fn cmd_prepare(config: &RunConfig, stdout: &mut dyn Write) -> CliResult<()> {
    let min: usize = config.parse("min_relation_count")?;
    if min == 0 {
        return Err(CliError::usage("--min-relation-count must be at least 1"));
    }
    let out = config.required_path("out")?;
    let loaded = load_store(config)?;
    let store = if min > 1 {
        loaded.filter_frequent_relations(min)
    } else {
        loaded
    };
    fs::create_dir_all(&out).map_err(io_err(&out))?;
    for split in Split::ALL {
        store.write_split(split, out.join(format!("{}.tsv", split.name())))?;
    }
    write_names(&store.vocab().entities, &out.join(VOCAB_ENTITIES))?;
    write_names(&store.vocab().relations, &out.join(VOCAB_RELATIONS))?;
    let stats = store.stats().to_string();
    let stats_path = out.join("stats.txt");
    fs::write(&stats_path, &stats).map_err(io_err(&stats_path))?;
    config.echo(&out)?;
    write_out(stdout, &stats)
}

fn cmd_stats(config: &RunConfig, stdout: &mut dyn Write) -> CliResult<()> {
    let store = load_store(config)?;
    let mut text = store.stats().to_string();
    if !store.is_empty() {
        text.push_str(&category_summary(&store, config.parse("category_threshold")?)?);
    }
    write_out(stdout, &text)
}

fn read_tsv_map(path: &Path) -> CliResult<HashMap<String, String>> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut map = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (k, v) = line.split_once('\t').ok_or_else(|| {
            CliError::from(Error::Parse {
                path: path.to_owned(),
                line: i + 1,
                message: "expected two tab-separated fields".into(),
            })
        })?;
        map.insert(k.to_owned(), v.to_owned());
    }
    Ok(map)
}

fn cmd_train(config: &RunConfig, stdout: &mut dyn Write) -> CliResult<()> {
    let hyper = config.hyperparams()?;
    let kind = config.model_kind()?;
    let out = config.required_path("out")?;
    let train_config = TrainConfig {
        adagrad_epsilon: config.parse("adagrad_epsilon")?,
        shuffle: config.flag("shuffle")?,
        checkpoint_every: Some(config.parse::<usize>("checkpoint_every")?).filter(|&k| k > 0),
    };
    let store = load_store(config)?;
    let mut params = ModelParams::init_random(kind, hyper, store.num_entities(), store.num_relations())?;

    if let Some(path) = config.path("init_entity_vectors") {
        let vectors = PretrainedVectors::read(&path)?;
        let map = config.path("entity_token_map").map(|p| read_tsv_map(&p)).transpose()?;
        let n = params.init_from_entity_vectors(&store.vocab().entities, &vectors, map.as_ref())?;
        write_out(stdout, &format!("initialized {n} of {} entities from {}\n", store.num_entities(), path.display()))?;
    }
    if let Some(path) = config.path("init_word_vectors") {
        let vectors = PretrainedVectors::read(&path)?;
        let map = config.path("entity_name_map").map(|p| read_tsv_map(&p)).transpose()?;
        let report = params.init_word_averaged(&store.vocab().entities, &vectors, map.as_ref())?;
        write_out(
            stdout,
            &format!(
                "word-averaged {} entities ({} words found, {} random)\n",
                report.entities_initialized, report.words_found, report.words_missing
            ),
        )?;
    }

    fs::create_dir_all(&out).map_err(io_err(&out))?;
    config.echo(&out)?;
    let trace_path = out.join("loss_trace.tsv");
    let mut trace_file = fs::File::create(&trace_path).map_err(io_err(&trace_path))?;
    writeln!(trace_file, "{}", LossTrace::HEADER).map_err(io_err(&trace_path))?;
    let vocab = store.vocab().clone();
    let total_epochs = params.hyper().epochs;
    let (params, trace) = train_with_observer(&store, &train_config, params, |event| {
        writeln!(trace_file, "{}", event.stats).map_err(|e| Error::io(&trace_path, e))?;
        if event.checkpoint_due && event.stats.epoch < total_epochs {
            save_checkpoint(
                event.params,
                &vocab,
                event.stats.epoch,
                out.join(format!("checkpoint-epoch{:04}.ckpt", event.stats.epoch)),
            )?;
        }
        Ok(())
    })?;
    save_checkpoint(&params, &vocab, total_epochs, out.join("model.ckpt"))?;
    let last = trace.epochs.last().map(|e| e.mean_loss).unwrap_or(f64::NAN);
    write_out(
        stdout,
        &format!(
            "trained {kind} ({} activation) for {total_epochs} epochs, final mean loss {last:.6}\nwrote {}\n",
            params.activation(),
            out.join("model.ckpt").display()
        ),
    )
}

/// Parsed `metrics` list.
#[derive(Debug, Default, PartialEq)]
struct Metrics {
    mrr: bool,
    hits: Vec<usize>,
    map: bool,
}

fn parse_metrics(spec: &str) -> CliResult<Metrics> {
    let mut m = Metrics::default();
    for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        match item.to_ascii_lowercase().as_str() {
            "mrr" => m.mrr = true,
            "map" => m.map = true,
            other => {
                let k = other
                    .strip_prefix("hits@")
                    .and_then(|k| k.parse::<usize>().ok())
                    .filter(|&k| k >= 1)
                    .ok_or_else(|| CliError::usage(format!("unknown metric `{item}`")))?;
                m.hits.push(k);
            }
        }
    }
    Ok(m)
}

fn cmd_eval(config: &RunConfig, stdout: &mut dyn Write) -> CliResult<()> {
    let metrics = parse_metrics(config.get("metrics"))?;
    let split = match config.get("split") {
        "test" => Split::Test,
        "valid" => Split::Valid,
        other => return Err(CliError::usage(format!("--split must be test or valid, got `{other}`"))),
    };
    let setting = EvalSetting {
        filter_known_positives: config.flag("filtered")?,
        type_constrained: config.flag("type_constrained")?,
        hits_k: if metrics.hits.is_empty() { vec![10] } else { metrics.hits.clone() },
    };
    let by_category = config.flag("by_category")?;
    let threshold: f64 = config.parse("category_threshold")?;
    let checkpoint = config.required_path("checkpoint")?;
    let out = config.path("out");
    let store = load_store(config)?;
    let ckpt = load_checkpoint_for(&checkpoint, store.vocab())?;
    let evaluator = Evaluator::new(&ckpt.params, &store)?;
    let mut report = evaluator.evaluate(split, &setting)?;
    if by_category {
        report = report.with_categories(&store, Some(threshold))?;
    }
    if metrics.map {
        report.map = Some(evaluator.mean_average_precision(split));
    }
    let mut human = String::new();
    for line in report.to_string().lines() {
        let skip = (line.starts_with("MRR") && !metrics.mrr) || (line.starts_with("HITS@") && metrics.hits.is_empty());
        if !skip {
            human.push_str(line);
            human.push('\n');
        }
    }
    write_out(stdout, &human)?;
    if let Some(dir) = out {
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        let path = dir.join("eval.jsonl");
        let mut text = String::new();
        for record in report.records() {
            text.push_str(&record.to_string());
            text.push('\n');
        }
        fs::write(&path, text).map_err(io_err(&path))?;
        config.echo(&dir)?;
    }
    Ok(())
}

fn cmd_nn(config: &RunConfig, stdout: &mut dyn Write) -> CliResult<()> {
    let k: usize = config.parse("k")?;
    if k == 0 {
        return Err(CliError::usage("--k must be at least 1"));
    }
    let names: Vec<&str> = config.get("relation").split('\u{1f}').filter(|s| !s.is_empty()).collect();
    if names.is_empty() {
        return Err(CliError::usage("`--relation` is required"));
    }
    let checkpoint = config.required_path("checkpoint")?;
    let store = load_store(config)?;
    let ckpt = load_checkpoint_for(&checkpoint, store.vocab())?;
    let vocab = store.vocab();
    if k >= vocab.num_relations() {
        return Err(CliError::usage(format!(
            "--k must be below the number of relations ({})",
            vocab.num_relations()
        )));
    }
    let mut text = String::new();
    for name in names {
        let Some(r) = vocab.relations.id(name) else {
            return Err(CliError::usage(format!(
                "unknown relation `{name}`; close matches: {}",
                close_matches(name, vocab.relations.names()).join(", ")
            )));
        };
        for (other, d) in analysis::nearest_relations_named(&ckpt.params, vocab, r, k)? {
            text.push_str(&format!("{name}\t{other}\t{d:.6}\n"));
        }
    }
    write_out(stdout, &text)
}

fn close_matches(name: &str, candidates: &[String]) -> Vec<String> {
    let mut scored: Vec<(usize, &String)> = candidates
        .iter()
        .map(|c| (strsim::levenshtein(name, c), c))
        .collect();
    scored.sort();
    scored.into_iter().take(5).map(|(_, c)| c.clone()).collect()
}

fn cmd_export(config: &RunConfig, stdout: &mut dyn Write) -> CliResult<()> {
    let what = match config.get("what") {
        "entities" => ExportTarget::Entities,
        "relations" => ExportTarget::Relations,
        other => return Err(CliError::usage(format!("--what must be entities or relations, got `{other}`"))),
    };
    let checkpoint = config.required_path("checkpoint")?;
    let output = config.required_path("output")?;
    let store = load_store(config)?;
    let ckpt = load_checkpoint_for(&checkpoint, store.vocab())?;
    analysis::export_embeddings(&ckpt.params, store.vocab(), what, &output)?;
    let rows = match what {
        ExportTarget::Entities => store.num_entities(),
        ExportTarget::Relations => store.num_relations(),
    };
    write_out(stdout, &format!("wrote {rows} rows to {}\n", output.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metrics_list() {
        assert_eq!(
            parse_metrics("mrr, hits@1,HITS@10,map").unwrap(),
            Metrics {
                mrr: true,
                hits: vec![1, 10],
                map: true
            }
        );
        assert!(parse_metrics("hits@0").is_err());
        assert!(parse_metrics("auc").is_err());
    }

    #[test]
    fn flags_override_file_override_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("c.conf");
        fs::write(&file, "# comment\nepochs = 7\nlr = 0.5\nmodel = ntn\n").unwrap();
        let c = RunConfig::resolve("train", Some(&file), vec![("lr", "0.2".into())]).unwrap();
        assert_eq!(c.get("epochs"), "7");
        assert_eq!(c.get("lr"), "0.2");
        assert_eq!(c.get("dim"), "100");
        assert_eq!(c.get("slices"), "4");
        assert_eq!(c.model_kind().unwrap(), ModelKind::Ntn { slices: 4 });
    }

    #[test]
    fn tanh_suffix() {
        let c = RunConfig::resolve("train", None, vec![("model", "distmult-tanh".into())]).unwrap();
        assert_eq!(c.get("model"), "distmult");
        assert_eq!(c.hyperparams().unwrap().activation, Activation::Tanh);
    }

    #[test]
    fn unknown_config_key_is_a_usage_error() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("c.conf");
        fs::write(&file, "k = 3\n").unwrap();
        let err = RunConfig::resolve("train", Some(&file), vec![]).unwrap_err();
        assert_eq!(err.code, EXIT_USAGE);
    }

    #[test]
    fn echo_replays() {
        let c = RunConfig::resolve("train", None, vec![("seed", "9".into()), ("model", "ntn-tanh".into())]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        c.echo(dir.path()).unwrap();
        let replay = RunConfig::resolve("train", Some(&dir.path().join("config.resolved")), vec![]).unwrap();
        assert_eq!(replay, c);
    }
}
