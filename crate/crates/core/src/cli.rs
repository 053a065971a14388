//! Command-line front end.
//!
//! Settings resolve in order: command-line flag, then `<subcommand>.<key>` in
//! the `--config` file, then a bare `<key>` there, then the built-in default.
//! Config files hold `key = value` lines; `#` starts a comment. Keys use the
//! flag names with `_` or `-` interchangeably.

use std::collections::HashMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{ArgAction, Args, Parser, Subcommand};

use crate::corpus::{corpus_stats, load_reviews, CorpusOptions, RatingScale, RatingVector, Review};
use crate::error::{Error, Result};
use crate::generator::{average_profile, blend_ratings, generate, GenerationContext, ProfileKey, DEFAULT_MAX_LEN};
use crate::harness::{self, ExperimentConfig};
use crate::model::{load_checkpoint, ModelDims, TrainConfig};
use crate::readability::{corpus_report, report, rows_csv};

#[derive(Debug, Parser)]
#[command(name = "revgen", version, about = "Train, sample and score a rating-conditioned character LSTM")]
pub struct Cli {
    /// key=value settings file; flags take precedence
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, help = "Seed for every random stream [default: 0]")]
    pub seed: Option<u64>,
    /// Log more (-v debug, -vv trace)
    #[arg(short, long, global = true, action = ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model and write checkpoints plus loss.csv
    Train(TrainArgs),
    /// Generate reviews from a checkpoint
    Generate(GenerateArgs),
    /// Score texts with the eight readability metrics (CSV)
    Score(ScoreArgs),
    /// Full experiment: training, readability curve, ratios, alpha sweep
    Experiment(ExperimentArgs),
    /// Print user, item and review counts of a corpus
    Stats(StatsArgs),
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    #[arg(long, help = "Lowest raw rating [default: 1]")]
    pub scale_min: Option<f64>,
    #[arg(long, help = "Highest raw rating [default: 5]")]
    pub scale_max: Option<f64>,
    #[arg(long, help = "Drop reviews shorter than this many characters [default: 50]")]
    pub min_chars: Option<usize>,
    #[arg(long, help = "Keep at most this many reviews per category [default: unlimited]")]
    pub max_per_category: Option<usize>,
    /// Keep letter case instead of lowercasing review text
    #[arg(long)]
    pub keep_case: bool,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long, help = "LSTM units per layer [default: 128]")]
    pub hidden: Option<usize>,
    #[arg(long, help = "Stacked LSTM layers [default: 2]")]
    pub layers: Option<usize>,
    #[arg(long, help = "Parallel lanes per batch [default: 32]")]
    pub batch_size: Option<usize>,
    #[arg(long, help = "Truncated BPTT length [default: 64]")]
    pub seq_len: Option<usize>,
    #[arg(long, help = "Adam learning rate [default: 0.002]")]
    pub lr: Option<f64>,
    #[arg(long, help = "Dropout keep probability [default: 0.8]")]
    pub keep_prob: Option<f64>,
    #[arg(long, help = "Global gradient norm limit [default: 5]")]
    pub clip_norm: Option<f64>,
    #[arg(long, help = "Training epochs [default: 10]")]
    pub epochs: Option<usize>,
    #[arg(long, help = "Checkpoint every N epochs; the last epoch is always saved [default: 1]")]
    pub snapshot_every: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, help = "Review file (JSON lines) [required]")]
    pub corpus: Option<PathBuf>,
    #[arg(long, help = "Directory for checkpoints and loss.csv [default: checkpoints]")]
    pub out_dir: Option<PathBuf>,
    #[command(flatten)]
    pub corpus_opts: CorpusArgs,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, help = "Checkpoint to sample from [required]")]
    pub checkpoint: Option<PathBuf>,
    #[arg(long, help = "Five comma-separated ratings in [0,1], e.g. 1,1,1,1,1")]
    pub aux: Option<String>,
    #[arg(long, help = "Blend weight of the user profile against the item profile, in [0,1]")]
    pub alpha: Option<f64>,
    #[arg(long, help = "User id for --alpha")]
    pub user: Option<String>,
    #[arg(long, help = "Item id for --alpha")]
    pub item: Option<String>,
    #[arg(long, help = "Review file supplying the profiles for --alpha")]
    pub corpus: Option<PathBuf>,
    #[arg(long, help = "Softmax temperature [default: 1]")]
    pub temperature: Option<f64>,
    /// Take the most likely character at every step
    #[arg(long)]
    pub greedy: bool,
    #[arg(long, help = "Stop after this many characters [default: 600]")]
    pub max_len: Option<usize>,
    #[arg(long, help = "Number of reviews, seeded seed, seed+1, ... [default: 1]")]
    pub count: Option<usize>,
    #[command(flatten)]
    pub corpus_opts: CorpusArgs,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Plain-text file scored as one text
    #[arg(long, required_unless_present = "corpus", conflicts_with = "corpus")]
    pub text: Option<PathBuf>,
    /// Review file (JSON lines); one row per review plus a mean row
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Write the CSV here instead of standard output
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(long, conflicts_with = "planted", help = "Review file (JSON lines)")]
    pub corpus: Option<PathBuf>,
    #[arg(long, help = "Generate a planted-marker corpus of N reviews and run the conditioning test")]
    pub planted: Option<usize>,
    #[arg(long, help = "Output directory [required]")]
    pub out_dir: Option<PathBuf>,
    /// Allow writing into a non-empty output directory
    #[arg(long)]
    pub force: bool,
    #[arg(long, help = "Reference reviews per readability comparison [default: 10]")]
    pub references: Option<usize>,
    #[arg(long, help = "Comma-separated alpha values [default: 1,0.5,0]")]
    pub alphas: Option<String>,
    #[arg(long, help = "User for the alpha sweep [default: first reference's user]")]
    pub user: Option<String>,
    #[arg(long, help = "Item for the alpha sweep [default: first reference's item]")]
    pub item: Option<String>,
    #[arg(long, help = "Softmax temperature [default: 1]")]
    pub temperature: Option<f64>,
    #[arg(long, help = "Stop generation after this many characters [default: 600]")]
    pub max_len: Option<usize>,
    #[command(flatten)]
    pub corpus_opts: CorpusArgs,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long, help = "Review file (JSON lines) [required]")]
    pub corpus: Option<PathBuf>,
}

const CORPUS_KEYS: &[&str] = &["scale_min", "scale_max", "min_chars", "max_per_category", "keep_case"];
const MODEL_KEYS: &[&str] = &[
    "hidden", "layers", "batch_size", "seq_len", "lr", "keep_prob", "clip_norm", "epochs", "snapshot_every",
];
const SECTION_KEYS: &[(&str, &[&str])] = &[
    ("train", &["corpus", "out_dir"]),
    ("generate", &["checkpoint", "aux", "alpha", "user", "item", "corpus", "temperature", "greedy", "max_len", "count"]),
    ("score", &["text", "corpus", "out"]),
    (
        "experiment",
        &["corpus", "planted", "out_dir", "force", "references", "alphas", "user", "item", "temperature", "max_len"],
    ),
    ("stats", &["corpus"]),
];

fn key_known(key: &str) -> bool {
    let (section, name) = match key.split_once('.') {
        Some((s, n)) => (Some(s), n),
        None => (None, key),
    };
    let shared = |n: &str| n == "seed" || CORPUS_KEYS.contains(&n) || MODEL_KEYS.contains(&n);
    match section {
        None => shared(name) || SECTION_KEYS.iter().any(|(_, keys)| keys.contains(&name)),
        Some(s) => SECTION_KEYS
            .iter()
            .any(|(sec, keys)| *sec == s && (keys.contains(&name) || shared(name))),
    }
}

/// Parsed `--config` file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Settings {
    values: HashMap<String, String>,
}

impl Settings {
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = HashMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("config line {}: expected key = value", n + 1)))?;
            let key = k.trim().replace('-', "_");
            if !key_known(&key) {
                return Err(Error::Config(format!("config line {}: unknown key {key:?}", n + 1)));
            }
            values.insert(key, v.trim().to_string());
        }
        Ok(Settings { values })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    fn raw(&self, section: &str, key: &str) -> Option<&str> {
        self.values
            .get(&format!("{section}.{key}"))
            .or_else(|| self.values.get(key))
            .map(String::as_str)
    }
}

struct Resolver<'a> {
    settings: &'a Settings,
    section: &'static str,
}

impl Resolver<'_> {
    fn opt<T: FromStr>(&self, key: &str, flag: Option<T>) -> Result<Option<T>> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.settings.raw(self.section, key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::Config(format!("{}.{key}: cannot parse {v:?}", self.section))),
        }
    }

    fn get<T: FromStr>(&self, key: &str, flag: Option<T>, default: T) -> Result<T> {
        Ok(self.opt(key, flag)?.unwrap_or(default))
    }

    fn required<T: FromStr>(&self, key: &str, flag: Option<T>) -> Result<T> {
        self.opt(key, flag)?
            .ok_or_else(|| Error::Config(format!("--{} is required", key.replace('_', "-"))))
    }

    fn flag(&self, key: &str, flag: bool) -> Result<bool> {
        Ok(flag || self.opt(key, None::<bool>)?.unwrap_or(false))
    }
}

fn positive(name: &str, v: usize) -> Result<usize> {
    if v == 0 {
        return Err(Error::Config(format!("--{name} must be at least 1")));
    }
    Ok(v)
}

fn in_unit(name: &str, v: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::Config(format!("--{name} {v} is outside [0, 1]")));
    }
    Ok(v)
}

fn positive_real(name: &str, v: f64) -> Result<f64> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::Config(format!("--{name} {v} must be positive")));
    }
    Ok(v)
}

fn corpus_options(r: &Resolver<'_>, a: &CorpusArgs) -> Result<CorpusOptions> {
    let scale = RatingScale {
        min: r.get("scale_min", a.scale_min, 1.0)?,
        max: r.get("scale_max", a.scale_max, 5.0)?,
    };
    if !(scale.min < scale.max && scale.min.is_finite() && scale.max.is_finite()) {
        return Err(Error::Config(format!("rating scale [{}, {}] is empty", scale.min, scale.max)));
    }
    Ok(CorpusOptions {
        scale,
        min_chars: positive("min-chars", r.get("min_chars", a.min_chars, crate::corpus::DEFAULT_MIN_CHARS)?)?,
        lowercase: !r.flag("keep_case", a.keep_case)?,
        max_per_category: r
            .opt("max_per_category", a.max_per_category)?
            .map(|m| positive("max-per-category", m))
            .transpose()?,
    })
}

fn model_settings(r: &Resolver<'_>, a: &ModelArgs, cfg: &mut ExperimentConfig) -> Result<()> {
    let defaults = TrainConfig::default();
    cfg.dims = ModelDims {
        hidden: positive("hidden", r.get("hidden", a.hidden, ModelDims::default().hidden)?)?,
        layers: positive("layers", r.get("layers", a.layers, ModelDims::default().layers)?)?,
    };
    cfg.train = TrainConfig {
        batch_size: positive("batch-size", r.get("batch_size", a.batch_size, defaults.batch_size)?)?,
        seq_len: positive("seq-len", r.get("seq_len", a.seq_len, defaults.seq_len)?)?,
        lr: positive_real("lr", r.get("lr", a.lr, defaults.lr)?)?,
        keep_prob: r.get("keep_prob", a.keep_prob, defaults.keep_prob)?,
        clip_norm: positive_real("clip-norm", r.get("clip_norm", a.clip_norm, defaults.clip_norm)?)?,
        ..defaults
    };
    if !(cfg.train.keep_prob > 0.0 && cfg.train.keep_prob <= 1.0) {
        return Err(Error::Config(format!("--keep-prob {} is outside (0, 1]", cfg.train.keep_prob)));
    }
    cfg.epochs = positive("epochs", r.get("epochs", a.epochs, 10)?)?;
    cfg.snapshot_every = positive("snapshot-every", r.get("snapshot_every", a.snapshot_every, 1)?)?;
    Ok(())
}

pub fn parse_aux(text: &str) -> Result<RatingVector> {
    let values = text
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("--aux: cannot parse {v:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    if values.len() != crate::corpus::AUX_DIM {
        return Err(Error::Config(format!(
            "--aux needs {} values, got {}",
            crate::corpus::AUX_DIM,
            values.len()
        )));
    }
    for &v in &values {
        in_unit("aux component", v)?;
    }
    RatingVector::from_slice(&values)
}

pub fn parse_alphas(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|v| {
            let a = v
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("--alphas: cannot parse {v:?}")))?;
            in_unit("alphas", a)
        })
        .collect()
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Error::io(p, e)),
        None => {
            let mut stdout = io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| Error::io("<stdout>", e))
        }
    }
}

fn cmd_train(seed: u64, s: &Settings, a: &TrainArgs) -> Result<()> {
    let r = Resolver { settings: s, section: "train" };
    let mut cfg = ExperimentConfig::new(r.required::<PathBuf>("corpus", a.corpus.clone())?);
    cfg.seed = seed;
    cfg.corpus_options = corpus_options(&r, &a.corpus_opts)?;
    model_settings(&r, &a.model, &mut cfg)?;
    let out_dir = r.get("out_dir", a.out_dir.clone(), PathBuf::from("checkpoints"))?;
    let records = harness::load_corpus(&cfg)?;
    let run = harness::run_training(&cfg, &records, &out_dir)?;
    for snap in &run.snapshots {
        println!("{}", snap.path.display());
    }
    Ok(())
}

fn cmd_generate(seed: u64, s: &Settings, a: &GenerateArgs) -> Result<()> {
    let r = Resolver { settings: s, section: "generate" };
    let aux = r.opt("aux", a.aux.clone())?;
    let alpha = r.opt("alpha", a.alpha)?;
    let temperature = positive_real("temperature", r.get("temperature", a.temperature, 1.0)?)?;
    let max_len = positive("max-len", r.get("max_len", a.max_len, DEFAULT_MAX_LEN)?)?;
    let count = positive("count", r.get("count", a.count, 1)?)?;
    let greedy = r.flag("greedy", a.greedy)?;
    let checkpoint: PathBuf = r.required("checkpoint", a.checkpoint.clone())?;

    let ratings = match (aux, alpha) {
        (Some(_), Some(_)) => return Err(Error::Config("--aux and --alpha are mutually exclusive".into())),
        (None, None) => return Err(Error::Config("one of --aux or --alpha is required".into())),
        (Some(text), None) => parse_aux(&text)?,
        (None, Some(alpha)) => {
            let alpha = in_unit("alpha", alpha)?;
            let user: String = r.required("user", a.user.clone())?;
            let item: String = r.required("item", a.item.clone())?;
            let corpus: PathBuf = r.required("corpus", a.corpus.clone())?;
            let opts = corpus_options(&r, &a.corpus_opts)?;
            let records = crate::corpus::prepare_records(&load_reviews(&corpus)?, &opts)?;
            let u = average_profile(&records, ProfileKey::User(&user))?;
            let i = average_profile(&records, ProfileKey::Item(&item))?;
            blend_ratings(&u, &i, alpha)?
        }
    };
    let params = load_checkpoint(&checkpoint)?.params;
    let mut out = String::new();
    for k in 0..count {
        let base = if greedy {
            GenerationContext::greedy(ratings)
        } else {
            GenerationContext::new(ratings)
        };
        let ctx = GenerationContext {
            temperature,
            max_len,
            seed: seed.wrapping_add(k as u64),
            ..base
        };
        out.push_str(&generate(&params, &ctx)?.text);
        out.push('\n');
    }
    emit(None, &out)
}

fn cmd_score(s: &Settings, a: &ScoreArgs) -> Result<()> {
    let r = Resolver { settings: s, section: "score" };
    let out = r.opt("out", a.out.clone())?;
    let csv = if let Some(path) = r.opt::<PathBuf>("text", a.text.clone())? {
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        if text.trim().is_empty() {
            return Err(Error::Data(format!("{} is empty", path.display())));
        }
        let rep = report(&text).map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
        rows_csv(&[rep])
    } else {
        let path: PathBuf = r.required("corpus", a.corpus.clone())?;
        let reviews = load_reviews(&path)?;
        if reviews.is_empty() {
            return Err(Error::Data(format!("{} has no reviews", path.display())));
        }
        let texts: Vec<&str> = reviews.iter().map(|r| r.text()).collect();
        corpus_report(&texts)
            .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?
            .to_csv()
    };
    emit(out.as_deref(), &csv)
}

fn dir_is_nonempty(dir: &Path) -> bool {
    fs::read_dir(dir).map(|mut d| d.next().is_some()).unwrap_or(false)
}

fn cmd_experiment(seed: u64, s: &Settings, a: &ExperimentArgs) -> Result<()> {
    let r = Resolver { settings: s, section: "experiment" };
    let out_dir: PathBuf = r.required("out_dir", a.out_dir.clone())?;
    let planted = r.opt("planted", a.planted)?;
    let corpus = r.opt::<PathBuf>("corpus", a.corpus.clone())?;
    if planted.is_some() == corpus.is_some() {
        return Err(Error::Config("exactly one of --corpus or --planted is required".into()));
    }
    if dir_is_nonempty(&out_dir) && !r.flag("force", a.force)? {
        return Err(Error::Config(format!(
            "{} is not empty; pass --force to write into it",
            out_dir.display()
        )));
    }
    let mut cfg = ExperimentConfig::new(PathBuf::new());
    cfg.seed = seed;
    cfg.corpus_options = corpus_options(&r, &a.corpus_opts)?;
    model_settings(&r, &a.model, &mut cfg)?;
    cfg.reference_count = positive("references", r.get("references", a.references, harness::DEFAULT_REFERENCE_COUNT)?)?;
    if let Some(text) = r.opt::<String>("alphas", a.alphas.clone())? {
        cfg.alphas = parse_alphas(&text)?;
    }
    cfg.alpha_user = r.opt("user", a.user.clone())?;
    cfg.alpha_item = r.opt("item", a.item.clone())?;
    cfg.temperature = positive_real("temperature", r.get("temperature", a.temperature, 1.0)?)?;
    cfg.max_len = positive("max-len", r.get("max_len", a.max_len, DEFAULT_MAX_LEN)?)?;

    fs::create_dir_all(&out_dir).map_err(|e| Error::io(&out_dir, e))?;
    cfg.corpus = match (corpus, planted) {
        (Some(path), _) => path,
        (None, Some(n)) => {
            let path = out_dir.join("planted.jsonl");
            let reviews = harness::planted_corpus(seed, n).map_err(|e| Error::Config(e.to_string()))?;
            crate::corpus::write_reviews(&path, &reviews)?;
            path
        }
        (None, None) => unreachable!("checked above"),
    };
    let summary = harness::run_experiment(&cfg, &out_dir, planted.is_some())?;
    let mut out = String::new();
    out.push_str(&summary.relative.to_csv());
    if let Some(c) = &summary.conditioning {
        out.push_str(&c.to_string());
    }
    emit(None, &out)
}

fn cmd_stats(s: &Settings, a: &StatsArgs) -> Result<()> {
    let r = Resolver { settings: s, section: "stats" };
    let path: PathBuf = r.required("corpus", a.corpus.clone())?;
    let reviews = load_reviews(&path)?;
    emit(None, &corpus_stats(&reviews).to_string())
}

fn dispatch(cli: &Cli) -> Result<()> {
    let settings = match &cli.config {
        Some(p) => Settings::load(p)?,
        None => Settings::default(),
    };
    let global = Resolver {
        settings: &settings,
        section: "",
    };
    let seed = global.get("seed", cli.seed, 0u64)?;
    match &cli.command {
        Command::Train(a) => cmd_train(seed, &settings, a),
        Command::Generate(a) => cmd_generate(seed, &settings, a),
        Command::Score(a) => cmd_score(&settings, a),
        Command::Experiment(a) => cmd_experiment(seed, &settings, a),
        Command::Stats(a) => cmd_stats(&settings, a),
    }
}

/// Parses `args` (program name first), runs the subcommand and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Info,
        1 => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .target(env_logger::Target::Stderr)
        .try_init();
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
