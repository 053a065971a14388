//! Desk-scale experiments: training with snapshots, readability per epoch,
//! generated-vs-reference ratios, alpha sweeps and the planted-marker
//! conditioning test.
//!
//! Files written into an experiment directory:
//!
//! | file | columns / layout |
//! |------|------------------|
//! | `loss.csv` | `epoch,loss` (mean per-character cross-entropy) |
//! | `checkpoint_epochNNN.bin` | model checkpoint after epoch NNN |
//! | `readability_curve.csv` | `epoch,metric,mean_generated,mean_reference` |
//! | `ratios.csv` | `metric,ratio` (generated / reference at the final epoch) |
//! | `samples.txt` | one `[alpha=A]` header line per sample, then its text, then a blank line |
//! | `conditioning.txt` | planted-marker counts and the chi-squared verdict (planted runs only) |

pub mod synth;

use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::corpus::{
    build_vocabulary, encode_stream, load_reviews, make_batches, prepare_records, CorpusOptions, RatingVector,
    ReviewRecord,
};
use crate::error::{Error, Result};
use crate::generator::{alpha_sweep, average_profile, generate, GenerationContext, ProfileKey, DEFAULT_MAX_LEN};
use crate::model::{load_checkpoint, save_checkpoint, EpochReport, ModelDims, ModelParams, TrainConfig, Trainer};
use crate::ndmath::Prng;
use crate::readability::{corpus_report, report, tokenize_words, ReadabilityReport, METRIC_NAMES};

pub use synth::{desk_corpus, planted_corpus, NEGATIVE_MARKERS, POSITIVE_MARKERS};

pub const DEFAULT_ALPHAS: [f64; 3] = [1.0, 0.5, 0.0];
pub const DEFAULT_REFERENCE_COUNT: usize = 10;

// Offsets fanning the single experiment seed out to independent streams.
const SEED_INIT: u64 = 0;
const SEED_TRAIN: u64 = 1;
const SEED_EPOCH_GEN: u64 = 2;
const SEED_ALPHA: u64 = 3;
const SEED_CONDITIONING: u64 = 4;

/// Regeneration attempts for a sample with no scorable words.
const MAX_ATTEMPTS: u64 = 8;

pub fn derive_seed(seed: u64, stream: u64, a: u64, b: u64) -> u64 {
    let mut rng = Prng::new(seed.wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15)));
    let x = rng.next_u64() ^ a.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    Prng::new(x ^ b.wrapping_mul(0x94D0_49BB_1331_11EB)).next_u64()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub corpus: PathBuf,
    pub corpus_options: CorpusOptions,
    pub dims: ModelDims,
    /// `seed` inside is ignored; the trainer seed derives from `seed` below.
    pub train: TrainConfig,
    pub epochs: usize,
    pub snapshot_every: usize,
    pub reference_count: usize,
    pub alphas: Vec<f64>,
    pub alpha_user: Option<String>,
    pub alpha_item: Option<String>,
    pub temperature: f64,
    pub max_len: usize,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn new(corpus: impl Into<PathBuf>) -> Self {
        ExperimentConfig {
            corpus: corpus.into(),
            corpus_options: CorpusOptions::default(),
            dims: ModelDims::default(),
            train: TrainConfig::default(),
            epochs: 10,
            snapshot_every: 1,
            reference_count: DEFAULT_REFERENCE_COUNT,
            alphas: DEFAULT_ALPHAS.to_vec(),
            alpha_user: None,
            alpha_item: None,
            temperature: 1.0,
            max_len: DEFAULT_MAX_LEN,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Validation("epochs must be at least 1".into()));
        }
        if self.snapshot_every == 0 {
            return Err(Error::Validation("snapshot cadence must be at least 1".into()));
        }
        if self.reference_count == 0 {
            return Err(Error::Validation("reference count must be at least 1".into()));
        }
        if self.dims.hidden == 0 || self.dims.layers == 0 {
            return Err(Error::Validation("model dims must be positive".into()));
        }
        if self.alphas.is_empty() || self.alphas.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(Error::Validation(format!("alphas {:?} must be nonempty and in [0, 1]", self.alphas)));
        }
        self.train_config().validate()?;
        self.generation_context(RatingVector::default(), 0).validate()
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            seed: self.seed.wrapping_add(SEED_TRAIN),
            ..self.train.clone()
        }
    }

    fn generation_context(&self, aux: RatingVector, seed: u64) -> GenerationContext {
        GenerationContext {
            temperature: self.temperature,
            max_len: self.max_len,
            seed,
            ..GenerationContext::new(aux)
        }
    }
}

/// Loads and prepares the configured corpus.
pub fn load_corpus(config: &ExperimentConfig) -> Result<Vec<ReviewRecord>> {
    let raw = load_reviews(&config.corpus)?;
    let records = prepare_records(&raw, &config.corpus_options)?;
    if records.is_empty() {
        return Err(Error::Validation(format!(
            "{}: no reviews survive the {}-character filter",
            config.corpus.display(),
            config.corpus_options.min_chars
        )));
    }
    Ok(records)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Snapshot {
    pub epoch: usize,
    pub path: PathBuf,
}

pub struct TrainingRun {
    pub params: ModelParams,
    pub reports: Vec<EpochReport>,
    pub snapshots: Vec<Snapshot>,
}

pub fn checkpoint_name(epoch: usize) -> String {
    format!("checkpoint_epoch{epoch:03}.bin")
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub fn loss_csv(reports: &[EpochReport]) -> String {
    let mut out = String::from("epoch,loss\n");
    for r in reports {
        writeln!(out, "{},{:.10}", r.epoch, r.mean_loss).unwrap();
    }
    out
}

/// Trains for `config.epochs`, checkpointing every `snapshot_every` epochs and
/// after the last one, and writes `loss.csv`.
pub fn run_training(config: &ExperimentConfig, records: &[ReviewRecord], out_dir: &Path) -> Result<TrainingRun> {
    config.validate()?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let vocab = build_vocabulary(records)?;
    let stream = encode_stream(records, &vocab)?;
    let batches = make_batches(&stream, config.train.batch_size, config.train.seq_len)?;
    let params = ModelParams::init(vocab, config.dims, &mut Prng::new(config.seed.wrapping_add(SEED_INIT)))?;
    let mut trainer = Trainer::new(params, config.train_config())?;
    let mut reports = Vec::with_capacity(config.epochs);
    let mut snapshots = Vec::new();
    for epoch in 1..=config.epochs {
        let report = trainer.train_epoch(&batches)?;
        log::info!("{report}");
        reports.push(report);
        if epoch % config.snapshot_every == 0 || epoch == config.epochs {
            let path = out_dir.join(checkpoint_name(epoch));
            save_checkpoint(&trainer.params, Some(&trainer.optimizer), &path)?;
            snapshots.push(Snapshot { epoch, path });
        }
    }
    write_file(&out_dir.join("loss.csv"), &loss_csv(&reports))?;
    Ok(TrainingRun {
        params: trainer.params,
        reports,
        snapshots,
    })
}

/// The first `n` records in corpus order. `records` are expected to have
/// passed the length filter already.
pub fn select_references(records: &[ReviewRecord], n: usize) -> Result<Vec<ReviewRecord>> {
    if n == 0 || records.is_empty() {
        return Err(Error::Validation("need at least one reference review".into()));
    }
    Ok(records.iter().take(n).cloned().collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochRow {
    pub epoch: usize,
    pub generated: ReadabilityReport,
    pub texts: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochCurve {
    pub reference: ReadabilityReport,
    pub rows: Vec<EpochRow>,
}

impl EpochCurve {
    pub fn row(&self, epoch: usize) -> Option<&EpochRow> {
        self.rows.iter().find(|r| r.epoch == epoch)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,metric,mean_generated,mean_reference\n");
        let reference = self.reference.values();
        for row in &self.rows {
            for ((name, g), r) in METRIC_NAMES.iter().zip(row.generated.values()).zip(reference) {
                writeln!(out, "{},{name},{g:.6},{r:.6}", row.epoch).unwrap();
            }
        }
        out
    }
}

/// Generates one text per reference, conditioned on that reference's
/// ratings, retrying with a fresh seed when a sample has no words to score.
pub fn generate_for_references(
    config: &ExperimentConfig,
    params: &ModelParams,
    references: &[ReviewRecord],
    epoch: usize,
) -> Result<Vec<String>> {
    references
        .iter()
        .enumerate()
        .map(|(i, r)| {
            for attempt in 0..MAX_ATTEMPTS {
                let seed = derive_seed(config.seed, SEED_EPOCH_GEN, epoch as u64, (i as u64) << 8 | attempt);
                let text = generate(params, &config.generation_context(r.ratings, seed))?.text;
                if report(&text).is_ok() {
                    return Ok(text);
                }
            }
            Err(Error::Validation(format!(
                "epoch {epoch}: no scorable text for reference {i} after {MAX_ATTEMPTS} attempts"
            )))
        })
        .collect()
}

/// Scores generated reviews at each snapshot against the references.
/// Checkpoint files are only read.
pub fn epoch_readability(
    config: &ExperimentConfig,
    references: &[ReviewRecord],
    snapshots: &[Snapshot],
) -> Result<EpochCurve> {
    if snapshots.is_empty() {
        return Err(Error::Validation("no checkpoints to score".into()));
    }
    let reference_texts: Vec<&str> = references.iter().map(|r| r.text.as_str()).collect();
    let reference = corpus_report(&reference_texts)?.mean;
    let mut rows = Vec::with_capacity(snapshots.len());
    for snap in snapshots {
        let params = load_checkpoint(&snap.path)?.params;
        let texts = generate_for_references(config, &params, references, snap.epoch)?;
        let generated = corpus_report(&texts)?.mean;
        rows.push(EpochRow {
            epoch: snap.epoch,
            generated,
            texts,
        });
    }
    Ok(EpochCurve { reference, rows })
}

/// Generated / reference per metric. A zero reference gives 1 when the
/// generated mean is also zero and ±inf otherwise.
#[derive(Clone, Debug, PartialEq)]
pub struct RelativeReadability {
    pub epoch: usize,
    pub ratios: [f64; 8],
    /// |generated - reference| / |reference| per metric.
    pub deviations: [f64; 8],
}

impl RelativeReadability {
    pub fn within(&self, tolerance: f64) -> usize {
        self.deviations.iter().filter(|&&d| d <= tolerance).count()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric,ratio\n");
        for (name, r) in METRIC_NAMES.iter().zip(self.ratios) {
            writeln!(out, "{name},{r:.6}").unwrap();
        }
        out
    }
}

pub fn relative_readability(curve: &EpochCurve, epoch: usize) -> Result<RelativeReadability> {
    let row = curve
        .row(epoch)
        .ok_or_else(|| Error::NotFound(format!("epoch {epoch} in readability curve")))?;
    let mut ratios = [0.0; 8];
    let mut deviations = [0.0; 8];
    for (k, (g, r)) in row.generated.values().into_iter().zip(curve.reference.values()).enumerate() {
        if r == 0.0 {
            ratios[k] = if g == 0.0 { 1.0 } else { g.signum() * f64::INFINITY };
            deviations[k] = if g == 0.0 { 0.0 } else { f64::INFINITY };
        } else {
            ratios[k] = g / r;
            deviations[k] = (g - r).abs() / r.abs();
        }
    }
    Ok(RelativeReadability {
        epoch,
        ratios,
        deviations,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlphaSample {
    pub alpha: f64,
    pub text: String,
}

pub fn samples_text(samples: &[AlphaSample]) -> String {
    let mut out = String::new();
    for s in samples {
        writeln!(out, "[alpha={}]\n{}\n", s.alpha, s.text).unwrap();
    }
    out
}

/// One sample per alpha from the blended profile of `user_id` and
/// `item_id`, all sharing one seed.
pub fn alpha_experiment(
    config: &ExperimentConfig,
    params: &ModelParams,
    records: &[ReviewRecord],
    user_id: &str,
    item_id: &str,
) -> Result<Vec<AlphaSample>> {
    let user = average_profile(records, ProfileKey::User(user_id))?;
    let item = average_profile(records, ProfileKey::Item(item_id))?;
    let base = config.generation_context(RatingVector::default(), derive_seed(config.seed, SEED_ALPHA, 0, 0));
    Ok(alpha_sweep(params, &user, &item, &config.alphas, &base)?
        .into_iter()
        .map(|(alpha, g)| AlphaSample { alpha, text: g.text })
        .collect())
}

/// Marker counts in texts generated at all-ones vs all-zeros ratings.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditioningReport {
    pub samples: usize,
    /// (positive markers, negative markers) at aux = 1.
    pub high: (usize, usize),
    /// (positive markers, negative markers) at aux = 0.
    pub low: (usize, usize),
    pub chi_squared: f64,
    pub p_value: f64,
}

impl ConditioningReport {
    pub fn significant(&self, level: f64) -> bool {
        self.p_value < level
    }
}

impl fmt::Display for ConditioningReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "samples_per_condition={}", self.samples)?;
        writeln!(f, "aux=1 positive_markers={} negative_markers={}", self.high.0, self.high.1)?;
        writeln!(f, "aux=0 positive_markers={} negative_markers={}", self.low.0, self.low.1)?;
        writeln!(f, "chi_squared={:.6} p_value={:.6e}", self.chi_squared, self.p_value)?;
        writeln!(
            f,
            "verdict={}",
            if self.significant(0.01) { "conditioned (p<0.01)" } else { "not significant" }
        )
    }
}

pub fn count_markers(text: &str, markers: &[&str]) -> usize {
    tokenize_words(text)
        .iter()
        .filter(|w| markers.iter().any(|m| m.eq_ignore_ascii_case(w)))
        .count()
}

/// Pearson chi-squared statistic and p-value (1 degree of freedom) for a 2×2
/// table. A table with an empty row or column gives (0, 1).
pub fn chi_squared_2x2(table: [[usize; 2]; 2]) -> (f64, f64) {
    let t = table.map(|r| r.map(|v| v as f64));
    let rows = [t[0][0] + t[0][1], t[1][0] + t[1][1]];
    let cols = [t[0][0] + t[1][0], t[0][1] + t[1][1]];
    let n = rows[0] + rows[1];
    if rows.contains(&0.0) || cols.contains(&0.0) {
        return (0.0, 1.0);
    }
    let mut stat = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let expected = rows[i] * cols[j] / n;
            stat += (t[i][j] - expected).powi(2) / expected;
        }
    }
    let dist = ChiSquared::new(1.0).expect("one degree of freedom");
    (stat, dist.sf(stat))
}

pub fn conditioning_test(config: &ExperimentConfig, params: &ModelParams, samples: usize) -> Result<ConditioningReport> {
    if samples == 0 {
        return Err(Error::Validation("conditioning test needs at least one sample".into()));
    }
    let mut counts = [[0usize; 2]; 2];
    for (row, level) in [1.0, 0.0].into_iter().enumerate() {
        let aux = RatingVector::splat(level)?;
        for i in 0..samples {
            let seed = derive_seed(config.seed, SEED_CONDITIONING, row as u64, i as u64);
            let text = generate(params, &config.generation_context(aux, seed))?.text;
            counts[row][0] += count_markers(&text, &POSITIVE_MARKERS);
            counts[row][1] += count_markers(&text, &NEGATIVE_MARKERS);
        }
    }
    let (chi_squared, p_value) = chi_squared_2x2(counts);
    Ok(ConditioningReport {
        samples,
        high: (counts[0][0], counts[0][1]),
        low: (counts[1][0], counts[1][1]),
        chi_squared,
        p_value,
    })
}

pub struct ExperimentSummary {
    pub training: TrainingRun,
    pub curve: EpochCurve,
    pub relative: RelativeReadability,
    pub samples: Vec<AlphaSample>,
    pub conditioning: Option<ConditioningReport>,
}

/// Samples per condition in the planted-marker test.
pub const CONDITIONING_SAMPLES: usize = 100;

/// The whole pipeline: train, score every snapshot, compare the final epoch,
/// run the alpha sweep and, for planted corpora, the conditioning test.
pub fn run_experiment(config: &ExperimentConfig, out_dir: &Path, planted: bool) -> Result<ExperimentSummary> {
    config.validate()?;
    let records = load_corpus(config)?;
    let training = run_training(config, &records, out_dir)?;
    let references = select_references(&records, config.reference_count)?;
    let curve = epoch_readability(config, &references, &training.snapshots)?;
    write_file(&out_dir.join("readability_curve.csv"), &curve.to_csv())?;
    let relative = relative_readability(&curve, config.epochs)?;
    write_file(&out_dir.join("ratios.csv"), &relative.to_csv())?;

    let user = config.alpha_user.as_deref().unwrap_or(&references[0].user_id);
    let item = config.alpha_item.as_deref().unwrap_or(&references[0].item_id);
    let samples = alpha_experiment(config, &training.params, &records, user, item)?;
    write_file(&out_dir.join("samples.txt"), &samples_text(&samples))?;

    let conditioning = if planted {
        let report = conditioning_test(config, &training.params, CONDITIONING_SAMPLES)?;
        write_file(&out_dir.join("conditioning.txt"), &report.to_string())?;
        Some(report)
    } else {
        None
    };
    Ok(ExperimentSummary {
        training,
        curve,
        relative,
        samples,
        conditioning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::write_reviews;

    fn tiny_config(dir: &Path) -> ExperimentConfig {
        let path = dir.join("planted.jsonl");
        write_reviews(&path, &planted_corpus(3, 120).unwrap()).unwrap();
        ExperimentConfig {
            dims: ModelDims { hidden: 8, layers: 1 },
            train: TrainConfig {
                batch_size: 4,
                seq_len: 32,
                ..TrainConfig::default()
            },
            epochs: 2,
            reference_count: 3,
            max_len: 80,
            seed: 9,
            ..ExperimentConfig::new(path)
        }
    }

    fn report_with(v: f64) -> ReadabilityReport {
        ReadabilityReport::from_values([v; 8])
    }

    #[test]
    fn one_epoch_gives_one_checkpoint_and_beats_uniform() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig {
            epochs: 1,
            ..tiny_config(dir.path())
        };
        let records = load_corpus(&cfg).unwrap();
        let run = run_training(&cfg, &records, dir.path()).unwrap();
        assert_eq!(run.snapshots.len(), 1);
        assert!(run.snapshots[0].path.exists());
        assert!(run.reports[0].mean_loss < (run.params.vocab_size() as f64).ln());
        let csv = fs::read_to_string(dir.path().join("loss.csv")).unwrap();
        assert_eq!(csv.lines().count(), 2);
        assert!(csv.starts_with("epoch,loss\n1,"));
    }

    #[test]
    fn snapshot_cadence_includes_final_epoch() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig {
            epochs: 3,
            snapshot_every: 2,
            ..tiny_config(dir.path())
        };
        let records = load_corpus(&cfg).unwrap();
        let run = run_training(&cfg, &records, dir.path()).unwrap();
        let epochs: Vec<_> = run.snapshots.iter().map(|s| s.epoch).collect();
        assert_eq!(epochs, [2, 3]);
    }

    #[test]
    fn curve_cardinality_and_reference_row() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny_config(dir.path());
        let records = load_corpus(&cfg).unwrap();
        let run = run_training(&cfg, &records, dir.path()).unwrap();
        let refs = select_references(&records, cfg.reference_count).unwrap();
        let curve = epoch_readability(&cfg, &refs, &run.snapshots).unwrap();
        assert_eq!(curve.rows.len(), 2);
        assert!(curve.rows.iter().all(|r| r.texts.len() == 3));
        let ref_texts: Vec<_> = refs.iter().map(|r| r.text.clone()).collect();
        assert_eq!(curve.reference, corpus_report(&ref_texts).unwrap().mean);
        assert_eq!(curve.to_csv().lines().count(), 1 + 2 * 8);

        let again = epoch_readability(&cfg, &refs, &run.snapshots[1..]).unwrap();
        assert_eq!(again.rows[0], curve.rows[1]);
    }

    #[test]
    fn relative_readability_examples() {
        let curve = EpochCurve {
            reference: report_with(2.0),
            rows: vec![EpochRow {
                epoch: 4,
                generated: report_with(2.0),
                texts: vec![],
            }],
        };
        let rel = relative_readability(&curve, 4).unwrap();
        assert_eq!(rel.ratios, [1.0; 8]);
        assert_eq!(rel.within(0.2), 8);
        assert!(matches!(relative_readability(&curve, 5), Err(Error::NotFound(_))));

        let mut doubled = curve.clone();
        doubled.rows[0].generated.fre = 4.0;
        let rel = relative_readability(&doubled, 4).unwrap();
        assert_eq!(rel.ratios[1], 2.0);
        assert_eq!(rel.within(0.2), 7);
        let csv = rel.to_csv();
        assert!(csv.starts_with("metric,ratio\nari,1.000000\nfre,2.000000\n"));
    }

    #[test]
    fn alpha_experiment_labels_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig {
            epochs: 1,
            ..tiny_config(dir.path())
        };
        let records = load_corpus(&cfg).unwrap();
        let run = run_training(&cfg, &records, dir.path()).unwrap();
        let (u, i) = (&records[0].user_id, &records[0].item_id);
        let samples = alpha_experiment(&cfg, &run.params, &records, u, i).unwrap();
        assert_eq!(samples.len(), 3);
        let text = samples_text(&samples);
        assert!(text.starts_with("[alpha=1]\n"));
        assert!(text.contains("\n[alpha=0.5]\n") && text.contains("\n[alpha=0]\n"));

        let one = ExperimentConfig {
            alphas: vec![0.7],
            ..cfg.clone()
        };
        assert_eq!(alpha_experiment(&one, &run.params, &records, u, i).unwrap().len(), 1);
        assert!(matches!(
            alpha_experiment(&cfg, &run.params, &records, "nobody", i),
            Err(Error::NotFound(_))
        ));
    }

    #[test]
    fn chi_squared_examples() {
        // scipy.stats.chi2_contingency([[30, 10], [10, 30]], correction=False)
        let (stat, p) = chi_squared_2x2([[30, 10], [10, 30]]);
        assert!((stat - 20.0).abs() < 1e-12);
        assert!((p - 7.744216431044088e-06).abs() < 1e-16);
        assert_eq!(chi_squared_2x2([[5, 5], [5, 5]]).0, 0.0);
        assert_eq!(chi_squared_2x2([[0, 0], [3, 4]]), (0.0, 1.0));
    }

    #[test]
    fn marker_counting() {
        assert_eq!(count_markers("a Superb beer, superb!", &POSITIVE_MARKERS), 2);
        assert_eq!(count_markers("superbly done", &POSITIVE_MARKERS), 0);
    }

    #[test]
    fn config_validation() {
        let cfg = ExperimentConfig::new("x");
        assert!(cfg.validate().is_ok());
        for bad in [
            ExperimentConfig { epochs: 0, ..cfg.clone() },
            ExperimentConfig { reference_count: 0, ..cfg.clone() },
            ExperimentConfig { alphas: vec![1.5], ..cfg.clone() },
            ExperimentConfig { temperature: 0.0, ..cfg.clone() },
        ] {
            assert!(bad.validate().is_err());
        }
    }

    #[test]
    fn derived_seeds_differ_by_stream() {
        let a = derive_seed(1, 2, 3, 4);
        assert_eq!(a, derive_seed(1, 2, 3, 4));
        assert_ne!(a, derive_seed(1, 3, 3, 4));
        assert_ne!(a, derive_seed(1, 2, 4, 4));
        assert_ne!(a, derive_seed(1, 2, 3, 5));
    }
}
