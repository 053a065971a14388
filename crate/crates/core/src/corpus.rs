//! Review ingestion, normalization, vocabulary construction and batching.
//!
//! Review files are UTF-8 JSON lines, one record per line:
//!
//! ```text
//! {"user_id":"u1","item_id":"b7","appearance":4.0,"aroma":3.5,"palate":4.0,"taste":4.5,"overall":4.0,"text":"poured a hazy gold..."}
//! ```
//!
//! An optional `"category"` string may be present. Embedded newlines in the
//! text are escaped by the JSON encoding. Blank lines are ignored.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::ndmath::Vector;

/// Rating features in file and vector order.
pub const RATING_FIELDS: [&str; 5] = ["appearance", "aroma", "palate", "taste", "overall"];

pub const AUX_DIM: usize = RATING_FIELDS.len();

/// Default minimum review length, in characters.
pub const DEFAULT_MIN_CHARS: usize = 50;

/// Five normalized ratings, each in `[0, 1]`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RatingVector([f64; AUX_DIM]);

impl RatingVector {
    pub fn new(values: [f64; AUX_DIM]) -> Result<Self> {
        for &v in &values {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Range {
                    value: v,
                    min: 0.0,
                    max: 1.0,
                });
            }
        }
        Ok(RatingVector(values))
    }

    pub fn splat(value: f64) -> Result<Self> {
        RatingVector::new([value; AUX_DIM])
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        let arr: [f64; AUX_DIM] = values.try_into().map_err(|_| {
            Error::shape("RatingVector", AUX_DIM, format!("{} values", values.len()))
        })?;
        RatingVector::new(arr)
    }

    pub fn values(&self) -> &[f64; AUX_DIM] {
        &self.0
    }
}

/// Bounds of the raw rating scale.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RatingScale {
    pub min: f64,
    pub max: f64,
}

impl Default for RatingScale {
    fn default() -> Self {
        RatingScale { min: 1.0, max: 5.0 }
    }
}

pub fn normalize_rating(raw: f64, scale_min: f64, scale_max: f64) -> Result<f64> {
    if !(scale_min < scale_max) {
        return Err(Error::Validation(format!(
            "rating scale min {scale_min} must be below max {scale_max}"
        )));
    }
    if !(scale_min..=scale_max).contains(&raw) {
        return Err(Error::Range {
            value: raw,
            min: scale_min,
            max: scale_max,
        });
    }
    Ok((raw - scale_min) / (scale_max - scale_min))
}

/// Anything with ids and review text.
pub trait Review {
    fn user_id(&self) -> &str;
    fn item_id(&self) -> &str;
    fn text(&self) -> &str;
}

/// A review as read from disk; ratings are on the raw scale.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RawReview {
    pub user_id: String,
    pub item_id: String,
    #[serde(flatten)]
    pub ratings: RawRatings,
    pub text: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub category: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RawRatings {
    pub appearance: f64,
    pub aroma: f64,
    pub palate: f64,
    pub taste: f64,
    pub overall: f64,
}

impl RawRatings {
    pub fn from_array(v: [f64; AUX_DIM]) -> Self {
        RawRatings {
            appearance: v[0],
            aroma: v[1],
            palate: v[2],
            taste: v[3],
            overall: v[4],
        }
    }

    pub fn to_array(self) -> [f64; AUX_DIM] {
        [
            self.appearance,
            self.aroma,
            self.palate,
            self.taste,
            self.overall,
        ]
    }
}

impl RawReview {
    pub fn normalize(&self, scale: RatingScale) -> Result<ReviewRecord> {
        let raw = self.ratings.to_array();
        let mut norm = [0.0; AUX_DIM];
        for (n, r) in norm.iter_mut().zip(raw) {
            *n = normalize_rating(r, scale.min, scale.max)?;
        }
        Ok(ReviewRecord {
            user_id: self.user_id.clone(),
            item_id: self.item_id.clone(),
            ratings: RatingVector::new(norm)?,
            text: self.text.clone(),
            category: self.category.clone(),
        })
    }
}

/// A review with normalized ratings.
#[derive(Clone, Debug, PartialEq)]
pub struct ReviewRecord {
    pub user_id: String,
    pub item_id: String,
    pub ratings: RatingVector,
    pub text: String,
    pub category: Option<String>,
}

impl Review for RawReview {
    fn user_id(&self) -> &str {
        &self.user_id
    }
    fn item_id(&self) -> &str {
        &self.item_id
    }
    fn text(&self) -> &str {
        &self.text
    }
}

impl Review for ReviewRecord {
    fn user_id(&self) -> &str {
        &self.user_id
    }
    fn item_id(&self) -> &str {
        &self.item_id
    }
    fn text(&self) -> &str {
        &self.text
    }
}

pub fn load_reviews(path: impl AsRef<Path>) -> Result<Vec<RawReview>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_reviews(BufReader::new(file)).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

pub fn parse_reviews(reader: impl BufRead) -> Result<Vec<RawReview>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::io("<reader>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(parse_line(&line, line_no)?);
    }
    Ok(out)
}

fn parse_line(line: &str, line_no: usize) -> Result<RawReview> {
    let value: Value = serde_json::from_str(line).map_err(|e| Error::Parse {
        line: line_no,
        message: e.to_string(),
    })?;
    let obj = value.as_object().ok_or_else(|| Error::Parse {
        line: line_no,
        message: "expected a JSON object".into(),
    })?;

    let string_field = |obj: &Map<String, Value>, field: &'static str| -> Result<String> {
        match obj.get(field).and_then(Value::as_str) {
            Some(s) if !s.is_empty() => Ok(s.to_owned()),
            _ => Err(Error::Field {
                line: line_no,
                field,
            }),
        }
    };

    let mut ratings = [0.0; AUX_DIM];
    for (slot, field) in ratings.iter_mut().zip(RATING_FIELDS) {
        *slot = obj
            .get(field)
            .and_then(Value::as_f64)
            .filter(|v| v.is_finite())
            .ok_or(Error::Field {
                line: line_no,
                field,
            })?;
    }

    let category = match obj.get("category") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(s.clone()),
        Some(_) => {
            return Err(Error::Field {
                line: line_no,
                field: "category",
            })
        }
    };

    Ok(RawReview {
        user_id: string_field(obj, "user_id")?,
        item_id: string_field(obj, "item_id")?,
        ratings: RawRatings::from_array(ratings),
        text: string_field(obj, "text")?,
        category,
    })
}

pub fn write_reviews(path: impl AsRef<Path>, records: &[RawReview]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for r in records {
        let line = serde_json::to_string(r).expect("review serializes");
        writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Keeps records whose text has at least `min_chars` characters.
pub fn filter_reviews<R: Review + Clone>(records: &[R], min_chars: usize) -> Vec<R> {
    records
        .iter()
        .filter(|r| r.text().chars().count() >= min_chars)
        .cloned()
        .collect()
}

/// Keeps at most `max` records per category, in order. Records without a
/// category share one bucket.
pub fn cap_per_category(records: &[ReviewRecord], max: usize) -> Vec<ReviewRecord> {
    let mut seen: HashMap<Option<&str>, usize> = HashMap::new();
    records
        .iter()
        .filter(|r| {
            let n = seen.entry(r.category.as_deref()).or_default();
            *n += 1;
            *n <= max
        })
        .cloned()
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorpusOptions {
    pub scale: RatingScale,
    pub min_chars: usize,
    pub lowercase: bool,
    pub max_per_category: Option<usize>,
}

impl Default for CorpusOptions {
    fn default() -> Self {
        CorpusOptions {
            scale: RatingScale::default(),
            min_chars: DEFAULT_MIN_CHARS,
            lowercase: true,
            max_per_category: None,
        }
    }
}

/// normalize → length filter → category cap → optional lowercasing.
pub fn prepare_records(raw: &[RawReview], opts: &CorpusOptions) -> Result<Vec<ReviewRecord>> {
    if opts.min_chars == 0 {
        return Err(Error::Validation("min_chars must be at least 1".into()));
    }
    let normalized = raw
        .iter()
        .map(|r| r.normalize(opts.scale))
        .collect::<Result<Vec<_>>>()?;
    let mut records = filter_reviews(&normalized, opts.min_chars);
    if let Some(max) = opts.max_per_category {
        records = cap_per_category(&records, max);
    }
    if opts.lowercase {
        for r in &mut records {
            r.text = r.text.to_lowercase();
        }
    }
    Ok(records)
}

/// One vocabulary entry.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Symbol {
    Char(char),
    Start,
    End,
}

/// Dense character index: corpus characters sorted by code point, then
/// START, then END.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    chars: Vec<char>,
    index: HashMap<char, usize>,
}

impl Vocabulary {
    /// Builds from an explicit character list, which must be strictly
    /// increasing.
    pub fn from_chars(chars: Vec<char>) -> Result<Self> {
        if chars.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Validation(
                "vocabulary characters must be distinct and sorted".into(),
            ));
        }
        let index = chars.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        Ok(Vocabulary { chars, index })
    }

    pub fn chars(&self) -> &[char] {
        &self.chars
    }

    /// Number of symbols including START and END.
    pub fn size(&self) -> usize {
        self.chars.len() + 2
    }

    pub fn start_index(&self) -> usize {
        self.chars.len()
    }

    pub fn end_index(&self) -> usize {
        self.chars.len() + 1
    }

    pub fn index_of(&self, c: char) -> Option<usize> {
        self.index.get(&c).copied()
    }

    pub fn symbol(&self, index: usize) -> Option<Symbol> {
        match index {
            i if i < self.chars.len() => Some(Symbol::Char(self.chars[i])),
            i if i == self.start_index() => Some(Symbol::Start),
            i if i == self.end_index() => Some(Symbol::End),
            _ => None,
        }
    }

    /// START, text characters, END.
    pub fn encode_text(&self, text: &str) -> Result<Vec<usize>> {
        let mut out = Vec::with_capacity(text.len() + 2);
        out.push(self.start_index());
        for c in text.chars() {
            out.push(
                self.index_of(c)
                    .ok_or_else(|| Error::Validation(format!("character {c:?} not in vocabulary")))?,
            );
        }
        out.push(self.end_index());
        Ok(out)
    }
}

pub fn build_vocabulary<R: Review>(records: &[R]) -> Result<Vocabulary> {
    if records.is_empty() {
        return Err(Error::Validation("cannot build a vocabulary from an empty corpus".into()));
    }
    let mut set: Vec<char> = records
        .iter()
        .flat_map(|r| r.text().chars())
        .collect::<HashSet<_>>()
        .into_iter()
        .collect();
    set.sort_unstable();
    Vocabulary::from_chars(set)
}

pub fn encode_onehot(c: usize, vocab_size: usize) -> Result<Vector> {
    if c >= vocab_size {
        return Err(Error::Index {
            index: c,
            len: vocab_size,
        });
    }
    let mut v = Vector::zeros(vocab_size);
    v[c] = 1.0;
    Ok(v)
}

/// All reviews concatenated as token indices, each position tagged with the
/// ratings of the review it belongs to.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EncodedStream {
    pub tokens: Vec<usize>,
    pub aux: Vec<RatingVector>,
}

impl EncodedStream {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

pub fn encode_stream(records: &[ReviewRecord], vocab: &Vocabulary) -> Result<EncodedStream> {
    let mut stream = EncodedStream::default();
    for r in records {
        let tokens = vocab.encode_text(&r.text)?;
        stream.aux.extend(std::iter::repeat(r.ratings).take(tokens.len()));
        stream.tokens.extend(tokens);
    }
    Ok(stream)
}

/// One lane's slice of a training batch.
#[derive(Clone, Debug, PartialEq)]
pub struct LaneChunk {
    pub inputs: Vec<usize>,
    pub targets: Vec<usize>,
    pub aux: Vec<RatingVector>,
}

/// The same time window across all lanes.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingBatch {
    pub lanes: Vec<LaneChunk>,
}

impl TrainingBatch {
    pub fn seq_len(&self) -> usize {
        self.lanes.first().map_or(0, |l| l.inputs.len())
    }

    pub fn token_count(&self) -> usize {
        self.lanes.iter().map(|l| l.inputs.len()).sum()
    }
}

/// Splits the stream into `batch_size` contiguous lanes and chunks every
/// lane into windows of `seq_len` next-character pairs. The last window may
/// be shorter. Tokens past `batch_size * (len / batch_size)` are dropped.
pub fn make_batches(
    stream: &EncodedStream,
    batch_size: usize,
    seq_len: usize,
) -> Result<Vec<TrainingBatch>> {
    if batch_size == 0 || seq_len == 0 {
        return Err(Error::Validation("batch_size and seq_len must be positive".into()));
    }
    if stream.tokens.len() != stream.aux.len() {
        return Err(Error::shape("make_batches", stream.tokens.len(), stream.aux.len()));
    }
    if stream.len() < batch_size * 2 {
        return Err(Error::Validation(format!(
            "stream of {} tokens is too short for {batch_size} lanes",
            stream.len()
        )));
    }
    let lane_len = stream.len() / batch_size;
    let pairs = lane_len - 1;
    let mut batches = Vec::new();
    let mut start = 0;
    while start < pairs {
        let end = (start + seq_len).min(pairs);
        let lanes = (0..batch_size)
            .map(|lane| {
                let base = lane * lane_len;
                LaneChunk {
                    inputs: stream.tokens[base + start..base + end].to_vec(),
                    targets: stream.tokens[base + start + 1..base + end + 1].to_vec(),
                    aux: stream.aux[base + start..base + end].to_vec(),
                }
            })
            .collect();
        batches.push(TrainingBatch { lanes });
        start = end;
    }
    Ok(batches)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CorpusStats {
    pub users: usize,
    pub items: usize,
    pub reviews: usize,
}

pub fn corpus_stats<R: Review>(records: &[R]) -> CorpusStats {
    let users: HashSet<&str> = records.iter().map(|r| r.user_id()).collect();
    let items: HashSet<&str> = records.iter().map(|r| r.item_id()).collect();
    CorpusStats {
        users: users.len(),
        items: items.len(),
        reviews: records.len(),
    }
}

fn thousands(n: usize) -> String {
    let digits = n.to_string();
    let mut out = String::new();
    for (i, c) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i) % 3 == 0 {
            out.push(',');
        }
        out.push(c);
    }
    out
}

impl fmt::Display for CorpusStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# Users    {}", thousands(self.users))?;
        writeln!(f, "# Beers    {}", thousands(self.items))?;
        writeln!(f, "# Reviews  {}", thousands(self.reviews))
    }
}

/// Record counts keyed by category (uncategorized records under "").
pub fn category_counts(records: &[ReviewRecord]) -> BTreeMap<String, usize> {
    let mut out = BTreeMap::new();
    for r in records {
        *out.entry(r.category.clone().unwrap_or_default()).or_default() += 1;
    }
    out
}
