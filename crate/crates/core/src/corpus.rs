//! Dialogue dataset model, ingestion, negative sampling, splitting and
//! construction of evaluation instances.
//!
//! A dataset is a JSONL file with one context per line:
//!
//! ```json
//! {"id": "c1", "context": [{"speaker": "FS", "text": "Hi"}],
//!  "positive_responses": ["Hello there"],
//!  "random_negatives": [], "adversarial_negatives": []}
//! ```
//!
//! Both negative lists may be absent.

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::str::FromStr;

use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::item_rng;

/// Number of positives and negatives per context expected by the evaluation protocol.
pub const RESPONSES_PER_CONTEXT: usize = 5;
/// Default minimum whitespace word count for a response to be eligible as a random negative.
pub const DEFAULT_MIN_WORDS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Speaker {
    #[serde(rename = "FS")]
    First,
    #[serde(rename = "SS")]
    Second,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Utterance {
    pub speaker: Speaker,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DialogContext {
    pub id: String,
    pub utterances: Vec<Utterance>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ResponseSet {
    pub positives: Vec<String>,
    pub random_negatives: Vec<String>,
    pub adversarial_negatives: Vec<String>,
}

impl ResponseSet {
    pub fn negatives(&self, kind: NegativeType) -> &[String] {
        match kind {
            NegativeType::Random => &self.random_negatives,
            NegativeType::Adversarial => &self.adversarial_negatives,
        }
    }

    fn all(&self) -> impl Iterator<Item = &String> {
        self.positives
            .iter()
            .chain(&self.random_negatives)
            .chain(&self.adversarial_negatives)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DialogRecord {
    pub context: DialogContext,
    pub responses: ResponseSet,
}

impl DialogRecord {
    pub fn id(&self) -> &str {
        &self.context.id
    }
}

/// Wire shape of one dataset line.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawRecord {
    pub id: String,
    pub context: Vec<Utterance>,
    pub positive_responses: Vec<String>,
    #[serde(default)]
    pub random_negatives: Vec<String>,
    #[serde(default)]
    pub adversarial_negatives: Vec<String>,
}

impl RawRecord {
    pub fn validate(self) -> Result<DialogRecord> {
        let id = self.id;
        if id.is_empty() {
            return Err(Error::Validation("empty context id".into()));
        }
        if self.context.is_empty() {
            return Err(Error::Validation(format!("context {id:?} has no utterances")));
        }
        if let Some(k) = self.context.iter().position(|u| u.text.trim().is_empty()) {
            return Err(Error::Validation(format!(
                "context {id:?} utterance {k} is blank"
            )));
        }
        if self.positive_responses.is_empty() {
            return Err(Error::Validation(format!("context {id:?} has no positive responses")));
        }
        let lists = [
            ("positive_responses", &self.positive_responses),
            ("random_negatives", &self.random_negatives),
            ("adversarial_negatives", &self.adversarial_negatives),
        ];
        for (name, list) in lists {
            if list.iter().any(|r| r.trim().is_empty()) {
                return Err(Error::Validation(format!(
                    "context {id:?} has an empty entry in {name}"
                )));
            }
        }
        Ok(DialogRecord {
            context: DialogContext {
                id,
                utterances: self.context,
            },
            responses: ResponseSet {
                positives: self.positive_responses,
                random_negatives: self.random_negatives,
                adversarial_negatives: self.adversarial_negatives,
            },
        })
    }
}

impl From<&DialogRecord> for RawRecord {
    fn from(r: &DialogRecord) -> Self {
        RawRecord {
            id: r.context.id.clone(),
            context: r.context.utterances.clone(),
            positive_responses: r.responses.positives.clone(),
            random_negatives: r.responses.random_negatives.clone(),
            adversarial_negatives: r.responses.adversarial_negatives.clone(),
        }
    }
}

/// An ordered collection of records with unique ids.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Corpus {
    records: Vec<DialogRecord>,
}

impl Corpus {
    pub fn new(records: Vec<DialogRecord>) -> Result<Self> {
        let mut seen = HashSet::new();
        for r in &records {
            if !seen.insert(r.id()) {
                return Err(Error::Validation(format!("duplicate context id {:?}", r.id())));
            }
        }
        Ok(Corpus { records })
    }

    pub fn records(&self) -> &[DialogRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&DialogRecord> {
        self.records.iter().find(|r| r.id() == id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.records.iter().map(DialogRecord::id)
    }

    /// Records whose id is in `ids`, in corpus order.
    pub fn subset(&self, ids: &HashSet<&str>) -> Corpus {
        Corpus {
            records: self
                .records
                .iter()
                .filter(|r| ids.contains(r.id()))
                .cloned()
                .collect(),
        }
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(&RawRecord::from(r)).expect("serializable record"));
            out.push('\n');
        }
        out
    }
}

pub fn parse_dataset<R: BufRead>(reader: R) -> Result<Corpus> {
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::parse(lineno, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawRecord =
            serde_json::from_str(&line).map_err(|e| Error::parse(lineno, e.to_string()))?;
        let record = raw.validate().map_err(|e| match e {
            Error::Validation(m) => Error::Validation(format!("line {lineno}: {m}")),
            other => other,
        })?;
        records.push(record);
    }
    Corpus::new(records)
}

pub fn load_dataset(path: &Path) -> Result<Corpus> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_dataset(BufReader::new(file))
}

pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub n_contexts: usize,
    pub avg_turns: f64,
    pub avg_words_per_context: f64,
    pub avg_words_per_utterance: f64,
    pub avg_words_per_positive: f64,
    pub avg_words_per_adversarial: f64,
    pub n_contexts_with_adv: usize,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Dataset statistics with whitespace word counts.
pub fn corpus_stats(corpus: &Corpus) -> Result<CorpusStats> {
    if corpus.is_empty() {
        return Err(Error::EmptyInput("corpus has no contexts".into()));
    }
    let (mut turns, mut ctx_words) = (0, 0);
    let (mut positives, mut pos_words) = (0, 0);
    let (mut adversarial, mut adv_words, mut with_adv) = (0, 0, 0);
    for r in corpus.records() {
        turns += r.context.utterances.len();
        ctx_words += r
            .context
            .utterances
            .iter()
            .map(|u| word_count(&u.text))
            .sum::<usize>();
        positives += r.responses.positives.len();
        pos_words += r.responses.positives.iter().map(|p| word_count(p)).sum::<usize>();
        let adv = &r.responses.adversarial_negatives;
        if !adv.is_empty() {
            with_adv += 1;
        }
        adversarial += adv.len();
        adv_words += adv.iter().map(|a| word_count(a)).sum::<usize>();
    }
    let n = corpus.len();
    Ok(CorpusStats {
        n_contexts: n,
        avg_turns: ratio(turns, n),
        avg_words_per_context: ratio(ctx_words, n),
        avg_words_per_utterance: ratio(ctx_words, turns),
        avg_words_per_positive: ratio(pos_words, positives),
        avg_words_per_adversarial: ratio(adv_words, adversarial),
        n_contexts_with_adv: with_adv,
    })
}

/// Fills every context's `random_negatives` with `k` positives drawn from other
/// contexts. Responses shorter than `min_words` are never drawn, and neither is
/// any text that also appears in the receiving context's own responses.
pub fn sample_random_negatives(corpus: &Corpus, k: usize, min_words: usize, seed: u64) -> Result<Corpus> {
    if corpus.len() < 2 {
        return Err(Error::InvalidArgument(
            "random-negative sampling needs at least 2 contexts".into(),
        ));
    }
    // (owning record index, response text)
    let pool: Vec<(usize, &str)> = corpus
        .records()
        .iter()
        .enumerate()
        .flat_map(|(i, r)| r.responses.positives.iter().map(move |p| (i, p.as_str())))
        .filter(|(_, p)| word_count(p) >= min_words)
        .collect();

    let mut records = Vec::with_capacity(corpus.len());
    for (owner, record) in corpus.records().iter().enumerate() {
        let own: HashSet<&str> = record.responses.all().map(String::as_str).collect();
        let eligible = |slot: usize| pool[slot].0 != owner && !own.contains(pool[slot].1);
        let mut rng = item_rng(seed, record.id());
        let mut chosen: Vec<usize> = Vec::with_capacity(k);
        let max_draws = 64 * k.max(1);
        let mut draws = 0;
        while chosen.len() < k && draws < max_draws && !pool.is_empty() {
            draws += 1;
            let slot = rng.gen_range(0..pool.len());
            if eligible(slot) && !chosen.contains(&slot) {
                chosen.push(slot);
            }
        }
        if chosen.len() < k {
            // Rejection sampling stalled: fall back to drawing from the explicit eligible set.
            let candidates: Vec<usize> = (0..pool.len()).filter(|&s| eligible(s)).collect();
            if candidates.len() < k {
                return Err(Error::Validation(format!(
                    "context {:?}: only {} eligible random negatives, need {k}",
                    record.id(),
                    candidates.len()
                )));
            }
            chosen = index::sample(&mut rng, candidates.len(), k)
                .into_iter()
                .map(|i| candidates[i])
                .collect();
        }
        let mut out = record.clone();
        out.responses.random_negatives = chosen.iter().map(|&s| pool[s].1.to_string()).collect();
        records.push(out);
    }
    Corpus::new(records)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub valid_fraction: f64,
    pub test_fraction: f64,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(train: f64, valid: f64, test: f64, seed: u64) -> Result<Self> {
        let spec = SplitSpec {
            train_fraction: train,
            valid_fraction: valid,
            test_fraction: test,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let fractions = [self.train_fraction, self.valid_fraction, self.test_fraction];
        if fractions.iter().any(|f| !(*f > 0.0 && *f < 1.0)) {
            return Err(Error::InvalidArgument(format!(
                "split fractions must lie in (0,1): {fractions:?}"
            )));
        }
        if (fractions.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "split fractions must sum to 1: {fractions:?}"
            )));
        }
        Ok(())
    }

    /// Slice sizes for `n` contexts: valid and test are floored, train takes the remainder.
    pub fn sizes(&self, n: usize) -> (usize, usize, usize) {
        let floor = |f: f64| ((n as f64) * f + 1e-9).floor() as usize;
        let valid = floor(self.valid_fraction);
        let test = floor(self.test_fraction);
        (n - valid - test, valid, test)
    }
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_fraction: 0.8,
            valid_fraction: 0.1,
            test_fraction: 0.1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: Corpus,
    pub valid: Corpus,
    pub test: Corpus,
}

/// Context-level seeded partition; each slice keeps corpus order.
pub fn split(corpus: &Corpus, spec: &SplitSpec) -> Result<Split> {
    spec.validate()?;
    if corpus.len() < 3 {
        return Err(Error::InvalidArgument("splitting needs at least 3 contexts".into()));
    }
    let (n_train, n_valid, _) = spec.sizes(corpus.len());
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    order.shuffle(&mut item_rng(spec.seed, "split"));
    let mut slot = vec![0u8; corpus.len()];
    for (rank, &i) in order.iter().enumerate() {
        slot[i] = if rank < n_train {
            0
        } else if rank < n_train + n_valid {
            1
        } else {
            2
        };
    }
    let pick = |s: u8| Corpus {
        records: corpus
            .records()
            .iter()
            .zip(&slot)
            .filter(|(_, &x)| x == s)
            .map(|(r, _)| r.clone())
            .collect(),
    };
    Ok(Split {
        train: pick(0),
        valid: pick(1),
        test: pick(2),
    })
}

/// Serialized split: the context ids of each slice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub spec: SplitSpec,
    pub train: Vec<String>,
    pub valid: Vec<String>,
    pub test: Vec<String>,
}

impl SplitManifest {
    pub fn from_split(spec: SplitSpec, split: &Split) -> Self {
        let ids = |c: &Corpus| c.ids().map(str::to_string).collect();
        SplitManifest {
            spec,
            train: ids(&split.train),
            valid: ids(&split.valid),
            test: ids(&split.test),
        }
    }

    pub fn slice(&self, slice: Slice) -> &[String] {
        match slice {
            Slice::Train => &self.train,
            Slice::Valid => &self.valid,
            Slice::Test => &self.test,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let manifest: SplitManifest =
            serde_json::from_str(&text).map_err(|e| Error::parse(e.line(), e.to_string()))?;
        let mut seen = HashSet::new();
        for id in manifest.train.iter().chain(&manifest.valid).chain(&manifest.test) {
            if !seen.insert(id.as_str()) {
                return Err(Error::Validation(format!(
                    "split manifest lists context {id:?} more than once"
                )));
            }
        }
        Ok(manifest)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slice {
    Train,
    Valid,
    Test,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NegativeType {
    Random,
    Adversarial,
}

impl FromStr for NegativeType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(NegativeType::Random),
            "adversarial" => Ok(NegativeType::Adversarial),
            _ => Err(Error::InvalidArgument(format!("unknown negative type {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateType {
    Positive,
    RandomNegative,
    AdversarialNegative,
    Generated,
}

impl CandidateType {
    pub fn as_str(self) -> &'static str {
        match self {
            CandidateType::Positive => "positive",
            CandidateType::RandomNegative => "random_negative",
            CandidateType::AdversarialNegative => "adversarial_negative",
            CandidateType::Generated => "generated",
        }
    }

    pub fn label(self) -> u8 {
        u8::from(self == CandidateType::Positive)
    }
}

impl From<NegativeType> for CandidateType {
    fn from(n: NegativeType) -> Self {
        match n {
            NegativeType::Random => CandidateType::RandomNegative,
            NegativeType::Adversarial => CandidateType::AdversarialNegative,
        }
    }
}

impl fmt::Display for CandidateType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CandidateType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "positive" => Ok(CandidateType::Positive),
            "random_negative" => Ok(CandidateType::RandomNegative),
            "adversarial_negative" => Ok(CandidateType::AdversarialNegative),
            "generated" => Ok(CandidateType::Generated),
            _ => Err(Error::InvalidArgument(format!("unknown candidate type {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceMode {
    /// One reference: the next positive by cyclic index.
    Single,
    /// The other four positives (positive candidates) or the first four positives (negatives).
    Multi,
    /// Multi references with weight +1 plus four same-type negatives with weight -1.
    Delta,
}

/// One scored row: a candidate, its references and the binary relevance label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalInstance {
    pub context_id: String,
    pub candidate_id: String,
    pub candidate_type: CandidateType,
    pub candidate: String,
    pub references: Vec<String>,
    pub reference_ids: Vec<String>,
    pub reference_weights: Vec<f64>,
    pub label: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_id: Option<String>,
}

pub fn positive_id(context_id: &str, index: usize) -> String {
    format!("{context_id}:pos{index}")
}

pub fn negative_id(context_id: &str, kind: NegativeType, index: usize) -> String {
    match kind {
        NegativeType::Random => format!("{context_id}:rand{index}"),
        NegativeType::Adversarial => format!("{context_id}:adv{index}"),
    }
}

/// Expands every context into its ten evaluation rows.
///
/// Each positive is scored once against the remaining positives and each
/// negative against the first four positives. In delta mode each instance also
/// carries four negatives of the requested type as weight -1 references: the
/// remaining ones for a negative candidate, the first four for a positive.
pub fn build_eval_instances(
    corpus: &Corpus,
    negative_type: NegativeType,
    mode: ReferenceMode,
) -> Result<Vec<EvalInstance>> {
    const N: usize = RESPONSES_PER_CONTEXT;
    let mut out = Vec::with_capacity(corpus.len() * 2 * N);
    for record in corpus.records() {
        let ctx = record.id();
        let pos = &record.responses.positives;
        let neg = record.responses.negatives(negative_type);
        if pos.len() != N || neg.len() != N {
            return Err(Error::Validation(format!(
                "context {ctx:?} has {} positives and {} {negative_type:?} negatives, need {N} each",
                pos.len(),
                neg.len()
            )));
        }
        let pos_ids: Vec<String> = (0..N).map(|i| positive_id(ctx, i)).collect();
        let neg_ids: Vec<String> = (0..N).map(|i| negative_id(ctx, negative_type, i)).collect();

        for is_positive in [true, false] {
            let (texts, ids) = if is_positive { (pos.as_slice(), &pos_ids) } else { (neg, &neg_ids) };
            for i in 0..N {
                let first_four = |skip: Option<usize>| -> Vec<usize> {
                    (0..N).filter(|&j| Some(j) != skip).take(N - 1).collect()
                };
                let pos_refs: Vec<usize> = match mode {
                    ReferenceMode::Single => vec![(i + 1) % N],
                    ReferenceMode::Multi | ReferenceMode::Delta if is_positive => first_four(Some(i)),
                    _ => first_four(None),
                };
                let mut references: Vec<String> = pos_refs.iter().map(|&j| pos[j].clone()).collect();
                let mut reference_ids: Vec<String> =
                    pos_refs.iter().map(|&j| pos_ids[j].clone()).collect();
                let mut reference_weights = vec![1.0; pos_refs.len()];
                if mode == ReferenceMode::Delta {
                    let neg_refs = first_four(if is_positive { None } else { Some(i) });
                    references.extend(neg_refs.iter().map(|&j| neg[j].clone()));
                    reference_ids.extend(neg_refs.iter().map(|&j| neg_ids[j].clone()));
                    reference_weights.extend(std::iter::repeat_n(-1.0, neg_refs.len()));
                }
                let candidate_type = if is_positive {
                    CandidateType::Positive
                } else {
                    negative_type.into()
                };
                out.push(EvalInstance {
                    context_id: ctx.to_string(),
                    candidate_id: ids[i].clone(),
                    candidate_type,
                    candidate: texts[i].clone(),
                    references,
                    reference_ids,
                    reference_weights,
                    label: candidate_type.label(),
                    source_id: None,
                });
            }
        }
    }
    Ok(out)
}

/// Index of context ids, for membership checks against split manifests.
pub fn id_set(ids: &[String]) -> HashSet<&str> {
    ids.iter().map(String::as_str).collect()
}
