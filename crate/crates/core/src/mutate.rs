//! Synthetic perturbations of relevant responses.
//!
//! Each transformation maps a token sequence to a degraded one. The random
//! kinds (jumble, synonym swap) draw from a generator seeded per item, so a
//! batch gives identical output regardless of processing order.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::corpus::{positive_id, CandidateType, Corpus, EvalInstance};
use crate::error::{Error, Result};
use crate::seed::derive_seed;
use crate::text::{is_punctuation_token, tokenize, Lexicons, TokenSeq};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MutationKind {
    Reverse,
    Jumble,
    NounsOnly,
    DropPunct,
    DropStopwords,
    SynonymSwap,
}

impl MutationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MutationKind::Reverse => "reverse",
            MutationKind::Jumble => "jumble",
            MutationKind::NounsOnly => "nouns_only",
            MutationKind::DropPunct => "drop_punct",
            MutationKind::DropStopwords => "drop_stopwords",
            MutationKind::SynonymSwap => "synonym_swap",
        }
    }
}

impl fmt::Display for MutationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MutationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "reverse" => Ok(MutationKind::Reverse),
            "jumble" => Ok(MutationKind::Jumble),
            "nouns_only" => Ok(MutationKind::NounsOnly),
            "drop_punct" => Ok(MutationKind::DropPunct),
            "drop_stopwords" => Ok(MutationKind::DropStopwords),
            "synonym_swap" => Ok(MutationKind::SynonymSwap),
            _ => Err(Error::InvalidArgument(format!("unknown mutation {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MutationSpec {
    pub kind: MutationKind,
    pub seed: u64,
    /// Replacement probability for synonym swaps, in (0, 1].
    pub swap_rate: f64,
}

impl MutationSpec {
    pub fn new(kind: MutationKind, seed: u64) -> Self {
        MutationSpec {
            kind,
            seed,
            swap_rate: 1.0,
        }
    }

    pub fn with_swap_rate(mut self, rate: f64) -> Result<Self> {
        if !(rate > 0.0 && rate <= 1.0) {
            return Err(Error::InvalidArgument(format!("swap_rate must be in (0,1], got {rate}")));
        }
        self.swap_rate = rate;
        Ok(self)
    }

    /// Fails if the lexicon this kind depends on is absent.
    pub fn check_lexicons(&self, lexicons: &Lexicons) -> Result<()> {
        let missing = match self.kind {
            MutationKind::NounsOnly if lexicons.pos.is_none() => Some("POS lexicon (--pos-lexicon)"),
            MutationKind::DropStopwords if lexicons.stopwords.is_none() => Some("stopword list (--stopwords)"),
            MutationKind::SynonymSwap if lexicons.synonyms.is_none() => Some("synonym lexicon (--synonyms)"),
            _ => None,
        };
        match missing {
            Some(what) => Err(Error::MissingResource(format!("{} requires a {what}", self.kind))),
            None => Ok(()),
        }
    }
}

/// Applies one transformation, seeding any randomness from `spec.seed`.
pub fn apply(spec: &MutationSpec, seq: &TokenSeq, lexicons: &Lexicons) -> Result<TokenSeq> {
    if seq.is_empty() {
        return Err(Error::EmptyInput("cannot mutate an empty sequence".into()));
    }
    if !(spec.swap_rate > 0.0 && spec.swap_rate <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "swap_rate must be in (0,1], got {}",
            spec.swap_rate
        )));
    }
    spec.check_lexicons(lexicons)?;
    let tokens = seq.tokens();
    let keep = |pred: &dyn Fn(&str) -> bool| -> Vec<String> {
        tokens.iter().filter(|t| pred(t)).cloned().collect()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let out = match spec.kind {
        MutationKind::Reverse => tokens.iter().rev().cloned().collect(),
        MutationKind::Jumble => {
            let mut v = tokens.to_vec();
            v.shuffle(&mut rng);
            if v == tokens && v.len() > 1 {
                v.shuffle(&mut rng);
            }
            v
        }
        MutationKind::NounsOnly => {
            let pos = lexicons.pos.as_ref().expect("checked");
            keep(&|t| pos.is_noun(t))
        }
        MutationKind::DropPunct => keep(&|t| !is_punctuation_token(t)),
        MutationKind::DropStopwords => {
            let stop = lexicons.stopwords.as_ref().expect("checked");
            keep(&|t| !stop.contains(t))
        }
        MutationKind::SynonymSwap => {
            let syn = lexicons.synonyms.as_ref().expect("checked");
            tokens
                .iter()
                .map(|t| match syn.synonyms(t) {
                    Some(options) if rng.gen_bool(spec.swap_rate) => {
                        options.choose(&mut rng).expect("non-empty synonym list").clone()
                    }
                    _ => t.clone(),
                })
                .collect()
        }
    };
    // Synonyms may be multi-word phrases; re-split so the result stays a valid token sequence.
    if spec.kind == MutationKind::SynonymSwap {
        return Ok(tokenize(&out.join(" ")));
    }
    TokenSeq::new(out)
}

/// Output of a batch mutation run.
#[derive(Debug, Clone, PartialEq)]
pub struct MutationBatch {
    pub instances: Vec<EvalInstance>,
    /// Candidate ids whose mutation produced no tokens.
    pub empty_outputs: Vec<String>,
}

/// Mutates every positive response of the corpus.
///
/// Each mutated response becomes a label-0 `generated` instance whose
/// references are the other positives of its context, and whose `source_id`
/// names the positive it was derived from.
pub fn mutate_corpus(corpus: &Corpus, spec: &MutationSpec, lexicons: &Lexicons) -> Result<MutationBatch> {
    spec.check_lexicons(lexicons)?;
    let mut instances = Vec::new();
    let mut empty_outputs = Vec::new();
    for record in corpus.records() {
        let ctx = record.id();
        let positives = &record.responses.positives;
        for (i, text) in positives.iter().enumerate() {
            let source_id = positive_id(ctx, i);
            let candidate_id = format!("{source_id}:{}", spec.kind);
            let item_spec = MutationSpec {
                seed: derive_seed(spec.seed, &source_id),
                ..*spec
            };
            let tokens = tokenize(text);
            let mutated = if tokens.is_empty() {
                TokenSeq::default()
            } else {
                apply(&item_spec, &tokens, lexicons)?
            };
            if mutated.is_empty() {
                empty_outputs.push(candidate_id.clone());
            }
            let others: Vec<usize> = (0..positives.len()).filter(|&j| j != i).collect();
            instances.push(EvalInstance {
                context_id: ctx.to_string(),
                candidate_id,
                candidate_type: CandidateType::Generated,
                candidate: mutated.join(),
                references: others.iter().map(|&j| positives[j].clone()).collect(),
                reference_ids: others.iter().map(|&j| positive_id(ctx, j)).collect(),
                reference_weights: vec![1.0; others.len()],
                label: 0,
                source_id: Some(source_id),
            });
        }
    }
    Ok(MutationBatch {
        instances,
        empty_outputs,
    })
}
