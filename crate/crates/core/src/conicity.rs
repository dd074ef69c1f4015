//! Spread of response embeddings: conicity and alignment-to-mean (ATM).
//!
//! Conicity of a set is the mean cosine of each vector with the set's mean
//! vector. Values near 1 mean the vectors occupy a narrow cone.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::CandidateType;
use crate::error::{Error, Result};
use crate::text::{cosine, mean_vector};

fn nonzero_mean(set: &[Vec<f64>]) -> Result<Vec<f64>> {
    if set.is_empty() {
        return Err(Error::EmptyInput("conicity of an empty set".into()));
    }
    let mean = mean_vector(set)?;
    if mean.iter().all(|&x| x == 0.0) {
        return Err(Error::Degenerate("set has a zero mean vector".into()));
    }
    Ok(mean)
}

/// Cosine of `v` with the mean of `set`.
pub fn atm(v: &[f64], set: &[Vec<f64>]) -> Result<f64> {
    cosine(v, &nonzero_mean(set)?)
}

pub fn conicity(vectors: &[Vec<f64>]) -> Result<f64> {
    let mean = nonzero_mean(vectors)?;
    let mut total = 0.0;
    for v in vectors {
        total += cosine(v, &mean)?;
    }
    Ok(total / vectors.len() as f64)
}

/// One sentence vector, as exported by a scorer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceEmbedding {
    pub candidate_id: String,
    pub context_id: String,
    pub candidate_type: CandidateType,
    pub vector: Vec<f64>,
}

/// Vectors of one context grouped by candidate type.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabeledEmbeddingSet {
    pub context_id: String,
    pub positives: Vec<Vec<f64>>,
    pub random: Vec<Vec<f64>>,
    pub adversarial: Vec<Vec<f64>>,
}

/// Parses sentence-embedding JSONL. All vectors must share one dimension and be nonzero.
pub fn parse_sentence_embeddings<R: BufRead>(reader: R) -> Result<Vec<SentenceEmbedding>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    let mut dim = None;
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::parse(lineno, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let e: SentenceEmbedding = serde_json::from_str(&line).map_err(|e| Error::parse(lineno, e.to_string()))?;
        let d = *dim.get_or_insert(e.vector.len());
        if d == 0 || e.vector.len() != d {
            return Err(Error::parse(lineno, format!("vector must have dimension {d}, got {}", e.vector.len())));
        }
        if e.vector.iter().all(|&x| x == 0.0) {
            return Err(Error::parse(lineno, format!("{:?} has a zero vector", e.candidate_id)));
        }
        if !seen.insert(e.candidate_id.clone()) {
            return Err(Error::parse(lineno, format!("duplicate candidate id {:?}", e.candidate_id)));
        }
        out.push(e);
    }
    Ok(out)
}

pub fn load_sentence_embeddings(path: &Path) -> Result<Vec<SentenceEmbedding>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_sentence_embeddings(BufReader::new(file))
}

/// Groups embeddings by context, in context-id order. Generated candidates are ignored.
pub fn group_by_context(embeddings: &[SentenceEmbedding]) -> Vec<LabeledEmbeddingSet> {
    let mut groups: BTreeMap<&str, LabeledEmbeddingSet> = BTreeMap::new();
    for e in embeddings {
        let set = groups.entry(&e.context_id).or_insert_with(|| LabeledEmbeddingSet {
            context_id: e.context_id.clone(),
            ..Default::default()
        });
        match e.candidate_type {
            CandidateType::Positive => set.positives.push(e.vector.clone()),
            CandidateType::RandomNegative => set.random.push(e.vector.clone()),
            CandidateType::AdversarialNegative => set.adversarial.push(e.vector.clone()),
            CandidateType::Generated => {}
        }
    }
    groups.into_values().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextConicity {
    pub context_id: String,
    pub p: f64,
    pub p_union_r: Option<f64>,
    pub p_union_a: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConicityReport {
    pub n_contexts: usize,
    pub mean_p: f64,
    /// Absent when no context has random negatives.
    pub mean_p_union_r: Option<f64>,
    pub n_with_r: usize,
    pub mean_p_union_a: Option<f64>,
    pub n_with_a: usize,
    pub per_context: Vec<ContextConicity>,
}

fn union(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    a.iter().chain(b).cloned().collect()
}

fn mean_of(values: impl Iterator<Item = f64>) -> (Option<f64>, usize) {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    ((n > 0).then(|| sum / n as f64), n)
}

/// Per-context conicity of P, P∪R and P∪A, averaged without weighting over contexts.
///
/// With `only`, contexts outside the given ids are skipped.
pub fn set_analysis(sets: &[LabeledEmbeddingSet], only: Option<&HashSet<&str>>) -> Result<ConicityReport> {
    let mut per_context = Vec::new();
    for set in sets {
        if only.is_some_and(|ids| !ids.contains(set.context_id.as_str())) {
            continue;
        }
        if set.positives.is_empty() {
            return Err(Error::Validation(format!("context {:?} has no positive embeddings", set.context_id)));
        }
        let with_context = |e: Error| Error::Degenerate(format!("context {:?}: {e}", set.context_id));
        let optional = |extra: &[Vec<f64>]| -> Result<Option<f64>> {
            if extra.is_empty() {
                Ok(None)
            } else {
                conicity(&union(&set.positives, extra)).map(Some).map_err(with_context)
            }
        };
        per_context.push(ContextConicity {
            context_id: set.context_id.clone(),
            p: conicity(&set.positives).map_err(with_context)?,
            p_union_r: optional(&set.random)?,
            p_union_a: optional(&set.adversarial)?,
        });
    }
    if per_context.is_empty() {
        return Err(Error::EmptyInput("no contexts to analyse".into()));
    }
    let (mean_p, _) = mean_of(per_context.iter().map(|c| c.p));
    let (mean_p_union_r, n_with_r) = mean_of(per_context.iter().filter_map(|c| c.p_union_r));
    let (mean_p_union_a, n_with_a) = mean_of(per_context.iter().filter_map(|c| c.p_union_a));
    Ok(ConicityReport {
        n_contexts: per_context.len(),
        mean_p: mean_p.expect("at least one context"),
        mean_p_union_r,
        n_with_r,
        mean_p_union_a,
        n_with_a,
        per_context,
    })
}
