use std::fmt;
use std::str::FromStr;

use super::{
    aggregate_multi_ref, bertscore, bleu_k, delta_bleu, embedding_average, greedy_matching, meteor,
    rouge_l, vector_extrema, Aggregation, ContextualEmbeddingSet, MetricConfig, WeightedReference,
};
use crate::corpus::{EvalInstance, ReferenceMode};
use crate::error::{Error, Result};
use crate::text::{tokenize, EmbeddingTable, Lexicons, TokenSeq};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MetricKind {
    Bleu(usize),
    DeltaBleu(usize),
    RougeL,
    Meteor,
    EmbeddingAverage,
    VectorExtrema,
    GreedyMatching,
    BertScore,
}

impl MetricKind {
    pub fn name(self) -> String {
        match self {
            MetricKind::Bleu(k) => format!("bleu{k}"),
            MetricKind::DeltaBleu(k) => format!("deltableu{k}"),
            MetricKind::RougeL => "rougel".into(),
            MetricKind::Meteor => "meteor".into(),
            MetricKind::EmbeddingAverage => "embavg".into(),
            MetricKind::VectorExtrema => "extrema".into(),
            MetricKind::GreedyMatching => "greedy".into(),
            MetricKind::BertScore => "bertscore".into(),
        }
    }

    /// Cosine-valued metrics whose natural range is [-1, 1].
    pub fn is_cosine_based(self) -> bool {
        matches!(
            self,
            MetricKind::EmbeddingAverage | MetricKind::VectorExtrema | MetricKind::GreedyMatching
        )
    }

    /// Whether the metric has its own multi-reference rule.
    pub fn has_standard_aggregation(self) -> bool {
        matches!(self, MetricKind::Bleu(_) | MetricKind::RougeL)
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase().replace(['-', '_'], "");
        let order = |rest: &str| -> Result<usize> {
            match rest.parse::<usize>() {
                Ok(k @ 1..=4) => Ok(k),
                _ => Err(Error::InvalidArgument(format!("unknown metric {s:?}"))),
            }
        };
        Ok(match lower.as_str() {
            "rougel" => MetricKind::RougeL,
            "meteor" => MetricKind::Meteor,
            "embavg" | "embeddingaverage" => MetricKind::EmbeddingAverage,
            "extrema" | "vectorextrema" => MetricKind::VectorExtrema,
            "greedy" | "greedymatching" => MetricKind::GreedyMatching,
            "bertscore" => MetricKind::BertScore,
            "deltableu" => MetricKind::DeltaBleu(4),
            other => {
                if let Some(rest) = other.strip_prefix("deltableu") {
                    MetricKind::DeltaBleu(order(rest)?)
                } else if let Some(rest) = other.strip_prefix("bleu") {
                    MetricKind::Bleu(order(rest)?)
                } else {
                    return Err(Error::InvalidArgument(format!("unknown metric {s:?}")));
                }
            }
        })
    }
}

/// How the references of an instance are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RefStrategy {
    Single,
    MultiMax,
    MultiAvg,
    Standard,
    Delta,
}

impl RefStrategy {
    pub fn reference_mode(self) -> ReferenceMode {
        match self {
            RefStrategy::Single => ReferenceMode::Single,
            RefStrategy::MultiMax | RefStrategy::MultiAvg | RefStrategy::Standard => ReferenceMode::Multi,
            RefStrategy::Delta => ReferenceMode::Delta,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RefStrategy::Single => "single",
            RefStrategy::MultiMax => "multi-max",
            RefStrategy::MultiAvg => "multi-avg",
            RefStrategy::Standard => "standard",
            RefStrategy::Delta => "delta",
        }
    }
}

impl fmt::Display for RefStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RefStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single" => Ok(RefStrategy::Single),
            "multi-max" | "max" => Ok(RefStrategy::MultiMax),
            "multi-avg" | "avg" => Ok(RefStrategy::MultiAvg),
            "standard" => Ok(RefStrategy::Standard),
            "delta" => Ok(RefStrategy::Delta),
            _ => Err(Error::InvalidArgument(format!("unknown reference strategy {s:?}"))),
        }
    }
}

/// A metric together with its reference strategy, e.g. `bleu1/multi-max`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MetricSpec {
    pub kind: MetricKind,
    pub strategy: RefStrategy,
}

impl MetricSpec {
    pub fn new(kind: MetricKind, strategy: RefStrategy) -> Result<Self> {
        let ok = match (kind, strategy) {
            (MetricKind::DeltaBleu(_), s) => s == RefStrategy::Delta,
            (_, RefStrategy::Delta) => false,
            (k, RefStrategy::Standard) => k.has_standard_aggregation(),
            _ => true,
        };
        if !ok {
            return Err(Error::InvalidArgument(format!(
                "metric {kind} does not support reference strategy {strategy}"
            )));
        }
        Ok(MetricSpec { kind, strategy })
    }
}

impl fmt::Display for MetricSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.kind, self.strategy)
    }
}

impl FromStr for MetricSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, strategy) = s
            .split_once('/')
            .ok_or_else(|| Error::InvalidArgument(format!("expected metric/strategy, got {s:?}")))?;
        MetricSpec::new(kind.parse()?, strategy.parse()?)
    }
}

/// External resources a metric may need.
#[derive(Debug, Clone, Default)]
pub struct Resources {
    pub config: MetricConfig,
    pub embeddings: Option<EmbeddingTable>,
    pub lexicons: Lexicons,
    pub contextual: Option<ContextualEmbeddingSet>,
}

impl Resources {
    /// Fails when a resource the metric depends on is absent; the message names the CLI flag.
    pub fn check(&self, kind: MetricKind) -> Result<()> {
        if matches!(
            kind,
            MetricKind::EmbeddingAverage | MetricKind::VectorExtrema | MetricKind::GreedyMatching
        ) && self.embeddings.is_none()
        {
            return Err(Error::MissingResource(format!("{kind} requires --embeddings")));
        }
        if kind == MetricKind::BertScore && self.contextual.is_none() {
            return Err(Error::MissingResource(format!("{kind} requires --ctx-embeddings")));
        }
        Ok(())
    }

    fn embeddings(&self) -> Result<&EmbeddingTable> {
        self.embeddings
            .as_ref()
            .ok_or_else(|| Error::MissingResource("word embeddings (--embeddings)".into()))
    }

    fn contextual_vectors(&self, id: &str) -> Result<&[Vec<f64>]> {
        let set = self
            .contextual
            .as_ref()
            .ok_or_else(|| Error::MissingResource("contextual embeddings (--ctx-embeddings)".into()))?;
        set.get(id)
            .map(|e| e.vectors.as_slice())
            .ok_or_else(|| Error::MissingResource(format!("no contextual vectors for {id:?}")))
    }
}

/// Scores one evaluation instance.
pub fn score_instance(instance: &EvalInstance, spec: MetricSpec, resources: &Resources) -> Result<f64> {
    let cfg = &resources.config;
    let candidate = tokenize(&instance.candidate);
    let positive_refs: Vec<TokenSeq> = instance
        .references
        .iter()
        .zip(&instance.reference_weights)
        .filter(|(_, &w)| w > 0.0)
        .map(|(r, _)| tokenize(r))
        .collect();
    if positive_refs.is_empty() {
        return Err(Error::Validation(format!(
            "instance {} has no positive reference",
            instance.candidate_id
        )));
    }

    if spec.kind == MetricKind::BertScore {
        let cand = resources.contextual_vectors(&instance.candidate_id)?;
        let per_ref = instance
            .reference_ids
            .iter()
            .zip(&instance.reference_weights)
            .filter(|(_, &w)| w > 0.0)
            .map(|(id, _)| Ok(bertscore(cand, resources.contextual_vectors(id)?)?.f1))
            .collect::<Result<Vec<f64>>>()?;
        return Ok(combine(&per_ref, spec.strategy));
    }

    let single = |c: &TokenSeq, r: &TokenSeq| -> Result<f64> {
        match spec.kind {
            MetricKind::Bleu(k) => bleu_k(c, std::slice::from_ref(r), k, cfg),
            MetricKind::RougeL => rouge_l(c, std::slice::from_ref(r), cfg),
            MetricKind::Meteor => meteor(c, r, &resources.lexicons, cfg),
            MetricKind::EmbeddingAverage => embedding_average(c, r, resources.embeddings()?),
            MetricKind::VectorExtrema => vector_extrema(c, r, resources.embeddings()?, cfg.extrema_rule),
            MetricKind::GreedyMatching => greedy_matching(c, r, resources.embeddings()?),
            MetricKind::BertScore | MetricKind::DeltaBleu(_) => unreachable!("handled separately"),
        }
    };

    match (spec.kind, spec.strategy) {
        (MetricKind::DeltaBleu(k), _) => {
            let refs = instance
                .references
                .iter()
                .zip(&instance.reference_weights)
                .map(|(r, &w)| WeightedReference::new(tokenize(r), w))
                .collect::<Result<Vec<_>>>()?;
            Ok(delta_bleu(&candidate, &refs, k, cfg)?.score)
        }
        (MetricKind::Bleu(k), RefStrategy::Standard) => bleu_k(&candidate, &positive_refs, k, cfg),
        (MetricKind::RougeL, RefStrategy::Standard) => rouge_l(&candidate, &positive_refs, cfg),
        (_, RefStrategy::MultiAvg) => aggregate_multi_ref(single, &candidate, &positive_refs, Aggregation::Avg),
        _ => aggregate_multi_ref(single, &candidate, &positive_refs, Aggregation::Max),
    }
}

fn combine(scores: &[f64], strategy: RefStrategy) -> f64 {
    match strategy {
        RefStrategy::MultiAvg => scores.iter().sum::<f64>() / scores.len() as f64,
        _ => scores.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    }
}
