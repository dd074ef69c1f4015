//! Untrained response-similarity metrics and multi-reference aggregation.
//!
//! Every metric is a pure function of tokenized inputs plus optional resources
//! (word vectors, lexicons, contextual token vectors). Single-reference metrics
//! are lifted to several references with [`aggregate_multi_ref`]; BLEU, deltaBLEU
//! and ROUGE-L additionally implement their own native ("standard")
//! multi-reference rule.

mod bertscore;
mod embedding;
mod meteor;
mod ngram;
mod scorer;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::TokenSeq;

pub use bertscore::{bertscore, BertScore, ContextualEmbedding, ContextualEmbeddingSet};
pub use embedding::{embedding_average, extrema_vector, greedy_matching, vector_extrema};
pub use meteor::{meteor, meteor_alignment, MeteorAlignment};
pub use ngram::{bleu_k, clipped_precision, delta_bleu, rouge_l, DeltaBleu, WeightedReference};
pub use scorer::{score_instance, MetricKind, MetricSpec, RefStrategy, Resources};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ExtremaRule {
    /// Coordinate with the largest magnitude, positive on ties.
    #[default]
    Abs,
    /// Plain per-dimension maximum.
    SignedMax,
}

/// Metric hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricConfig {
    pub bleu_max_order: usize,
    /// Replaces zero n-gram precisions before the geometric mean.
    pub bleu_epsilon: f64,
    pub rouge_beta: f64,
    pub meteor_fmean_recall_weight: f64,
    pub meteor_penalty_gamma: f64,
    pub meteor_penalty_power: f64,
    pub extrema_rule: ExtremaRule,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig {
            bleu_max_order: 4,
            bleu_epsilon: 1e-9,
            rouge_beta: 1.2,
            meteor_fmean_recall_weight: 9.0,
            meteor_penalty_gamma: 0.5,
            meteor_penalty_power: 3.0,
            extrema_rule: ExtremaRule::Abs,
        }
    }
}

impl MetricConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=4).contains(&self.bleu_max_order) {
            return Err(Error::InvalidArgument(format!(
                "bleu_max_order must be in 1..=4, got {}",
                self.bleu_max_order
            )));
        }
        if !(self.bleu_epsilon > 0.0) {
            return Err(Error::InvalidArgument("bleu_epsilon must be > 0".into()));
        }
        if !(self.rouge_beta > 0.0) {
            return Err(Error::InvalidArgument("rouge_beta must be > 0".into()));
        }
        if !(self.meteor_fmean_recall_weight >= 0.0)
            || !(0.0..=1.0).contains(&self.meteor_penalty_gamma)
            || !(self.meteor_penalty_power > 0.0)
        {
            return Err(Error::InvalidArgument("invalid METEOR parameters".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    Max,
    Avg,
}

/// Scores the candidate against each reference separately and combines the results.
pub fn aggregate_multi_ref<F>(
    metric: F,
    candidate: &TokenSeq,
    references: &[TokenSeq],
    strategy: Aggregation,
) -> Result<f64>
where
    F: Fn(&TokenSeq, &TokenSeq) -> Result<f64>,
{
    if references.is_empty() {
        return Err(Error::EmptyInput("no references to aggregate over".into()));
    }
    let scores = references
        .iter()
        .map(|r| metric(candidate, r))
        .collect::<Result<Vec<_>>>()?;
    Ok(match strategy {
        Aggregation::Max => scores.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        Aggregation::Avg => scores.iter().sum::<f64>() / scores.len() as f64,
    })
}

pub(crate) fn require_nonempty(seq: &[String], what: &str) -> Result<()> {
    if seq.is_empty() {
        Err(Error::EmptyInput(format!("{what} is empty")))
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixed(_: &TokenSeq, r: &TokenSeq) -> Result<f64> {
        Ok(if r[0] == "x" { 0.2 } else { 0.8 })
    }

    #[test]
    fn max_and_avg() {
        let c = TokenSeq::from_strs(&["c"]);
        let refs = [TokenSeq::from_strs(&["x"]), TokenSeq::from_strs(&["y"])];
        assert_eq!(aggregate_multi_ref(fixed, &c, &refs, Aggregation::Max).unwrap(), 0.8);
        assert_eq!(aggregate_multi_ref(fixed, &c, &refs, Aggregation::Avg).unwrap(), 0.5);
        assert_eq!(
            aggregate_multi_ref(fixed, &c, &refs[..1], Aggregation::Avg).unwrap(),
            fixed(&c, &refs[0]).unwrap()
        );
    }

    #[test]
    fn empty_references() {
        let c = TokenSeq::from_strs(&["c"]);
        assert!(aggregate_multi_ref(fixed, &c, &[], Aggregation::Max).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(MetricConfig::default().validate().is_ok());
        let bad = MetricConfig {
            bleu_epsilon: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = MetricConfig {
            rouge_beta: -1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
