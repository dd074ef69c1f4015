use serde::{Deserialize, Serialize};

use super::{require_nonempty, MetricConfig};
use crate::error::{Error, Result};
use crate::text::{lcs_length, ngrams, TokenSeq};

/// A reference response with a relevance weight in [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedReference {
    pub tokens: TokenSeq,
    pub weight: f64,
}

impl WeightedReference {
    pub fn new(tokens: TokenSeq, weight: f64) -> Result<Self> {
        if !(-1.0..=1.0).contains(&weight) {
            return Err(Error::InvalidArgument(format!(
                "reference weight {weight} outside [-1, 1]"
            )));
        }
        Ok(WeightedReference { tokens, weight })
    }
}

/// Length of the reference closest to `cand_len`; ties go to the shorter one.
fn closest_ref_len(cand_len: usize, ref_lens: impl Iterator<Item = usize>) -> usize {
    ref_lens
        .min_by_key(|&r| (r.abs_diff(cand_len), r))
        .expect("at least one reference")
}

fn brevity_penalty(cand_len: usize, ref_len: usize) -> f64 {
    if cand_len >= ref_len {
        1.0
    } else {
        (1.0 - ref_len as f64 / cand_len as f64).exp()
    }
}

/// Weighted clipped n-gram match sum and candidate n-gram count for one order.
///
/// Each candidate n-gram earns `max over references containing it of
/// weight · min(count_cand, count_ref)`. With all weights at +1 this is the
/// standard clipped count.
fn weighted_matches(candidate: &[String], refs: &[(&[String], f64)], n: usize) -> Result<(f64, usize)> {
    let cand = ngrams(candidate, n)?;
    let ref_counts = refs
        .iter()
        .map(|(r, w)| Ok((ngrams(r, n)?, *w)))
        .collect::<Result<Vec<_>>>()?;
    let mut numerator = 0.0;
    for (gram, count) in cand.iter() {
        let best = ref_counts
            .iter()
            .filter_map(|(rc, w)| {
                let rcount = rc.get(gram);
                (rcount > 0).then(|| w * count.min(rcount) as f64)
            })
            .fold(None, |acc: Option<f64>, x| Some(acc.map_or(x, |a| a.max(x))));
        numerator += best.unwrap_or(0.0);
    }
    Ok((numerator, cand.total()))
}

/// Clipped n-gram precision as (matched count, candidate n-gram count).
pub fn clipped_precision(candidate: &[String], references: &[TokenSeq], n: usize) -> Result<(f64, usize)> {
    let refs: Vec<(&[String], f64)> = references.iter().map(|r| (&r[..], 1.0)).collect();
    weighted_matches(candidate, &refs, n)
}

fn check_order(k: usize) -> Result<()> {
    if !(1..=4).contains(&k) {
        return Err(Error::InvalidArgument(format!("BLEU order must be in 1..=4, got {k}")));
    }
    Ok(())
}

/// Sentence-level BLEU up to order `k` with standard multi-reference clipping.
pub fn bleu_k(candidate: &TokenSeq, references: &[TokenSeq], k: usize, config: &MetricConfig) -> Result<f64> {
    check_order(k)?;
    require_nonempty(candidate, "candidate")?;
    if references.is_empty() {
        return Err(Error::EmptyInput("no references".into()));
    }
    for r in references {
        require_nonempty(r, "reference")?;
    }
    let refs: Vec<(&[String], f64)> = references.iter().map(|r| (&r[..], 1.0)).collect();
    let mut log_sum = 0.0;
    for n in 1..=k {
        let (num, den) = weighted_matches(candidate, &refs, n)?;
        let p = if num > 0.0 { num / den as f64 } else { config.bleu_epsilon };
        log_sum += p.ln();
    }
    let r_star = closest_ref_len(candidate.len(), references.iter().map(|r| r.len()));
    Ok(brevity_penalty(candidate.len(), r_star) * (log_sum / k as f64).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaBleu {
    pub score: f64,
    /// Unigram weighted precision before clamping; negative when matches come mostly from negative references.
    pub p1_unclamped: f64,
}

/// deltaBLEU: BLEU whose n-gram credit is scaled by the weight of the matching reference.
pub fn delta_bleu(
    candidate: &TokenSeq,
    references: &[WeightedReference],
    k: usize,
    config: &MetricConfig,
) -> Result<DeltaBleu> {
    check_order(k)?;
    require_nonempty(candidate, "candidate")?;
    for r in references {
        require_nonempty(&r.tokens, "reference")?;
    }
    if !references.iter().any(|r| r.weight > 0.0) {
        return Err(Error::InvalidArgument(
            "deltaBLEU needs at least one positive-weight reference".into(),
        ));
    }
    let refs: Vec<(&[String], f64)> = references.iter().map(|r| (&r.tokens[..], r.weight)).collect();
    let mut log_sum = 0.0;
    let mut p1_unclamped = 0.0;
    for n in 1..=k {
        let (num, den) = weighted_matches(candidate, &refs, n)?;
        let p = if den == 0 { 0.0 } else { num / den as f64 };
        if n == 1 {
            p1_unclamped = p;
        }
        log_sum += p.max(config.bleu_epsilon).ln();
    }
    let r_star = closest_ref_len(
        candidate.len(),
        references.iter().filter(|r| r.weight > 0.0).map(|r| r.tokens.len()),
    );
    Ok(DeltaBleu {
        score: brevity_penalty(candidate.len(), r_star) * (log_sum / k as f64).exp(),
        p1_unclamped,
    })
}

/// ROUGE-L F-measure built from the best precision and the best recall over the references.
pub fn rouge_l(candidate: &TokenSeq, references: &[TokenSeq], config: &MetricConfig) -> Result<f64> {
    require_nonempty(candidate, "candidate")?;
    if references.is_empty() {
        return Err(Error::EmptyInput("no references".into()));
    }
    let (mut p, mut r) = (0.0f64, 0.0f64);
    for reference in references {
        require_nonempty(reference, "reference")?;
        let lcs = lcs_length(candidate, reference) as f64;
        p = p.max(lcs / candidate.len() as f64);
        r = r.max(lcs / reference.len() as f64);
    }
    if p == 0.0 && r == 0.0 {
        return Ok(0.0);
    }
    let b2 = config.rouge_beta * config.rouge_beta;
    Ok((1.0 + b2) * p * r / (r + b2 * p))
}
