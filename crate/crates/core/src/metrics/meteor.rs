use super::{require_nonempty, MetricConfig};
use crate::error::Result;
use crate::text::{stem, Lexicons, TokenSeq};

/// One-to-one token alignment between candidate and reference.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeteorAlignment {
    /// (candidate index, reference index), sorted by candidate index.
    pub pairs: Vec<(usize, usize)>,
}

impl MeteorAlignment {
    pub fn matches(&self) -> usize {
        self.pairs.len()
    }

    /// Number of maximal runs that are contiguous in both sequences.
    pub fn chunks(&self) -> usize {
        if self.pairs.is_empty() {
            return 0;
        }
        1 + self
            .pairs
            .windows(2)
            .filter(|w| !(w[1].0 == w[0].0 + 1 && w[1].1 == w[0].1 + 1))
            .count()
    }
}

/// Staged greedy alignment: exact forms, then Porter stems, then synonyms.
///
/// Within a stage candidate tokens are visited left to right; each takes the
/// first free matching reference position after the reference position of the
/// nearest preceding aligned candidate token, falling back to the first free
/// match anywhere.
pub fn meteor_alignment(candidate: &TokenSeq, reference: &TokenSeq, lexicons: &Lexicons) -> MeteorAlignment {
    let mut cand_to_ref: Vec<Option<usize>> = vec![None; candidate.len()];
    let mut ref_used = vec![false; reference.len()];

    let cand_stems: Vec<String> = candidate.iter().map(|w| stem(w)).collect();
    let ref_stems: Vec<String> = reference.iter().map(|w| stem(w)).collect();

    let mut stages: Vec<Box<dyn Fn(usize, usize) -> bool + '_>> = vec![
        Box::new(|i, j| candidate[i] == reference[j]),
        Box::new(|i, j| cand_stems[i] == ref_stems[j]),
    ];
    if let Some(syn) = &lexicons.synonyms {
        stages.push(Box::new(move |i, j| syn.are_synonyms(&candidate[i], &reference[j])));
    }

    for matches in &stages {
        for i in 0..candidate.len() {
            if cand_to_ref[i].is_some() {
                continue;
            }
            let anchor = cand_to_ref[..i].iter().rev().find_map(|x| *x);
            let free = |j: &usize| !ref_used[*j] && matches(i, *j);
            let after = anchor.map_or(0, |a| a + 1);
            let pick = (after..reference.len())
                .find(|j| free(j))
                .or_else(|| (0..after).find(|j| free(j)));
            if let Some(j) = pick {
                cand_to_ref[i] = Some(j);
                ref_used[j] = true;
            }
        }
    }

    MeteorAlignment {
        pairs: cand_to_ref
            .iter()
            .enumerate()
            .filter_map(|(i, j)| j.map(|j| (i, j)))
            .collect(),
    }
}

/// METEOR with recall-weighted harmonic mean and fragmentation penalty.
pub fn meteor(
    candidate: &TokenSeq,
    reference: &TokenSeq,
    lexicons: &Lexicons,
    config: &MetricConfig,
) -> Result<f64> {
    require_nonempty(candidate, "candidate")?;
    require_nonempty(reference, "reference")?;
    let alignment = meteor_alignment(candidate, reference, lexicons);
    let m = alignment.matches();
    if m == 0 {
        return Ok(0.0);
    }
    let m = m as f64;
    let p = m / candidate.len() as f64;
    let r = m / reference.len() as f64;
    let w = config.meteor_fmean_recall_weight;
    let fmean = (1.0 + w) * p * r / (r + w * p);
    let penalty = config.meteor_penalty_gamma * (alignment.chunks() as f64 / m).powf(config.meteor_penalty_power);
    Ok(fmean * (1.0 - penalty))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::SynonymLexicon;
    use approx::assert_abs_diff_eq;

    fn t(s: &str) -> TokenSeq {
        TokenSeq::from_strs(&s.split(' ').collect::<Vec<_>>())
    }

    fn score(c: &str, r: &str) -> f64 {
        meteor(&t(c), &t(r), &Lexicons::default(), &MetricConfig::default()).unwrap()
    }

    #[test]
    fn identity_three_tokens() {
        let s = score("the cat sat", "the cat sat");
        assert_abs_diff_eq!(s, 1.0 - 0.5 / 27.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s, 0.98148, epsilon = 1e-4);
    }

    #[test]
    fn no_matches() {
        assert_eq!(score("a b", "c d"), 0.0);
    }

    #[test]
    fn stem_match() {
        assert_abs_diff_eq!(score("cats", "cat"), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn synonym_stage() {
        let mut syn = SynonymLexicon::default();
        syn.insert("good", &["fine"]).unwrap();
        let lex = Lexicons {
            synonyms: Some(syn),
            ..Default::default()
        };
        let a = meteor_alignment(&t("a fine idea"), &t("a good idea"), &lex);
        assert_eq!(a.pairs, [(0, 0), (1, 1), (2, 2)]);
        assert_eq!(a.chunks(), 1);
        let without = meteor_alignment(&t("a fine idea"), &t("a good idea"), &Lexicons::default());
        assert_eq!(without.matches(), 2);
        assert_eq!(without.chunks(), 2);
    }

    #[test]
    fn chunks_of_swapped_halves() {
        // c = a b c d, r = c d a b: two chunks, m = 4.
        let a = meteor_alignment(&t("a b c d"), &t("c d a b"), &Lexicons::default());
        assert_eq!(a.matches(), 4);
        assert_eq!(a.chunks(), 2);
        let expected = 1.0 * (1.0 - 0.5 * (2.0f64 / 4.0).powi(3));
        assert_abs_diff_eq!(score("a b c d", "c d a b"), expected, epsilon = 1e-12);
    }

    #[test]
    fn repeated_tokens_align_in_order() {
        let a = meteor_alignment(&t("a b a"), &t("a b a"), &Lexicons::default());
        assert_eq!(a.pairs, [(0, 0), (1, 1), (2, 2)]);
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(meteor(&TokenSeq::default(), &t("a"), &Lexicons::default(), &MetricConfig::default()).is_err());
    }
}
