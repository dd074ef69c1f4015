use std::collections::HashMap;

use crate::error::{Error, Result};

/// Multiset of contiguous n-grams of a single order, borrowing from the token sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NGramCounts<'a> {
    n: usize,
    counts: HashMap<&'a [String], usize>,
}

impl<'a> NGramCounts<'a> {
    pub fn order(&self) -> usize {
        self.n
    }

    pub fn get(&self, gram: &[String]) -> usize {
        self.counts.get(gram).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&'a [String], usize)> + '_ {
        self.counts.iter().map(|(g, c)| (*g, *c))
    }

    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

pub fn ngrams(tokens: &[String], n: usize) -> Result<NGramCounts<'_>> {
    if n == 0 {
        return Err(Error::InvalidArgument("n-gram order must be >= 1".into()));
    }
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for gram in tokens.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    Ok(NGramCounts { n, counts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::TokenSeq;
    use proptest::prelude::*;

    fn s(v: &[&str]) -> Vec<String> {
        v.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn bigrams() {
        let toks = TokenSeq::from_strs(&["a", "b", "c"]);
        let c = ngrams(&toks, 2).unwrap();
        assert_eq!(c.distinct(), 2);
        assert_eq!(c.get(&s(&["a", "b"])), 1);
        assert_eq!(c.get(&s(&["b", "c"])), 1);
        assert_eq!(c.get(&s(&["a", "c"])), 0);
    }

    #[test]
    fn repeated_unigram() {
        let toks = TokenSeq::from_strs(&["a", "a", "a"]);
        let c = ngrams(&toks, 1).unwrap();
        assert_eq!(c.distinct(), 1);
        assert_eq!(c.get(&s(&["a"])), 3);
    }

    #[test]
    fn order_longer_than_sequence() {
        let toks = TokenSeq::from_strs(&["a", "b"]);
        assert!(ngrams(&toks, 3).unwrap().is_empty());
    }

    #[test]
    fn zero_order_rejected() {
        assert!(ngrams(&s(&["a"]), 0).is_err());
    }

    proptest! {
        #[test]
        fn counts_sum_to_window_count(toks in prop::collection::vec("[abc]", 0..12), n in 1usize..5) {
            let c = ngrams(&toks, n).unwrap();
            prop_assert_eq!(c.total(), (toks.len() + 1).saturating_sub(n));
            prop_assert!(c.distinct() <= (toks.len() + 1).saturating_sub(n));
            prop_assert!(c.iter().all(|(g, k)| g.len() == n && k >= 1));
        }
    }
}
