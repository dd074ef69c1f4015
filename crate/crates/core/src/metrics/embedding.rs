use super::ExtremaRule;
use crate::error::{Error, Result};
use crate::text::{cosine, mean_vector, EmbeddingTable, TokenSeq};

fn in_vocab(tokens: &TokenSeq, table: &EmbeddingTable, side: &str) -> Result<Vec<Vec<f64>>> {
    let vectors = table.lookup_all(tokens);
    if vectors.is_empty() {
        return Err(Error::Degenerate(format!(
            "{side} has no in-vocabulary token: {tokens:?}"
        )));
    }
    Ok(vectors)
}

/// Cosine between the mean word vectors of the two sentences.
pub fn embedding_average(candidate: &TokenSeq, reference: &TokenSeq, table: &EmbeddingTable) -> Result<f64> {
    let c = mean_vector(&in_vocab(candidate, table, "candidate")?)?;
    let r = mean_vector(&in_vocab(reference, table, "reference")?)?;
    cosine(&c, &r)
}

/// Per-dimension extreme value over a sentence's word vectors.
pub fn extrema_vector(vectors: &[Vec<f64>], rule: ExtremaRule) -> Result<Vec<f64>> {
    let first = vectors
        .first()
        .ok_or_else(|| Error::EmptyInput("no vectors".into()))?;
    let mut out = first.clone();
    for v in &vectors[1..] {
        for (o, &x) in out.iter_mut().zip(v) {
            let replace = match rule {
                ExtremaRule::SignedMax => x > *o,
                ExtremaRule::Abs => x.abs() > o.abs() || (x.abs() == o.abs() && x > *o),
            };
            if replace {
                *o = x;
            }
        }
    }
    Ok(out)
}

pub fn vector_extrema(
    candidate: &TokenSeq,
    reference: &TokenSeq,
    table: &EmbeddingTable,
    rule: ExtremaRule,
) -> Result<f64> {
    let c = extrema_vector(&in_vocab(candidate, table, "candidate")?, rule)?;
    let r = extrema_vector(&in_vocab(reference, table, "reference")?, rule)?;
    cosine(&c, &r)
}

/// Mean over `from` of each vector's best cosine against `to`.
pub(crate) fn directional_greedy(from: &[Vec<f64>], to: &[Vec<f64>]) -> Result<f64> {
    let mut total = 0.0;
    for u in from {
        let mut best = f64::NEG_INFINITY;
        for v in to {
            best = best.max(cosine(u, v)?);
        }
        total += best;
    }
    Ok(total / from.len() as f64)
}

/// Symmetric greedy matching: average of both matching directions.
pub fn greedy_matching(candidate: &TokenSeq, reference: &TokenSeq, table: &EmbeddingTable) -> Result<f64> {
    let c = in_vocab(candidate, table, "candidate")?;
    let r = in_vocab(reference, table, "reference")?;
    Ok((directional_greedy(&c, &r)? + directional_greedy(&r, &c)?) / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn table() -> EmbeddingTable {
        let mut t = EmbeddingTable::new(2).unwrap();
        t.insert("x", &[1.0, 0.0]).unwrap();
        t.insert("y", &[0.0, 1.0]).unwrap();
        t.insert("p", &[1.0, -2.0]).unwrap();
        t.insert("q", &[3.0, 1.0]).unwrap();
        t.insert("n", &[-3.0, 0.5]).unwrap();
        t
    }

    fn s(v: &[&str]) -> TokenSeq {
        TokenSeq::from_strs(v)
    }

    #[test]
    fn average_known_values() {
        let t = table();
        assert_abs_diff_eq!(embedding_average(&s(&["x", "q"]), &s(&["x", "q"]), &t).unwrap(), 1.0, epsilon = 1e-12);
        assert_eq!(embedding_average(&s(&["x"]), &s(&["y"]), &t).unwrap(), 0.0);
        assert_abs_diff_eq!(
            embedding_average(&s(&["x", "y"]), &s(&["x"]), &t).unwrap(),
            std::f64::consts::FRAC_1_SQRT_2,
            epsilon = 1e-12
        );
    }

    #[test]
    fn oov_tokens_skipped_but_all_oov_is_error() {
        let t = table();
        assert_abs_diff_eq!(
            embedding_average(&s(&["x", "zzz"]), &s(&["x"]), &t).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        assert!(embedding_average(&s(&["zzz"]), &s(&["x"]), &t).is_err());
        assert!(greedy_matching(&s(&["x"]), &s(&["zzz"]), &t).is_err());
    }

    #[test]
    fn extrema_rules() {
        let v = vec![vec![1.0, -2.0], vec![3.0, 1.0]];
        assert_eq!(extrema_vector(&v, ExtremaRule::Abs).unwrap(), [3.0, -2.0]);
        assert_eq!(extrema_vector(&v, ExtremaRule::SignedMax).unwrap(), [3.0, 1.0]);
        let tie = vec![vec![-2.0], vec![2.0]];
        assert_eq!(extrema_vector(&tie, ExtremaRule::Abs).unwrap(), [2.0]);
        let tie = vec![vec![2.0], vec![-2.0]];
        assert_eq!(extrema_vector(&tie, ExtremaRule::Abs).unwrap(), [2.0]);
    }

    #[test]
    fn extrema_metric() {
        let t = table();
        assert_abs_diff_eq!(vector_extrema(&s(&["x"]), &s(&["x"]), &t, ExtremaRule::Abs).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            vector_extrema(&s(&["p", "q"]), &s(&["q", "p"]), &t, ExtremaRule::Abs).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        // Extrema of {p, n}: (-3, -2); of {x}: (1, 0).
        let expected = -3.0 / 13f64.sqrt();
        assert_abs_diff_eq!(
            vector_extrema(&s(&["p", "n"]), &s(&["x"]), &t, ExtremaRule::Abs).unwrap(),
            expected,
            epsilon = 1e-12
        );
    }

    #[test]
    fn greedy_known_values() {
        let t = table();
        assert_abs_diff_eq!(greedy_matching(&s(&["x", "y"]), &s(&["y", "x"]), &t).unwrap(), 1.0, epsilon = 1e-12);
        assert_eq!(greedy_matching(&s(&["x"]), &s(&["y"]), &t).unwrap(), 0.0);
        assert_abs_diff_eq!(greedy_matching(&s(&["x", "y"]), &s(&["x"]), &t).unwrap(), 0.75, epsilon = 1e-12);
    }
}
