use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::embedding::directional_greedy;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BertScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Greedy cosine matching over contextual token vectors, without idf weighting.
pub fn bertscore(candidate: &[Vec<f64>], reference: &[Vec<f64>]) -> Result<BertScore> {
    if candidate.is_empty() || reference.is_empty() {
        return Err(Error::EmptyInput("BERTScore needs non-empty vector lists".into()));
    }
    let dim = candidate[0].len();
    if candidate.iter().chain(reference).any(|v| v.len() != dim) {
        return Err(Error::InvalidArgument("BERTScore vectors differ in dimension".into()));
    }
    let precision = directional_greedy(candidate, reference)?;
    let recall = directional_greedy(reference, candidate)?;
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(BertScore { precision, recall, f1 })
}

/// One line of a contextual-embedding file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextualEmbedding {
    pub candidate_id: String,
    #[serde(default)]
    pub tokens: Vec<String>,
    pub vectors: Vec<Vec<f64>>,
}

/// Per-response token vectors keyed by candidate id.
#[derive(Debug, Clone, Default)]
pub struct ContextualEmbeddingSet {
    dim: Option<usize>,
    entries: HashMap<String, ContextualEmbedding>,
}

impl ContextualEmbeddingSet {
    pub fn insert(&mut self, entry: ContextualEmbedding) -> Result<()> {
        let id = &entry.candidate_id;
        let Some(first) = entry.vectors.first() else {
            return Err(Error::Validation(format!("{id:?} has no vectors")));
        };
        let dim = *self.dim.get_or_insert(first.len());
        if dim == 0 || entry.vectors.iter().any(|v| v.len() != dim) {
            return Err(Error::Validation(format!(
                "{id:?}: vectors must all have dimension {dim}"
            )));
        }
        if !entry.tokens.is_empty() && entry.tokens.len() != entry.vectors.len() {
            return Err(Error::Validation(format!(
                "{id:?}: {} tokens but {} vectors",
                entry.tokens.len(),
                entry.vectors.len()
            )));
        }
        if self.entries.contains_key(id) {
            return Err(Error::Validation(format!("duplicate candidate id {id:?}")));
        }
        self.entries.insert(id.clone(), entry);
        Ok(())
    }

    pub fn get(&self, candidate_id: &str) -> Option<&ContextualEmbedding> {
        self.entries.get(candidate_id)
    }

    pub fn dim(&self) -> Option<usize> {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn parse<R: BufRead>(reader: R) -> Result<Self> {
        let mut set = ContextualEmbeddingSet::default();
        for (i, line) in reader.lines().enumerate() {
            let lineno = i + 1;
            let line = line.map_err(|e| Error::parse(lineno, e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let entry: ContextualEmbedding =
                serde_json::from_str(&line).map_err(|e| Error::parse(lineno, e.to_string()))?;
            set.insert(entry).map_err(|e| Error::parse(lineno, e.to_string()))?;
        }
        Ok(set)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::parse(BufReader::new(file))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::io::Cursor;

    #[test]
    fn identical_lists() {
        let v = vec![vec![1.0, 2.0], vec![-1.0, 0.5]];
        let s = bertscore(&v, &v).unwrap();
        assert_abs_diff_eq!(s.f1, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.precision, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn orthogonal_lists() {
        let s = bertscore(&[vec![1.0, 0.0]], &[vec![0.0, 1.0]]).unwrap();
        assert_eq!(s.f1, 0.0);
    }

    #[test]
    fn partial_cover() {
        let s = bertscore(&[vec![1.0, 0.0], vec![0.0, 1.0]], &[vec![1.0, 0.0]]).unwrap();
        assert_abs_diff_eq!(s.precision, 0.5);
        assert_abs_diff_eq!(s.recall, 1.0);
        assert_abs_diff_eq!(s.f1, 2.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn errors() {
        assert!(bertscore(&[], &[vec![1.0]]).is_err());
        assert!(bertscore(&[vec![1.0]], &[vec![1.0, 0.0]]).is_err());
    }

    #[test]
    fn parse_file() {
        let text = r#"{"candidate_id":"c:pos0","tokens":["hi","there"],"vectors":[[1,0],[0,1]]}
{"candidate_id":"c:pos1","vectors":[[1,1]]}
"#;
        let set = ContextualEmbeddingSet::parse(Cursor::new(text)).unwrap();
        assert_eq!(set.len(), 2);
        assert_eq!(set.dim(), Some(2));
        assert_eq!(set.get("c:pos0").unwrap().tokens, ["hi", "there"]);
    }

    #[test]
    fn parse_rejects_mixed_dimensions_and_duplicates() {
        let text = "{\"candidate_id\":\"a\",\"vectors\":[[1,0]]}\n{\"candidate_id\":\"b\",\"vectors\":[[1]]}\n";
        let err = ContextualEmbeddingSet::parse(Cursor::new(text)).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        let text = "{\"candidate_id\":\"a\",\"vectors\":[[1]]}\n{\"candidate_id\":\"a\",\"vectors\":[[1]]}\n";
        assert!(ContextualEmbeddingSet::parse(Cursor::new(text)).is_err());
    }
}
