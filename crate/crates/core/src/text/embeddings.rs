use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::error::{Error, Result};

/// Static word vectors keyed by token, stored contiguously in `f32`.
#[derive(Debug, Clone, Default)]
pub struct EmbeddingTable {
    dim: usize,
    index: HashMap<String, usize>,
    data: Vec<f32>,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("embedding dimension must be >= 1".into()));
        }
        Ok(EmbeddingTable {
            dim,
            ..Default::default()
        })
    }

    /// Inserts or overwrites a vector.
    pub fn insert(&mut self, token: impl Into<String>, vector: &[f32]) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::InvalidArgument(format!(
                "expected dimension {}, got {}",
                self.dim,
                vector.len()
            )));
        }
        let token = token.into();
        match self.index.get(&token) {
            Some(&slot) => self.data[slot * self.dim..(slot + 1) * self.dim].copy_from_slice(vector),
            None => {
                self.index.insert(token, self.index.len());
                self.data.extend_from_slice(vector);
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<&[f32]> {
        self.index
            .get(token)
            .map(|&slot| &self.data[slot * self.dim..(slot + 1) * self.dim])
    }

    /// Vectors of the in-vocabulary tokens, widened to `f64`; out-of-vocabulary tokens are skipped.
    pub fn lookup_all<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<Vec<f64>> {
        tokens
            .iter()
            .filter_map(|t| self.get(t.as_ref()))
            .map(|v| v.iter().map(|&x| f64::from(x)).collect())
            .collect()
    }
}

/// Loads whitespace-separated `token v1 … vd` lines (no header).
pub fn load_embeddings(path: &Path) -> Result<EmbeddingTable> {
    load_embeddings_filtered(path, |_| true)
}

/// Like [`load_embeddings`] but keeps only tokens accepted by `keep`; every line is still validated.
pub fn load_embeddings_filtered(path: &Path, keep: impl Fn(&str) -> bool) -> Result<EmbeddingTable> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_embeddings(BufReader::new(file), keep)
}

pub fn parse_embeddings<R: BufRead>(reader: R, keep: impl Fn(&str) -> bool) -> Result<EmbeddingTable> {
    let mut table: Option<EmbeddingTable> = None;
    let mut buf = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::parse(lineno, e.to_string()))?;
        let mut fields = line.split_whitespace();
        let Some(token) = fields.next() else {
            continue;
        };
        buf.clear();
        for f in fields {
            let x: f32 = f
                .parse()
                .map_err(|_| Error::parse(lineno, format!("non-numeric field {f:?}")))?;
            buf.push(x);
        }
        if buf.is_empty() {
            return Err(Error::parse(lineno, format!("token {token:?} has no vector")));
        }
        let table = match &mut table {
            Some(t) => t,
            None => table.insert(EmbeddingTable::new(buf.len())?),
        };
        if buf.len() != table.dim {
            return Err(Error::parse(
                lineno,
                format!("dimension mismatch: expected {}, got {}", table.dim, buf.len()),
            ));
        }
        if keep(token) {
            table.insert(token, &buf)?;
        }
    }
    table.ok_or_else(|| Error::EmptyInput("no vectors".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn parse(s: &str) -> Result<EmbeddingTable> {
        parse_embeddings(Cursor::new(s), |_| true)
    }

    #[test]
    fn two_lines() {
        let t = parse("a 1 0 0\nb 0 1 0\n").unwrap();
        assert_eq!(t.dim(), 3);
        assert_eq!(t.len(), 2);
        assert_eq!(t.get("b"), Some(&[0.0f32, 1.0, 0.0][..]));
    }

    #[test]
    fn later_duplicates_overwrite() {
        let t = parse("a 1 0\na 0 2\n").unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.get("a"), Some(&[0.0f32, 2.0][..]));
    }

    #[test]
    fn dimension_mismatch_reports_line() {
        let err = parse("a 1 0\nb 1 0 0\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn non_numeric_field() {
        let err = parse("a 1 x\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn empty_file() {
        let err = parse("").unwrap_err();
        assert!(err.to_string().contains("no vectors"));
    }

    #[test]
    fn filter_keeps_subset() {
        let t = parse_embeddings(Cursor::new("a 1 0\nb 0 1\n"), |t| t == "b").unwrap();
        assert_eq!(t.len(), 1);
        assert!(t.get("a").is_none());
    }

    #[test]
    fn lookup_skips_oov() {
        let t = parse("a 1 0\n").unwrap();
        assert_eq!(t.lookup_all(&["a", "zzz"]), vec![vec![1.0, 0.0]]);
    }
}
