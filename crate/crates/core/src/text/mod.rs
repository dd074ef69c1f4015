//! Deterministic text primitives shared by every metric.

mod embeddings;
mod lcs;
mod lexicon;
mod ngram;
mod tokenize;
mod vector;

pub use embeddings::{load_embeddings, load_embeddings_filtered, parse_embeddings, EmbeddingTable};
pub use lcs::lcs_length;
pub use lexicon::{Lexicons, PosLexicon, StopwordList, SynonymLexicon, NOUN_TAG};
pub use ngram::{ngrams, NGramCounts};
pub use tokenize::{is_punctuation, is_punctuation_token, tokenize, TokenSeq};
pub use vector::{cosine, mean_vector};

/// Porter stem of a lowercase word.
pub fn stem(word: &str) -> String {
    porter_stemmer::stem(word)
}

#[cfg(test)]
mod tests {
    use super::stem;

    #[test]
    fn porter_reference_traces() {
        assert_eq!(stem("running"), "run");
        assert_eq!(stem("cat"), "cat");
        assert_eq!(stem("caresses"), "caress");
        assert_eq!(stem("cats"), "cat");
        assert_eq!(stem("ponies"), "poni");
        assert_eq!(stem("relational"), "relat");
    }
}
