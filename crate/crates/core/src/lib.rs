//! Evaluation toolkit for open-domain dialogue responses.
//!
//! The crate bundles the pieces needed to benchmark response-scoring metrics
//! against multi-reference dialogue data:
//!
//! * [`corpus`]: dataset model, JSONL ingestion, random-negative sampling,
//!   splitting and construction of evaluation instances.
//! * [`text`]: tokenization, n-grams, longest common subsequence, stemming,
//!   word vectors and lexicons.
//! * [`metrics`]: BLEU, deltaBLEU, ROUGE-L, METEOR, embedding metrics,
//!   BERTScore matching and multi-reference aggregation.
//! * [`mutate`]: synthetic perturbations of relevant responses.
//! * [`stats`]: point-biserial correlation, threshold search, accuracy,
//!   rank correlations and significance tests.
//! * [`conicity`]: spread analysis of response embeddings.
//! * [`io`]: score, rating and embedding file formats.

pub mod conicity;
pub mod corpus;
pub mod error;
pub mod io;
pub mod metrics;
pub mod mutate;
pub mod seed;
pub mod stats;
pub mod text;

pub use error::{Error, Result};
