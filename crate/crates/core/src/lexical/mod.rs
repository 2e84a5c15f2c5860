//! Word vectors, tokenization and query-set construction.
//!
//! A query set holds `n` base prompts built from a code corpus plus `m`
//! perturbed variants of each, where a perturbation swaps up to `r` content
//! words for one of their `k` nearest neighbours in a word-vector table.

mod query;
mod tokenize;
mod vectors;

pub use query::{
    build_base_queries, build_query_set, escape_snippet, load_corpus, parse_corpus,
    perturb_query, QueryId, QuerySet, QuerySpec, DEFAULT_PREFIX,
};
pub use tokenize::{detokenize, tokenize, tokenize_spans};
pub use vectors::WordVectorTable;

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum LexicalError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("word-vector file is empty")]
    EmptyFile,
    #[error("line {line}: expected {expected} components, found {found}")]
    DimensionMismatch { line: usize, expected: usize, found: usize },
    #[error("line {line}: cannot parse `{token}` as a number")]
    BadFloat { line: usize, token: String },
    #[error("line {line}: word `{word}` has no vector components")]
    MissingVector { line: usize, word: String },
    #[error("line {line}: word `{word}` has an all-zero or non-finite vector")]
    ZeroVector { line: usize, word: String },
    #[error("invalid word key `{0}`")]
    InvalidWord(String),
    #[error("word `{0}` is not in the table")]
    UnknownWord(String),
    #[error("corpus has {have} snippets, {need} requested")]
    CorpusTooSmall { have: usize, need: usize },
    #[error("no replaceable word in query: {query:?}")]
    NothingToReplace { query: String },
    #[error("invalid query spec: {0}")]
    InvalidSpec(String),
    #[error("query-set document line {line}: {msg}")]
    Format { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, LexicalError>;
