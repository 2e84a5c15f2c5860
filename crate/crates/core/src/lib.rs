//! Black-box fingerprinting of text models.
//!
//! A model is queried with a handful of prompts and word-substituted
//! variants of them. Sentence embeddings of prompts and responses are
//! differenced and a ridge regression recovers a local Jacobian of the
//! model's embedding-space response. The averaged Jacobian is the model's
//! fingerprint; Pearson correlation between fingerprints decides provenance.
//!
//! Modules:
//! - [`lexical`]: word vectors, tokenization and query-set construction
//! - [`clients`]: chat and embedding endpoints, stubs and attack wrappers
//! - [`fingerprint`]: Jacobian estimation and the fingerprint file format
//! - [`compare`]: similarity scoring and the audit decision
//! - [`audit`]: ROC metrics, synthetic lineages and robustness runs
//! - [`fisherlab`]: Monte Carlo checks of the Fisher-information argument
//! - [`cli`]: the `gradprint` command-line front end

pub mod audit;
pub mod cli;
pub mod clients;
pub mod compare;
pub mod fingerprint;
pub mod fisherlab;
pub mod lexical;
pub mod parallel;
pub mod rng;
