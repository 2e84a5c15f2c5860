//! Access to the two black boxes: a chat model and a sentence embedder.
//!
//! Everything the fingerprint pipeline needs from a model goes through
//! [`ModelOracle`], which maps one call (a prompt and its input embedding)
//! to an output embedding. The text path ([`TextOracle`]) completes the
//! prompt and embeds the reply; vector-level stubs answer directly.

mod collect;
mod http;
mod stubs;

pub use collect::{check_budget, collect_responses, ResponseSet};
pub use http::{
    complete, embed_text, ChatClient, ChatEndpoint, EmbeddingClient, EmbeddingEndpoint,
    DEFAULT_BACKOFF, MAX_RETRIES,
};
pub use stubs::{
    identity_stub_model, linear_stub_model, noise_wrapper, prompt_transform, LinearStubModel,
    NoiseWrapper, PromptTransform, StubChat, StubEmbedder, TextOracle,
};

use crate::lexical::QueryId;

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("transport failure after {attempts} attempt(s): {message}")]
    Transport { attempts: usize, message: String },
    #[error("HTTP status {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error("response content is empty")]
    EmptyContent,
    #[error("embedding has {found} components, expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("query budget exceeded: {required} calls needed, budget is {budget}")]
    BudgetExceeded { required: usize, budget: usize },
    #[error("aborted after {completed}/{total} calls: {source}")]
    Aborted {
        completed: usize,
        total: usize,
        #[source]
        source: Box<ClientError>,
    },
    #[error("invalid endpoint configuration: {0}")]
    InvalidConfig(String),
}

impl ClientError {
    /// The innermost error, looking through [`ClientError::Aborted`].
    pub fn root(&self) -> &ClientError {
        match self {
            ClientError::Aborted { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, ClientError>;

/// One model call: which query, and which of its `t` repeats.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CallKey {
    pub query: QueryId,
    pub repeat: usize,
}

impl CallKey {
    pub(crate) fn coords(&self) -> [u64; 3] {
        [
            self.query.base as u64,
            self.query.variant.map_or(0, |j| j as u64 + 1),
            self.repeat as u64,
        ]
    }
}

pub trait ChatModel: Sync {
    fn complete(&self, prompt: &str, key: CallKey) -> Result<String>;
}

pub trait Embedder: Sync {
    /// Identifier recorded in fingerprint metadata; fingerprints are only
    /// comparable when their embedder ids agree.
    fn id(&self) -> String;
    fn dim(&self) -> usize;
    fn embed(&self, text: &str) -> Result<Vec<f64>>;
}

#[derive(Debug, Clone, Copy)]
pub struct OracleCall<'a> {
    pub key: CallKey,
    pub prompt: &'a str,
    pub input_embedding: &'a [f64],
}

/// Maps a model call to the embedding of the model's response.
pub trait ModelOracle: Sync {
    fn respond(&self, call: &OracleCall<'_>) -> Result<Vec<f64>>;
}

impl<T: ModelOracle + ?Sized> ModelOracle for &T {
    fn respond(&self, call: &OracleCall<'_>) -> Result<Vec<f64>> {
        (**self).respond(call)
    }
}

impl<T: ModelOracle + ?Sized + Send> ModelOracle for Box<T> {
    fn respond(&self, call: &OracleCall<'_>) -> Result<Vec<f64>> {
        (**self).respond(call)
    }
}

impl<T: Embedder + ?Sized> Embedder for &T {
    fn id(&self) -> String {
        (**self).id()
    }
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn embed(&self, text: &str) -> Result<Vec<f64>> {
        (**self).embed(text)
    }
}

impl<T: Embedder + ?Sized + Send> Embedder for Box<T> {
    fn id(&self) -> String {
        (**self).id()
    }
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn embed(&self, text: &str) -> Result<Vec<f64>> {
        (**self).embed(text)
    }
}

impl<T: ChatModel + ?Sized> ChatModel for &T {
    fn complete(&self, prompt: &str, key: CallKey) -> Result<String> {
        (**self).complete(prompt, key)
    }
}
