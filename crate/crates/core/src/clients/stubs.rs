//! Deterministic local stand-ins for the black boxes.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use sha2::{Digest, Sha256};

use super::{CallKey, ChatModel, ClientError, Embedder, ModelOracle, OracleCall, Result};
use crate::rng;

/// Maps text to a unit-norm pseudo-random vector keyed by `(seed, text)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StubEmbedder {
    pub seed: u64,
    pub dim: usize,
}

impl StubEmbedder {
    pub fn new(seed: u64, dim: usize) -> Self {
        Self { seed, dim }
    }
}

impl Embedder for StubEmbedder {
    fn id(&self) -> String {
        format!("stub:{}:{}", self.seed, self.dim)
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>> {
        let mut h = Sha256::new();
        h.update(self.seed.to_le_bytes());
        h.update(text.as_bytes());
        let mut rng = ChaCha8Rng::from_seed(h.finalize().into());
        loop {
            let v: Vec<f64> = (0..self.dim).map(|_| rng.sample(StandardNormal)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 {
                return Ok(v.into_iter().map(|x| x / norm).collect());
            }
        }
    }
}

/// A chat stub that echoes the prompt with a per-call tag, so repeats of
/// one prompt produce distinct but reproducible replies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StubChat {
    pub seed: u64,
}

impl ChatModel for StubChat {
    fn complete(&self, prompt: &str, key: CallKey) -> Result<String> {
        let tag = rng::derive_seed(self.seed, "stub-chat", &key.coords());
        Ok(format!("{prompt} #{tag:016x}"))
    }
}

/// Vector-level model: `A e_x + b + N(0, sigma^2 I)`.
#[derive(Debug, Clone)]
pub struct LinearStubModel {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl LinearStubModel {
    pub fn dim(&self) -> usize {
        self.a.nrows()
    }
}

pub fn linear_stub_model(a: DMatrix<f64>, b: DVector<f64>, noise_sigma: f64, seed: u64) -> LinearStubModel {
    assert_eq!(a.nrows(), b.len(), "bias length must match output dimension");
    assert!(noise_sigma >= 0.0, "noise_sigma must be non-negative");
    LinearStubModel {
        a,
        b,
        noise_sigma,
        seed,
    }
}

/// Output embedding equals input embedding.
pub fn identity_stub_model(dim: usize) -> LinearStubModel {
    linear_stub_model(DMatrix::identity(dim, dim), DVector::zeros(dim), 0.0, 0)
}

impl ModelOracle for LinearStubModel {
    fn respond(&self, call: &OracleCall<'_>) -> Result<Vec<f64>> {
        let x = call.input_embedding;
        if x.len() != self.a.ncols() {
            return Err(ClientError::DimensionMismatch {
                expected: self.a.ncols(),
                found: x.len(),
            });
        }
        let mut out: Vec<f64> = (0..self.a.nrows())
            .map(|r| {
                let mut acc = self.b[r];
                for (c, xc) in x.iter().enumerate() {
                    acc += self.a[(r, c)] * xc;
                }
                acc
            })
            .collect();
        if self.noise_sigma > 0.0 {
            let mut rng = rng::stream(self.seed, "linear-stub", &call.key.coords());
            for v in &mut out {
                *v += self.noise_sigma * rng.sample::<f64, _>(StandardNormal);
            }
        }
        Ok(out)
    }
}

/// Output-perturbation attack: i.i.d. Gaussian noise on the inner oracle's
/// output embedding.
#[derive(Debug, Clone)]
pub struct NoiseWrapper<O> {
    pub inner: O,
    pub sigma: f64,
    pub seed: u64,
}

pub fn noise_wrapper<O: ModelOracle>(inner: O, sigma: f64, seed: u64) -> NoiseWrapper<O> {
    assert!(sigma >= 0.0, "sigma must be non-negative");
    NoiseWrapper { inner, sigma, seed }
}

impl<O: ModelOracle> ModelOracle for NoiseWrapper<O> {
    fn respond(&self, call: &OracleCall<'_>) -> Result<Vec<f64>> {
        let mut out = self.inner.respond(call)?;
        if self.sigma > 0.0 {
            let mut rng = rng::stream(self.seed, "noise-attack", &call.key.coords());
            for v in &mut out {
                *v += self.sigma * rng.sample::<f64, _>(StandardNormal);
            }
        }
        Ok(out)
    }
}

/// Text path: complete the prompt, then embed the reply.
#[derive(Debug)]
pub struct TextOracle<C, E> {
    pub chat: C,
    pub embedder: E,
}

impl<C: ChatModel, E: Embedder> ModelOracle for TextOracle<C, E> {
    fn respond(&self, call: &OracleCall<'_>) -> Result<Vec<f64>> {
        let reply = self.chat.complete(call.prompt, call.key)?;
        self.embedder.embed(&reply)
    }
}

/// Rewrites every prompt before it reaches the chat model, e.g. an
/// attacker-side paraphraser. The auditor still embeds the original prompt.
pub struct PromptTransform<C, F> {
    pub inner: C,
    pub transform: F,
}

pub fn prompt_transform<C, F>(inner: C, transform: F) -> PromptTransform<C, F>
where
    C: ChatModel,
    F: Fn(&str, CallKey) -> String + Sync,
{
    PromptTransform { inner, transform }
}

impl<C: ChatModel, F: Fn(&str, CallKey) -> String + Sync> ChatModel for PromptTransform<C, F> {
    fn complete(&self, prompt: &str, key: CallKey) -> Result<String> {
        self.inner.complete(&(self.transform)(prompt, key), key)
    }
}
