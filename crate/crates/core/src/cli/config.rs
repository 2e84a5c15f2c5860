use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use crate::clients::{ChatEndpoint, EmbeddingEndpoint, DEFAULT_BACKOFF};
use crate::fingerprint::RidgeConfig;
use crate::lexical::{QuerySpec, DEFAULT_PREFIX};

/// Prefix of environment variables that override config-file values.
pub const ENV_PREFIX: &str = "GRADPRINT_";

/// Every setting the commands read. Sources are layered: defaults, then a
/// `key = value` file, then `GRADPRINT_<KEY>` environment variables, then
/// command-line flags.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub n: usize,
    pub m: usize,
    pub r: usize,
    pub k: usize,
    pub words_per_snippet: usize,
    pub prefix: String,
    pub seed: u64,
    pub t: usize,
    pub budget: usize,
    pub alpha: f64,
    pub tau: f64,
    pub chat_base_url: String,
    pub chat_model: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub chat_auth_env: String,
    pub embed_base_url: String,
    pub embed_model: String,
    pub embed_dim: usize,
    pub embed_auth_env: String,
    /// Seed of the local stub embedder used when `embed_base_url` is empty.
    pub embed_seed: u64,
    pub timeout_secs: f64,
    pub retry_backoff_ms: u64,
    pub word_vectors: PathBuf,
    pub corpus: PathBuf,
    pub parallelism: usize,
    pub output_dir: PathBuf,
    /// Output noise applied to stub targets.
    pub noise_sigma: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let spec = QuerySpec::default();
        Self {
            n: spec.n,
            m: spec.m,
            r: spec.r,
            k: spec.k,
            words_per_snippet: spec.words_per_snippet,
            prefix: DEFAULT_PREFIX.to_string(),
            seed: 0,
            t: 20,
            budget: 200,
            alpha: RidgeConfig::default().alpha,
            tau: 0.5,
            chat_base_url: String::new(),
            chat_model: String::new(),
            temperature: 0.7,
            max_tokens: 256,
            chat_auth_env: String::new(),
            embed_base_url: String::new(),
            embed_model: "all-mpnet-base-v2".into(),
            embed_dim: 768,
            embed_auth_env: String::new(),
            embed_seed: 0,
            timeout_secs: 60.0,
            retry_backoff_ms: DEFAULT_BACKOFF.as_millis() as u64,
            word_vectors: PathBuf::new(),
            corpus: PathBuf::new(),
            parallelism: 4,
            output_dir: PathBuf::from("."),
            noise_sigma: 0.0,
        }
    }
}

/// Recognised keys, in file order.
pub const KEYS: &[&str] = &[
    "n",
    "m",
    "r",
    "k",
    "words_per_snippet",
    "prefix",
    "seed",
    "t",
    "budget",
    "alpha",
    "tau",
    "chat_base_url",
    "chat_model",
    "temperature",
    "max_tokens",
    "chat_auth_env",
    "embed_base_url",
    "embed_model",
    "embed_dim",
    "embed_auth_env",
    "embed_seed",
    "timeout_secs",
    "retry_backoff_ms",
    "word_vectors",
    "corpus",
    "parallelism",
    "output_dir",
    "noise_sigma",
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    value
        .trim()
        .parse()
        .map_err(|e| format!("invalid value {value:?} for `{key}`: {e}"))
}

impl RunConfig {
    /// Set one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let key = key.trim().replace('-', "_");
        let k = key.as_str();
        match k {
            "n" => self.n = parse(k, value)?,
            "m" => self.m = parse(k, value)?,
            "r" => self.r = parse(k, value)?,
            "k" => self.k = parse(k, value)?,
            "words_per_snippet" => self.words_per_snippet = parse(k, value)?,
            "prefix" => {
                // JSON string form keeps trailing spaces unambiguous
                self.prefix = if value.trim_start().starts_with('"') {
                    serde_json::from_str(value.trim()).map_err(|e| format!("invalid prefix {value:?}: {e}"))?
                } else {
                    value.to_string()
                }
            }
            "seed" => self.seed = parse(k, value)?,
            "t" => self.t = parse(k, value)?,
            "budget" => self.budget = parse(k, value)?,
            "alpha" => self.alpha = parse(k, value)?,
            "tau" => self.tau = parse(k, value)?,
            "chat_base_url" => self.chat_base_url = value.trim().to_string(),
            "chat_model" => self.chat_model = value.trim().to_string(),
            "temperature" => self.temperature = parse(k, value)?,
            "max_tokens" => self.max_tokens = parse(k, value)?,
            "chat_auth_env" => self.chat_auth_env = value.trim().to_string(),
            "embed_base_url" => self.embed_base_url = value.trim().to_string(),
            "embed_model" => self.embed_model = value.trim().to_string(),
            "embed_dim" => self.embed_dim = parse(k, value)?,
            "embed_auth_env" => self.embed_auth_env = value.trim().to_string(),
            "embed_seed" => self.embed_seed = parse(k, value)?,
            "timeout_secs" => self.timeout_secs = parse(k, value)?,
            "retry_backoff_ms" => self.retry_backoff_ms = parse(k, value)?,
            "word_vectors" => self.word_vectors = PathBuf::from(value.trim()),
            "corpus" => self.corpus = PathBuf::from(value.trim()),
            "parallelism" => self.parallelism = parse(k, value)?,
            "output_dir" => self.output_dir = PathBuf::from(value.trim()),
            "noise_sigma" => self.noise_sigma = parse(k, value)?,
            _ => return Err(format!("unknown config key `{key}`")),
        }
        Ok(())
    }

    /// Apply a `key = value` document; `#` starts a comment line.
    pub fn apply_text(&mut self, text: &str) -> Result<(), String> {
        for (no, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("config line {}: expected `key = value`", no + 1))?;
            self.set(key, value.trim())
                .map_err(|e| format!("config line {}: {e}", no + 1))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        self.apply_text(&text)
    }

    /// Apply `GRADPRINT_<KEY>` variables found through `lookup`.
    pub fn apply_env(&mut self, lookup: impl Fn(&str) -> Option<String>) -> Result<(), String> {
        for key in KEYS {
            let var = format!("{ENV_PREFIX}{}", key.to_uppercase());
            if let Some(v) = lookup(&var) {
                self.set(key, &v).map_err(|e| format!("{var}: {e}"))?;
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), String> {
        self.query_spec()
            .validate()
            .map_err(|e| e.to_string())?;
        RidgeConfig { alpha: self.alpha }
            .validate()
            .map_err(|e| e.to_string())?;
        if self.t == 0 {
            return Err("t must be at least 1".into());
        }
        if self.parallelism == 0 {
            return Err("parallelism must be at least 1".into());
        }
        if self.embed_dim == 0 {
            return Err("embed_dim must be at least 1".into());
        }
        if !(self.tau.is_finite() && (-1.0..=1.0).contains(&self.tau)) {
            return Err(format!("tau must lie in [-1, 1], got {}", self.tau));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(format!("noise_sigma must be >= 0, got {}", self.noise_sigma));
        }
        if !(self.timeout_secs > 0.0 && self.timeout_secs.is_finite()) {
            return Err(format!("timeout_secs must be positive, got {}", self.timeout_secs));
        }
        Ok(())
    }

    /// Model calls one fingerprint costs, `n (m + 1) t`.
    pub fn required_calls(&self) -> usize {
        self.n * (self.m + 1) * self.t
    }

    pub fn query_spec(&self) -> QuerySpec {
        QuerySpec {
            n: self.n,
            m: self.m,
            r: self.r,
            k: self.k,
            words_per_snippet: self.words_per_snippet,
            prefix: self.prefix.clone(),
            seed: self.seed,
        }
    }

    fn auth(name: &str) -> Option<String> {
        (!name.is_empty()).then(|| name.to_string())
    }

    pub fn chat_endpoint(&self) -> ChatEndpoint {
        ChatEndpoint {
            temperature: self.temperature,
            max_tokens: self.max_tokens,
            timeout: Duration::from_secs_f64(self.timeout_secs),
            auth_token_env: Self::auth(&self.chat_auth_env),
            ..ChatEndpoint::new(self.chat_base_url.clone(), self.chat_model.clone())
        }
    }

    pub fn embedding_endpoint(&self) -> EmbeddingEndpoint {
        EmbeddingEndpoint {
            timeout: Duration::from_secs_f64(self.timeout_secs),
            auth_token_env: Self::auth(&self.embed_auth_env),
            ..EmbeddingEndpoint::new(self.embed_base_url.clone(), self.embed_model.clone(), self.embed_dim)
        }
    }

    pub fn backoff(&self) -> Duration {
        Duration::from_millis(self.retry_backoff_ms)
    }
}
