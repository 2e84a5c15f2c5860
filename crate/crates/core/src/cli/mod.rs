//! The `gradprint` command-line front end.
//!
//! Exit codes: 0 success (and "not flagged" for `compare`), 1 other
//! failure, 2 bad input or configuration, 3 query budget exceeded,
//! 4 endpoint failure, 5 incomparable fingerprints, 6 zero curvature in
//! `fisher-sim`, 10 flagged by `compare`.

mod config;

pub use config::{RunConfig, ENV_PREFIX, KEYS};

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::audit::{
    attack_robustness, audit_fingerprints, run_synthetic_audit, synth_lineages, synthetic_query_set,
    AuditConfig, AuditError, RobustnessPoint,
};
use crate::clients::{
    check_budget, identity_stub_model, linear_stub_model, noise_wrapper, ChatClient, ClientError,
    EmbeddingClient, Embedder, ModelOracle, StubChat, StubEmbedder, TextOracle,
};
use crate::compare::{decide, pearson, CompareError, DecisionConfig};
use crate::fingerprint::{
    extract_fingerprint, load_fingerprint, save_fingerprint, ExtractConfig, FingerprintError, RidgeConfig,
};
use crate::fisherlab::{verify_theorem, Activation, FisherError, McConfig, ScalarModel};
use crate::lexical::{build_query_set, load_corpus, LexicalError, QuerySet, WordVectorTable};
use crate::rng;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;
pub const EXIT_ENDPOINT: i32 = 4;
pub const EXIT_INCOMPARABLE: i32 = 5;
pub const EXIT_ZERO_CURVATURE: i32 = 6;
pub const EXIT_FLAGGED: i32 = 10;

/// A failure with the exit code it maps to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn new(code: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    fn input(message: impl Into<String>) -> Self {
        Self::new(EXIT_INPUT, message)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<LexicalError> for CliError {
    fn from(e: LexicalError) -> Self {
        Self::input(e.to_string())
    }
}

impl From<ClientError> for CliError {
    fn from(e: ClientError) -> Self {
        let code = match e.root() {
            ClientError::BudgetExceeded { .. } => EXIT_BUDGET,
            ClientError::InvalidConfig(_) => EXIT_INPUT,
            _ => EXIT_ENDPOINT,
        };
        Self::new(code, e.to_string())
    }
}

impl From<FingerprintError> for CliError {
    fn from(e: FingerprintError) -> Self {
        match e {
            FingerprintError::Client(c) => c.into(),
            FingerprintError::AllDegenerate | FingerprintError::NonFinite(_) => Self::new(EXIT_FAILURE, e.to_string()),
            other => Self::input(other.to_string()),
        }
    }
}

impl From<CompareError> for CliError {
    fn from(e: CompareError) -> Self {
        let code = match e {
            CompareError::Incomparable(_) | CompareError::Shape { .. } => EXIT_INCOMPARABLE,
            _ => EXIT_FAILURE,
        };
        Self::new(code, e.to_string())
    }
}

impl From<AuditError> for CliError {
    fn from(e: AuditError) -> Self {
        match e {
            AuditError::Fingerprint(f) => f.into(),
            AuditError::Compare(c) => c.into(),
            AuditError::MissingClass { .. } | AuditError::Invalid(_) | AuditError::InvalidFpr(_) => {
                Self::input(e.to_string())
            }
            other => Self::new(EXIT_FAILURE, other.to_string()),
        }
    }
}

impl From<FisherError> for CliError {
    fn from(e: FisherError) -> Self {
        let code = match e {
            FisherError::ZeroCurvature => EXIT_ZERO_CURVATURE,
            FisherError::InvalidWeight(_)
            | FisherError::InvalidSigma(_)
            | FisherError::NonMonotonic(_)
            | FisherError::InvalidSettings(_)
            | FisherError::NonPositiveVariance(_) => EXIT_INPUT,
            _ => EXIT_FAILURE,
        };
        Self::new(code, e.to_string())
    }
}

type CliResult<T> = Result<T, CliError>;

macro_rules! config_flags {
    ($($field:ident => $help:literal),* $(,)?) => {
        /// Per-key overrides of [`RunConfig`]; highest precedence.
        #[derive(Debug, Default, Clone, clap::Args)]
        pub struct ConfigFlags {
            $(
                #[arg(long, global = true, value_name = "VALUE", help = $help)]
                pub $field: Option<String>,
            )*
        }

        impl ConfigFlags {
            fn apply(&self, cfg: &mut RunConfig) -> Result<(), String> {
                $(
                    if let Some(v) = &self.$field {
                        cfg.set(stringify!($field), v)?;
                    }
                )*
                Ok(())
            }
        }
    };
}

config_flags! {
    n => "Base queries",
    m => "Perturbations per base query",
    r => "Words replaced per perturbation",
    k => "Neighbour candidates per word",
    words_per_snippet => "Words kept from each corpus snippet",
    prefix => "Instruction prefix of every base query",
    seed => "Master seed",
    t => "Repeats per query",
    budget => "Maximum model calls per fingerprint",
    alpha => "Ridge regularization",
    tau => "Similarity threshold for flagging",
    chat_base_url => "Chat endpoint base URL",
    chat_model => "Chat model id",
    temperature => "Sampling temperature",
    max_tokens => "Completion length limit",
    chat_auth_env => "Environment variable holding the chat bearer token",
    embed_base_url => "Embedding endpoint base URL; empty selects the local stub embedder",
    embed_model => "Embedding model id",
    embed_dim => "Embedding dimensionality",
    embed_auth_env => "Environment variable holding the embedding bearer token",
    embed_seed => "Seed of the stub embedder",
    timeout_secs => "Request timeout in seconds",
    retry_backoff_ms => "Base retry backoff in milliseconds",
    word_vectors => "Word-vector file (GloVe text format)",
    corpus => "Code corpus, one escaped snippet per line",
    parallelism => "Concurrent request limit",
    output_dir => "Directory for output files",
    noise_sigma => "Output noise added to stub targets",
}

#[derive(Debug, Parser)]
#[command(name = "gradprint", version, about = "Black-box fingerprinting of text models")]
pub struct Cli {
    /// `key = value` configuration file.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub flags: ConfigFlags,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the base and perturbed queries and write the query-set file.
    BuildQueries {
        /// Output file [default: <output-dir>/queries.txt]
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Query a target and write its fingerprint.
    Fingerprint {
        /// Query-set file written by `build-queries`.
        #[arg(long)]
        queries: PathBuf,
        /// `http`, `stub:linear[:SEED]`, `stub:identity` or `stub:chat[:SEED]`.
        #[arg(long)]
        target: String,
        /// Output file [default: <output-dir>/<target>.zpfp]
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Correlate two fingerprints; exits 10 when flagged.
    Compare { a: PathBuf, b: PathBuf },
    /// Score every pair of a fingerprint directory or a synthetic lineage set.
    Audit {
        /// Directory of `.zpfp` files; a file `L__x.zpfp` belongs to lineage `L`.
        #[arg(long)]
        fingerprints: Option<PathBuf>,
        #[command(flatten)]
        synth: SynthArgs,
    },
    /// Monte Carlo check of the Fisher-information bound.
    FisherSim {
        #[arg(long, default_value = "tanh")]
        activation: Activation,
        /// W
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        weight: f64,
        /// K
        #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
        offset: f64,
        #[arg(long, default_value_t = 0.5)]
        sigma_x: f64,
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
        /// Finite-difference step [default: 1e-4 max(1, |W|)]
        #[arg(long)]
        fd_step: Option<f64>,
        /// Print JSON instead of text.
        #[arg(long)]
        json: bool,
    },
    /// Synthetic audits across noise levels plus a robustness sweep.
    SynthBench {
        #[command(flatten)]
        synth: SynthArgs,
        #[arg(long, value_delimiter = ',', default_value = "0,0.05,0.1,0.15")]
        sigmas: Vec<f64>,
    },
}

#[derive(Debug, Clone, clap::Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 4)]
    pub lineages: usize,
    #[arg(long, default_value_t = 3)]
    pub derivatives: usize,
    /// Embedding dimension of the synthetic models.
    #[arg(long, default_value_t = 16)]
    pub dim: usize,
    /// Derivative perturbation scale.
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
}

/// Parse `args` (including the program name), run, and return the exit
/// code. Errors go to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

/// Defaults, config file, environment, then flags.
pub fn resolve_config(cli: &Cli) -> CliResult<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &cli.config {
        cfg.apply_file(path).map_err(CliError::input)?;
    }
    cfg.apply_env(|k| std::env::var(k).ok()).map_err(CliError::input)?;
    cli.flags.apply(&mut cfg).map_err(CliError::input)?;
    cfg.validate().map_err(CliError::input)?;
    Ok(cfg)
}

fn execute(cli: &Cli) -> CliResult<i32> {
    let cfg = resolve_config(cli)?;
    match &cli.command {
        Command::BuildQueries { out } => cmd_build_queries(&cfg, out.as_deref()),
        Command::Fingerprint { queries, target, out } => cmd_fingerprint(&cfg, queries, target, out.as_deref()),
        Command::Compare { a, b } => cmd_compare(&cfg, a, b),
        Command::Audit { fingerprints, synth } => cmd_audit(&cfg, fingerprints.as_deref(), synth),
        Command::FisherSim {
            activation,
            weight,
            offset,
            sigma_x,
            samples,
            fd_step,
            json,
        } => {
            let sm = ScalarModel::new(*weight, *offset, *sigma_x, *activation)?;
            let mc = McConfig {
                samples: *samples,
                fd_step: *fd_step,
                seed: cfg.seed,
            };
            cmd_fisher_sim(&sm, &mc, *json)
        }
        Command::SynthBench { synth, sigmas } => cmd_synth_bench(&cfg, synth, sigmas),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::input(format!("cannot create {}: {e}", dir.display())))?;
    }
    fs::write(path, bytes).map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display())))
}

fn require_path<'a>(path: &'a Path, key: &str) -> CliResult<&'a Path> {
    if path.as_os_str().is_empty() {
        Err(CliError::input(format!("`{key}` is not set")))
    } else {
        Ok(path)
    }
}

pub fn cmd_build_queries(cfg: &RunConfig, out: Option<&Path>) -> CliResult<i32> {
    let table = WordVectorTable::load(require_path(&cfg.word_vectors, "word_vectors")?)?;
    let corpus = load_corpus(require_path(&cfg.corpus, "corpus")?)?;
    let qs = build_query_set(&corpus, &table, &cfg.query_spec())?;
    let path = out.map_or_else(|| cfg.output_dir.join("queries.txt"), Path::to_path_buf);
    write_file(&path, qs.to_text().as_bytes())?;
    log::info!("wrote {} queries to {}", qs.total(), path.display());
    println!("{}", qs.content_hash);
    Ok(EXIT_OK)
}

fn stub_matrix(dim: usize, seed: u64) -> (DMatrix<f64>, DVector<f64>) {
    let mut rng = rng::stream(seed, "stub-target", &[]);
    let scale = 1.0 / (dim as f64).sqrt();
    let a = DMatrix::from_fn(dim, dim, |_, _| rng.sample::<f64, _>(StandardNormal) * scale);
    let b = DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal) * scale);
    (a, b)
}

fn target_seed(rest: Option<&str>, default: u64) -> CliResult<u64> {
    rest.map_or(Ok(default), |s| {
        s.parse()
            .map_err(|_| CliError::input(format!("bad seed `{s}` in target")))
    })
}

fn build_embedder(cfg: &RunConfig) -> CliResult<Box<dyn Embedder + Send>> {
    if cfg.embed_base_url.is_empty() {
        Ok(Box::new(StubEmbedder::new(cfg.embed_seed, cfg.embed_dim)))
    } else {
        Ok(Box::new(EmbeddingClient::new(cfg.embedding_endpoint())?.with_backoff(cfg.backoff())))
    }
}

fn creation_time(stub: bool) -> u64 {
    if let Some(t) = std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|v| v.trim().parse().ok()) {
        return t;
    }
    if stub {
        0
    } else {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_secs())
    }
}

fn sanitize(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

pub fn cmd_fingerprint(cfg: &RunConfig, queries: &Path, target: &str, out: Option<&Path>) -> CliResult<i32> {
    let text = fs::read_to_string(queries)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", queries.display())))?;
    let qs = QuerySet::from_text(&text)?;
    check_budget(qs.total() * cfg.t, cfg.budget)?;

    let embedder = build_embedder(cfg)?;
    let dim = embedder.dim();
    let (kind, rest) = match target.split_once(':') {
        Some(("stub", r)) => match r.split_once(':') {
            Some((k, s)) => (k, Some(s)),
            None => (r, None),
        },
        _ => (target, None),
    };
    let noise_seed = rng::derive_seed(cfg.seed, "target-noise", &[]);
    let with_noise = |o: Box<dyn ModelOracle + Send>| -> Box<dyn ModelOracle + Send> {
        if cfg.noise_sigma > 0.0 {
            Box::new(noise_wrapper(o, cfg.noise_sigma, noise_seed))
        } else {
            o
        }
    };
    let (oracle, label, stub): (Box<dyn ModelOracle + Send>, String, bool) = match (target, kind) {
        ("http", _) => {
            let chat = ChatClient::new(cfg.chat_endpoint())?.with_backoff(cfg.backoff());
            let label = cfg.chat_model.clone();
            (Box::new(TextOracle { chat, embedder: &*embedder }), label, false)
        }
        (_, "linear") => {
            let (a, b) = stub_matrix(dim, target_seed(rest, cfg.seed)?);
            (with_noise(Box::new(linear_stub_model(a, b, 0.0, 0))), target.to_string(), true)
        }
        (_, "identity") if rest.is_none() => (with_noise(Box::new(identity_stub_model(dim))), target.to_string(), true),
        (_, "chat") => {
            let chat = StubChat {
                seed: target_seed(rest, cfg.seed)?,
            };
            (Box::new(TextOracle { chat, embedder: &*embedder }), target.to_string(), true)
        }
        _ => {
            return Err(CliError::input(format!(
                "unknown target `{target}` (http, stub:linear[:SEED], stub:identity, stub:chat[:SEED])"
            )))
        }
    };

    let extract = ExtractConfig {
        t: cfg.t,
        ridge: RidgeConfig { alpha: cfg.alpha },
        budget: cfg.budget,
        parallelism: cfg.parallelism,
        created_unix: creation_time(stub),
        model: label.clone(),
    };
    let fp = extract_fingerprint(&oracle, &*embedder, &qs, &extract)?;
    let path = out.map_or_else(|| cfg.output_dir.join(format!("{}.zpfp", sanitize(&label))), Path::to_path_buf);
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::input(format!("cannot create {}: {e}", dir.display())))?;
    }
    save_fingerprint(&fp, &path)?;
    if fp.meta.n_used < fp.meta.n {
        log::warn!("{} of {} base queries were degenerate", fp.meta.n - fp.meta.n_used, fp.meta.n);
    }
    println!("{}", path.display());
    Ok(EXIT_OK)
}

pub fn cmd_compare(cfg: &RunConfig, a: &Path, b: &Path) -> CliResult<i32> {
    let fa = load_fingerprint(a)?;
    let fb = load_fingerprint(b)?;
    if fa.meta.embedder != fb.meta.embedder {
        return Err(CompareError::Incomparable(format!(
            "embedder `{}` vs `{}`",
            fa.meta.embedder, fb.meta.embedder
        ))
        .into());
    }
    let score = pearson(&fa.jacobian, &fb.jacobian)?;
    let flagged = decide(score, &DecisionConfig { tau: cfg.tau });
    println!("similarity {score:.6}");
    println!("tau {}", cfg.tau);
    println!("verdict {}", if flagged { "flagged" } else { "not flagged" });
    Ok(if flagged { EXIT_FLAGGED } else { EXIT_OK })
}

fn lineage_of(stem: &str) -> String {
    stem.split_once("__").map_or(stem, |(l, _)| l).to_string()
}

fn audit_config(cfg: &RunConfig) -> AuditConfig {
    AuditConfig {
        extract: ExtractConfig {
            t: cfg.t,
            ridge: RidgeConfig { alpha: cfg.alpha },
            budget: cfg.budget,
            parallelism: cfg.parallelism,
            created_unix: 0,
            model: String::new(),
        },
        noise_sigma: cfg.noise_sigma,
        noise_seed: rng::derive_seed(cfg.seed, "audit-noise", &[]),
        ..AuditConfig::default()
    }
}

pub fn cmd_audit(cfg: &RunConfig, dir: Option<&Path>, synth: &SynthArgs) -> CliResult<i32> {
    let defaults = AuditConfig::default();
    let report = match dir {
        Some(dir) => {
            let entries = fs::read_dir(dir).map_err(|e| CliError::input(format!("cannot read {}: {e}", dir.display())))?;
            let mut paths: Vec<PathBuf> = entries
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "zpfp"))
                .collect();
            if paths.is_empty() {
                return Err(CliError::input(format!("no .zpfp files in {}", dir.display())));
            }
            paths.sort();
            let mut fps = Vec::with_capacity(paths.len());
            for p in paths {
                let stem = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                fps.push((stem.clone(), lineage_of(&stem), load_fingerprint(&p)?));
            }
            audit_fingerprints(&fps, defaults.fpr_max, defaults.fpr)?
        }
        None => {
            let set = synth_lineages(synth.lineages, synth.derivatives, synth.dim, synth.eps, cfg.seed)?;
            let qs = synthetic_query_set(cfg.n, cfg.m, cfg.seed);
            check_budget(qs.total() * cfg.t, cfg.budget)?;
            let embedder = StubEmbedder::new(cfg.embed_seed, synth.dim);
            run_synthetic_audit(&set, &qs, &embedder, &audit_config(cfg))?
        }
    };
    write_file(&cfg.output_dir.join("audit.json"), report.to_json().as_bytes())?;
    let text = report.to_text();
    write_file(&cfg.output_dir.join("audit.txt"), text.as_bytes())?;
    print!("{text}");
    Ok(EXIT_OK)
}

pub fn cmd_fisher_sim(sm: &ScalarModel, mc: &McConfig, json: bool) -> CliResult<i32> {
    let report = verify_theorem(sm, mc)?;
    if json {
        println!("{}", report.to_json());
    } else {
        print!("{}", report.to_text());
    }
    let violated = report.conclusive && !(report.bound_holds && report.dpi_holds);
    Ok(if violated { EXIT_FAILURE } else { EXIT_OK })
}

#[derive(Debug, Serialize)]
struct BenchRow {
    noise_sigma: f64,
    auc: f64,
    pauc: f64,
    tpr_at_1pct_fpr: f64,
    md: Option<f64>,
}

#[derive(Debug, Serialize)]
struct BenchReport {
    lineages: usize,
    derivatives: usize,
    dim: usize,
    eps: f64,
    n: usize,
    m: usize,
    t: usize,
    seed: u64,
    audits: Vec<BenchRow>,
    robustness: Vec<RobustnessPoint>,
}

pub fn cmd_synth_bench(cfg: &RunConfig, synth: &SynthArgs, sigmas: &[f64]) -> CliResult<i32> {
    if sigmas.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
        return Err(CliError::input("noise levels must be finite and >= 0"));
    }
    let set = synth_lineages(synth.lineages, synth.derivatives, synth.dim, synth.eps, cfg.seed)?;
    let qs = synthetic_query_set(cfg.n, cfg.m, cfg.seed);
    check_budget(qs.total() * cfg.t, cfg.budget)?;
    let embedder = StubEmbedder::new(cfg.embed_seed, synth.dim);
    let base = audit_config(cfg);

    let mut audits = Vec::with_capacity(sigmas.len());
    for &sigma in sigmas {
        let r = run_synthetic_audit(
            &set,
            &qs,
            &embedder,
            &AuditConfig {
                noise_sigma: sigma,
                ..base.clone()
            },
        )?;
        audits.push(BenchRow {
            noise_sigma: sigma,
            auc: r.auc,
            pauc: r.pauc,
            tpr_at_1pct_fpr: r.tpr_at_1pct_fpr,
            md: r.md,
        });
    }
    let attack: Vec<f64> = sigmas.iter().copied().filter(|s| *s > 0.0).collect();
    let robustness = attack_robustness(
        &set.models[0].model,
        &attack,
        &qs,
        &embedder,
        &base.extract,
        rng::derive_seed(cfg.seed, "bench-attack", &[]),
    )?;

    let report = BenchReport {
        lineages: synth.lineages,
        derivatives: synth.derivatives,
        dim: synth.dim,
        eps: synth.eps,
        n: cfg.n,
        m: cfg.m,
        t: cfg.t,
        seed: cfg.seed,
        audits,
        robustness,
    };
    let json = serde_json::to_string_pretty(&report).expect("bench report serializes");
    write_file(&cfg.output_dir.join("synth_bench.json"), json.as_bytes())?;

    println!("noise    AUC       pAUC      TPR@1%    MD");
    for row in &report.audits {
        let md = row.md.map_or_else(|| "-".to_string(), |v| format!("{v:.3}"));
        println!(
            "{:<8} {:<9.4} {:<9.4} {:<9.4} {md}",
            row.noise_sigma, row.auc, row.pauc, row.tpr_at_1pct_fpr
        );
    }
    println!("attack   similarity");
    for p in &report.robustness {
        println!("{:<8} {:.4}", p.sigma, p.similarity);
    }
    Ok(EXIT_OK)
}
