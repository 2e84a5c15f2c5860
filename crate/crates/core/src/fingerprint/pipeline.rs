use nalgebra::DMatrix;
use rayon::prelude::*;

use super::ridge::{aggregate, difference_pairs, mean_vector, ridge_jacobian};
use super::{Fingerprint, FingerprintError, FingerprintMeta, Result, RidgeConfig};
use crate::clients::{check_budget, CallKey, ClientError, Embedder, ModelOracle, OracleCall, ResponseSet};
use crate::lexical::{QueryId, QuerySet};
use crate::parallel::run_keyed;

/// Knobs for one fingerprint extraction.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtractConfig {
    /// Repeats per query.
    pub t: usize,
    pub ridge: RidgeConfig,
    /// Maximum number of model calls.
    pub budget: usize,
    pub parallelism: usize,
    pub created_unix: u64,
    /// Free-form label of the model being fingerprinted.
    pub model: String,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        Self {
            t: 20,
            ridge: RidgeConfig::default(),
            budget: 200,
            parallelism: 1,
            created_unix: 0,
            model: String::new(),
        }
    }
}

fn embed_all<E: Embedder + ?Sized>(embedder: &E, texts: &[&str], parallelism: usize) -> Result<Vec<Vec<f64>>> {
    let dim = embedder.dim();
    run_keyed(texts.len(), parallelism, |i| {
        let v = embedder.embed(texts[i])?;
        if v.len() != dim {
            return Err(ClientError::DimensionMismatch {
                expected: dim,
                found: v.len(),
            });
        }
        Ok(v)
    })
    .map_err(|f| FingerprintError::Client(f.error))
}

/// Per-base-query ridge Jacobians from flat-ordered input embeddings and
/// mean output embeddings, aggregated into one matrix.
///
/// Base queries whose perturbations all embed identically to the base are
/// dropped with a warning. Returns the aggregate and the dropped indices.
pub fn estimate_jacobian(
    qs: &QuerySet,
    inputs: &[Vec<f64>],
    outputs: &[Vec<f64>],
    ridge: &RidgeConfig,
) -> Result<(DMatrix<f64>, Vec<usize>)> {
    ridge.validate()?;
    let m = qs.spec.m;
    if inputs.len() != qs.total() || outputs.len() != qs.total() {
        return Err(FingerprintError::Shape(format!(
            "{} queries but {} inputs and {} outputs",
            qs.total(),
            inputs.len(),
            outputs.len()
        )));
    }
    let estimates: Vec<Option<DMatrix<f64>>> = (0..qs.base.len())
        .into_par_iter()
        .map(|i| {
            let at = |id: QueryId| id.flat(m);
            let pert: Vec<usize> = (0..m).map(|j| at(QueryId::perturbed(i, j))).collect();
            let pert_in: Vec<Vec<f64>> = pert.iter().map(|&k| inputs[k].clone()).collect();
            let pert_out: Vec<Vec<f64>> = pert.iter().map(|&k| outputs[k].clone()).collect();
            let b = at(QueryId::base(i));
            let dp = difference_pairs(i, &inputs[b], &pert_in, &outputs[b], &pert_out)?;
            if dp.is_degenerate() {
                log::warn!("base query {i}: all perturbations embed like the base query, dropping it");
                return Ok(None);
            }
            ridge_jacobian(&dp, ridge).map(Some)
        })
        .collect::<Result<_>>()?;

    let dropped: Vec<usize> = estimates
        .iter()
        .enumerate()
        .filter_map(|(i, e)| e.is_none().then_some(i))
        .collect();
    let kept: Vec<DMatrix<f64>> = estimates.into_iter().flatten().collect();
    if kept.is_empty() {
        return Err(FingerprintError::AllDegenerate);
    }
    Ok((aggregate(&kept)?, dropped))
}

fn finish(
    qs: &QuerySet,
    embedder_id: String,
    dim: usize,
    cfg: &ExtractConfig,
    jacobian: DMatrix<f64>,
    dropped: usize,
) -> Result<Fingerprint> {
    Fingerprint::new(
        jacobian,
        FingerprintMeta {
            n: qs.spec.n,
            m: qs.spec.m,
            t: cfg.t,
            alpha: cfg.ridge.alpha,
            n_used: qs.spec.n - dropped,
            embedder: embedder_id,
            dim,
            query_hash: qs.content_hash.clone(),
            model: cfg.model.clone(),
            created_unix: cfg.created_unix,
            version: super::VERSION,
        },
    )
}

/// Full pipeline against a model oracle: query every prompt `t` times,
/// average output embeddings, estimate and aggregate the Jacobians.
///
/// The budget (`n (m + 1) t` calls) is checked before anything is sent.
pub fn extract_fingerprint<O, E>(oracle: &O, embedder: &E, qs: &QuerySet, cfg: &ExtractConfig) -> Result<Fingerprint>
where
    O: ModelOracle + ?Sized,
    E: Embedder + ?Sized,
{
    if cfg.t == 0 {
        return Err(FingerprintError::Empty("repeats per query"));
    }
    cfg.ridge.validate()?;
    let ids = qs.ids();
    let total = ids.len() * cfg.t;
    check_budget(total, cfg.budget)?;
    let dim = embedder.dim();

    let texts: Vec<&str> = ids.iter().map(|&id| qs.text(id)).collect();
    let inputs = embed_all(embedder, &texts, cfg.parallelism)?;

    let t = cfg.t;
    let raw = run_keyed(total, cfg.parallelism, |job| {
        let q = job / t;
        let call = OracleCall {
            key: CallKey {
                query: ids[q],
                repeat: job % t,
            },
            prompt: texts[q],
            input_embedding: &inputs[q],
        };
        let y = oracle.respond(&call)?;
        if y.len() != dim {
            return Err(ClientError::DimensionMismatch {
                expected: dim,
                found: y.len(),
            });
        }
        Ok(y)
    })
    .map_err(|f| {
        FingerprintError::Client(ClientError::Aborted {
            completed: f.completed,
            total,
            source: Box::new(f.error),
        })
    })?;
    let outputs = raw.chunks(t).map(mean_vector).collect::<Result<Vec<_>>>()?;

    let (jacobian, dropped) = estimate_jacobian(qs, &inputs, &outputs, &cfg.ridge)?;
    finish(qs, embedder.id(), dim, cfg, jacobian, dropped.len())
}

/// Text path: embed previously collected responses and estimate.
pub fn fingerprint_from_responses<E: Embedder + ?Sized>(
    responses: &ResponseSet,
    embedder: &E,
    qs: &QuerySet,
    cfg: &ExtractConfig,
) -> Result<Fingerprint> {
    cfg.ridge.validate()?;
    let ids = qs.ids();
    let texts: Vec<&str> = ids.iter().map(|&id| qs.text(id)).collect();
    let inputs = embed_all(embedder, &texts, cfg.parallelism)?;

    let mut outputs = Vec::with_capacity(ids.len());
    for id in &ids {
        let replies = responses
            .get(*id)
            .ok_or_else(|| FingerprintError::Shape(format!("no responses for {id:?}")))?;
        let refs: Vec<&str> = replies.iter().map(String::as_str).collect();
        outputs.push(mean_vector(&embed_all(embedder, &refs, cfg.parallelism)?)?);
    }

    let (jacobian, dropped) = estimate_jacobian(qs, &inputs, &outputs, &cfg.ridge)?;
    let cfg = ExtractConfig {
        t: responses.t,
        ..cfg.clone()
    };
    finish(qs, embedder.id(), embedder.dim(), &cfg, jacobian, dropped.len())
}
