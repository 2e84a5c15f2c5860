use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::report::audit_fingerprints;
use super::{AuditError, AuditReport, Result};
use crate::clients::{linear_stub_model, noise_wrapper, Embedder, LinearStubModel, ModelOracle};
use crate::fingerprint::{extract_fingerprint, ExtractConfig};
use crate::lexical::{QuerySet, QuerySpec};
use crate::rng;

/// One synthetic model: member 0 of a lineage is its source, members
/// `1..=D` are derivatives.
#[derive(Debug, Clone)]
pub struct SynthModel {
    pub lineage: usize,
    pub member: usize,
    pub model: LinearStubModel,
}

impl SynthModel {
    pub fn name(&self) -> String {
        format!("L{}-{}", self.lineage, self.member)
    }
}

#[derive(Debug, Clone)]
pub struct LineageSet {
    pub models: Vec<SynthModel>,
    pub eps: f64,
}

impl LineageSet {
    /// `(i, j, same_lineage)` for every unordered model pair `i < j`.
    pub fn pairs(&self) -> Vec<(usize, usize, bool)> {
        let mut out = Vec::new();
        for i in 0..self.models.len() {
            for j in i + 1..self.models.len() {
                out.push((i, j, self.models[i].lineage == self.models[j].lineage));
            }
        }
        out
    }
}

fn gaussian_matrix(dim: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let scale = 1.0 / (dim as f64).sqrt();
    DMatrix::from_fn(dim, dim, |_, _| scale * rng.sample::<f64, _>(StandardNormal))
}

/// `lineages` independent random linear maps with entries `N(0, 1/dim)`,
/// each with `derivatives` perturbed copies `A + eps * P`.
pub fn synth_lineages(lineages: usize, derivatives: usize, dim: usize, eps: f64, seed: u64) -> Result<LineageSet> {
    if lineages < 2 {
        return Err(AuditError::Invalid("need at least 2 lineages".into()));
    }
    if derivatives < 1 {
        return Err(AuditError::Invalid("need at least 1 derivative per lineage".into()));
    }
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(AuditError::Invalid(format!("eps must be >= 0, got {eps}")));
    }
    if dim == 0 {
        return Err(AuditError::Invalid("dim must be at least 1".into()));
    }
    let mut models = Vec::with_capacity(lineages * (derivatives + 1));
    for l in 0..lineages {
        let source = gaussian_matrix(dim, &mut rng::stream(seed, "lineage-source", &[l as u64]));
        for member in 0..=derivatives {
            let a = if member == 0 {
                source.clone()
            } else {
                let p = gaussian_matrix(dim, &mut rng::stream(seed, "lineage-derivative", &[l as u64, member as u64]));
                &source + p * eps
            };
            let noise_seed = rng::derive_seed(seed, "lineage-noise", &[l as u64, member as u64]);
            models.push(SynthModel {
                lineage: l,
                member,
                model: linear_stub_model(a, DVector::zeros(dim), 0.0, noise_seed),
            });
        }
    }
    Ok(LineageSet { models, eps })
}

/// A query set of distinct placeholder prompts; perturbation `j` of base
/// `i` differs from it in one token.
pub fn synthetic_query_set(n: usize, m: usize, seed: u64) -> QuerySet {
    let spec = QuerySpec {
        n,
        m,
        r: 1,
        seed,
        ..QuerySpec::default()
    };
    let base = (0..n).map(|i| format!("probe {i} anchor")).collect();
    let perturbed = (0..n)
        .map(|i| (0..m).map(|j| format!("probe {i} variant{j}")).collect())
        .collect();
    QuerySet::from_parts(spec, base, perturbed).expect("shape matches spec")
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditConfig {
    pub extract: ExtractConfig,
    /// Output noise added to every model's response embedding.
    pub noise_sigma: f64,
    pub noise_seed: u64,
    pub fpr_max: f64,
    pub fpr: f64,
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self {
            extract: ExtractConfig::default(),
            noise_sigma: 0.0,
            noise_seed: 0,
            fpr_max: 0.05,
            fpr: 0.01,
        }
    }
}

/// Fingerprint every model of `set` and score all pairs.
pub fn run_synthetic_audit<E: Embedder>(
    set: &LineageSet,
    qs: &QuerySet,
    embedder: &E,
    cfg: &AuditConfig,
) -> Result<AuditReport> {
    let fps = set
        .models
        .par_iter()
        .enumerate()
        .map(|(k, sm)| {
            let extract = ExtractConfig {
                model: sm.name(),
                ..cfg.extract.clone()
            };
            let seed = rng::derive_seed(cfg.noise_seed, "audit-noise", &[k as u64]);
            let oracle: Box<dyn ModelOracle + Send> = if cfg.noise_sigma > 0.0 {
                Box::new(noise_wrapper(sm.model.clone(), cfg.noise_sigma, seed))
            } else {
                Box::new(sm.model.clone())
            };
            Ok((
                sm.name(),
                format!("L{}", sm.lineage),
                extract_fingerprint(&oracle, embedder, qs, &extract)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = audit_fingerprints(&fps, cfg.fpr_max, cfg.fpr)?;
    let c = &mut report.config;
    c.insert("lineages".into(), (set.models.iter().map(|m| m.lineage).max().unwrap_or(0) + 1).to_string());
    c.insert("models".into(), set.models.len().to_string());
    c.insert("eps".into(), set.eps.to_string());
    c.insert("noise_sigma".into(), cfg.noise_sigma.to_string());
    c.insert("n".into(), qs.spec.n.to_string());
    c.insert("m".into(), qs.spec.m.to_string());
    c.insert("t".into(), cfg.extract.t.to_string());
    c.insert("alpha".into(), cfg.extract.ridge.alpha.to_string());
    c.insert("embedder".into(), embedder.id());
    Ok(report)
}
