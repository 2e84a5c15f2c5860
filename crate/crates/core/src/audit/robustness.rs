use serde::{Deserialize, Serialize};

use super::Result;
use crate::clients::{noise_wrapper, Embedder, ModelOracle};
use crate::compare::pearson;
use crate::fingerprint::{extract_fingerprint, ExtractConfig};
use crate::lexical::QuerySet;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobustnessPoint {
    pub sigma: f64,
    /// Pearson similarity between the clean and the attacked fingerprint.
    pub similarity: f64,
}

/// Fingerprint `oracle` cleanly and under output noise of each `sigma`,
/// using the same queries and configuration throughout.
pub fn attack_robustness<O, E>(
    oracle: &O,
    sigmas: &[f64],
    qs: &QuerySet,
    embedder: &E,
    cfg: &ExtractConfig,
    seed: u64,
) -> Result<Vec<RobustnessPoint>>
where
    O: ModelOracle,
    E: Embedder,
{
    let clean = extract_fingerprint(oracle, embedder, qs, cfg)?;
    sigmas
        .iter()
        .map(|&sigma| {
            let attacked = extract_fingerprint(&noise_wrapper(oracle, sigma, seed), embedder, qs, cfg)?;
            Ok(RobustnessPoint {
                sigma,
                similarity: pearson(&clean.jacobian, &attacked.jacobian)?,
            })
        })
        .collect()
}
