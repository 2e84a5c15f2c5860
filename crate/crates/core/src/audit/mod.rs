//! Many-model audits: ROC-style metrics over labeled similarity scores,
//! synthetic lineage benchmarks and output-perturbation robustness.

mod metrics;
mod report;
mod robustness;
mod synth;

pub use metrics::{auc, mahalanobis_sep, pauc, roc_points, tpr_at_fpr, LabeledScores};
pub use report::{audit_fingerprints, AuditReport};
pub use robustness::{attack_robustness, RobustnessPoint};
pub use synth::{run_synthetic_audit, synth_lineages, synthetic_query_set, AuditConfig, LineageSet, SynthModel};

use crate::compare::CompareError;
use crate::fingerprint::FingerprintError;

#[derive(Debug, thiserror::Error)]
pub enum AuditError {
    #[error("scores and labels differ in length ({scores} vs {labels})")]
    LengthMismatch { scores: usize, labels: usize },
    #[error("score {0} is not finite")]
    NonFinite(f64),
    #[error("need at least {need} positive and {need} negative scores, have {positives} and {negatives}")]
    MissingClass { need: usize, positives: usize, negatives: usize },
    #[error("false-positive rate {0} is outside the allowed range")]
    InvalidFpr(f64),
    #[error("pooled variance is zero; separation is undefined")]
    ZeroVariance,
    #[error("invalid audit parameters: {0}")]
    Invalid(String),
    #[error(transparent)]
    Fingerprint(#[from] FingerprintError),
    #[error(transparent)]
    Compare(#[from] CompareError),
}

pub type Result<T> = std::result::Result<T, AuditError>;
