use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::metrics::{auc, mahalanobis_sep, pauc, tpr_at_fpr, LabeledScores};
use super::{AuditError, Result};
use crate::compare::{pearson, CompareError};
use crate::fingerprint::Fingerprint;

/// Pairwise similarities and the metrics derived from them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub auc: f64,
    pub pauc: f64,
    pub tpr_at_1pct_fpr: f64,
    /// `None` when the pooled score variance is zero.
    pub md: Option<f64>,
    pub names: Vec<String>,
    pub lineages: Vec<String>,
    pub pairwise: Vec<Vec<f64>>,
    pub n_positive: usize,
    pub n_negative: usize,
    pub config: BTreeMap<String, String>,
}

impl AuditReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "audit report");
        let _ = writeln!(s, "  models      {}", self.names.len());
        let _ = writeln!(s, "  pairs       {} positive / {} negative", self.n_positive, self.n_negative);
        let _ = writeln!(s, "  AUC         {:.6}", self.auc);
        let _ = writeln!(s, "  pAUC        {:.6}", self.pauc);
        let _ = writeln!(s, "  TPR@1%FPR   {:.6}", self.tpr_at_1pct_fpr);
        match self.md {
            Some(md) => {
                let _ = writeln!(s, "  MD          {md:.6}");
            }
            None => {
                let _ = writeln!(s, "  MD          undefined (zero pooled variance)");
            }
        }
        if !self.config.is_empty() {
            let _ = writeln!(s, "config");
            for (k, v) in &self.config {
                let _ = writeln!(s, "  {k} = {v}");
            }
        }
        let _ = writeln!(s, "pairwise similarity");
        for (i, row) in self.pairwise.iter().enumerate() {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:+.4}")).collect();
            let _ = writeln!(s, "  {:<12} [{}] {}", self.names[i], self.lineages[i], cells.join(" "));
        }
        s
    }
}

/// Score every pair of `(name, lineage, fingerprint)` entries; pairs that
/// share a lineage are positives.
pub fn audit_fingerprints(entries: &[(String, String, Fingerprint)], fpr_max: f64, fpr: f64) -> Result<AuditReport> {
    if entries.len() < 2 {
        return Err(AuditError::Invalid(format!("need at least 2 fingerprints, have {}", entries.len())));
    }
    let reference = &entries[0].2.meta;
    for (name, _, fp) in entries {
        if fp.meta.embedder != reference.embedder || fp.dim() != reference.dim {
            return Err(CompareError::Incomparable(format!(
                "{name} uses embedder {} (dim {}), expected {} (dim {})",
                fp.meta.embedder,
                fp.dim(),
                reference.embedder,
                reference.dim
            ))
            .into());
        }
    }

    let k = entries.len();
    let mut pairwise = vec![vec![1.0; k]; k];
    let mut scores = Vec::new();
    let mut labels = Vec::new();
    for i in 0..k {
        for j in i + 1..k {
            let s = pearson(&entries[i].2.jacobian, &entries[j].2.jacobian)?;
            pairwise[i][j] = s;
            pairwise[j][i] = s;
            scores.push(s);
            labels.push(entries[i].1 == entries[j].1);
        }
    }
    let ls = LabeledScores::new(scores, labels)?;
    let md = match mahalanobis_sep(&ls) {
        Ok(v) => Some(v),
        Err(AuditError::ZeroVariance) => None,
        Err(AuditError::MissingClass { .. }) => None,
        Err(e) => return Err(e),
    };
    let mut config = BTreeMap::new();
    config.insert("fpr_max".into(), fpr_max.to_string());
    config.insert("fpr".into(), fpr.to_string());
    Ok(AuditReport {
        auc: auc(&ls)?,
        pauc: pauc(&ls, fpr_max)?,
        tpr_at_1pct_fpr: tpr_at_fpr(&ls, fpr)?,
        md,
        names: entries.iter().map(|e| e.0.clone()).collect(),
        lineages: entries.iter().map(|e| e.1.clone()).collect(),
        pairwise,
        n_positive: ls.positives().count(),
        n_negative: ls.negatives().count(),
        config,
    })
}
