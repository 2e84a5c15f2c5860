use std::cmp::Ordering;

use super::{AuditError, Result};

/// Similarity scores with parallel labels; `true` marks a positive
/// (same-lineage) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledScores {
    scores: Vec<f64>,
    labels: Vec<bool>,
}

impl LabeledScores {
    pub fn new(scores: Vec<f64>, labels: Vec<bool>) -> Result<Self> {
        if scores.len() != labels.len() {
            return Err(AuditError::LengthMismatch {
                scores: scores.len(),
                labels: labels.len(),
            });
        }
        if let Some(bad) = scores.iter().find(|s| !s.is_finite()) {
            return Err(AuditError::NonFinite(*bad));
        }
        Ok(Self { scores, labels })
    }

    pub fn from_classes(positives: &[f64], negatives: &[f64]) -> Result<Self> {
        let scores = positives.iter().chain(negatives).copied().collect();
        let labels = std::iter::repeat_n(true, positives.len())
            .chain(std::iter::repeat_n(false, negatives.len()))
            .collect();
        Self::new(scores, labels)
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    pub fn positives(&self) -> impl Iterator<Item = f64> + '_ {
        self.iter().filter(|(_, l)| *l).map(|(s, _)| s)
    }

    pub fn negatives(&self) -> impl Iterator<Item = f64> + '_ {
        self.iter().filter(|(_, l)| !*l).map(|(s, _)| s)
    }

    fn iter(&self) -> impl Iterator<Item = (f64, bool)> + '_ {
        self.scores.iter().copied().zip(self.labels.iter().copied())
    }

    fn class_counts(&self) -> (usize, usize) {
        let p = self.labels.iter().filter(|l| **l).count();
        (p, self.labels.len() - p)
    }

    fn require(&self, need: usize) -> Result<(usize, usize)> {
        let (p, n) = self.class_counts();
        if p < need || n < need {
            return Err(AuditError::MissingClass {
                need,
                positives: p,
                negatives: n,
            });
        }
        Ok((p, n))
    }

    /// Groups of tied scores in descending score order, as
    /// `(positives, negatives)` counts.
    fn tie_groups_desc(&self) -> Vec<(usize, usize)> {
        let mut sorted: Vec<(f64, bool)> = self.iter().collect();
        sorted.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut groups: Vec<(usize, usize)> = Vec::new();
        let mut prev: Option<f64> = None;
        for (s, l) in sorted {
            if prev.is_none_or(|p| p.total_cmp(&s) != Ordering::Equal) {
                groups.push((0, 0));
                prev = Some(s);
            }
            let g = groups.last_mut().expect("group pushed");
            if l {
                g.0 += 1;
            } else {
                g.1 += 1;
            }
        }
        groups
    }
}

/// Step ROC vertices as cumulative `(false positives, true positives)`
/// counts, starting at `(0, 0)`; tied scores form a single step.
pub fn roc_points(ls: &LabeledScores) -> Vec<(usize, usize)> {
    let mut out = vec![(0, 0)];
    let (mut fp, mut tp) = (0, 0);
    for (p, n) in ls.tie_groups_desc() {
        tp += p;
        fp += n;
        out.push((fp, tp));
    }
    out
}

/// Area under the ROC curve as the Mann-Whitney statistic
/// `P(s+ > s-) + P(s+ = s-) / 2`, computed with one sorted sweep.
pub fn auc(ls: &LabeledScores) -> Result<f64> {
    let (p, n) = ls.require(1)?;
    // Sweeping from the top: each positive in a group beats every negative
    // below it and ties the negatives of its own group.
    let groups = ls.tie_groups_desc();
    let mut negatives_below = n;
    let mut doubled: u128 = 0;
    for (gp, gn) in groups {
        negatives_below -= gn;
        doubled += gp as u128 * (2 * negatives_below + gn) as u128;
    }
    Ok(doubled as f64 / (2 * p as u128 * n as u128) as f64)
}

/// ROC area over `FPR in [0, fpr_max]` divided by `fpr_max`.
pub fn pauc(ls: &LabeledScores, fpr_max: f64) -> Result<f64> {
    if !(fpr_max > 0.0 && fpr_max <= 1.0) {
        return Err(AuditError::InvalidFpr(fpr_max));
    }
    let (p, n) = ls.require(1)?;
    let pts: Vec<(f64, f64)> = roc_points(ls)
        .into_iter()
        .map(|(fp, tp)| (fp as f64 / n as f64, tp as f64 / p as f64))
        .collect();
    let mut area = 0.0;
    for w in pts.windows(2) {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        if x0 >= fpr_max {
            break;
        }
        if x1 <= fpr_max {
            area += (x1 - x0) * (y0 + y1) / 2.0;
        } else {
            let y_cut = y0 + (y1 - y0) * (fpr_max - x0) / (x1 - x0);
            area += (fpr_max - x0) * (y0 + y_cut) / 2.0;
            break;
        }
    }
    Ok(area / fpr_max)
}

/// Highest TPR over thresholds whose empirical FPR does not exceed `fpr`.
pub fn tpr_at_fpr(ls: &LabeledScores, fpr: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&fpr) {
        return Err(AuditError::InvalidFpr(fpr));
    }
    let (p, n) = ls.require(1)?;
    Ok(roc_points(ls)
        .into_iter()
        .filter(|&(fp, _)| fp as f64 / n as f64 <= fpr)
        .map(|(_, tp)| tp as f64 / p as f64)
        .fold(0.0, f64::max))
}

/// `|mean+ - mean-| / s_pooled` with the unbiased pooled variance.
pub fn mahalanobis_sep(ls: &LabeledScores) -> Result<f64> {
    let (p, n) = ls.require(2)?;
    let stats = |it: &mut dyn Iterator<Item = f64>, count: usize| {
        let v: Vec<f64> = it.collect();
        let mean = v.iter().sum::<f64>() / count as f64;
        let ss = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>();
        (mean, ss)
    };
    let (mp, ssp) = stats(&mut ls.positives(), p);
    let (mn, ssn) = stats(&mut ls.negatives(), n);
    let pooled = (ssp + ssn) / (p + n - 2) as f64;
    if pooled <= 0.0 {
        return Err(AuditError::ZeroVariance);
    }
    Ok((mp - mn).abs() / pooled.sqrt())
}
