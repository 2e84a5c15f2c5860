//! Fingerprint similarity and the provenance decision.

use nalgebra::DMatrix;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CompareError {
    #[error("shape mismatch: {a:?} vs {b:?}")]
    Shape { a: (usize, usize), b: (usize, usize) },
    #[error("matrix has zero variance; correlation is undefined")]
    ZeroVariance,
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("fingerprints are not comparable: {0}")]
    Incomparable(String),
}

/// Similarity between two named fingerprints, in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityScore {
    pub value: f64,
    pub pair: (String, String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecisionConfig {
    pub tau: f64,
}

impl Default for DecisionConfig {
    fn default() -> Self {
        Self { tau: 0.5 }
    }
}

fn row_major(m: &DMatrix<f64>) -> impl Iterator<Item = f64> + '_ {
    (0..m.nrows()).flat_map(move |r| (0..m.ncols()).map(move |c| m[(r, c)]))
}

/// Pearson correlation of the row-major flattened entries, clamped to
/// `[-1, 1]`.
pub fn pearson(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64, CompareError> {
    if a.shape() != b.shape() {
        return Err(CompareError::Shape {
            a: a.shape(),
            b: b.shape(),
        });
    }
    if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
        return Err(CompareError::NonFinite);
    }
    let n = a.len() as f64;
    let mean_a = row_major(a).sum::<f64>() / n;
    let mean_b = row_major(b).sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in row_major(a).zip(row_major(b)) {
        let (dx, dy) = (x - mean_a, y - mean_b);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(CompareError::ZeroVariance);
    }
    // sqrt(s * s) == s exactly, so pearson(a, a) is exactly 1
    Ok((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

/// Flag when the score strictly exceeds the threshold.
pub fn decide(score: f64, cfg: &DecisionConfig) -> bool {
    score > cfg.tau
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn m(rows: usize, v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(rows, v.len() / rows, v)
    }

    #[test]
    fn hand_computed_correlation() {
        let a = m(2, &[1.0, 2.0, 3.0, 4.0]);
        let b = m(2, &[1.0, 2.0, 4.0, 3.0]);
        assert!((pearson(&a, &b).unwrap() - 0.8).abs() < 1e-15);
    }

    #[test]
    fn affine_equivariance() {
        let j = m(2, &[0.3, -1.2, 2.5, 0.7, 0.1, -0.4]);
        assert!((pearson(&j, &j).unwrap() - 1.0).abs() < 1e-12);
        let up = j.map(|x| 2.5 * x + 3.0);
        let down = j.map(|x| -0.5 * x - 1.0);
        assert!((pearson(&j, &up).unwrap() - 1.0).abs() < 1e-12);
        assert!((pearson(&j, &down).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_variance_is_an_error() {
        let c = m(2, &[1.0; 4]);
        let j = m(2, &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(pearson(&c, &j), Err(CompareError::ZeroVariance));
        assert_eq!(pearson(&j, &c), Err(CompareError::ZeroVariance));
        assert!(matches!(pearson(&j, &m(1, &[1.0, 2.0])), Err(CompareError::Shape { .. })));
    }

    #[test]
    fn decision_boundary() {
        let cfg = DecisionConfig { tau: 0.5 };
        assert!(decide(0.9, &cfg));
        assert!(!decide(0.5, &cfg));
        assert!(!decide(-1.0, &DecisionConfig { tau: 0.0 }));
    }

    fn matrix_pair() -> impl Strategy<Value = (DMatrix<f64>, DMatrix<f64>)> {
        (1usize..5, 2usize..5).prop_flat_map(|(r, c)| {
            (
                proptest::collection::vec(-10.0f64..10.0, r * c),
                proptest::collection::vec(-10.0f64..10.0, r * c),
            )
                .prop_map(move |(a, b)| (DMatrix::from_vec(r, c, a), DMatrix::from_vec(r, c, b)))
        })
    }

    proptest! {
        #[test]
        fn symmetric_bounded_and_scale_invariant((a, b) in matrix_pair(), scale in 0.01f64..100.0, tau in -1.0f64..1.0) {
            let (Ok(ab), Ok(ba)) = (pearson(&a, &b), pearson(&b, &a)) else {
                return Ok(());
            };
            prop_assert_eq!(ab, ba);
            prop_assert!(ab.abs() <= 1.0);
            let scaled = &b * scale;
            let cfg = DecisionConfig { tau };
            let sc = pearson(&a, &scaled).unwrap();
            if (ab - tau).abs() > 1e-9 {
                prop_assert_eq!(decide(sc, &cfg), decide(ab, &cfg));
            }
        }
    }
}
