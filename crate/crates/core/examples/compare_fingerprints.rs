//! Fingerprint a model, a fine-tuned derivative and an unrelated model over
//! the text path, then compare them.

use gradprint::audit::synthetic_query_set;
use gradprint::clients::{linear_stub_model, StubEmbedder};
use gradprint::compare::{decide, pearson, DecisionConfig};
use gradprint::fingerprint::{extract_fingerprint, ExtractConfig};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn gaussian(d: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal) / (d as f64).sqrt())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let d = 32;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let base = gaussian(d, &mut rng);
    let derived = &base + gaussian(d, &mut rng) * 0.1;
    let other = gaussian(d, &mut rng);

    let qs = synthetic_query_set(2, 4, 9);
    let emb = StubEmbedder::new(0, d);
    let cfg = ExtractConfig::default();
    let fp = |a: &DMatrix<f64>, seed| {
        extract_fingerprint(&linear_stub_model(a.clone(), DVector::zeros(d), 0.05, seed), &emb, &qs, &cfg)
    };
    let (f0, f1, f2) = (fp(&base, 1)?, fp(&derived, 2)?, fp(&other, 3)?);

    let decision = DecisionConfig::default();
    for (label, b) in [("derivative", &f1), ("unrelated", &f2)] {
        let s = pearson(&f0.jacobian, &b.jacobian)?;
        let verdict = if decide(s, &decision) { "flagged" } else { "not flagged" };
        println!("base vs {label}: similarity {s:.4} -> {verdict}");
    }
    Ok(())
}
