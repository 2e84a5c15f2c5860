//! How far does output noise move a fingerprint?

use gradprint::audit::{attack_robustness, synthetic_query_set};
use gradprint::clients::{linear_stub_model, StubEmbedder};
use gradprint::fingerprint::ExtractConfig;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let d = 16;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let a = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal) / (d as f64).sqrt());
    let model = linear_stub_model(a, DVector::zeros(d), 0.0, 0);
    let qs = synthetic_query_set(2, 4, 5);
    let points = attack_robustness(
        &model,
        &[0.05, 0.1, 0.15, 0.5, 1.0],
        &qs,
        &StubEmbedder::new(0, d),
        &ExtractConfig::default(),
        7,
    )?;
    for p in points {
        println!("sigma {:.2}: similarity to clean {:.4}", p.sigma, p.similarity);
    }
    Ok(())
}
