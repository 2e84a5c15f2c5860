//! Recover the Jacobian of a known linear model and save it as a fingerprint.

use gradprint::audit::synthetic_query_set;
use gradprint::clients::{linear_stub_model, StubEmbedder};
use gradprint::compare::pearson;
use gradprint::fingerprint::{extract_fingerprint, load_fingerprint, save_fingerprint, ExtractConfig, RidgeConfig};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let d = 16;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let a = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal) / (d as f64).sqrt());
    let model = linear_stub_model(a.clone(), DVector::zeros(d), 0.0, 0);

    // m >= d makes the ridge system well determined
    let qs = synthetic_query_set(2, 64, 1);
    let cfg = ExtractConfig {
        t: 1,
        ridge: RidgeConfig { alpha: 1e-9 },
        budget: qs.total(),
        model: "linear-demo".into(),
        ..ExtractConfig::default()
    };
    let fp = extract_fingerprint(&model, &StubEmbedder::new(0, d), &qs, &cfg)?;
    let rel = (&fp.jacobian - &a).norm() / a.norm();
    println!("relative error {rel:.3e}, pearson {:.9}", pearson(&fp.jacobian, &a)?);

    let path = std::env::temp_dir().join("linear-demo.zpfp");
    save_fingerprint(&fp, &path)?;
    let back = load_fingerprint(&path)?;
    println!("saved {} ({}x{}), reload equal: {}", path.display(), back.dim(), back.dim(), back == fp);
    Ok(())
}
