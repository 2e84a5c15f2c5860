//! Audit synthetic model lineages at a few output-noise levels.

use gradprint::audit::{run_synthetic_audit, synth_lineages, synthetic_query_set, AuditConfig};
use gradprint::clients::StubEmbedder;
use gradprint::fingerprint::ExtractConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let d = 16;
    let set = synth_lineages(4, 3, d, 0.1, 0)?;
    let qs = synthetic_query_set(2, 4, 0);
    let emb = StubEmbedder::new(0, d);
    for sigma in [0.0, 0.05, 0.1, 0.15] {
        let cfg = AuditConfig {
            extract: ExtractConfig {
                parallelism: 4,
                ..ExtractConfig::default()
            },
            noise_sigma: sigma,
            noise_seed: 1,
            ..AuditConfig::default()
        };
        let report = run_synthetic_audit(&set, &qs, &emb, &cfg)?;
        println!(
            "sigma {sigma:.2}: auc {:.4} pauc {:.4} tpr@1% {:.3} md {}",
            report.auc,
            report.pauc,
            report.tpr_at_1pct_fpr,
            report.md.map_or("n/a".into(), |m| format!("{m:.2}")),
        );
    }
    Ok(())
}
