use gradprint::audit::{
    attack_robustness, auc, mahalanobis_sep, pauc, run_synthetic_audit, synth_lineages, synthetic_query_set,
    tpr_at_fpr, AuditConfig, AuditError, LabeledScores,
};
use gradprint::clients::{linear_stub_model, StubEmbedder};
use gradprint::fingerprint::{ExtractConfig, RidgeConfig};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Labelled scores on a coarse grid so ties are common.
fn random_instance(rng: &mut ChaCha8Rng, len: usize, levels: u32) -> LabeledScores {
    loop {
        let scores: Vec<f64> = (0..len).map(|_| f64::from(rng.random_range(0..levels))).collect();
        let labels: Vec<bool> = (0..len).map(|_| rng.random()).collect();
        if let Ok(ls) = LabeledScores::new(scores, labels) {
            if ls.positives().count() > 0 && ls.negatives().count() > 0 {
                return ls;
            }
        }
    }
}

fn brute_auc(ls: &LabeledScores) -> f64 {
    let pos: Vec<f64> = ls.positives().collect();
    let neg: Vec<f64> = ls.negatives().collect();
    let mut doubled: u128 = 0;
    for p in &pos {
        for n in &neg {
            doubled += if p > n {
                2
            } else if p == n {
                1
            } else {
                0
            };
        }
    }
    doubled as f64 / (2 * pos.len() as u128 * neg.len() as u128) as f64
}

fn scan_tpr(ls: &LabeledScores, fpr: f64) -> f64 {
    let pos: Vec<f64> = ls.positives().collect();
    let neg: Vec<f64> = ls.negatives().collect();
    let mut thresholds: Vec<f64> = ls.scores().to_vec();
    thresholds.push(f64::INFINITY);
    let mut best: f64 = 0.0;
    for th in thresholds {
        let fp = neg.iter().filter(|&&s| s >= th).count();
        let tp = pos.iter().filter(|&&s| s >= th).count();
        if fp as f64 / neg.len() as f64 <= fpr {
            best = best.max(tp as f64 / pos.len() as f64);
        }
    }
    best
}

#[test]
fn sweep_auc_equals_pairwise_count() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for i in 0..100 {
        let len = if i % 10 == 0 { 1000 } else { rng.random_range(2..200) };
        let levels = rng.random_range(2..50);
        let ls = random_instance(&mut rng, len, levels);
        assert_eq!(auc(&ls).unwrap(), brute_auc(&ls));
        assert!((pauc(&ls, 1.0).unwrap() - auc(&ls).unwrap()).abs() <= 1e-9);
    }
}

#[test]
fn tpr_equals_threshold_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..100 {
        let ls = random_instance(&mut rng, 200, 60);
        for fpr in [0.0, 0.01, 0.05, 0.2, 0.5] {
            assert_eq!(tpr_at_fpr(&ls, fpr).unwrap(), scan_tpr(&ls, fpr));
        }
    }
}

proptest! {
    #[test]
    fn rank_metrics_ignore_monotone_transforms(seed in any::<u64>(), len in 4usize..120) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ls = random_instance(&mut rng, len, 20);
        let warped = LabeledScores::new(
            ls.scores().iter().map(|x| x * x * x + 3.0 * x - 7.0).collect(),
            ls.labels().to_vec(),
        ).unwrap();
        prop_assert_eq!(auc(&ls).unwrap(), auc(&warped).unwrap());
        prop_assert_eq!(pauc(&ls, 0.05).unwrap(), pauc(&warped, 0.05).unwrap());
        prop_assert_eq!(tpr_at_fpr(&ls, 0.01).unwrap(), tpr_at_fpr(&warped, 0.01).unwrap());
    }

    #[test]
    fn tpr_is_monotone_in_fpr(seed in any::<u64>(), len in 4usize..150) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ls = random_instance(&mut rng, len, 30);
        let mut prev = 0.0;
        for k in 0..100 {
            let v = tpr_at_fpr(&ls, k as f64 / 100.0).unwrap();
            prop_assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn metrics_stay_in_range(seed in any::<u64>(), len in 2usize..100) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ls = random_instance(&mut rng, len, 10);
        for v in [auc(&ls).unwrap(), pauc(&ls, 0.05).unwrap(), tpr_at_fpr(&ls, 0.01).unwrap()] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }
}

#[test]
fn chance_levels() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let trials = 100;
    let (mut auc_sum, mut pauc_sum) = (0.0, 0.0);
    for _ in 0..trials {
        let pos: Vec<f64> = (0..2000).map(|_| rng.random()).collect();
        let neg: Vec<f64> = (0..2000).map(|_| rng.random()).collect();
        let ls = LabeledScores::from_classes(&pos, &neg).unwrap();
        let a = auc(&ls).unwrap();
        assert!((a - 0.5).abs() < 0.05);
        auc_sum += a;
        pauc_sum += pauc(&ls, 0.05).unwrap();
    }
    assert!((auc_sum / trials as f64 - 0.5).abs() < 0.01);
    assert!((pauc_sum / trials as f64 - 0.025).abs() < 0.003, "{}", pauc_sum / trials as f64);
}

#[test]
fn hand_computed_cases() {
    let tie = LabeledScores::from_classes(&[0.5], &[0.5]).unwrap();
    assert_eq!(auc(&tie).unwrap(), 0.5);
    let flat = LabeledScores::from_classes(&[0.3; 5], &[0.3; 50]).unwrap();
    assert_eq!(tpr_at_fpr(&flat, 0.01).unwrap(), 0.0);
    let md = LabeledScores::from_classes(&[2.0, 4.0], &[0.0, 2.0]).unwrap();
    assert!((mahalanobis_sep(&md).unwrap() - 2f64.sqrt()).abs() < 1e-12);
    let shifted = LabeledScores::from_classes(&[12.0, 14.0], &[10.0, 12.0]).unwrap();
    assert!((mahalanobis_sep(&shifted).unwrap() - 2f64.sqrt()).abs() < 1e-12);
    let degenerate = LabeledScores::from_classes(&[1.0; 3], &[0.0; 3]).unwrap();
    assert!(matches!(mahalanobis_sep(&degenerate), Err(AuditError::ZeroVariance)));
    let reversed = LabeledScores::from_classes(&[0.1, 0.2], &[0.8, 0.9]).unwrap();
    assert_eq!(pauc(&reversed, 0.05).unwrap(), 0.0);
}

fn synth_config(t: usize, noise: f64) -> AuditConfig {
    AuditConfig {
        extract: ExtractConfig {
            t,
            ridge: RidgeConfig { alpha: 1e-3 },
            budget: 10_000,
            parallelism: 2,
            ..ExtractConfig::default()
        },
        noise_sigma: noise,
        noise_seed: 5,
        ..AuditConfig::default()
    }
}

#[test]
fn zero_eps_derivatives_are_copies() {
    let set = synth_lineages(3, 2, 8, 0.0, 4).unwrap();
    let qs = synthetic_query_set(2, 8, 4);
    let report = run_synthetic_audit(&set, &qs, &StubEmbedder::new(0, 8), &synth_config(1, 0.0)).unwrap();
    for i in 0..report.names.len() {
        for j in 0..report.names.len() {
            if report.lineages[i] == report.lineages[j] {
                assert!((report.pairwise[i][j] - 1.0).abs() < 1e-12);
            }
        }
    }
    assert_eq!(report.auc, 1.0);
}

#[test]
fn huge_eps_erases_lineage_signal() {
    let set = synth_lineages(8, 3, 16, 50.0, 6).unwrap();
    let qs = synthetic_query_set(2, 16, 6);
    let report = run_synthetic_audit(&set, &qs, &StubEmbedder::new(0, 16), &synth_config(1, 0.0)).unwrap();
    let (p, n) = (report.n_positive as f64, report.n_negative as f64);
    let z = (report.auc - 0.5) / ((p + n + 1.0) / (12.0 * p * n)).sqrt();
    assert!(z.abs() < 3.0, "auc {} z {z}", report.auc);
}

#[test]
fn modest_eps_separates_lineages() {
    let set = synth_lineages(4, 3, 16, 0.1, 0).unwrap();
    let qs = synthetic_query_set(2, 4, 0);
    let report = run_synthetic_audit(&set, &qs, &StubEmbedder::new(0, 16), &synth_config(1, 0.0)).unwrap();
    assert_eq!(report.auc, 1.0);
    assert_eq!(report.tpr_at_1pct_fpr, 1.0);
    let json: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
    for key in ["auc", "pauc", "tpr_at_1pct_fpr", "md", "pairwise", "config"] {
        assert!(json.get(key).is_some(), "{key}");
    }
}

#[test]
fn robustness_decays_with_noise() {
    let d = 16;
    let qs = synthetic_query_set(2, 4, 1);
    let emb = StubEmbedder::new(0, d);
    let cfg = synth_config(20, 0.0).extract;
    let sigmas = [0.0, 0.05, 0.10, 0.15];
    let mut per_sigma: Vec<Vec<f64>> = vec![Vec::new(); sigmas.len()];
    for trial in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(trial);
        let a = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal) / (d as f64).sqrt());
        let model = linear_stub_model(a, DVector::zeros(d), 0.0, 0);
        let pts = attack_robustness(&model, &sigmas, &qs, &emb, &cfg, 100 + trial).unwrap();
        assert_eq!(pts[0].similarity, 1.0);
        for (k, p) in pts.iter().enumerate() {
            assert!(p.similarity >= 0.85, "sigma {} -> {}", p.sigma, p.similarity);
            per_sigma[k].push(p.similarity);
        }
    }
    let medians: Vec<f64> = per_sigma
        .into_iter()
        .map(|mut v| {
            v.sort_by(f64::total_cmp);
            (v[4] + v[5]) / 2.0
        })
        .collect();
    assert!(medians.windows(2).all(|w| w[1] <= w[0]), "{medians:?}");
}
