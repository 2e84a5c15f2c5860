use gradprint::fingerprint::{
    aggregate, difference_pairs, ridge_dual, ridge_jacobian, ridge_objective, ridge_primal, DifferencePairs,
    RidgeConfig,
};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

/// Gauss-Jordan with partial pivoting on plain vectors; returns `a^-1 b`.
fn naive_solve(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut aug: Vec<Vec<f64>> = (0..n).map(|i| [a[i].clone(), b[i].clone()].concat()).collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| aug[x][col].abs().partial_cmp(&aug[y][col].abs()).unwrap())
            .unwrap();
        aug.swap(col, pivot);
        let p = aug[col][col];
        for v in aug[col].iter_mut() {
            *v /= p;
        }
        for row in 0..n {
            if row != col {
                let f = aug[row][col];
                let src = aug[col].clone();
                for (v, s) in aug[row].iter_mut().zip(&src) {
                    *v -= f * s;
                }
            }
        }
    }
    aug.into_iter().map(|r| r[n..].to_vec()).collect()
}

/// `dyᵀ dx (dxᵀ dx + alpha I)^-1` through explicit loops.
fn loop_oracle(dx: &DMatrix<f64>, dy: &DMatrix<f64>, alpha: f64) -> DMatrix<f64> {
    let (m, d) = dx.shape();
    let e = dy.ncols();
    let gram: Vec<Vec<f64>> = (0..d)
        .map(|a| {
            (0..d)
                .map(|b| (0..m).map(|j| dx[(j, a)] * dx[(j, b)]).sum::<f64>() + if a == b { alpha } else { 0.0 })
                .collect()
        })
        .collect();
    // gram is symmetric, so J^T = gram^-1 (dxᵀ dy)
    let cross: Vec<Vec<f64>> = (0..d)
        .map(|a| (0..e).map(|c| (0..m).map(|j| dx[(j, a)] * dy[(j, c)]).sum()).collect())
        .collect();
    let jt = naive_solve(&gram, &cross);
    DMatrix::from_fn(e, d, |r, c| jt[c][r])
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |a, v| a.max(v.abs()))
}

fn close(a: &DMatrix<f64>, b: &DMatrix<f64>, rel: f64) -> bool {
    let scale = max_abs(a).max(max_abs(b)).max(1e-300);
    a.shape() == b.shape() && a.iter().zip(b.iter()).all(|(x, y)| (x - y).abs() <= rel * scale)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn primal_and_dual_agree(m in 1usize..=8, d in 2usize..=32, a in 0usize..3, seed in any::<u64>()) {
        let alpha = [1e-6, 1e-3, 1.0][a];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dx = random_matrix(m, d, &mut rng);
        let dy = random_matrix(m, d, &mut rng);
        let p = ridge_primal(&dx, &dy, alpha).unwrap();
        let q = ridge_dual(&dx, &dy, alpha).unwrap();
        prop_assert!(close(&p, &q, 1e-8), "m={} d={} alpha={}", m, d, alpha);
    }

    #[test]
    fn matches_loop_oracle(m in 1usize..=10, d in 2usize..=10, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dx = random_matrix(m, d, &mut rng);
        let dy = random_matrix(m, d, &mut rng);
        let dp = DifferencePairs { base_index: 0, dx: dx.clone(), dy: dy.clone() };
        let j = ridge_jacobian(&dp, &RidgeConfig { alpha: 1e-2 }).unwrap();
        prop_assert!(close(&j, &loop_oracle(&dx, &dy, 1e-2), 1e-9));
    }

    #[test]
    fn stronger_regularization_shrinks(m in 1usize..=8, d in 2usize..=16, seed in any::<u64>(), a1 in -6.0f64..1.0, gap in 0.01f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dx = random_matrix(m, d, &mut rng);
        let dy = random_matrix(m, d, &mut rng);
        let (lo, hi) = (10f64.powf(a1), 10f64.powf(a1 + gap));
        let dp = DifferencePairs { base_index: 0, dx, dy };
        let n_lo = ridge_jacobian(&dp, &RidgeConfig { alpha: lo }).unwrap().norm();
        let n_hi = ridge_jacobian(&dp, &RidgeConfig { alpha: hi }).unwrap().norm();
        prop_assert!(n_lo >= n_hi * (1.0 - 1e-12), "{} < {}", n_lo, n_hi);
    }
}

#[test]
fn solution_is_a_strict_minimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for &(m, d) in &[(3, 7), (9, 4), (6, 6)] {
        let dx = random_matrix(m, d, &mut rng);
        let dy = random_matrix(m, d, &mut rng);
        let alpha = 1e-3;
        let j = ridge_primal(&dx, &dy, alpha).unwrap();
        let best = ridge_objective(&dx, &dy, &j, alpha);
        for _ in 0..100 {
            let mut dir = random_matrix(d, d, &mut rng);
            dir /= dir.norm();
            let moved = &j + dir * 1e-3;
            assert!(ridge_objective(&dx, &dy, &moved, alpha) > best);
        }
    }
}

#[test]
fn basis_interpolation() {
    let dx = DMatrix::identity(2, 2);
    let dy = DMatrix::from_row_slice(2, 2, &[2.0, 3.0, 4.0, 5.0]);
    let want = DMatrix::from_row_slice(2, 2, &[2.0, 4.0, 3.0, 5.0]);
    let near = ridge_primal(&dx, &dy, 1e-12).unwrap();
    assert!(close(&near, &want, 1e-10));
    let shrunk = ridge_primal(&dx, &dy, 1e-3).unwrap();
    assert!(close(&shrunk, &(want / 1.001), 1e-12));
    let zero = ridge_dual(&dx, &DMatrix::zeros(2, 2), 0.5).unwrap();
    assert_eq!(zero, DMatrix::zeros(2, 2));
}

#[test]
fn difference_pairs_match_loops() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (m, d) = (4, 8);
    let v = |rng: &mut ChaCha8Rng| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<f64>>();
    let base_in = v(&mut rng);
    let base_out = v(&mut rng);
    let pert_in: Vec<Vec<f64>> = (0..m).map(|_| v(&mut rng)).collect();
    let pert_out: Vec<Vec<f64>> = (0..m).map(|_| v(&mut rng)).collect();
    let dp = difference_pairs(3, &base_in, &pert_in, &base_out, &pert_out).unwrap();
    assert_eq!(dp.base_index, 3);
    for j in 0..m {
        for c in 0..d {
            assert_eq!(dp.dx[(j, c)], pert_in[j][c] - base_in[c]);
            assert_eq!(dp.dy[(j, c)], pert_out[j][c] - base_out[c]);
        }
    }
    let same = difference_pairs(0, &base_in, &vec![base_in.clone(); 3], &base_out, &pert_out[..3]).unwrap();
    assert!(same.is_degenerate());
    let one = difference_pairs(0, &[1.0, 2.0], &[vec![2.0, 2.0]], &[0.0, 0.0], &[vec![1.0, 1.0]]).unwrap();
    assert_eq!(one.dx.row(0).iter().copied().collect::<Vec<_>>(), [1.0, 0.0]);
    assert!(difference_pairs(0, &base_in, &pert_in, &base_out, &pert_out[..2]).is_err());
}

#[test]
fn aggregate_matches_loop_mean() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let ms: Vec<DMatrix<f64>> = (0..3).map(|_| random_matrix(3, 3, &mut rng)).collect();
    let got = aggregate(&ms).unwrap();
    for r in 0..3 {
        for c in 0..3 {
            let mean = (ms[0][(r, c)] + ms[1][(r, c)] + ms[2][(r, c)]) / 3.0;
            assert!((got[(r, c)] - mean).abs() < 1e-15);
        }
    }
    assert_eq!(aggregate(&ms[..1]).unwrap(), ms[0]);
    assert_eq!(aggregate(&[ms[0].clone(), -ms[0].clone()]).unwrap(), DMatrix::zeros(3, 3));
    assert!(aggregate(&[]).is_err());
    assert!(aggregate(&[ms[0].clone(), DMatrix::zeros(2, 2)]).is_err());
}

#[test]
fn invalid_inputs_are_rejected() {
    let dx = DMatrix::identity(2, 2);
    assert!(ridge_primal(&dx, &dx, 0.0).is_err());
    assert!(ridge_dual(&dx, &dx, -1.0).is_err());
    let mut bad = dx.clone();
    bad[(0, 1)] = f64::NAN;
    assert!(ridge_primal(&bad, &dx, 1e-3).is_err());
    assert!(ridge_primal(&dx, &DMatrix::zeros(3, 2), 1e-3).is_err());
}
