mod common;

use common::structured;
use fvns::fields::edge_mass;
use fvns::linalg::{solve_general, solve_spd_deflated, ConstantMode, CsrMatrix, SolveError, SolverConfig};
use fvns::mesh::kite;
use fvns::operators::assemble_pressure_stiffness;
use fvns::verification::random_vec;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn weighted_mean(x: &[f64], w: &[f64]) -> f64 {
    x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / w.iter().sum::<f64>()
}

#[test]
fn kite_pressure_solve_recovers_centered_solution() {
    let m = kite();
    let a = assemble_pressure_stiffness(&m);
    let w = edge_mass(&m);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x_true = random_vec(&mut rng, m.n_edges());
    let b = a.matvec(&x_true);
    let cfg = SolverConfig::default().with_rtol(1e-14);
    let (x, rep) = solve_spd_deflated(&a, &b, Some(ConstantMode { weights: &w }), &cfg).unwrap();
    assert!(rep.converged);
    let shift = weighted_mean(&x_true, &w);
    for (xi, ti) in x.iter().zip(&x_true) {
        assert!((xi - (ti - shift)).abs() < 1e-10, "{x:?} vs {x_true:?}");
    }
    assert!(weighted_mean(&x, &w).abs() < 1e-14);
}

#[test]
fn kernel_right_hand_side_gives_zero() {
    let m = structured(6);
    let a = assemble_pressure_stiffness(&m);
    let w = edge_mass(&m);
    let b = vec![0.37; m.n_edges()];
    let (x, _) = solve_spd_deflated(&a, &b, Some(ConstantMode { weights: &w }), &SolverConfig::default()).unwrap();
    assert!(x.iter().all(|v| v.abs() < 1e-12));
}

#[test]
fn singular_system_without_deflation_does_not_converge() {
    let m = kite();
    let a = assemble_pressure_stiffness(&m);
    let b = vec![1.0; m.n_edges()];
    let cfg = SolverConfig { max_iter: Some(50), ..SolverConfig::default() };
    match solve_spd_deflated(&a, &b, None, &cfg) {
        Err(SolveError::NotConverged { x, report }) => {
            assert_eq!(x.len(), b.len());
            assert!(!report.converged);
        }
        Err(SolveError::Breakdown { .. }) => {}
        other => panic!("expected failure, got {other:?}"),
    }
}

fn random_dominant(rng: &mut impl Rng, n: usize) -> CsrMatrix {
    let mut t = Vec::new();
    for i in 0..n {
        let mut off = 0.0;
        for _ in 0..3 {
            let j = rng.gen_range(0..n);
            if j != i {
                let v: f64 = rng.gen_range(-1.0..1.0);
                off += v.abs();
                t.push((i, j, v));
            }
        }
        t.push((i, i, off + rng.gen_range(0.1..1.0)));
    }
    CsrMatrix::from_triplets(n, n, &t)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn general_solver_residual_small(seed in any::<u64>(), n in 2usize..80) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_dominant(&mut rng, n);
        let b = random_vec(&mut rng, n);
        let (x, rep) = solve_general(&a, &b, &SolverConfig::default()).unwrap();
        let r: f64 = a.matvec(&x).iter().zip(&b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
        let bn: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assert!(r <= 1e-9 * bn + 1e-13, "{} {:?}", r, rep);
    }

    #[test]
    fn transpose_and_product_agree_with_dense(seed in any::<u64>(), n in 1usize..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_dominant(&mut rng, n);
        let b = random_dominant(&mut rng, n);
        prop_assert_eq!(a.transpose().transpose(), a.clone());
        let (da, db, dp) = (a.to_dense(), b.to_dense(), a.matmul(&b).to_dense());
        for i in 0..n {
            for j in 0..n {
                let s: f64 = (0..n).map(|k| da[i][k] * db[k][j]).sum();
                prop_assert!((dp[i][j] - s).abs() < 1e-12);
            }
        }
        let x = random_vec(&mut rng, n);
        prop_assert_eq!(a.matvec(&x), a.matvec_serial(&x));
    }
}

#[test]
fn nonsymmetric_matrix_rejected_by_cg() {
    let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 2.0), (0, 1, 1.0), (1, 1, 2.0)]);
    assert!(matches!(
        solve_spd_deflated(&a, &[1.0, 1.0], None, &SolverConfig::default()),
        Err(SolveError::AsymmetricMatrix(_))
    ));
}

#[test]
fn kite_pressure_solve_from_divergence() {
    let m = kite();
    let a = assemble_pressure_stiffness(&m);
    let w = edge_mass(&m);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let v = fvns::verification::random_p0_vector(&mut rng, &m);
    let d = fvns::operators::div_h(&v, &m);
    let b: Vec<f64> = d.values.iter().zip(&w).map(|(x, m)| x * m).collect();
    let (x, _) = solve_spd_deflated(&a, &b, Some(ConstantMode { weights: &w }), &SolverConfig::default()).unwrap();
    let r: f64 = a.matvec(&x).iter().zip(&b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
    let bn: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    assert!(r <= 1e-10 * bn);
    assert!(weighted_mean(&x, &w).abs() <= 1e-12);
}
