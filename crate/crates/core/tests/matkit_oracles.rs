mod common;

use encctl::matkit::{self, pseudo_inverse_full_row_rank, solve_discrete_lyapunov, MatError};
use encctl::RealMatrix;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

fn to_na(m: &RealMatrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

/// vec(Ψ) = (I − A ⊗ A)⁻¹ vec(I).
fn kronecker_lyapunov(a: &RealMatrix) -> DMatrix<f64> {
    let n = a.rows();
    let na = to_na(a);
    let lhs = DMatrix::<f64>::identity(n * n, n * n) - na.kronecker(&na);
    let rhs = DMatrix::<f64>::identity(n, n);
    let rhs = DMatrix::from_column_slice(n * n, 1, rhs.as_slice());
    let x = lhs.lu().solve(&rhs).unwrap();
    DMatrix::from_column_slice(n, n, x.as_slice())
}

fn series_lyapunov(a: &RealMatrix) -> DMatrix<f64> {
    let na = to_na(a);
    let n = a.rows();
    let mut term = DMatrix::<f64>::identity(n, n);
    let mut sum = term.clone();
    for _ in 0..100_000 {
        term = &na * &term * na.transpose();
        sum += &term;
        if term.norm() < 1e-16 * sum.norm() {
            break;
        }
    }
    sum
}

fn max_diff(a: &RealMatrix, b: &DMatrix<f64>) -> f64 {
    (to_na(a) - b).abs().max()
}

#[test]
fn lyapunov_matches_kronecker_on_random_stable_systems() {
    let mut rng = ChaCha20Rng::seed_from_u64(11);
    for _ in 0..50 {
        let n = rng.gen_range(1..=5);
        let a = common::random_stable(&mut rng, n);
        let psi = solve_discrete_lyapunov(&a).unwrap();
        assert!(max_diff(psi.as_matrix(), &kronecker_lyapunov(&a)) <= 1e-7);
    }
}

#[test]
fn lyapunov_matches_truncated_series() {
    let mut rng = ChaCha20Rng::seed_from_u64(12);
    for _ in 0..20 {
        let n = rng.gen_range(1..=4);
        let a = common::random_stable(&mut rng, n);
        let psi = solve_discrete_lyapunov(&a).unwrap();
        let reference = series_lyapunov(&a);
        assert!(max_diff(psi.as_matrix(), &reference) <= 1e-9 * reference.norm());
    }
}

#[test]
fn lyapunov_residual_and_positivity() {
    let mut rng = ChaCha20Rng::seed_from_u64(13);
    for _ in 0..20 {
        let a = common::random_stable(&mut rng, 4);
        let psi = solve_discrete_lyapunov(&a).unwrap();
        let p = psi.as_matrix();
        let resid = &(&(&a * p) * &a.transpose()) + &RealMatrix::identity(4);
        assert!(resid.max_abs_diff(p) <= 1e-10 * p.max_abs());
        assert!(matkit::min_symmetric_eigenvalue(p) >= 1.0 - 1e-9);
    }
}

#[test]
fn lyapunov_rejects_marginal_and_unstable() {
    let rot = RealMatrix::from_rows(&[[0.0, -1.0], [1.0, 0.0]]).unwrap();
    assert!(matches!(
        solve_discrete_lyapunov(&rot),
        Err(MatError::UnstableMatrix(_))
    ));
    let big = RealMatrix::from_diag(&[0.5, 1.5]);
    assert!(matches!(
        solve_discrete_lyapunov(&big),
        Err(MatError::UnstableMatrix(_))
    ));
}

fn full_row_rank() -> impl Strategy<Value = RealMatrix> {
    (1usize..=4, 0usize..=6)
        .prop_flat_map(|(n, extra)| {
            let cols = n + extra;
            (
                Just(n),
                Just(cols),
                prop::collection::vec(-2.0f64..2.0, n * cols),
            )
        })
        .prop_map(|(n, cols, data)| RealMatrix::new(n, cols, data).unwrap())
        .prop_filter("well conditioned", |x| {
            let sv = to_na(x).singular_values();
            let (lo, hi) = (sv.min(), sv.max());
            lo > 1e-3 * hi
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn pseudo_inverse_satisfies_moore_penrose(x in full_row_rank()) {
        let xp = pseudo_inverse_full_row_rank(&x).unwrap();
        let n = x.rows();
        let tol = 1e-9;
        let x_xp = &x * &xp;
        prop_assert!(x_xp.max_abs_diff(&RealMatrix::identity(n)) <= tol);
        let xp_x = &xp * &x;
        prop_assert!(xp_x.max_abs_diff(&xp_x.transpose()) <= tol);
        prop_assert!((&xp_x * &xp).max_abs_diff(&xp) <= tol * xp.max_abs().max(1.0));
        prop_assert!((&x * &xp_x).max_abs_diff(&x) <= tol * x.max_abs().max(1.0));
        let reference = to_na(&x).pseudo_inverse(1e-12).unwrap();
        prop_assert!(max_diff(&xp, &reference) <= 1e-8 * reference.abs().max().max(1.0));
    }
}

#[test]
fn pseudo_inverse_rejects_rank_deficient_rows() {
    let x = RealMatrix::from_rows(&[[1.0, 2.0, 3.0], [2.0, 4.0, 6.0]]).unwrap();
    assert!(matches!(
        pseudo_inverse_full_row_rank(&x),
        Err(MatError::RankDeficient(_))
    ));
}
