//! Power-iteration radii and norm certificates against dense eigenvalues.

use nalgebra::{DMatrix, Schur};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rde_lab::equilibria::{family_equilibrium, isolated_equilibrium};
use rde_lab::linearize::{
    best_certificate, build_jacobian, certify, epsilon_bound, norm_certificate, scaling_matrix,
    spectral_radius, CertifyOptions, JacobianSpec, Verdict,
};

fn dense_radius(jac: &JacobianSpec) -> f64 {
    let rows = jac.to_dense();
    let n = jac.dim;
    let mat = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
    // random orthogonal similarity before the Schur step
    let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
    let q = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0)).qr().q();
    let rotated = q.transpose() * mat * &q;
    let schur = Schur::try_new(rotated, f64::EPSILON, 100_000).expect("Schur decomposition converges");
    schur.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[test]
fn power_iteration_matches_dense_eigenvalues() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..60 {
        let m = rng.random_range(1..=6);
        let a = if rng.random_bool(0.5) {
            rng.random_range(0.05..0.95)
        } else {
            rng.random_range(1.05..10.0)
        };
        let jac = build_jacobian(&isolated_equilibrium(a).unwrap(), m);
        let exact = dense_radius(&jac);
        let est = spectral_radius(&jac, 1e-12, 200_000).unwrap();
        assert!((est.rho - exact).abs() < 1e-6, "A = {a}, m = {m}: {} vs {exact}", est.rho);
    }
}

#[test]
fn closed_form_radius_for_two_and_one() {
    let jac = build_jacobian(&isolated_equilibrium(2.0).unwrap(), 1);
    let expected = (1.0 + 13f64.sqrt()) / 6.0;
    assert!((dense_radius(&jac) - expected).abs() < 1e-12);
}

#[test]
fn radius_regimes() {
    for m in 1..=6 {
        for a in [0.25, 0.5, 0.75] {
            let jac = build_jacobian(&isolated_equilibrium(a).unwrap(), m);
            assert!(dense_radius(&jac) > 1.0, "A = {a}, m = {m} should be unstable");
        }
        for a in [1.1, 2.0, 5.0] {
            let jac = build_jacobian(&isolated_equilibrium(a).unwrap(), m);
            assert!(dense_radius(&jac) < 1.0, "A = {a}, m = {m} should be stable");
        }
        for mu in [1.5, 2.0, 7.0] {
            let jac = build_jacobian(&family_equilibrium(mu).unwrap(), m);
            assert!((dense_radius(&jac) - 1.0).abs() < 1e-9, "mu = {mu}, m = {m} is not hyperbolic");
        }
    }
}

#[test]
fn scaled_norm_bounds_every_eigenvalue() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..60 {
        let m = rng.random_range(1..=8);
        let a = rng.random_range(1.01..12.0);
        let eq = isolated_equilibrium(a).unwrap();
        let jac = build_jacobian(&eq, m);
        let upper = epsilon_bound(&eq, a, m).unwrap();
        let eps = rng.random_range(0.01..0.99) * upper;
        let norm = norm_certificate(&jac, &scaling_matrix(m, eps).unwrap()).unwrap();
        assert!(norm < 1.0);
        assert!(dense_radius(&jac) <= norm + 1e-12);
        let (best_eps, best) = best_certificate(&jac, upper).unwrap();
        assert!(best_eps > 0.0 && best_eps < upper);
        assert!(dense_radius(&jac) <= best + 1e-12 && best < 1.0);
    }
}

#[test]
fn certify_verdicts_agree_with_dense_spectrum() {
    for (a, m, expected) in [
        (2.0, 1, Verdict::Las),
        (10.0, 8, Verdict::Las),
        (0.5, 2, Verdict::Unstable),
        (0.9, 5, Verdict::Unstable),
    ] {
        let eq = isolated_equilibrium(a).unwrap();
        let cert = certify(&eq, a, m, &CertifyOptions::default()).unwrap();
        assert_eq!(cert.verdict, expected, "A = {a}, m = {m}");
        let rho = cert.rho_estimate.unwrap();
        assert!((rho - dense_radius(&build_jacobian(&eq, m))).abs() < 1e-6);
    }
}
