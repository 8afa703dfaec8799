mod common;

use lti_resilience::model::{controllability, is_stable, LtiSystem};
use lti_resilience::resilience::{energy_ratio_from_gramians, energy_ratio_theoretical, resilience_index};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed};

/// Random stable system with a full-rank square defender so the pair is
/// always controllable.
fn random_system(seed: u64, n: usize, attack_inputs: usize) -> LtiSystem {
    let mut rng = common::rng(seed);
    let m = common::random_matrix(&mut rng, n, n);
    let abscissa = m.complex_eigenvalues().iter().map(|z| z.re).fold(f64::MIN, f64::max);
    let a = m - DMatrix::identity(n, n) * (abscissa + 0.3);
    let ba = common::random_matrix(&mut rng, n, attack_inputs);
    let bd = common::random_matrix(&mut rng, n, n) + DMatrix::identity(n, n) * 2.0;
    LtiSystem::new(a, ba, bd).unwrap()
}

fn config() -> Config {
    Config {
        cases: 32,
        rng_seed: RngSeed::Fixed(0x1d7e_5111),
        failure_persistence: None,
        ..Config::default()
    }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn controllability_survives_similarity(seed in any::<u64>(), n in 2usize..=5, rank_b in 1usize..=2) {
        let mut rng = common::rng(seed);
        let a = common::random_matrix(&mut rng, n, n);
        let b = common::random_matrix(&mut rng, n, rank_b);
        let t = common::random_matrix(&mut rng, n, n) + DMatrix::identity(n, n) * 2.0;
        let sv = t.singular_values();
        prop_assume!(sv.max() / sv.min() < 1e3);
        let t_inv = t.clone().try_inverse().unwrap();
        let before = controllability(&a, &b, 1e-9).unwrap();
        let after = controllability(&(&t * &a * &t_inv), &(&t * &b), 1e-9).unwrap();
        prop_assert_eq!(before.numerical_rank, after.numerical_rank);
    }

    #[test]
    fn input_scaling_scales_index_quadratically(seed in any::<u64>(), n in 1usize..=4, c in 0.2f64..5.0) {
        let sys = random_system(seed, n, 1);
        let rho = resilience_index(&sys, 1.5, 1.0).unwrap().rho;
        let louder = sys.with_attack(sys.b_attack() * c).unwrap();
        let stronger = sys.with_defense(sys.b_defend() * c).unwrap();
        let rho_a = resilience_index(&louder, 1.5, 1.0).unwrap().rho;
        let rho_d = resilience_index(&stronger, 1.5, 1.0).unwrap().rho;
        prop_assert!((rho_a * c * c / rho - 1.0).abs() < 1e-9);
        prop_assert!((rho_d / (c * c) / rho - 1.0).abs() < 1e-9);
    }

    #[test]
    fn orthogonal_change_of_coordinates_keeps_index(seed in any::<u64>(), n in 1usize..=5) {
        let sys = random_system(seed, n, 2);
        let q = common::random_orthogonal(&mut common::rng(seed ^ 0x5eed), n);
        let rotated = LtiSystem::new(
            &q * sys.a() * q.transpose(),
            &q * sys.b_attack(),
            &q * sys.b_defend(),
        ).unwrap();
        let r0 = resilience_index(&sys, 2.0, 2.0).unwrap();
        let r1 = resilience_index(&rotated, 2.0, 2.0).unwrap();
        prop_assert!((r1.rho / r0.rho - 1.0).abs() < 1e-8);
        // the worst case rotates with the coordinates
        let mapped = &q * &r0.x_worst;
        prop_assert!(mapped.dot(&r1.x_worst).abs() > 1.0 - 1e-7);
    }

    #[test]
    fn worst_case_is_minimal(seed in any::<u64>(), n in 2usize..=5) {
        let sys = random_system(seed, n, n);
        let r = resilience_index(&sys, 1.0, 1.5).unwrap();
        let at_worst = energy_ratio_theoretical(&sys, &r.x_worst, 1.0, 1.5).unwrap();
        prop_assert!((at_worst / r.rho - 1.0).abs() < 1e-6);
        let mut rng = common::rng(seed.wrapping_add(1));
        for _ in 0..100 {
            let x = common::random_unit(&mut rng, n);
            let q = energy_ratio_from_gramians(&r.attack_gramian, &r.defense_gramian_tilde, &x).unwrap();
            prop_assert!(q >= r.rho * (1.0 - 1e-8), "q={} rho={}", q, r.rho);
        }
    }

    #[test]
    fn eigenvector_solves_pencil(seed in any::<u64>(), n in 1usize..=6) {
        let sys = random_system(seed, n, 2);
        let r = resilience_index(&sys, 1.0, 1.0).unwrap();
        let v = &r.eigenvector;
        let wa = r.attack_gramian.matrix();
        let wt = r.defense_gramian_tilde.matrix();
        let residual = (wa * v - wt * v * r.lambda_max).norm();
        prop_assert!(residual <= 1e-6 * wa.norm() * v.norm());
        prop_assert!((r.rho * r.lambda_max - 1.0).abs() < 1e-12);
        // x_worst is the image of the eigenvector under W_a
        let image = (wa * v).normalize();
        prop_assert!(image.dot(&r.x_worst).abs() > 1.0 - 1e-12);
    }
}

#[test]
fn stability_agrees_with_free_decay() {
    let mut rng = common::rng(3);
    for n in 1..=5 {
        for shift in [0.3, -0.3] {
            let m = common::random_matrix(&mut rng, n, n);
            let abscissa = m.complex_eigenvalues().iter().map(|z| z.re).fold(f64::MIN, f64::max);
            let a = m - DMatrix::identity(n, n) * (abscissa + shift);
            let st = is_stable(&a).unwrap();
            assert_eq!(st.stable, shift > 0.0);
            let horizon = 10.0 / shift.abs();
            let x0 = common::random_unit(&mut rng, n);
            let x: DVector<f64> = (&a * horizon).exp() * &x0;
            assert_eq!(x.norm() < x0.norm(), st.stable, "n={n} shift={shift}");
        }
    }
}
