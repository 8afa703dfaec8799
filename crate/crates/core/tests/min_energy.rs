mod common;

use common::brute_force_energy;
use lti_resilience::gramian::{gramian_auto, Gramian};
use lti_resilience::minenergy::{integrate_energy, optimal_control, optimal_energy, TransferTask};
use lti_resilience::pendula::{build_placement, PendulaParams, Placement};
use lti_resilience::resilience::resilience_index;
use lti_resilience::LtiSystem;
use nalgebra::{DMatrix, DVector};

const SPAN: f64 = 15.0;

fn attacker_all() -> (LtiSystem, Gramian) {
    let sys = build_placement(&PendulaParams::default(), Placement::All, Placement::All).unwrap();
    let g = gramian_auto(sys.a(), sys.b_attack(), SPAN).unwrap();
    (sys, g)
}

fn assert_close(got: f64, want: f64, tol: f64) {
    assert!((got / want - 1.0).abs() < tol, "got {got}, oracle {want}");
}

#[test]
fn worst_case_target_matches_brute_force() {
    let (sys, g) = attacker_all();
    let x1 = resilience_index(&sys, SPAN, SPAN).unwrap().x_worst;
    let task = TransferTask::from_origin(x1.clone(), SPAN).unwrap();
    let e = optimal_energy(&task, &g, sys.a()).unwrap();
    let oracle = brute_force_energy(sys.a(), sys.b_attack(), &task.x_start, &x1, SPAN, 400);
    assert_close(e, oracle, 0.01);
}

#[test]
fn random_transfers_match_brute_force() {
    let (sys, g) = attacker_all();
    let mut rng = common::rng(5);
    for _ in 0..5 {
        let x0 = common::random_vector(&mut rng, 6);
        let x1 = common::random_vector(&mut rng, 6);
        let task = TransferTask::new(x0.clone(), x1.clone(), SPAN).unwrap();
        let e = optimal_energy(&task, &g, sys.a()).unwrap();
        let oracle = brute_force_energy(sys.a(), sys.b_attack(), &x0, &x1, SPAN, 400);
        assert_close(e, oracle, 0.01);
    }
}

#[test]
fn single_pendulum_attacker_matches_brute_force() {
    let sys = build_placement(&PendulaParams::default(), Placement::Left, Placement::All).unwrap();
    let g = gramian_auto(sys.a(), sys.b_attack(), SPAN).unwrap();
    let x1 = resilience_index(&sys, SPAN, SPAN).unwrap().x_worst;
    let task = TransferTask::from_origin(x1.clone(), SPAN).unwrap();
    let e = optimal_energy(&task, &g, sys.a()).unwrap();
    let oracle = brute_force_energy(sys.a(), sys.b_attack(), &task.x_start, &x1, SPAN, 400);
    assert_close(e, oracle, 0.01);
}

#[test]
fn sampled_energy_matches_closed_form() {
    let (sys, g) = attacker_all();
    let mut rng = common::rng(9);
    let x1 = common::random_unit(&mut rng, 6);
    let task = TransferTask::from_origin(x1.clone(), SPAN).unwrap();
    let traj = optimal_control(&task, &g, sys.a(), sys.b_attack(), 2000).unwrap();
    let closed = optimal_energy(&task, &g, sys.a()).unwrap();
    assert_close(traj.energy, closed, 1e-3);
    assert!((traj.final_state() - &x1).norm() < 1e-5);
}

#[test]
fn energy_is_quadratic_in_the_goal() {
    let (sys, g) = attacker_all();
    let x1 = DVector::from_vec(vec![0.2, -0.1, 0.4, 0.0, 0.3, -0.2]);
    let one = optimal_energy(&TransferTask::from_origin(x1.clone(), SPAN).unwrap(), &g, sys.a()).unwrap();
    let two = optimal_energy(&TransferTask::from_origin(&x1 * 2.0, SPAN).unwrap(), &g, sys.a()).unwrap();
    assert!((two / one - 4.0).abs() < 1e-12);
}

/// Perturbations invisible to the sampled reachability map (with the same
/// Simpson weights as the energy quadrature) can only add energy.
#[test]
fn null_space_perturbations_cost_energy() {
    let (sys, g) = attacker_all();
    let samples = 200;
    let (n, m) = (sys.n(), sys.attack_inputs());
    let dt = SPAN / samples as f64;
    let x1 = resilience_index(&sys, SPAN, SPAN).unwrap().x_worst;
    let task = TransferTask::from_origin(x1, SPAN).unwrap();
    let traj = optimal_control(&task, &g, sys.a(), sys.b_attack(), samples).unwrap();

    let weight = |k: usize| match k {
        0 => dt / 3.0,
        k if k == samples => dt / 3.0,
        k if k % 2 == 1 => 4.0 * dt / 3.0,
        _ => 2.0 * dt / 3.0,
    };
    let mut reach = DMatrix::zeros(n, (samples + 1) * m);
    for k in 0..=samples {
        let block = (sys.a() * (SPAN - k as f64 * dt)).exp() * sys.b_attack() * weight(k);
        reach.view_mut((0, k * m), (n, m)).copy_from(&block);
    }
    let pinv = reach.clone().pseudo_inverse(1e-12).unwrap();
    let u_star: Vec<DVector<f64>> = traj.inputs.clone();
    let base = integrate_energy(&u_star, dt).unwrap();

    let mut rng = common::rng(21);
    for _ in 0..20 {
        let raw = common::random_vector(&mut rng, (samples + 1) * m);
        let delta = &raw - &pinv * (&reach * &raw);
        assert!((&reach * &delta).norm() < 1e-9 * raw.norm());
        let scale = u_star.iter().map(|u| u.amax()).fold(0.0, f64::max);
        let perturbed: Vec<DVector<f64>> = u_star
            .iter()
            .enumerate()
            .map(|(k, u)| u + delta.rows(k * m, m) * scale)
            .collect();
        let e = integrate_energy(&perturbed, dt).unwrap();
        assert!(e >= base * (1.0 - 1e-6), "perturbed {e} < optimal {base}");
    }
}
