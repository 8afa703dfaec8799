mod common;

use lti_resilience::gramian::{defender_tilde_gramian, gramian, gramian_auto, gramian_infinite};
use lti_resilience::model::{characteristic_time, controllability};
use lti_resilience::pendula::{attack_matrix, dynamics, PendulaParams, Pendulum};
use nalgebra::DMatrix;

fn pendula_all() -> (DMatrix<f64>, DMatrix<f64>) {
    let p = PendulaParams::default();
    (dynamics(&p).unwrap(), attack_matrix(&p, &Pendulum::ALL).unwrap())
}

fn rel(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm()
}

/// Van Loan: exp([[-A, BBᵀ], [0, Aᵀ]] t) = [[., G], [0, F]] with W = Fᵀ G.
fn van_loan(a: &DMatrix<f64>, b: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
    let n = a.nrows();
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    m.view_mut((0, 0), (n, n)).copy_from(&(-a));
    m.view_mut((0, n), (n, n)).copy_from(&(b * b.transpose()));
    m.view_mut((n, n), (n, n)).copy_from(&a.transpose());
    let e = (m * t).exp();
    let g = e.view((0, n), (n, n)).into_owned();
    let f = e.view((n, n), (n, n)).into_owned();
    f.transpose() * g
}

#[test]
fn agrees_with_van_loan_on_pendula() {
    let (a, b) = pendula_all();
    for t in [0.5, 3.0, 15.0] {
        let oracle = van_loan(&a, &b, t);
        let coarse = gramian_auto(&a, &b, t).unwrap();
        assert!(
            rel(coarse.matrix(), &oracle) < 1e-6,
            "t={t} rel={}",
            rel(coarse.matrix(), &oracle)
        );
        let fine = gramian(&a, &b, t, 16000).unwrap();
        assert!(
            rel(fine.matrix(), &oracle) < 1e-10,
            "t={t} rel={}",
            rel(fine.matrix(), &oracle)
        );
    }
}

fn random_stable(rng: &mut rand_chacha::ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let m = common::random_matrix(rng, n, n);
    let abscissa = m.complex_eigenvalues().iter().map(|z| z.re).fold(f64::MIN, f64::max);
    m - DMatrix::identity(n, n) * (abscissa + 0.2)
}

#[test]
fn semigroup_identity() {
    let mut rng = common::rng(11);
    let (pa, pb) = pendula_all();
    let mut cases = vec![(pa, pb, 7.5)];
    for n in 1..=4 {
        let a = random_stable(&mut rng, n);
        let b = common::random_matrix(&mut rng, n, 2);
        cases.push((a, b, 2.0));
    }
    for (a, b, h) in cases {
        let wh = gramian_auto(&a, &b, h).unwrap();
        let w2h = gramian_auto(&a, &b, 2.0 * h).unwrap();
        let e = (&a * h).exp();
        let composed = &e * wh.matrix() * e.transpose() + wh.matrix();
        assert!(
            rel(&composed, w2h.matrix()) < 1e-6,
            "n={} rel={}",
            a.nrows(),
            rel(&composed, w2h.matrix())
        );
    }
}

#[test]
fn monotone_in_horizon() {
    let (a, b) = pendula_all();
    let mut prev = gramian_auto(&a, &b, 0.25).unwrap();
    for t in [1.0, 4.0, 16.0, 64.0] {
        let next = gramian_auto(&a, &b, t).unwrap();
        let diff = next.matrix() - prev.matrix();
        let min_eig = diff.symmetric_eigenvalues().min();
        assert!(min_eig > -1e-10 * next.lambda_max(), "t={t} min eig {min_eig}");
        prev = next;
    }
}

#[test]
fn doubling_steps_shrinks_change_sixteenfold() {
    let (a, b) = pendula_all();
    let w = |steps| gramian(&a, &b, 15.0, steps).unwrap().matrix().clone();
    let (w1, w2, w4) = (w(500), w(1000), w(2000));
    let first = (&w2 - &w1).norm();
    let second = (&w4 - &w2).norm();
    assert!(second <= first / 16.0, "changes {first:e} then {second:e}");
}

#[test]
fn unreachable_directions_have_zero_energy_capacity() {
    // second mode is not driven
    let a = DMatrix::from_row_slice(3, 3, &[-1.0, 0.0, 0.0, 0.0, -2.0, 0.0, 1.0, 0.0, -0.5]);
    let b = DMatrix::from_row_slice(3, 1, &[1.0, 0.0, 0.0]);
    let rep = controllability(&a, &b, 1e-9).unwrap();
    assert_eq!(rep.numerical_rank, 2);
    let w = gramian_auto(&a, &b, 5.0).unwrap();
    assert_eq!(w.numerical_rank(), 2);
    let null = w.eigenvectors().column(2).into_owned();
    assert!(null[1].abs() > 1.0 - 1e-12);
    assert!(w.quadratic_form(&null).abs() < 1e-12);
}

#[test]
fn long_horizon_approaches_lyapunov_limit() {
    let (a, b) = pendula_all();
    let t_sys = characteristic_time(&a).unwrap().unwrap();
    let finite = gramian_auto(&a, &b, 20.0 * t_sys).unwrap();
    let inf = gramian_infinite(&a, &b).unwrap();
    assert!(rel(finite.matrix(), inf.matrix()) < 1e-4);
}

#[test]
fn tilde_gramian_matches_direct_conjugation() {
    let (a, b) = pendula_all();
    let wd = gramian_auto(&a, &b, 15.0).unwrap();
    let wt = defender_tilde_gramian(&a, &wd, 15.0).unwrap();
    let e = (&a * -15.0).exp();
    assert!(rel(wt.matrix(), &(&e * wd.matrix() * e.transpose())) < 1e-9);
}
