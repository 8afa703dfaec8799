#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0))
}

pub fn random_unit(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    loop {
        let v = random_vector(rng, n);
        if v.norm() > 1e-3 {
            return v.normalize();
        }
    }
}

pub fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
}

/// `G Gᵀ + shift I`, comfortably positive definite.
pub fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let g = random_matrix(rng, n, n);
    let shift = rng.random_range(0.05..1.0);
    &g * g.transpose() + DMatrix::identity(n, n) * shift
}

/// Random orthogonal matrix from the QR factor of a Gaussian-ish matrix.
pub fn random_orthogonal(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    random_matrix(rng, n, n).qr().q()
}

/// Least-norm energy of a piecewise-constant input on `segments` equal
/// intervals steering `x_start` to `x_goal` in `span`. Uses nalgebra's own
/// matrix exponential so it shares no code with the crate under test.
pub fn brute_force_energy(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    x_start: &DVector<f64>,
    x_goal: &DVector<f64>,
    span: f64,
    segments: usize,
) -> f64 {
    let n = a.nrows();
    let m = b.ncols();
    let delta = span / segments as f64;
    // exp([[A, B], [0, 0]] δ) = [[Φ, Γ], [0, I]]
    let mut aug = DMatrix::zeros(n + m, n + m);
    aug.view_mut((0, 0), (n, n)).copy_from(a);
    aug.view_mut((0, n), (n, m)).copy_from(b);
    let e = (aug * delta).exp();
    let phi = e.view((0, 0), (n, n)).into_owned();
    let gamma = e.view((0, n), (n, m)).into_owned();

    let mut reach = DMatrix::zeros(n, segments * m);
    let mut block = gamma;
    for k in (0..segments).rev() {
        reach.view_mut((0, k * m), (n, m)).copy_from(&block);
        block = &phi * block;
    }
    let drift = (a * span).exp() * x_start;
    let target = x_goal - drift;
    let u = reach.svd(true, true).solve(&target, 1e-14).expect("svd solve");
    delta * u.norm_squared()
}
