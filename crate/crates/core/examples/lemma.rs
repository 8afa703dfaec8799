//! The three equivalent Rayleigh-quotient forms behind the index, checked on
//! random symmetric positive definite pairs.
//!
//! cargo run --example lemma -- 4

use lti_resilience::resilience::lemma_check;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn spd(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    &g * g.transpose() + DMatrix::identity(n, n) * 0.1
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n: usize = std::env::args().nth(1).map_or(Ok(3), |s| s.parse())?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..5 {
        let c = lemma_check(&spd(&mut rng, n), &spd(&mut rng, n))?;
        println!(
            "inverse {:.10}  swapped {:.10}  reciprocal {:.10}  angle {:.1e}",
            c.inverse_form, c.swapped_form, c.reciprocal_form, c.relation_angle
        );
    }
    Ok(())
}
