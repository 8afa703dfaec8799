//! Finite and infinite-horizon controllability Gramians, the defender's
//! back-propagated Gramian and the extended inverse of a singular one.
//!
//! cargo run --example gramians

use lti_resilience::gramian::{
    default_big_m, defender_tilde_gramian, extended_inverse, gramian_auto, gramian_infinite,
};
use lti_resilience::model::characteristic_time;
use lti_resilience::pendula::{attack_matrix, dynamics, PendulaParams, Pendulum};
use nalgebra::{DMatrix, DVector};

fn spectrum(w: &lti_resilience::Gramian) -> String {
    let parts: Vec<String> = w.eigenvalues().iter().map(|v| format!("{v:.3e}")).collect();
    parts.join(" ")
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = PendulaParams::default();
    let a = dynamics(&params)?;
    let b = attack_matrix(&params, &[Pendulum::Left])?;
    let t_sys = characteristic_time(&a)?.expect("pendula are damped");
    println!("characteristic time {t_sys:.3} s");

    for h in [1.0, t_sys, 5.0 * t_sys] {
        let w = gramian_auto(&a, &b, h)?;
        println!("h = {h:>6.2}: eigenvalues {}", spectrum(&w));
    }
    let w_inf = gramian_infinite(&a, &b)?;
    println!("limit     : eigenvalues {}", spectrum(&w_inf));

    let w = gramian_auto(&a, &b, 15.0)?;
    let tilde = defender_tilde_gramian(&a, &w, 15.0)?;
    println!(
        "back-propagation grows lambda_max from {:.3e} to {:.3e}",
        w.lambda_max(),
        tilde.lambda_max()
    );

    // a direction that cannot be reached prices out at M
    let a2 = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, -2.0]);
    let b2 = DMatrix::from_row_slice(2, 1, &[1.0, 0.0]);
    let singular = gramian_auto(&a2, &b2, 1.0)?;
    let inv = extended_inverse(&singular, default_big_m(&singular))?;
    let cost = |x: [f64; 2]| inv.quadratic_form(&DVector::from_row_slice(&x));
    println!(
        "rank {} Gramian: cost(e1) = {:.3}, cost(e2) = {:.3e}",
        singular.numerical_rank(),
        cost([1.0, 0.0]),
        cost([0.0, 1.0])
    );
    Ok(())
}
