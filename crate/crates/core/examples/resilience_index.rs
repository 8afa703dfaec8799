//! Resilience index of the coupled-pendula benchmark for one attacker and
//! defender placement.
//!
//! cargo run --example resilience_index -- all all 15

use lti_resilience::pendula::{build_placement, PendulaParams, Placement};
use lti_resilience::resilience::{energy_ratio_theoretical, resilience_index};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let attacker: Placement = args.first().map_or(Ok(Placement::All), |s| s.parse())?;
    let defender: Placement = args.get(1).map_or(Ok(Placement::All), |s| s.parse())?;
    let span: f64 = args.get(2).map_or(Ok(15.0), |s| s.parse())?;

    let sys = build_placement(&PendulaParams::default(), attacker, defender)?;
    let r = resilience_index(&sys, span, span)?;

    println!("attacker {attacker}, defender {defender}, spans {span} s");
    println!("rho        = {:.4}", r.rho);
    println!("lambda_max = {:.6}", r.lambda_max);
    let x: Vec<String> = r.x_worst.iter().map(|v| format!("{v:.4}")).collect();
    println!("x_worst    = [{}]", x.join(", "));

    // any other displacement is relatively more expensive for the attacker
    let other = nalgebra::DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    let q = energy_ratio_theoretical(&sys, &other, span, span)?;
    println!("ratio at e1 = {q:.4} (>= rho)");
    Ok(())
}
