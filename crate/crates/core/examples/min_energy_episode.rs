//! Minimum-energy attack to the worst-case state followed by a minimum-energy
//! restoration, comparing the measured energy ratio with the index.
//!
//! cargo run --example min_energy_episode -- trajectory.csv

use std::fs::File;

use lti_resilience::pendula::{build_placement, state_labels, PendulaParams, Placement};
use lti_resilience::simulate::run_min_energy_episode;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sys = build_placement(&PendulaParams::default(), Placement::All, Placement::All)?;
    let report = run_min_energy_episode(&sys, 1.0, 15.0, 15.0, 2000)?;

    println!("attack energy   {:.5}", report.attack_energy);
    println!("defense energy  {:.5}", report.defense_energy);
    println!("measured ratio  {:.5}", report.measured_ratio.unwrap_or(f64::NAN));
    println!("index           {:.5}", report.theoretical_rho);
    println!("terminal |x|    {:.2e}", report.terminal_error);

    if let Some(path) = std::env::args().nth(1) {
        report.write_trajectory_csv(File::create(&path)?, Some(&state_labels()), 8)?;
        println!("trajectory written to {path}");
    }
    Ok(())
}
