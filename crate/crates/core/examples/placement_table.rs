//! Attacker-by-defender table of indices for the pendula, with the best
//! defender for each attack and the most dangerous attacker per defense.
//!
//! cargo run --example placement_table

use lti_resilience::pendula::{dynamics, standard_option_set, PendulaParams};
use lti_resilience::resilience::placement_table;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = PendulaParams::default();
    let set = standard_option_set(&params)?;
    let table = placement_table(&dynamics(&params)?, &set.attackers, &set.defenders, 15.0, 15.0)?;

    table.write_csv(std::io::stdout().lock(), 4)?;
    println!();
    for (i, att) in table.attackers.iter().enumerate() {
        if let Some(j) = table.best_defender(i) {
            println!("against {att:<6} defend with {}", table.defenders[j]);
        }
    }
    for (j, def) in table.defenders.iter().enumerate() {
        if let Some(i) = table.weakest_attacker(j) {
            println!("defender {def:<6} is hurt most by attacker {}", table.attackers[i]);
        }
    }
    Ok(())
}
