//! rho(0, dt, 2 dt) for an all-pendula attacker over a log-spaced range of
//! spans, one column per defender placement. Pipe into a plotting tool.
//!
//! cargo run --example horizon_sweep > sweep.csv

use lti_resilience::pendula::{dynamics, standard_option_set, PendulaParams};
use lti_resilience::resilience::{log_range, sweep_defenders};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = PendulaParams::default();
    let set = standard_option_set(&params)?;
    let (_, b_all) = set
        .attackers
        .iter()
        .find(|(n, _)| n == "All")
        .expect("standard set has All");
    let horizons = log_range(25, 1.5, 150.0)?;
    let table = sweep_defenders(&dynamics(&params)?, b_all, &set.defenders, &horizons)?;
    table.write_csv(std::io::stdout().lock(), 6)?;
    Ok(())
}
