//! Index for a user-supplied system document, e.g. one written by
//! `lti-resilience pendula --output sys.json`. Without an argument a small
//! two-mass example is built in memory and its document printed.
//!
//! cargo run --example custom_system -- sys.json

use lti_resilience::format::sig;
use lti_resilience::model::{controllability, read_system_file, save_system, LtiSystem, DEFAULT_RANK_TOLERANCE};
use lti_resilience::resilience::resilience_index;
use nalgebra::DMatrix;

fn two_masses() -> lti_resilience::Result<LtiSystem> {
    // positions then velocities; a spring couples the masses, both damped
    #[rustfmt::skip]
    let a = DMatrix::from_row_slice(4, 4, &[
         0.0,  0.0,  1.0,  0.0,
         0.0,  0.0,  0.0,  1.0,
        -2.0,  1.0, -0.2,  0.0,
         1.0, -2.0,  0.0, -0.2,
    ]);
    let ba = DMatrix::from_row_slice(4, 1, &[0.0, 0.0, 1.0, 0.0]);
    let bd = DMatrix::from_row_slice(4, 1, &[0.0, 0.0, 0.0, 1.0]);
    LtiSystem::new(a, ba, bd)?.with_labels(vec!["x1".into(), "x2".into(), "v1".into(), "v2".into()])
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sys = match std::env::args().nth(1) {
        Some(path) => read_system_file(&path)?,
        None => {
            let sys = two_masses()?;
            println!("{}", save_system(&sys));
            sys
        }
    };
    let report = controllability(sys.a(), sys.b_defend(), DEFAULT_RANK_TOLERANCE)?;
    if !report.is_controllable {
        println!("defender leaves {} directions unreachable", report.unreachable_dim());
        return Ok(());
    }
    for span in [1.0, 5.0, 20.0] {
        let r = resilience_index(&sys, span, span)?;
        println!("span {span:>4}: rho = {}", sig(r.rho, 5));
    }
    Ok(())
}
