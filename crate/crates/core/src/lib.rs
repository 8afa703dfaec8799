//! Resilience of linear time-invariant systems against adversarial inputs.
//!
//! An attacker drives `dx/dt = A x + Ba ua + Bd ud` away from rest through
//! `Ba`; a defender restores it through `Bd`. The resilience index is the
//! smallest ratio of the attacker's minimum control energy to the defender's
//! minimum restoration energy, found from a generalized eigenproblem of the
//! two controllability Gramians.
//!
//! ```no_run
//! use lti_resilience::pendula::{build_placement, PendulaParams, Placement};
//! use lti_resilience::resilience::resilience_index;
//!
//! let sys = build_placement(&PendulaParams::default(), Placement::All, Placement::All)?;
//! let r = resilience_index(&sys, 15.0, 15.0)?;
//! println!("rho = {:.2}", r.rho);
//! # Ok::<(), lti_resilience::Error>(())
//! ```
//!
//! See `examples/` for one runnable program per capability.

pub mod cli;
pub mod error;
pub mod expm;
pub mod format;
pub mod gramian;
pub mod linalg;
pub mod minenergy;
pub mod model;
pub mod pendula;
pub mod resilience;
pub mod simulate;

pub use error::{Error, Result};
pub use expm::matrix_exponential;
pub use gramian::{ExtendedInverse, Gramian};
pub use minenergy::{Trajectory, TransferTask};
pub use model::{ControllabilityReport, LtiSystem};
pub use resilience::{PlacementTable, ResilienceResult};
pub use simulate::{LqController, ScenarioReport};
