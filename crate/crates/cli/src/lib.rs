//! Scenario-driven front end: JSON scenarios in, CSV series and JSON reports out.

pub mod commands;
pub mod scenario;

pub use commands::{Outcome, RunContext};
pub use scenario::{load, parse, resolve, Resolved, Scenario, ValidationError};

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const FAILURE: i32 = 1;
    pub const VALIDATION: i32 = 2;
    pub const TERMINATED: i32 = 3;
}
