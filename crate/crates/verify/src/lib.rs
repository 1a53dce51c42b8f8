//! Independent oracles and the named acceptance checks for `steiner-core`.
//!
//! Every check is deterministic for a given seed and can be run on its own
//! (see [`checks::find`]) or all together ([`checks::run_all`]).

pub mod checks;
pub mod oracle;
pub mod sampling;

pub use checks::{find, registry, run, run_all, CheckOutcome, CheckSpec};
