//! Capacitated k-median toolkit.
//!
//! The crate solves the hard uniform capacitated k-median problem (and its
//! penalty variant) with a swap-based local search whose candidate solutions
//! are evaluated by an exact min-cost-flow assignment. A brute-force oracle
//! supplies the true k-facility optimum on small instances, and the certifier
//! reconstructs the combinatorial structure behind the solver's worst-case
//! cost bound on a concrete (solution, optimum) pair and machine-checks it.

pub mod certify;
pub mod files;
pub mod flow;
pub mod gen;
pub mod harness;
pub mod model;
pub mod oracle;
pub mod search;

pub use model::{
    cost_of, open_count_target, validate_instance, Assign, Cost, Instance, ModelError,
    OptimumRecord, Ratio, Solution, ValidationReport,
};
