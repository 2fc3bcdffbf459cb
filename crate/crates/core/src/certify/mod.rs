//! Machine checks for the solver's approximation argument.
//!
//! Given a locally optimal solution `S` and an exact optimum `O`, this
//! module rebuilds the analysis scaffolding behind the 9-factor bound:
//! heavy/light facilities, domination and coverage, the client remapping
//! `tau`, the swap plan with its participation counts, the summed
//! inequality chain, and the partition of leftover facilities. Each piece
//! is checked numerically on the concrete instance, in exact integer
//! arithmetic, and reported pass/fail with witnesses.

mod context;
mod partition;
mod plan;
mod tau;

pub use context::{build_context, check_structure_claims, AnalysisContext, CheckResult, ClaimReport};
pub use partition::{check_partition, partition_ts, PartitionResult};
pub use plan::{build_swap_plan, certify, evaluate_plan, CertificateReport, Swap, SwapPlan};
pub use tau::{build_tau, build_tau_all, check_tau, TauMapping, TauReport};

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CertifyError {
    #[error("penalty instances are not certifiable; ratio checks only")]
    PenaltyUnsupported,
    #[error("inconsistent solution: {0}")]
    Inconsistent(String),
    #[error("claim 7 violated: {targets} targets need service but 3*({bags} bags + {nice} nice) is smaller")]
    Claim7Violated {
        targets: usize,
        bags: usize,
        nice: usize,
    },
    #[error("partition stuck: part {part} has no remaining filler facility")]
    PartitionStuck { part: usize },
    #[error("local optimality violated: swap {index} has value {value} below slack {slack}")]
    LocalOptimalityViolated {
        index: usize,
        value: i128,
        slack: i128,
    },
}
