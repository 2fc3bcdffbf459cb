//! Exhaustive optima for small instances.
//!
//! `exact_optimal` scans every open set of size exactly `k` and assigns
//! clients with the flow solver; it is the ground truth for ratio
//! measurements. `brute_force_assignment` and `brute_force_optimal` are
//! slower flow-free re-derivations used to cross-check the flow path.

use std::time::{Duration, Instant};

use itertools::Itertools;
use thiserror::Error;

use crate::flow::{assign_to, FlowError};
use crate::model::{Assign, Cost, Instance, OptimumRecord, Solution};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("oracle budget exceeded: {subsets} subsets over cap {cap}")]
    Budget { subsets: u128, cap: u64 },
    #[error("oracle budget exceeded: time cap {0:?} elapsed")]
    TimeCap(Duration),
    #[error("no feasible solution: k*U = {supply} < {clients} clients")]
    Infeasible { supply: i64, clients: usize },
    #[error(transparent)]
    Flow(#[from] FlowError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleBudget {
    pub max_subsets: u64,
    pub time_cap: Duration,
}

impl Default for OracleBudget {
    fn default() -> Self {
        OracleBudget {
            max_subsets: 10_000_000,
            time_cap: Duration::from_secs(600),
        }
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    acc
}

/// Minimum cost over all open sets of size exactly `k`, ties broken by
/// the lexicographically smallest open set.
pub fn exact_optimal(
    inst: &Instance,
    k: usize,
    penalty_mode: bool,
    budget: &OracleBudget,
) -> Result<OptimumRecord, OracleError> {
    let subsets = binomial(inst.num_facilities, k);
    if subsets > budget.max_subsets as u128 {
        return Err(OracleError::Budget {
            subsets,
            cap: budget.max_subsets,
        });
    }
    if !penalty_mode && (k as i64) * inst.capacity < inst.num_clients as i64 {
        return Err(OracleError::Infeasible {
            supply: (k as i64) * inst.capacity,
            clients: inst.num_clients,
        });
    }
    let start = Instant::now();
    let mut best: Option<Solution> = None;
    for (idx, open) in (0..inst.num_facilities).combinations(k).enumerate() {
        if idx % 64 == 0 && start.elapsed() > budget.time_cap {
            return Err(OracleError::TimeCap(budget.time_cap));
        }
        let candidate = assign_to(inst, &open, penalty_mode)?;
        if best.as_ref().is_none_or(|b| candidate.total_cost < b.total_cost) {
            best = Some(candidate);
        }
    }
    let solution = best.ok_or(OracleError::Infeasible {
        supply: 0,
        clients: inst.num_clients,
    })?;
    Ok(OptimumRecord { solution, k })
}

/// Cheapest capacity-respecting assignment to `open`, found by plain
/// depth-first enumeration over clients. `None` when no assignment fits.
pub fn brute_force_assignment(
    inst: &Instance,
    open: &[usize],
    penalty_mode: bool,
) -> Option<(Cost, Vec<Assign>)> {
    let mut open: Vec<usize> = open.to_vec();
    open.sort_unstable();
    open.dedup();
    let mut remaining: Vec<i64> = vec![inst.capacity; open.len()];
    let mut assign: Vec<Assign> = vec![Assign::Penalty; inst.num_clients];
    let mut best: Option<(Cost, Vec<Assign>)> = None;
    fn dfs(
        inst: &Instance,
        open: &[usize],
        penalty_mode: bool,
        j: usize,
        cost_so_far: Cost,
        remaining: &mut Vec<i64>,
        assign: &mut Vec<Assign>,
        best: &mut Option<(Cost, Vec<Assign>)>,
    ) {
        if let Some((b, _)) = best {
            if cost_so_far >= *b {
                return;
            }
        }
        if j == inst.num_clients {
            *best = Some((cost_so_far, assign.clone()));
            return;
        }
        for (idx, &f) in open.iter().enumerate() {
            if remaining[idx] == 0 {
                continue;
            }
            remaining[idx] -= 1;
            assign[j] = Assign::Facility(f);
            dfs(
                inst,
                open,
                penalty_mode,
                j + 1,
                cost_so_far + inst.cost[f][j],
                remaining,
                assign,
                best,
            );
            remaining[idx] += 1;
        }
        if penalty_mode {
            assign[j] = Assign::Penalty;
            dfs(
                inst,
                open,
                penalty_mode,
                j + 1,
                cost_so_far + inst.penalty(j),
                remaining,
                assign,
                best,
            );
        }
        assign[j] = Assign::Penalty;
    }
    dfs(
        inst,
        &open,
        penalty_mode,
        0,
        0,
        &mut remaining,
        &mut assign,
        &mut best,
    );
    best
}

/// Flow-free double brute force: every size-`k` open set crossed with
/// every capacity-respecting assignment. Ties go to the smallest open set.
pub fn brute_force_optimal(
    inst: &Instance,
    k: usize,
    penalty_mode: bool,
) -> Option<(Cost, Vec<usize>)> {
    let mut best: Option<(Cost, Vec<usize>)> = None;
    for open in (0..inst.num_facilities).combinations(k) {
        let Some((cost, _)) = brute_force_assignment(inst, &open, penalty_mode) else {
            continue;
        };
        if best.as_ref().is_none_or(|(b, _)| cost < *b) {
            best = Some((cost, open));
        }
    }
    best
}
