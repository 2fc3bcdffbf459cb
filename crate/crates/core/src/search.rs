//! Swap-based local search.
//!
//! Starting from a feasible set of `m = min(|F|, ceil(8k/3))` open
//! facilities, the search scans swap moves of size up to `p` in a fixed
//! lexicographic order and applies the first move whose cost clears the
//! improvement threshold `new <= (1 - delta) * current` with
//! `delta = epsilon / (|F| + |C|)`, until no move qualifies.

use std::collections::BTreeSet;

use itertools::Itertools;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::flow::{assign_to, FlowError};
use crate::model::{open_count_target, Cost, Instance, Ratio, Solution};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SearchError {
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error("move is not a swap: added facilities must be closed, removed ones open")]
    InvalidMove,
    #[error("penalty run requested but the instance has no penalties")]
    NoPenalties,
}

#[derive(Debug, Clone)]
pub struct SearchConfig {
    /// Maximum swap size; 1 allows single swaps only, 2 adds double swaps.
    pub p: usize,
    pub epsilon: Ratio,
    pub seed: u64,
    pub penalty_mode: bool,
    pub max_iterations: Option<usize>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            p: 2,
            epsilon: Ratio::new(1, 100).unwrap(),
            seed: 0,
            penalty_mode: false,
            max_iterations: None,
        }
    }
}

/// One accepted move.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceStep {
    pub removed: Vec<usize>,
    pub added: Vec<usize>,
    pub old_cost: Cost,
    pub new_cost: Cost,
}

/// Accepted moves in order; `capped` marks a run stopped by the iteration cap.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SearchTrace {
    pub steps: Vec<TraceStep>,
    pub capped: bool,
}

/// Improvement test `new <= (1 - num/(den*(F+C))) * current`, evaluated
/// exactly in integers.
pub fn improves(new_cost: Cost, current: Cost, inst: &Instance, epsilon: Ratio) -> bool {
    let d = epsilon.den as i128 * (inst.num_facilities + inst.num_clients) as i128;
    let n = epsilon.num as i128;
    (new_cost as i128) * d <= (current as i128) * (d - n)
}

/// Opens `m` facilities by seeded uniform sampling without replacement,
/// then assigns clients optimally.
pub fn initial_solution(inst: &Instance, config: &SearchConfig) -> Result<Solution, SearchError> {
    let m = open_count_target(inst);
    if !config.penalty_mode && (m as i64) * inst.capacity < inst.num_clients as i64 {
        return Err(SearchError::Flow(FlowError::InsufficientCapacity {
            open: m,
            capacity: inst.capacity,
            clients: inst.num_clients,
        }));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut ids: Vec<usize> = (0..inst.num_facilities).collect();
    ids.partial_shuffle(&mut rng, m);
    let mut open = ids[..m].to_vec();
    open.sort_unstable();
    Ok(assign_to(inst, &open, config.penalty_mode)?)
}

/// Deterministic alternative start for benchmarking: opens `m` facilities
/// by farthest-point traversal under the facility pseudo-distance
/// `min_j cost[f][j] + cost[g][j]`, seeded at the facility with the
/// cheapest total row. Ignores `config.seed`.
pub fn greedy_initial_solution(
    inst: &Instance,
    config: &SearchConfig,
) -> Result<Solution, SearchError> {
    let m = open_count_target(inst);
    if !config.penalty_mode && (m as i64) * inst.capacity < inst.num_clients as i64 {
        return Err(SearchError::Flow(FlowError::InsufficientCapacity {
            open: m,
            capacity: inst.capacity,
            clients: inst.num_clients,
        }));
    }
    let dist = |f: usize, g: usize| -> i128 {
        (0..inst.num_clients)
            .map(|j| inst.cost(f, j) as i128 + inst.cost(g, j) as i128)
            .min()
            .unwrap_or(0)
    };
    let first = (0..inst.num_facilities)
        .min_by_key(|&f| (inst.cost[f].iter().map(|&c| c as i128).sum::<i128>(), f))
        .expect("at least one facility");
    let mut open = vec![first];
    while open.len() < m {
        let next = (0..inst.num_facilities)
            .filter(|f| !open.contains(f))
            .max_by_key(|&f| (open.iter().map(|&g| dist(f, g)).min().unwrap(), std::cmp::Reverse(f)))
            .expect("m <= |F|");
        open.push(next);
    }
    open.sort_unstable();
    Ok(assign_to(inst, &open, config.penalty_mode)?)
}

/// All swap moves `(added, removed)` with `|added| = |removed| <= p`,
/// added drawn from the closed facilities and removed from the open ones,
/// in lexicographic (size, removed ids, added ids) order.
pub fn enumerate_moves(
    inst: &Instance,
    current: &Solution,
    p: usize,
) -> impl Iterator<Item = (Vec<usize>, Vec<usize>)> {
    let open: Vec<usize> = current.open.iter().copied().collect();
    let closed: Vec<usize> = (0..inst.num_facilities)
        .filter(|f| !current.open.contains(f))
        .collect();
    let max_size = p.min(open.len()).min(closed.len());
    (1..=max_size).flat_map(move |size| {
        let closed = closed.clone();
        open.clone()
            .into_iter()
            .combinations(size)
            .flat_map(move |removed| {
                closed
                    .clone()
                    .into_iter()
                    .combinations(size)
                    .map(move |added| (added, removed.clone()))
            })
    })
}

/// Cost of the candidate `S \ removed + added` under optimal reassignment.
pub fn evaluate_move(
    inst: &Instance,
    current: &Solution,
    added: &[usize],
    removed: &[usize],
    penalty_mode: bool,
) -> Result<Cost, SearchError> {
    if added.iter().any(|f| current.open.contains(f))
        || removed.iter().any(|f| !current.open.contains(f))
    {
        return Err(SearchError::InvalidMove);
    }
    let mut open: BTreeSet<usize> = current.open.clone();
    for f in removed {
        open.remove(f);
    }
    open.extend(added.iter().copied());
    let open: Vec<usize> = open.into_iter().collect();
    Ok(assign_to(inst, &open, penalty_mode)?.total_cost)
}

/// First-improvement local search from a seeded initial solution.
pub fn run(inst: &Instance, config: &SearchConfig) -> Result<(Solution, SearchTrace), SearchError> {
    let start = initial_solution(inst, config)?;
    run_from(inst, config, start)
}

/// `run` from a caller-supplied feasible starting solution.
pub fn run_from(
    inst: &Instance,
    config: &SearchConfig,
    start: Solution,
) -> Result<(Solution, SearchTrace), SearchError> {
    let mut current = start;
    let mut trace = SearchTrace::default();
    loop {
        if current.total_cost == 0 {
            break;
        }
        if let Some(cap) = config.max_iterations {
            if trace.steps.len() >= cap {
                trace.capped = true;
                break;
            }
        }
        let mut accepted = None;
        for (added, removed) in enumerate_moves(inst, &current, config.p) {
            let candidate = evaluate_move(inst, &current, &added, &removed, config.penalty_mode)?;
            if improves(candidate, current.total_cost, inst, config.epsilon) {
                accepted = Some((added, removed));
                break;
            }
        }
        let Some((added, removed)) = accepted else {
            break;
        };
        let mut open: BTreeSet<usize> = current.open.clone();
        for f in &removed {
            open.remove(f);
        }
        open.extend(added.iter().copied());
        let open: Vec<usize> = open.into_iter().collect();
        let next = assign_to(inst, &open, config.penalty_mode)?;
        trace.steps.push(TraceStep {
            removed,
            added,
            old_cost: current.total_cost,
            new_cost: next.total_cost,
        });
        current = next;
    }
    Ok((current, trace))
}

/// `run` in penalty mode; the instance must define penalties.
pub fn run_with_penalties(
    inst: &Instance,
    config: &SearchConfig,
) -> Result<(Solution, SearchTrace), SearchError> {
    if !inst.has_penalties() {
        return Err(SearchError::NoPenalties);
    }
    let config = SearchConfig {
        penalty_mode: true,
        ..config.clone()
    };
    run(inst, &config)
}
