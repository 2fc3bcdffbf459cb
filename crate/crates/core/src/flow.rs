//! Optimal capacitated assignment of clients to an open facility set,
//! computed as a min-cost flow with successive shortest augmenting paths
//! and node potentials.
//!
//! Node layout: source, one node per client, one node per open facility
//! (ascending facility id), the optional penalty node, sink. All node and
//! arc orderings are fixed, so solves are deterministic.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use thiserror::Error;

use crate::model::{Assign, Cost, Instance, Solution};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FlowError {
    #[error("insufficient capacity: {open} open facilities of capacity {capacity} cannot serve {clients} clients")]
    InsufficientCapacity {
        open: usize,
        capacity: i64,
        clients: usize,
    },
    #[error("no augmenting path; assignment infeasible")]
    Unassignable,
    #[error("facility {0} out of range")]
    FacilityOutOfRange(usize),
}

#[derive(Debug, Clone)]
struct Arc {
    to: usize,
    rev: usize,
    cap: i64,
    cost: i64,
}

/// Bipartite assignment network over one open facility set.
#[derive(Debug, Clone)]
pub struct FlowNetwork {
    adj: Vec<Vec<Arc>>,
    source: usize,
    sink: usize,
    delta: Option<usize>,
    open_ids: Vec<usize>,
    num_clients: usize,
    arc_count: usize,
}

impl FlowNetwork {
    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    /// Number of forward arcs (residual twins excluded).
    pub fn arc_count(&self) -> usize {
        self.arc_count
    }

    fn client_node(&self, client: usize) -> usize {
        1 + client
    }

    fn facility_node(&self, open_index: usize) -> usize {
        1 + self.num_clients + open_index
    }

    fn add_arc(&mut self, from: usize, to: usize, cap: i64, cost: i64) {
        let rev_from = self.adj[to].len();
        let rev_to = self.adj[from].len();
        self.adj[from].push(Arc { to, rev: rev_from, cap, cost });
        self.adj[to].push(Arc { to: from, rev: rev_to, cap: 0, cost: -cost });
        self.arc_count += 1;
    }
}

/// Builds the assignment network for `open`. In penalty mode every client
/// gains an escape arc to the penalty node, which drains to the sink.
pub fn build_network(
    inst: &Instance,
    open: &[usize],
    penalty_mode: bool,
) -> Result<FlowNetwork, FlowError> {
    for &f in open {
        if f >= inst.num_facilities {
            return Err(FlowError::FacilityOutOfRange(f));
        }
    }
    let mut open_ids: Vec<usize> = open.to_vec();
    open_ids.sort_unstable();
    open_ids.dedup();
    let clients = inst.num_clients;
    if !penalty_mode && (open_ids.len() as i64) * inst.capacity < clients as i64 {
        return Err(FlowError::InsufficientCapacity {
            open: open_ids.len(),
            capacity: inst.capacity,
            clients,
        });
    }
    let delta_nodes = usize::from(penalty_mode);
    let node_count = 2 + clients + open_ids.len() + delta_nodes;
    let mut net = FlowNetwork {
        adj: vec![Vec::new(); node_count],
        source: 0,
        sink: node_count - 1,
        delta: penalty_mode.then_some(node_count - 2),
        open_ids,
        num_clients: clients,
        arc_count: 0,
    };
    let ids = net.open_ids.clone();
    for j in 0..clients {
        net.add_arc(net.source, net.client_node(j), 1, 0);
    }
    for j in 0..clients {
        for (idx, &f) in ids.iter().enumerate() {
            net.add_arc(net.client_node(j), net.facility_node(idx), 1, inst.cost[f][j]);
        }
        if let Some(delta) = net.delta {
            net.add_arc(net.client_node(j), delta, 1, inst.penalty(j));
        }
    }
    for idx in 0..net.open_ids.len() {
        net.add_arc(net.facility_node(idx), net.sink, inst.capacity, 0);
    }
    if let Some(delta) = net.delta {
        net.add_arc(delta, net.sink, clients as i64, 0);
    }
    Ok(net)
}

/// Minimum-cost integral assignment of every client; ties are resolved
/// deterministically by the fixed arc order and smallest-node-id paths.
pub fn min_cost_assignment(net: &FlowNetwork) -> Result<(Vec<Assign>, Cost), FlowError> {
    let mut net = net.clone();
    let n = net.node_count();
    let (source, sink) = (net.source, net.sink);
    let mut potential = vec![0i64; n];
    let mut total_cost: i64 = 0;
    const INF: i64 = i64::MAX / 4;

    for _ in 0..net.num_clients {
        let mut dist = vec![INF; n];
        let mut prev: Vec<Option<(usize, usize)>> = vec![None; n];
        let mut heap = BinaryHeap::new();
        dist[source] = 0;
        heap.push(Reverse((0i64, source)));
        while let Some(Reverse((d, u))) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            for (i, arc) in net.adj[u].iter().enumerate() {
                if arc.cap <= 0 {
                    continue;
                }
                let nd = d + arc.cost + potential[u] - potential[arc.to];
                if nd < dist[arc.to] {
                    dist[arc.to] = nd;
                    prev[arc.to] = Some((u, i));
                    heap.push(Reverse((nd, arc.to)));
                }
            }
        }
        if dist[sink] >= INF {
            return Err(FlowError::Unassignable);
        }
        for v in 0..n {
            if dist[v] < INF {
                potential[v] += dist[v];
            }
        }
        let mut bottleneck = i64::MAX;
        let mut v = sink;
        while let Some((u, i)) = prev[v] {
            bottleneck = bottleneck.min(net.adj[u][i].cap);
            v = u;
        }
        let mut v = sink;
        while let Some((u, i)) = prev[v] {
            let rev = net.adj[u][i].rev;
            net.adj[u][i].cap -= bottleneck;
            net.adj[v][rev].cap += bottleneck;
            total_cost += bottleneck * net.adj[u][i].cost;
            v = u;
        }
    }

    let mut assign = Vec::with_capacity(net.num_clients);
    for j in 0..net.num_clients {
        let node = net.client_node(j);
        let used = net.adj[node]
            .iter()
            .find(|arc| arc.to != source && arc.cost >= 0 && arc.cap == 0)
            .ok_or(FlowError::Unassignable)?;
        if Some(used.to) == net.delta {
            assign.push(Assign::Penalty);
        } else {
            let idx = used.to - 1 - net.num_clients;
            assign.push(Assign::Facility(net.open_ids[idx]));
        }
    }
    Ok((assign, total_cost))
}

/// Opens `open` and assigns every client optimally.
pub fn assign_to(
    inst: &Instance,
    open: &[usize],
    penalty_mode: bool,
) -> Result<Solution, FlowError> {
    let net = build_network(inst, open, penalty_mode)?;
    let (assign, total_cost) = min_cost_assignment(&net)?;
    Ok(Solution {
        open: open.iter().copied().collect(),
        assign,
        total_cost,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(cost: Vec<Vec<Cost>>, capacity: i64) -> Instance {
        let num_facilities = cost.len();
        let num_clients = cost.first().map_or(0, |r| r.len());
        Instance {
            num_facilities,
            num_clients,
            capacity,
            k: 1,
            metric: false,
            cost,
            penalties: None,
        }
    }

    #[test]
    fn network_shape_pure_and_penalty() {
        let mut i = inst(vec![vec![1, 2, 3], vec![4, 5, 6]], 2);
        let net = build_network(&i, &[0, 1], false).unwrap();
        assert_eq!(net.node_count(), 7);
        assert_eq!(net.arc_count(), 11);
        i.penalties = Some(vec![1, 1, 1]);
        let net = build_network(&i, &[0, 1], true).unwrap();
        assert_eq!(net.node_count(), 8);
        assert_eq!(net.arc_count(), 15);
    }

    #[test]
    fn insufficient_capacity_is_rejected() {
        let i = inst(vec![vec![1, 2, 3]], 2);
        assert_eq!(
            build_network(&i, &[0], false).unwrap_err(),
            FlowError::InsufficientCapacity {
                open: 1,
                capacity: 2,
                clients: 3,
            }
        );
    }

    #[test]
    fn picks_cheaper_perfect_matching() {
        let i = inst(vec![vec![1, 2], vec![2, 4]], 1);
        let sol = assign_to(&i, &[0, 1], false).unwrap();
        assert_eq!(sol.total_cost, 4);
        assert_eq!(sol.assign, vec![Assign::Facility(1), Assign::Facility(0)]);
    }

    #[test]
    fn single_roomy_facility_takes_everyone() {
        let i = inst(vec![vec![3, 1, 4, 1]], 4);
        let sol = assign_to(&i, &[0], false).unwrap();
        assert_eq!(sol.total_cost, 9);
        assert!(sol.assign.iter().all(|a| *a == Assign::Facility(0)));
    }

    #[test]
    fn penalty_cheaper_than_connection() {
        let mut i = inst(vec![vec![10]], 1);
        i.penalties = Some(vec![3]);
        let sol = assign_to(&i, &[0], true).unwrap();
        assert_eq!(sol.total_cost, 3);
        assert_eq!(sol.assign, vec![Assign::Penalty]);
    }

    #[test]
    fn penalty_cost_never_exceeds_penalty_sum() {
        let mut i = inst(vec![vec![10, 1], vec![2, 9]], 1);
        i.penalties = Some(vec![4, 5]);
        let sol = assign_to(&i, &[0, 1], true).unwrap();
        assert!(sol.total_cost <= 9);
        assert_eq!(sol.total_cost, 3);
    }

    #[test]
    fn adding_a_facility_never_hurts() {
        let i = inst(vec![vec![5, 5, 5], vec![1, 9, 9], vec![9, 1, 1]], 2);
        let base = assign_to(&i, &[0, 1], false).unwrap().total_cost;
        let more = assign_to(&i, &[0, 1, 2], false).unwrap().total_cost;
        assert!(more <= base);
    }

    #[test]
    fn solution_is_structurally_consistent() {
        let i = inst(vec![vec![2, 7, 3], vec![8, 1, 6]], 2);
        let sol = assign_to(&i, &[0, 1], false).unwrap();
        assert_eq!(crate::model::cost_of(&i, &sol), Ok(sol.total_cost));
    }
}
