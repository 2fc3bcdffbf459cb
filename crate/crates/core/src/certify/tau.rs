//! Client remapping within each optimum's light-served ball.
//!
//! For each optimum `o`, the clients of B_O^L(o) are listed in blocks,
//! one block per serving unit (a single light facility, or a covering
//! pair treated as one meta-facility), blocks ordered by smallest member
//! id and clients by id inside each block. The map sends position `i` to
//! position `i + ⌊M_o/2⌋ (mod M_o)`. A unit that does not dominate `o`
//! owns at most ⌊M_o/2⌋ consecutive slots, so its block lands entirely
//! outside itself.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::certify::context::{AnalysisContext, CheckResult};

/// Per-optimum client permutations plus the pairs fused for the mapping.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TauMapping {
    pub per_o: BTreeMap<usize, BTreeMap<usize, usize>>,
    pub meta_pairs: Vec<(usize, usize)>,
}

impl TauMapping {
    /// τ(j) for a client j served in S by a light facility.
    pub fn image(&self, o: usize, j: usize) -> Option<usize> {
        self.per_o.get(&o).and_then(|m| m.get(&j)).copied()
    }
}

/// Verdicts for bijectivity and the two displacement properties.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TauReport {
    pub bijective: CheckResult,
    pub property1: CheckResult,
    pub property2: CheckResult,
}

impl TauReport {
    pub fn all_pass(&self) -> bool {
        self.bijective.pass && self.property1.pass && self.property2.pass
    }
}

/// Pairs fused into meta-facilities: every pair attached to an o_sp
/// member that is not a bad pair (double-swapped pairs and bag pairs).
pub fn planned_meta_pairs(ctx: &AnalysisContext) -> Vec<(usize, usize)> {
    let mut pairs: Vec<(usize, usize)> = ctx
        .good_pairs
        .iter()
        .map(|&(p, _)| p)
        .chain(ctx.bag.iter().map(|&(s1, s2, _)| (s1, s2)))
        .collect();
    pairs.sort_unstable();
    pairs.dedup();
    pairs
}

fn unit_of(s: usize, meta_pairs: &[(usize, usize)]) -> (usize, Vec<usize>) {
    for &(s1, s2) in meta_pairs {
        if s == s1 || s == s2 {
            return (s1, vec![s1, s2]);
        }
    }
    (s, vec![s])
}

/// The permutation on B_O^L(o): blocks by unit, shifted by ⌊M_o/2⌋.
pub fn build_tau(
    ctx: &AnalysisContext,
    o: usize,
    meta_pairs: &[(usize, usize)],
) -> BTreeMap<usize, usize> {
    let Some(clients) = ctx.bol.get(&o) else {
        return BTreeMap::new();
    };
    let mut units: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &j in clients {
        let (key, members) = unit_of(ctx.sigma_s[j], meta_pairs);
        units.entry(key).or_insert_with(|| {
            members
                .iter()
                .filter_map(|member| ctx.ball_clients.get(&(*member, o)))
                .flatten()
                .copied()
                .collect()
        });
    }
    let order: Vec<usize> = units.into_values().flatten().collect();
    let m = order.len();
    let shift = m / 2;
    order
        .iter()
        .enumerate()
        .map(|(i, &j)| (j, order[(i + shift) % m]))
        .collect()
}

/// τ for every optimum, with meta pairs taken from the plan families.
pub fn build_tau_all(ctx: &AnalysisContext) -> TauMapping {
    let meta_pairs = planned_meta_pairs(ctx);
    let per_o = ctx
        .o_open
        .iter()
        .map(|&o| (o, build_tau(ctx, o, &meta_pairs)))
        .collect();
    TauMapping { per_o, meta_pairs }
}

fn ball_of_unit(ctx: &AnalysisContext, unit: &[usize], o: usize) -> BTreeSet<usize> {
    unit.iter()
        .flat_map(|&s| {
            ctx.ball_clients
                .get(&(s, o))
                .map(|v| v.iter().copied())
                .into_iter()
                .flatten()
        })
        .collect()
}

/// Checks bijectivity per optimum, self-avoidance for non-dominating
/// units, and the 2U/5 cap on how much of one unit's ball can land in any
/// other single facility's ball when o is not doubly covered.
pub fn check_tau(ctx: &AnalysisContext, tau: &TauMapping) -> TauReport {
    let mut bijective = CheckResult::pass();
    let mut property1 = CheckResult::pass();
    let mut property2 = CheckResult::pass();

    for (&o, map) in &tau.per_o {
        let universe: BTreeSet<usize> = ctx
            .bol
            .get(&o)
            .map(|v| v.iter().copied().collect())
            .unwrap_or_default();
        let keys: BTreeSet<usize> = map.keys().copied().collect();
        let values: BTreeSet<usize> = map.values().copied().collect();
        if bijective.pass && (keys != universe || values != universe) {
            bijective = CheckResult::fail(format!(
                "map for optimum {o} is not a permutation of its shared clients"
            ));
        }

        let mut units: BTreeSet<(usize, Vec<usize>)> = BTreeSet::new();
        for &j in &universe {
            units.insert(unit_of(ctx.sigma_s[j], &tau.meta_pairs));
        }
        for (_, unit) in &units {
            let ball = ball_of_unit(ctx, unit, o);
            if ball.is_empty() {
                continue;
            }
            let image: BTreeSet<usize> = ball
                .iter()
                .filter_map(|&j| map.get(&j).copied())
                .collect();
            if property1.pass && !ctx.dominates_set(unit, o) {
                if let Some(j) = image.intersection(&ball).next() {
                    property1 = CheckResult::fail(format!(
                        "unit {unit:?} does not dominate optimum {o} yet client {j} maps back into it"
                    ));
                }
            }
            if property2.pass && !ctx.o_sp.contains(&o) {
                for &s_prime in &ctx.light {
                    if unit.contains(&s_prime) {
                        continue;
                    }
                    let target = ball_of_unit(ctx, &[s_prime], o);
                    let landed = image.intersection(&target).count();
                    if 5 * landed as i64 > 2 * ctx.capacity {
                        property2 = CheckResult::fail(format!(
                            "unit {unit:?} sends {landed} clients of optimum {o} into facility {s_prime}"
                        ));
                        break;
                    }
                }
            }
        }
    }

    TauReport {
        bijective,
        property1,
        property2,
    }
}
