//! Partition of the leftover facilities into matched groups.
//!
//! The facilities that did not pair off cleanly (`T_soln`, solution side)
//! and the optima they must account for (`T_opt`) are split into parts
//! `A_1..A_r` / `B_1..B_r`. Each early part grows around exactly one bad
//! facility or bad pair, absorbing triplet and nice facilities until the
//! group dominates as many optima as it has members; the final part takes
//! whatever remains.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::certify::context::AnalysisContext;
use crate::certify::CertifyError;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct PartitionResult {
    pub a_parts: Vec<Vec<usize>>,
    pub b_parts: Vec<Vec<usize>>,
}

fn t_opt(ctx: &AnalysisContext) -> BTreeSet<usize> {
    ctx.o_bag
        .iter()
        .chain(&ctx.o_hat)
        .chain(&ctx.o_b)
        .chain(&ctx.o_n)
        .copied()
        .collect()
}

fn t_soln(ctx: &AnalysisContext) -> BTreeSet<usize> {
    ctx.s_bag
        .iter()
        .chain(&ctx.s_hat)
        .chain(&ctx.s_b)
        .chain(&ctx.s_n)
        .copied()
        .collect()
}

fn dom_of(ctx: &AnalysisContext, members: &[usize]) -> BTreeSet<usize> {
    ctx.o_open
        .iter()
        .copied()
        .filter(|&o| ctx.dominates_set(members, o))
        .collect()
}

/// Bad singles and bad pairs merged into one list, ascending by their
/// smallest member.
fn bad_units(ctx: &AnalysisContext) -> Vec<Vec<usize>> {
    let mut units: Vec<Vec<usize>> = ctx.s_b.iter().map(|&s| vec![s]).collect();
    for &(s1, s2) in &ctx.bad_pairs {
        let mut pair = vec![s1, s2];
        pair.sort_unstable();
        units.push(pair);
    }
    units.sort();
    units
}

/// Runs the grouping: one part per bad unit, greedily filled with the
/// smallest available triplet or nice facility until the part dominates
/// exactly as many optima as it has members, then the remainder.
pub fn partition_ts(ctx: &AnalysisContext) -> Result<PartitionResult, CertifyError> {
    let mut opt_left = t_opt(ctx);
    let mut soln_left = t_soln(ctx);
    let filler_pool: BTreeSet<usize> = ctx.s_bag.union(&ctx.s_n).copied().collect();

    let mut result = PartitionResult::default();
    for unit in bad_units(ctx) {
        let part = result.a_parts.len();
        let mut a: BTreeSet<usize> = unit.into_iter().collect();
        let mut b = dom_of(ctx, &a.iter().copied().collect::<Vec<_>>());
        while a.len() != b.len() {
            let filler = soln_left
                .iter()
                .copied()
                .find(|s| filler_pool.contains(s) && !a.contains(s));
            let Some(g) = filler else {
                return Err(CertifyError::PartitionStuck { part });
            };
            a.insert(g);
            b = dom_of(ctx, &a.iter().copied().collect::<Vec<_>>());
        }
        for o in &b {
            opt_left.remove(o);
        }
        for s in &a {
            soln_left.remove(s);
        }
        result.a_parts.push(a.into_iter().collect());
        result.b_parts.push(b.into_iter().collect());
    }
    result.a_parts.push(soln_left.into_iter().collect());
    result.b_parts.push(opt_left.into_iter().collect());
    Ok(result)
}

/// Re-checks every invariant of a partition against its context,
/// returning one line per violation.
pub fn check_partition(ctx: &AnalysisContext, result: &PartitionResult) -> Vec<String> {
    let mut violations = Vec::new();
    if result.a_parts.len() != result.b_parts.len() {
        violations.push(format!(
            "{} solution parts but {} optimum parts",
            result.a_parts.len(),
            result.b_parts.len()
        ));
        return violations;
    }
    let Some(r) = result.a_parts.len().checked_sub(1) else {
        violations.push("no parts at all".to_string());
        return violations;
    };

    for i in 0..r {
        let a = &result.a_parts[i];
        let b = &result.b_parts[i];
        if a.len() != b.len() {
            violations.push(format!("part {i}: |A| = {} but |B| = {}", a.len(), b.len()));
        }
        let expected: Vec<usize> = dom_of(ctx, a).into_iter().collect();
        if *b != expected {
            violations.push(format!(
                "part {i}: B is {b:?} but A dominates {expected:?}"
            ));
        }
        let singles = a.iter().filter(|s| ctx.s_b.contains(s)).count();
        let pairs = ctx
            .bad_pairs
            .iter()
            .filter(|(s1, s2)| a.contains(s1) && a.contains(s2))
            .count();
        if singles + pairs != 1 {
            violations.push(format!(
                "part {i}: {singles} bad facilities and {pairs} bad pairs, expected exactly one unit"
            ));
        }
    }

    for &s in &result.a_parts[r] {
        if !ctx.s_bag.contains(&s) && !ctx.s_n.contains(&s) {
            violations.push(format!(
                "remainder part contains facility {s} outside the triplet and nice pools"
            ));
        }
    }

    let mut seen_s: BTreeSet<usize> = BTreeSet::new();
    for (i, a) in result.a_parts.iter().enumerate() {
        for &s in a {
            if !seen_s.insert(s) {
                violations.push(format!("facility {s} appears in more than one part (part {i})"));
            }
        }
    }
    let expected_soln = t_soln(ctx);
    if seen_s != expected_soln {
        violations.push(format!(
            "solution parts cover {seen_s:?}, expected {expected_soln:?}"
        ));
    }
    let mut seen_o: BTreeSet<usize> = BTreeSet::new();
    for (i, b) in result.b_parts.iter().enumerate() {
        for &o in b {
            if !seen_o.insert(o) {
                violations.push(format!("optimum {o} appears in more than one part (part {i})"));
            }
            if !ctx.o_open.contains(&o) {
                violations.push(format!("part {i} lists {o}, which is not an optimum facility"));
            }
        }
    }
    for o in t_opt(ctx).difference(&seen_o) {
        violations.push(format!("optimum {o} is missing from every part"));
    }
    violations
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certify::context::build_context;
    use crate::flow::assign_to;
    use crate::model::{Cost, Instance, OptimumRecord};
    use crate::oracle::{exact_optimal, OracleBudget};
    use std::collections::{BTreeMap, BTreeSet};

    fn inst(cost: Vec<Vec<Cost>>, capacity: i64, k: usize) -> Instance {
        let num_facilities = cost.len();
        let num_clients = cost.first().map_or(0, |r| r.len());
        Instance {
            num_facilities,
            num_clients,
            capacity,
            k,
            metric: true,
            cost,
            penalties: None,
        }
    }

    fn optimum(inst: &Instance, k: usize) -> OptimumRecord {
        exact_optimal(inst, k, false, &OracleBudget::default()).unwrap()
    }

    #[test]
    fn no_bad_units_yields_single_remainder_part() {
        let i = inst(vec![vec![0, 0], vec![1, 1]], 2, 1);
        let s = assign_to(&i, &[0, 1], false).unwrap();
        let o = optimum(&i, 1);
        let ctx = build_context(&i, &s, &o).unwrap();
        assert!(ctx.s_b.is_empty() && ctx.bad_pairs.is_empty());
        let result = partition_ts(&ctx).unwrap();
        assert_eq!(result.a_parts, vec![vec![1]]);
        assert_eq!(result.b_parts, vec![vec![0]]);
        assert!(check_partition(&ctx, &result).is_empty());
    }

    #[test]
    fn bad_facility_absorbs_the_nice_filler() {
        let i = inst(
            vec![vec![2, 2], vec![5, 5], vec![1, 9], vec![9, 1]],
            4,
            2,
        );
        let s = assign_to(&i, &[0, 1], false).unwrap();
        let o = optimum(&i, 2);
        let ctx = build_context(&i, &s, &o).unwrap();
        assert_eq!(ctx.s_b, BTreeSet::from([0]));
        assert_eq!(ctx.s_n, BTreeSet::from([1]));
        let result = partition_ts(&ctx).unwrap();
        assert_eq!(result.a_parts, vec![vec![0, 1], vec![]]);
        assert_eq!(result.b_parts, vec![vec![2, 3], vec![]]);
        assert!(check_partition(&ctx, &result).is_empty());
    }

    #[test]
    fn forged_bad_pair_seeds_its_own_part() {
        let mut ctx = AnalysisContext::default();
        ctx.bad_pairs = vec![(0, 1)];
        ctx.s_hat = BTreeSet::from([0, 1]);
        ctx.s_n = BTreeSet::from([2]);
        ctx.o_hat = BTreeSet::from([5, 6, 7]);
        ctx.o_open = BTreeSet::from([5, 6, 7]);
        for o in [5, 6, 7] {
            ctx.shared_light.insert(o, 3);
            for s in [0, 1, 2] {
                ctx.ball.insert((s, o), 1);
            }
        }
        let result = partition_ts(&ctx).unwrap();
        assert_eq!(result.a_parts, vec![vec![0, 1, 2], vec![]]);
        assert_eq!(result.b_parts, vec![vec![5, 6, 7], vec![]]);
        assert!(check_partition(&ctx, &result).is_empty());
    }

    #[test]
    fn forged_filler_shortage_reports_stuck() {
        let mut ctx = AnalysisContext::default();
        ctx.s_b = BTreeSet::from([0]);
        ctx.o_b = BTreeSet::from([5, 6]);
        ctx.o_open = BTreeSet::from([5, 6]);
        ctx.shared_light = BTreeMap::from([(5, 1), (6, 1)]);
        ctx.ball = BTreeMap::from([((0, 5), 1), ((0, 6), 1)]);
        let err = partition_ts(&ctx).unwrap_err();
        assert_eq!(err, CertifyError::PartitionStuck { part: 0 });
        assert!(err.to_string().contains("partition stuck"));
    }

    #[test]
    fn tampered_result_is_reported() {
        let i = inst(
            vec![vec![2, 2], vec![5, 5], vec![1, 9], vec![9, 1]],
            4,
            2,
        );
        let s = assign_to(&i, &[0, 1], false).unwrap();
        let o = optimum(&i, 2);
        let ctx = build_context(&i, &s, &o).unwrap();
        let mut result = partition_ts(&ctx).unwrap();
        result.b_parts[0] = vec![2];
        let violations = check_partition(&ctx, &result);
        assert!(violations.iter().any(|v| v.contains("|A| = 2 but |B| = 1")));
        assert!(violations.iter().any(|v| v.contains("missing from every part")));
    }
}
