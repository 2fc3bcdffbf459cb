//! Swap plan construction and the summed inequality chain.
//!
//! Every optimum must land in one to three swaps and every light
//! facility in at most three; heavy facilities in none. Per swap, the
//! value `Σ_{o∈B} T_o + Σ_{s∈A} SP(s)` must clear `−δ·cost(S)`, where
//! `T_o` re-prices o's clients and `SP(s)` reroutes s's clients through
//! τ. Summing the inequalities with those participation bounds and the
//! identity `Σ_s SP(s) = 2·Σ O_j` over light-served clients yields
//! `cost(S) ≤ 9·cost(O) + 3·|swaps|·δ·cost(S)`.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::certify::context::{
    build_context, check_structure_claims, AnalysisContext, CheckResult, ClaimReport,
};
use crate::certify::tau::{build_tau_all, check_tau, TauMapping, TauReport};
use crate::certify::CertifyError;
use crate::model::{Cost, Instance, OptimumRecord, Ratio, Solution};

/// One planned move: close `swap_out` (light facilities of S), open
/// `swap_in` (facilities of O).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Swap {
    pub swap_out: Vec<usize>,
    pub swap_in: Vec<usize>,
    pub inequality_value: i128,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SwapPlan {
    pub swaps: Vec<Swap>,
    pub participation_s: BTreeMap<usize, usize>,
    pub participation_o: BTreeMap<usize, usize>,
}

/// Everything evaluate_plan measures, serialized as the certificate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateReport {
    pub claims: ClaimReport,
    pub tau: TauReport,
    pub swaps: Vec<Swap>,
    pub participation_s: BTreeMap<usize, usize>,
    pub participation_o: BTreeMap<usize, usize>,
    pub participation_bounds: CheckResult,
    pub reassignment_terms: CheckResult,
    pub tau_identity: CheckResult,
    pub aggregation_identity: CheckResult,
    pub certified_bound: CheckResult,
    pub ratio_implied: CheckResult,
    pub chain_tight: bool,
    pub num_swaps: usize,
    pub cost_s: Cost,
    pub cost_o: Cost,
    pub delta_num: i64,
    pub delta_den: i64,
    pub measured_ratio: f64,
    pub ratio_bound: f64,
    pub certified: bool,
}

fn tau_image(ctx: &AnalysisContext, tau: &TauMapping, j: usize) -> usize {
    tau.image(ctx.sigma_o[j], j).unwrap_or(j)
}

/// T_o per optimum and SP(s) per light facility, in exact integers.
fn swap_values(
    ctx: &AnalysisContext,
    tau: &TauMapping,
) -> (BTreeMap<usize, i128>, BTreeMap<usize, i128>) {
    let mut t_val = BTreeMap::new();
    for &o in &ctx.o_open {
        let total: i128 = ctx
            .bo
            .get(&o)
            .map(|clients| {
                clients
                    .iter()
                    .map(|&j| ctx.o_cost[j] as i128 - ctx.s_cost[j] as i128)
                    .sum()
            })
            .unwrap_or(0);
        t_val.insert(o, total);
    }
    let mut sp_val = BTreeMap::new();
    for &s in &ctx.light {
        let total: i128 = ctx
            .bs
            .get(&s)
            .map(|clients| {
                clients
                    .iter()
                    .map(|&j| {
                        let t = tau_image(ctx, tau, j);
                        ctx.o_cost[j] as i128 + ctx.o_cost[t] as i128 + ctx.s_cost[t] as i128
                            - ctx.s_cost[j] as i128
                    })
                    .sum()
            })
            .unwrap_or(0);
        sp_val.insert(s, total);
    }
    (t_val, sp_val)
}

fn value_of(
    out: &[usize],
    into: &[usize],
    t_val: &BTreeMap<usize, i128>,
    sp_val: &BTreeMap<usize, i128>,
) -> i128 {
    let t: i128 = into.iter().map(|o| t_val.get(o).copied().unwrap_or(0)).sum();
    let sp: i128 = out.iter().map(|s| sp_val.get(s).copied().unwrap_or(0)).sum();
    t + sp
}

/// Builds the deterministic swap plan: double swaps for pairs dominating
/// two optima, single swaps for singly-dominating facilities, then the
/// leftover targets in batches of at most three served by a nice facility
/// or a bag triplet, and finally a single swap per unused bag triplet so
/// its own optimum is not left out.
pub fn build_swap_plan(
    ctx: &AnalysisContext,
    tau: &TauMapping,
) -> Result<SwapPlan, CertifyError> {
    if 3 * (ctx.bag.len() + ctx.s_n.len()) < ctx.ell {
        return Err(CertifyError::Claim7Violated {
            targets: ctx.ell,
            bags: ctx.bag.len(),
            nice: ctx.s_n.len(),
        });
    }
    let (t_val, sp_val) = swap_values(ctx, tau);
    let mut swaps = Vec::new();
    let mut push = |out: Vec<usize>, into: Vec<usize>| {
        let inequality_value = value_of(&out, &into, &t_val, &sp_val);
        swaps.push(Swap {
            swap_out: out,
            swap_in: into,
            inequality_value,
        });
    };

    for &((s1, s2), (o1, o2)) in &ctx.good_pairs {
        push(vec![s1, s2], vec![o1, o2]);
    }
    for &(s, o) in &ctx.good_singles {
        push(vec![s], vec![o]);
    }

    let targets: Vec<usize> = ctx.t_set.iter().copied().collect();
    // Batch servers are interchangeable; the construction only fixes the
    // nice-before-bag order. Taking the strongest remaining server (largest
    // reassignment surplus) keeps the per-swap inequalities as slack as
    // possible when a batched optimum has a negative direct term.
    let mut nice_left: Vec<usize> = ctx.s_n.iter().copied().collect();
    nice_left.sort_by_key(|&s| (-sp_val.get(&s).copied().unwrap_or(0), s));
    let mut nice_left = nice_left.into_iter();
    let mut bag_left: Vec<(usize, usize, usize)> = ctx.bag.clone();
    bag_left.sort_by_key(|&(s1, s2, o1)| {
        let strength = t_val.get(&o1).copied().unwrap_or(0)
            + sp_val.get(&s1).copied().unwrap_or(0)
            + sp_val.get(&s2).copied().unwrap_or(0);
        (-strength, s1, s2)
    });
    let mut bag_left = bag_left.into_iter();
    let mut used_bags: BTreeSet<(usize, usize, usize)> = BTreeSet::new();
    for batch in targets.chunks(3) {
        if let Some(s) = nice_left.next() {
            for &o in batch {
                push(vec![s], vec![o]);
            }
        } else if let Some((s1, s2, o1)) = bag_left.next() {
            used_bags.insert((s1, s2, o1));
            for &o in batch {
                let mut into = vec![o1, o];
                into.sort_unstable();
                push(vec![s1, s2], into);
            }
        } else {
            return Err(CertifyError::Claim7Violated {
                targets: ctx.ell,
                bags: ctx.bag.len(),
                nice: ctx.s_n.len(),
            });
        }
    }
    for triple in &ctx.bag {
        if !used_bags.contains(triple) {
            push(vec![triple.0], vec![triple.2]);
        }
    }

    let mut plan = SwapPlan {
        swaps,
        ..SwapPlan::default()
    };
    for swap in &plan.swaps {
        for &s in &swap.swap_out {
            *plan.participation_s.entry(s).or_insert(0) += 1;
        }
        for &o in &swap.swap_in {
            *plan.participation_o.entry(o).or_insert(0) += 1;
        }
    }
    Ok(plan)
}

/// Re-derives the context, re-checks every component, verifies each swap
/// against the ε slack, and assembles the summed bound.
pub fn evaluate_plan(
    inst: &Instance,
    s: &Solution,
    o: &OptimumRecord,
    plan: &SwapPlan,
    tau: &TauMapping,
    delta_imp: Ratio,
) -> Result<CertificateReport, CertifyError> {
    let ctx = build_context(inst, s, o)?;
    let claims = check_structure_claims(&ctx);
    let tau_report = check_tau(&ctx, tau);
    let (t_val, sp_val) = swap_values(&ctx, tau);

    let cost_s = ctx.total_s as i128;
    let cost_o = ctx.total_o as i128;
    let num = delta_imp.num as i128;
    let den = delta_imp.den as i128;

    let mut total_value: i128 = 0;
    for (index, swap) in plan.swaps.iter().enumerate() {
        let value = value_of(&swap.swap_out, &swap.swap_in, &t_val, &sp_val);
        total_value += value;
        if value * den < -num * cost_s {
            return Err(CertifyError::LocalOptimalityViolated {
                index,
                value: value * den,
                slack: -num * cost_s,
            });
        }
    }

    let mut participation_s: BTreeMap<usize, usize> = BTreeMap::new();
    let mut participation_o: BTreeMap<usize, usize> = BTreeMap::new();
    for swap in &plan.swaps {
        for &f in &swap.swap_out {
            *participation_s.entry(f).or_insert(0) += 1;
        }
        for &f in &swap.swap_in {
            *participation_o.entry(f).or_insert(0) += 1;
        }
    }
    let mut participation_bounds = CheckResult::pass();
    for &o_id in &ctx.o_open {
        let n = participation_o.get(&o_id).copied().unwrap_or(0);
        if !(1..=3).contains(&n) {
            participation_bounds =
                CheckResult::fail(format!("optimum {o_id} participates in {n} swaps"));
            break;
        }
    }
    if participation_bounds.pass {
        for (&s_id, &n) in &participation_s {
            if n > 3 || ctx.heavy.contains(&s_id) || !ctx.s_open.contains(&s_id) {
                participation_bounds = CheckResult::fail(format!(
                    "facility {s_id} participates in {n} swaps (heavy: {})",
                    ctx.heavy.contains(&s_id)
                ));
                break;
            }
        }
    }

    let mut reassignment_terms = CheckResult::pass();
    'terms: for &s_id in &ctx.light {
        let Some(clients) = ctx.bs.get(&s_id) else {
            continue;
        };
        for &j in clients {
            let t = tau_image(&ctx, tau, j);
            let term = ctx.o_cost[j] as i128 + ctx.o_cost[t] as i128 + ctx.s_cost[t] as i128
                - ctx.s_cost[j] as i128;
            if term < 0 {
                reassignment_terms = CheckResult::fail(format!(
                    "client {j} served by {s_id} has negative reroute value {term}"
                ));
                break 'terms;
            }
        }
    }

    let light_opt_cost: i128 = (0..inst.num_clients)
        .filter(|&j| ctx.light.contains(&ctx.sigma_s[j]))
        .map(|j| ctx.o_cost[j] as i128)
        .sum();
    let sp_total: i128 = sp_val.values().sum();
    let tau_identity = if sp_total == 2 * light_opt_cost {
        CheckResult::pass()
    } else {
        CheckResult::fail(format!(
            "reroute totals sum to {sp_total}, expected {}",
            2 * light_opt_cost
        ))
    };

    let weighted: i128 = participation_o
        .iter()
        .map(|(o_id, &n)| n as i128 * t_val.get(o_id).copied().unwrap_or(0))
        .sum::<i128>()
        + participation_s
            .iter()
            .map(|(s_id, &n)| n as i128 * sp_val.get(s_id).copied().unwrap_or(0))
            .sum::<i128>();
    let aggregation_identity = if weighted == total_value {
        CheckResult::pass()
    } else {
        CheckResult::fail(format!(
            "swap values sum to {total_value} but participation-weighted terms give {weighted}"
        ))
    };

    let n_swaps = plan.swaps.len() as i128;
    let slack = 3 * n_swaps * num * cost_s;
    let certified_bound = if cost_s * den <= 9 * cost_o * den + slack {
        CheckResult::pass()
    } else {
        CheckResult::fail(format!(
            "{cost_s}*{den} exceeds 9*{cost_o}*{den} + {slack}"
        ))
    };
    let chain_tight = cost_s * den <= 9 * cost_o * den + n_swaps * num * cost_s;

    let margin = den - 3 * n_swaps * num;
    let ratio_implied = if margin > 0 && cost_s * margin <= 9 * cost_o * den {
        CheckResult::pass()
    } else {
        CheckResult::fail(format!(
            "margin {margin} does not carry {cost_s} under 9*{cost_o}"
        ))
    };
    let measured_ratio = if cost_o == 0 {
        if cost_s == 0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        cost_s as f64 / cost_o as f64
    };
    let ratio_bound = if margin > 0 {
        9.0 * den as f64 / margin as f64
    } else {
        f64::INFINITY
    };

    let certified = claims.all_pass()
        && tau_report.all_pass()
        && participation_bounds.pass
        && reassignment_terms.pass
        && tau_identity.pass
        && aggregation_identity.pass
        && certified_bound.pass
        && ratio_implied.pass;

    Ok(CertificateReport {
        claims,
        tau: tau_report,
        swaps: plan.swaps.clone(),
        participation_s,
        participation_o,
        participation_bounds,
        reassignment_terms,
        tau_identity,
        aggregation_identity,
        certified_bound,
        ratio_implied,
        chain_tight,
        num_swaps: plan.swaps.len(),
        cost_s: ctx.total_s,
        cost_o: ctx.total_o,
        delta_num: delta_imp.num,
        delta_den: delta_imp.den,
        measured_ratio,
        ratio_bound,
        certified,
    })
}

/// Full pipeline: context, claims, τ, plan, evaluation.
pub fn certify(
    inst: &Instance,
    s: &Solution,
    o: &OptimumRecord,
    epsilon: Ratio,
) -> Result<CertificateReport, CertifyError> {
    let ctx = build_context(inst, s, o)?;
    let tau = build_tau_all(&ctx);
    let plan = build_swap_plan(&ctx, &tau)?;
    let scale = (inst.num_facilities + inst.num_clients) as i64;
    let delta_imp = Ratio::new(epsilon.num, epsilon.den.saturating_mul(scale))
        .unwrap_or(Ratio { num: 1, den: i64::MAX });
    evaluate_plan(inst, s, o, &plan, &tau, delta_imp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::assign_to;
    use crate::oracle::{exact_optimal, OracleBudget};
    use crate::search::{run, SearchConfig};

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

    fn eps() -> Ratio {
        Ratio::new(1, 100).unwrap()
    }

    #[test]
    fn identical_solutions_certify_at_ratio_one() {
        let i = inst(
            vec![vec![0, 5, 5], vec![5, 0, 5], vec![5, 5, 0]],
            3,
            3,
        );
        let (s, _) = run(&i, &SearchConfig::default()).unwrap();
        let o = exact_optimal(&i, 3, false, &OracleBudget::default()).unwrap();
        assert_eq!(s.total_cost, o.solution.total_cost);
        let report = certify(&i, &s, &o, eps()).unwrap();
        assert!(report.certified, "{report:?}");
        assert_eq!(report.measured_ratio, 1.0);
        for swap in &report.swaps {
            assert!(swap.inequality_value >= 0);
        }
    }

    #[test]
    fn bag_triplet_covers_its_own_optimum() {
        let mut cost = vec![vec![9i64; 10]; 3];
        for j in 0..5 {
            cost[0][j] = 0;
        }
        for j in 5..10 {
            cost[1][j] = 0;
        }
        cost[2] = vec![1; 10];
        let i = inst(cost, 10, 1);
        let (s, _) = run(&i, &SearchConfig::default()).unwrap();
        assert_eq!(s.total_cost, 0);
        let o = exact_optimal(&i, 1, false, &OracleBudget::default()).unwrap();
        let report = certify(&i, &s, &o, eps()).unwrap();
        assert!(report.certified, "{report:?}");
        assert_eq!(report.measured_ratio, 0.0);
        assert_eq!(report.swaps.len(), 1);
        assert_eq!(report.swaps[0].swap_out.len(), 1);
        assert_eq!(report.swaps[0].swap_in, vec![2]);
        assert_eq!(report.participation_o.get(&2), Some(&1));
    }

    #[test]
    fn forged_improving_swap_is_rejected() {
        let i = inst(vec![vec![5, 5], vec![0, 0]], 5, 1);
        let s = assign_to(&i, &[0], false).unwrap();
        let o = exact_optimal(&i, 1, false, &OracleBudget::default()).unwrap();
        assert_eq!(o.solution.open, BTreeSet::from([1]));
        assert!(matches!(
            certify(&i, &s, &o, eps()),
            Err(CertifyError::LocalOptimalityViolated { .. })
        ));
    }

    #[test]
    fn forged_all_heavy_solution_fails_the_counting() {
        let i = inst(
            vec![vec![1, 1, 9, 9], vec![9, 9, 1, 1], vec![0, 0, 8, 8], vec![8, 8, 0, 0]],
            2,
            2,
        );
        let s = assign_to(&i, &[0, 1], false).unwrap();
        let o = exact_optimal(&i, 2, false, &OracleBudget::default()).unwrap();
        assert!(matches!(
            certify(&i, &s, &o, eps()),
            Err(CertifyError::Claim7Violated { .. })
        ));
    }

    #[test]
    fn forged_bad_single_is_served_by_nice_batches() {
        let mut ctx = AnalysisContext::default();
        ctx.light = BTreeSet::from([0, 1]);
        ctx.s_b = BTreeSet::from([0]);
        ctx.o_b = BTreeSet::from([2, 3]);
        ctx.s_n = BTreeSet::from([1]);
        ctx.t_set = BTreeSet::from([2, 3]);
        ctx.ell = 2;
        ctx.o_open = BTreeSet::from([2, 3]);
        let plan = build_swap_plan(&ctx, &TauMapping::default()).unwrap();
        let shapes: Vec<(Vec<usize>, Vec<usize>)> = plan
            .swaps
            .iter()
            .map(|w| (w.swap_out.clone(), w.swap_in.clone()))
            .collect();
        assert_eq!(shapes, vec![(vec![1], vec![2]), (vec![1], vec![3])]);
        assert_eq!(plan.participation_s.get(&1), Some(&2));
        assert_eq!(plan.participation_s.get(&0), None);
    }

    #[test]
    fn forged_counting_shortfall_raises_claim7() {
        let mut ctx = AnalysisContext::default();
        ctx.t_set = (0..7).collect();
        ctx.ell = 7;
        ctx.s_n = BTreeSet::from([9, 10]);
        let err = build_swap_plan(&ctx, &TauMapping::default()).unwrap_err();
        assert!(err.to_string().contains("claim 7 violated"));
    }

    #[test]
    fn forged_consumed_bag_serves_batch_with_double_swaps() {
        let mut ctx = AnalysisContext::default();
        ctx.bag = vec![(0, 1, 5)];
        ctx.s_bag = BTreeSet::from([0, 1]);
        ctx.o_bag = BTreeSet::from([5]);
        ctx.t_set = BTreeSet::from([7]);
        ctx.ell = 1;
        ctx.o_open = BTreeSet::from([5, 7]);
        let plan = build_swap_plan(&ctx, &TauMapping::default()).unwrap();
        let shapes: Vec<(Vec<usize>, Vec<usize>)> = plan
            .swaps
            .iter()
            .map(|w| (w.swap_out.clone(), w.swap_in.clone()))
            .collect();
        assert_eq!(shapes, vec![(vec![0, 1], vec![5, 7])]);
        assert_eq!(plan.participation_o.get(&5), Some(&1));
    }

    #[test]
    fn forged_idle_bag_gets_a_single_swap() {
        let mut ctx = AnalysisContext::default();
        ctx.bag = vec![(0, 1, 5)];
        ctx.s_bag = BTreeSet::from([0, 1]);
        ctx.o_bag = BTreeSet::from([5]);
        ctx.o_open = BTreeSet::from([5]);
        let plan = build_swap_plan(&ctx, &TauMapping::default()).unwrap();
        let shapes: Vec<(Vec<usize>, Vec<usize>)> = plan
            .swaps
            .iter()
            .map(|w| (w.swap_out.clone(), w.swap_in.clone()))
            .collect();
        assert_eq!(shapes, vec![(vec![0], vec![5])]);
    }

    #[test]
    fn randomized_runs_certify_cleanly() {
        let base = vec![
            vec![0, 1, 6, 7, 9, 9],
            vec![9, 8, 1, 0, 7, 6],
            vec![7, 6, 8, 7, 0, 1],
            vec![1, 2, 5, 6, 8, 9],
            vec![8, 8, 2, 1, 6, 5],
        ];
        let i = inst(base, 3, 2);
        for seed in 0..6u64 {
            let config = SearchConfig {
                seed,
                ..SearchConfig::default()
            };
            let (s, _) = run(&i, &config).unwrap();
            let o = exact_optimal(&i, 2, false, &OracleBudget::default()).unwrap();
            let report = certify(&i, &s, &o, eps()).unwrap();
            assert!(report.certified, "seed {seed}: {report:?}");
            assert!(report.measured_ratio <= report.ratio_bound);
        }
    }
}
