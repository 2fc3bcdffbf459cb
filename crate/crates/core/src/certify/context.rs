//! Structural decomposition of an (S, O) solution pair.
//!
//! Thresholds are fractional (3U/5, 2U/5, M_o/2) and are compared by
//! cross-multiplication so the whole module stays in integer arithmetic.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::certify::CertifyError;
use crate::model::{Assign, Cost, Instance, OptimumRecord, Solution};

/// One verdict with an optional failure witness.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CheckResult {
    pub pass: bool,
    pub witness: Option<String>,
}

impl CheckResult {
    pub fn pass() -> Self {
        CheckResult {
            pass: true,
            witness: None,
        }
    }

    pub fn fail(witness: String) -> Self {
        CheckResult {
            pass: false,
            witness: Some(witness),
        }
    }
}

/// Disjointness checks over the derived facility families.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClaimReport {
    pub claim3: CheckResult,
    pub claim4: CheckResult,
    pub claim5: CheckResult,
}

impl ClaimReport {
    pub fn all_pass(&self) -> bool {
        self.claim3.pass && self.claim4.pass && self.claim5.pass
    }
}

/// Everything the certifier derives from a concrete (S, O) pair.
///
/// `S` facilities split into heavy and light by load; optima are grouped
/// by who dominates or covers them; the special optima (`o_sp`, covered by
/// exactly two light facilities) are triaged by the size of their pair's
/// dominated set into bag, double-swap, and hat families; remaining light
/// singles triage into good, bad, and nice. `t_set` collects the optima
/// that still need a server after the direct swaps.
#[derive(Debug, Clone, Default)]
pub struct AnalysisContext {
    pub capacity: i64,
    pub s_open: BTreeSet<usize>,
    pub o_open: BTreeSet<usize>,
    pub sigma_s: Vec<usize>,
    pub sigma_o: Vec<usize>,
    pub s_cost: Vec<Cost>,
    pub o_cost: Vec<Cost>,
    pub total_s: Cost,
    pub total_o: Cost,
    pub heavy: BTreeSet<usize>,
    pub light: BTreeSet<usize>,
    /// B_S(s): clients served by s, ascending.
    pub bs: BTreeMap<usize, Vec<usize>>,
    /// B_O(o): clients served by o, ascending.
    pub bo: BTreeMap<usize, Vec<usize>>,
    /// B_O^L(o): clients of o served by light facilities in S.
    pub bol: BTreeMap<usize, Vec<usize>>,
    /// M_o = |B_O^L(o)|.
    pub shared_light: BTreeMap<usize, usize>,
    /// |ball(s, o)| = |B_S(s) ∩ B_O(o)|, nonzero entries only.
    pub ball: BTreeMap<(usize, usize), usize>,
    pub ball_clients: BTreeMap<(usize, usize), Vec<usize>>,
    /// Dominated sets keyed by sorted facility lists (light singles and
    /// the pairs attached to o_sp members).
    pub dom: BTreeMap<Vec<usize>, BTreeSet<usize>>,
    /// Covered optima per light facility.
    pub cov: BTreeMap<usize, BTreeSet<usize>>,
    pub o_sp: BTreeSet<usize>,
    /// P(o): the two light facilities covering o ∈ o_sp.
    pub pair: BTreeMap<usize, (usize, usize)>,
    /// D(o) = dom(P(o)).
    pub d: BTreeMap<usize, BTreeSet<usize>>,
    pub d_prime: BTreeMap<usize, BTreeSet<usize>>,
    pub d_sp: BTreeSet<usize>,
    /// Triplets ⟨s1, s2, o⟩ whose pair dominates only o itself.
    pub bag: Vec<(usize, usize, usize)>,
    pub s_bag: BTreeSet<usize>,
    pub o_bag: BTreeSet<usize>,
    /// Pairs with |D(o)| = 2, double-swapped against D(o).
    pub good_pairs: Vec<((usize, usize), (usize, usize))>,
    pub s_w: BTreeSet<usize>,
    pub o_w: BTreeSet<usize>,
    /// Pairs with |D(o)| > 2; never swapped.
    pub bad_pairs: Vec<(usize, usize)>,
    pub s_hat: BTreeSet<usize>,
    pub o_hat: BTreeSet<usize>,
    /// Unpaired light facilities dominating exactly one optimum.
    pub good_singles: Vec<(usize, usize)>,
    pub s_g: BTreeSet<usize>,
    pub o_g: BTreeSet<usize>,
    /// Unpaired light facilities dominating more than one optimum.
    pub s_b: BTreeSet<usize>,
    pub o_b: BTreeSet<usize>,
    /// Unpaired light facilities dominating nothing.
    pub s_n: BTreeSet<usize>,
    /// Optima in no dominated set and no pair family.
    pub o_n: BTreeSet<usize>,
    /// o_hat ∪ o_b ∪ o_n: optima still needing a server.
    pub t_set: BTreeSet<usize>,
    pub ell: usize,
}

impl AnalysisContext {
    /// Set domination: 2·Σ_{s∈facs} |ball(s,o)| > M_o.
    pub fn dominates_set(&self, facs: &[usize], o: usize) -> bool {
        let m = self.shared_light.get(&o).copied().unwrap_or(0) as i64;
        let sum: i64 = facs
            .iter()
            .map(|&s| self.ball.get(&(s, o)).copied().unwrap_or(0) as i64)
            .sum();
        2 * sum > m
    }

    /// Coverage: 5·|ball(s,o)| > 2U.
    pub fn covers(&self, s: usize, o: usize) -> bool {
        let b = self.ball.get(&(s, o)).copied().unwrap_or(0) as i64;
        5 * b > 2 * self.capacity
    }

    fn is_heavy(served: usize, capacity: i64) -> bool {
        5 * served as i64 > 3 * capacity
    }
}

fn pure_assignment(
    inst: &Instance,
    solution: &Solution,
    open: &BTreeSet<usize>,
    label: &str,
) -> Result<(Vec<usize>, Vec<Cost>), CertifyError> {
    if solution.assign.len() != inst.num_clients {
        return Err(CertifyError::Inconsistent(format!(
            "{label} assigns {} clients, instance has {}",
            solution.assign.len(),
            inst.num_clients
        )));
    }
    let mut sigma = Vec::with_capacity(inst.num_clients);
    let mut costs = Vec::with_capacity(inst.num_clients);
    let mut load: BTreeMap<usize, i64> = BTreeMap::new();
    for (j, a) in solution.assign.iter().enumerate() {
        match a {
            Assign::Penalty => return Err(CertifyError::PenaltyUnsupported),
            Assign::Facility(f) => {
                if !open.contains(f) {
                    return Err(CertifyError::Inconsistent(format!(
                        "{label} assigns client {j} to closed facility {f}"
                    )));
                }
                sigma.push(*f);
                costs.push(inst.cost[*f][j]);
                *load.entry(*f).or_insert(0) += 1;
            }
        }
    }
    if let Some((f, l)) = load.iter().find(|(_, &l)| l > inst.capacity) {
        return Err(CertifyError::Inconsistent(format!(
            "{label} loads facility {f} with {l} clients over capacity {}",
            inst.capacity
        )));
    }
    let total: Cost = costs.iter().sum();
    if total != solution.total_cost {
        return Err(CertifyError::Inconsistent(format!(
            "{label} records cost {} but assignments sum to {total}",
            solution.total_cost
        )));
    }
    Ok((sigma, costs))
}

/// Derives the full analysis decomposition from a consistent (S, O) pair.
pub fn build_context(
    inst: &Instance,
    s: &Solution,
    o: &OptimumRecord,
) -> Result<AnalysisContext, CertifyError> {
    let mut ctx = AnalysisContext {
        capacity: inst.capacity,
        s_open: s.open.clone(),
        o_open: o.solution.open.clone(),
        ..AnalysisContext::default()
    };
    let (sigma_s, s_cost) = pure_assignment(inst, s, &ctx.s_open, "S")?;
    let (sigma_o, o_cost) = pure_assignment(inst, &o.solution, &ctx.o_open, "O")?;
    ctx.total_s = s.total_cost;
    ctx.total_o = o.solution.total_cost;

    for (j, &f) in sigma_s.iter().enumerate() {
        ctx.bs.entry(f).or_default().push(j);
    }
    for (j, &f) in sigma_o.iter().enumerate() {
        ctx.bo.entry(f).or_default().push(j);
    }
    for &f in &ctx.s_open {
        let served = ctx.bs.get(&f).map_or(0, |v| v.len());
        if AnalysisContext::is_heavy(served, inst.capacity) {
            ctx.heavy.insert(f);
        } else {
            ctx.light.insert(f);
        }
    }
    for j in 0..inst.num_clients {
        let (fs, fo) = (sigma_s[j], sigma_o[j]);
        if ctx.light.contains(&fs) {
            ctx.bol.entry(fo).or_default().push(j);
        }
        ctx.ball.entry((fs, fo)).and_modify(|c| *c += 1).or_insert(1);
        ctx.ball_clients.entry((fs, fo)).or_default().push(j);
    }
    for &f in &ctx.o_open {
        let m = ctx.bol.get(&f).map_or(0, |v| v.len());
        ctx.shared_light.insert(f, m);
    }
    ctx.sigma_s = sigma_s;
    ctx.sigma_o = sigma_o;
    ctx.s_cost = s_cost;
    ctx.o_cost = o_cost;

    for &s_id in &ctx.light {
        let mut dominated = BTreeSet::new();
        let mut covered = BTreeSet::new();
        for &o_id in &ctx.o_open {
            if ctx.dominates_set(&[s_id], o_id) {
                dominated.insert(o_id);
            }
            if ctx.covers(s_id, o_id) {
                covered.insert(o_id);
            }
        }
        ctx.dom.insert(vec![s_id], dominated);
        ctx.cov.insert(s_id, covered);
    }

    for &o_id in &ctx.o_open {
        let coverers: Vec<usize> = ctx
            .light
            .iter()
            .copied()
            .filter(|&s_id| ctx.covers(s_id, o_id))
            .collect();
        if coverers.len() == 2 {
            ctx.o_sp.insert(o_id);
            ctx.pair.insert(o_id, (coverers[0], coverers[1]));
        }
    }

    for (&o_id, &(s1, s2)) in &ctx.pair {
        let key = vec![s1, s2];
        let dominated: BTreeSet<usize> = ctx
            .o_open
            .iter()
            .copied()
            .filter(|&cand| ctx.dominates_set(&key, cand))
            .collect();
        ctx.dom.insert(key, dominated.clone());
        let mut prime = dominated.clone();
        prime.remove(&o_id);
        ctx.d_sp.extend(prime.iter().copied());
        ctx.d_prime.insert(o_id, prime);
        ctx.d.insert(o_id, dominated);
    }

    for (&o1, &(s1, s2)) in &ctx.pair {
        let dset = &ctx.d[&o1];
        match dset.len() {
            1 => {
                ctx.bag.push((s1, s2, o1));
                ctx.s_bag.extend([s1, s2]);
                ctx.o_bag.insert(o1);
            }
            2 => {
                let targets: Vec<usize> = dset.iter().copied().collect();
                ctx.good_pairs.push(((s1, s2), (targets[0], targets[1])));
                ctx.s_w.extend([s1, s2]);
                ctx.o_w.extend(targets);
            }
            _ => {
                ctx.bad_pairs.push((s1, s2));
                ctx.s_hat.extend([s1, s2]);
                ctx.o_hat.extend(dset.iter().copied());
            }
        }
    }

    let paired: BTreeSet<usize> = ctx
        .s_bag
        .iter()
        .chain(ctx.s_w.iter())
        .chain(ctx.s_hat.iter())
        .copied()
        .collect();
    let pair_claimed: BTreeSet<usize> = ctx
        .o_bag
        .iter()
        .chain(ctx.o_w.iter())
        .chain(ctx.o_hat.iter())
        .copied()
        .collect();
    for &s_id in &ctx.light {
        if paired.contains(&s_id) {
            continue;
        }
        let dominated: BTreeSet<usize> = ctx.dom[&vec![s_id]]
            .difference(&pair_claimed)
            .copied()
            .collect();
        match dominated.len() {
            0 => {
                ctx.s_n.insert(s_id);
            }
            1 => {
                let target = *dominated.iter().next().unwrap();
                ctx.good_singles.push((s_id, target));
                ctx.s_g.insert(s_id);
                ctx.o_g.insert(target);
            }
            _ => {
                ctx.s_b.insert(s_id);
                ctx.o_b.extend(dominated.iter().copied());
            }
        }
    }

    for &o_id in &ctx.o_open {
        let claimed = ctx.o_w.contains(&o_id)
            || ctx.o_g.contains(&o_id)
            || ctx.o_bag.contains(&o_id)
            || ctx.o_hat.contains(&o_id)
            || ctx.o_b.contains(&o_id);
        if !claimed {
            ctx.o_n.insert(o_id);
        }
    }
    ctx.t_set = ctx
        .o_hat
        .iter()
        .chain(ctx.o_b.iter())
        .chain(ctx.o_n.iter())
        .copied()
        .collect();
    ctx.ell = ctx.t_set.len();
    Ok(ctx)
}

/// Disjointness of the pair families: pairs share no facility, dominated
/// sets share no optimum, and no o_sp member sits in another pair's
/// dominated set.
pub fn check_structure_claims(ctx: &AnalysisContext) -> ClaimReport {
    let members: Vec<(usize, (usize, usize))> =
        ctx.pair.iter().map(|(&o, &p)| (o, p)).collect();

    let mut claim3 = CheckResult::pass();
    'c3: for (i, &(o_a, (a1, a2))) in members.iter().enumerate() {
        for &(o_b, (b1, b2)) in &members[i + 1..] {
            let shared: Vec<usize> = [a1, a2]
                .into_iter()
                .filter(|x| *x == b1 || *x == b2)
                .collect();
            if !shared.is_empty() {
                claim3 = CheckResult::fail(format!(
                    "pairs for optima {o_a} and {o_b} share facility {}",
                    shared[0]
                ));
                break 'c3;
            }
        }
    }

    let empty = BTreeSet::new();
    let dset = |o: usize| ctx.d.get(&o).unwrap_or(&empty);
    let mut claim4 = CheckResult::pass();
    'c4: for (i, &(o_a, _)) in members.iter().enumerate() {
        for &(o_b, _) in &members[i + 1..] {
            if let Some(shared) = dset(o_a).intersection(dset(o_b)).next() {
                claim4 = CheckResult::fail(format!(
                    "dominated sets for optima {o_a} and {o_b} share optimum {shared}"
                ));
                break 'c4;
            }
        }
    }

    let claim5 = match ctx.d_sp.intersection(&ctx.o_sp).next() {
        Some(o) => CheckResult::fail(format!(
            "optimum {o} is both doubly covered and in another pair's dominated set"
        )),
        None => CheckResult::pass(),
    };

    ClaimReport {
        claim3,
        claim4,
        claim5,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::assign_to;
    use crate::oracle::{exact_optimal, OracleBudget};

    fn inst(cost: Vec<Vec<Cost>>, capacity: i64, k: usize) -> Instance {
        let num_facilities = cost.len();
        let num_clients = cost.first().map_or(0, |r| r.len());
        Instance {
            num_facilities,
            num_clients,
            capacity,
            k,
            metric: false,
            cost,
            penalties: None,
        }
    }

    fn pair_context() -> (Instance, Solution, OptimumRecord) {
        let mut cost = vec![vec![9i64; 10]; 3];
        for j in 0..5 {
            cost[0][j] = 0;
        }
        for j in 5..10 {
            cost[1][j] = 0;
        }
        cost[2] = vec![1; 10];
        let i = inst(cost, 10, 1);
        let s = assign_to(&i, &[0, 1], false).unwrap();
        let o = exact_optimal(&i, 1, false, &OracleBudget::default()).unwrap();
        (i, s, o)
    }

    #[test]
    fn heavy_threshold_is_strict_cross_multiplied() {
        let mut cost = vec![vec![9i64; 4]; 2];
        cost[0] = vec![0, 0, 0, 0];
        cost[1] = vec![5, 5, 5, 5];
        let i = inst(cost, 5, 1);
        let s = assign_to(&i, &[0], false).unwrap();
        let o = exact_optimal(&i, 1, false, &OracleBudget::default()).unwrap();
        let ctx = build_context(&i, &s, &o).unwrap();
        assert!(ctx.heavy.contains(&0));
        assert!(ctx.light.is_empty());
    }

    #[test]
    fn good_single_dominates_and_covers() {
        let i = inst(
            vec![
                vec![0, 0, 0, 9],
                vec![9, 9, 9, 0],
                vec![1, 1, 1, 1],
            ],
            5,
            1,
        );
        let s = assign_to(&i, &[0, 1], false).unwrap();
        let o = exact_optimal(&i, 1, false, &OracleBudget::default()).unwrap();
        let ctx = build_context(&i, &s, &o).unwrap();
        assert_eq!(ctx.light, BTreeSet::from([0, 1]));
        assert_eq!(ctx.ball[&(0, 2)], 3);
        assert!(ctx.covers(0, 2));
        assert!(ctx.dominates_set(&[0], 2));
        assert!(!ctx.covers(1, 2));
        assert!(ctx.o_sp.is_empty());
        assert_eq!(ctx.good_singles, vec![(0, 2)]);
        assert_eq!(ctx.s_n, BTreeSet::from([1]));
        assert!(ctx.o_n.is_empty());
        assert_eq!(ctx.ell, 0);
    }

    #[test]
    fn doubly_covered_optimum_forms_a_bag() {
        let (i, s, o) = pair_context();
        let ctx = build_context(&i, &s, &o).unwrap();
        assert_eq!(ctx.o_sp, BTreeSet::from([2]));
        assert_eq!(ctx.pair[&2], (0, 1));
        assert_eq!(ctx.d[&2], BTreeSet::from([2]));
        assert_eq!(ctx.bag, vec![(0, 1, 2)]);
        assert_eq!(ctx.s_bag, BTreeSet::from([0, 1]));
        assert_eq!(ctx.o_bag, BTreeSet::from([2]));
        assert!(ctx.bad_pairs.is_empty() && ctx.good_pairs.is_empty());
        assert_eq!(ctx.shared_light[&2], 10);
        assert!(!ctx.dominates_set(&[0], 2));
        assert!(ctx.dominates_set(&[0, 1], 2));
        assert_eq!(ctx.ell, 0);
    }

    #[test]
    fn claims_pass_on_real_pairs() {
        let (i, s, o) = pair_context();
        let ctx = build_context(&i, &s, &o).unwrap();
        let report = check_structure_claims(&ctx);
        assert!(report.all_pass());
    }

    #[test]
    fn forged_overlapping_pairs_fail_claim3() {
        let mut ctx = AnalysisContext::default();
        ctx.o_sp = BTreeSet::from([1, 2]);
        ctx.pair = BTreeMap::from([(1, (5, 6)), (2, (6, 7))]);
        ctx.d = BTreeMap::from([
            (1, BTreeSet::from([1])),
            (2, BTreeSet::from([2])),
        ]);
        let report = check_structure_claims(&ctx);
        assert!(!report.claim3.pass);
        assert!(report.claim3.witness.as_ref().unwrap().contains('6'));
        assert!(report.claim4.pass);
    }

    #[test]
    fn forged_shared_domination_fails_claim4() {
        let mut ctx = AnalysisContext::default();
        ctx.pair = BTreeMap::from([(1, (5, 6)), (2, (7, 8))]);
        ctx.d = BTreeMap::from([
            (1, BTreeSet::from([1, 3])),
            (2, BTreeSet::from([2, 3])),
        ]);
        let report = check_structure_claims(&ctx);
        assert!(report.claim3.pass);
        assert!(!report.claim4.pass);
    }

    #[test]
    fn forged_overlap_of_dsp_and_osp_fails_claim5() {
        let mut ctx = AnalysisContext::default();
        ctx.o_sp = BTreeSet::from([4]);
        ctx.d_sp = BTreeSet::from([4]);
        let report = check_structure_claims(&ctx);
        assert!(!report.claim5.pass);
    }

    #[test]
    fn empty_o_sp_passes_vacuously() {
        let ctx = AnalysisContext::default();
        assert!(check_structure_claims(&ctx).all_pass());
    }

    #[test]
    fn penalty_assignments_are_rejected() {
        let mut i = inst(vec![vec![5, 5]], 2, 1);
        i.penalties = Some(vec![1, 1]);
        let s = assign_to(&i, &[0], true).unwrap();
        let o = exact_optimal(&i, 1, false, &OracleBudget::default()).unwrap();
        assert_eq!(
            build_context(&i, &s, &o).unwrap_err(),
            CertifyError::PenaltyUnsupported
        );
    }

    #[test]
    fn tampered_cost_is_inconsistent() {
        let i = inst(vec![vec![2, 2]], 2, 1);
        let mut s = assign_to(&i, &[0], false).unwrap();
        let o = exact_optimal(&i, 1, false, &OracleBudget::default()).unwrap();
        s.total_cost += 1;
        assert!(matches!(
            build_context(&i, &s, &o),
            Err(CertifyError::Inconsistent(_))
        ));
    }

    #[test]
    fn zero_load_facilities_classify_as_light_and_nice() {
        let i = inst(
            vec![vec![0, 0], vec![9, 9], vec![1, 1]],
            2,
            1,
        );
        let s = assign_to(&i, &[0, 1], false).unwrap();
        let o = exact_optimal(&i, 1, false, &OracleBudget::default()).unwrap();
        let ctx = build_context(&i, &s, &o).unwrap();
        assert!(ctx.light.contains(&1));
        assert!(ctx.s_n.contains(&1));
    }
}
