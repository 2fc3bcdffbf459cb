//! Problem instances, solutions, and cost evaluation shared by every module.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

/// Connection costs and penalties are exact integers.
pub type Cost = i64;

/// A positive rational, used for the improvement threshold epsilon.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ratio {
    pub num: i64,
    pub den: i64,
}

impl Ratio {
    pub fn new(num: i64, den: i64) -> Option<Ratio> {
        if num > 0 && den > 0 {
            Some(Ratio { num, den })
        } else {
            None
        }
    }

    /// Parses a positive decimal literal such as `0.01` or `2` exactly.
    pub fn parse_decimal(s: &str) -> Option<Ratio> {
        let (int_part, frac_part) = match s.split_once('.') {
            Some((i, f)) => (i, f),
            None => (s, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return None;
        }
        let digits = |t: &str| t.chars().all(|c| c.is_ascii_digit());
        if !digits(int_part) || !digits(frac_part) || frac_part.len() > 12 {
            return None;
        }
        let int_val: i64 = if int_part.is_empty() { 0 } else { int_part.parse().ok()? };
        let frac_val: i64 = if frac_part.is_empty() { 0 } else { frac_part.parse().ok()? };
        let den = 10i64.checked_pow(frac_part.len() as u32)?;
        let num = int_val.checked_mul(den)?.checked_add(frac_val)?;
        Ratio::new(num, den)
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

/// A capacitated k-median instance.
///
/// `cost[i][j]` is the connection cost from facility `i` to client `j`.
/// Every open facility serves at most `capacity` clients. A solution is
/// compared against the best set of `k` facilities. When `penalties` is
/// present each client may instead stay unserved at its penalty cost.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub num_facilities: usize,
    pub num_clients: usize,
    pub capacity: i64,
    pub k: usize,
    pub metric: bool,
    pub cost: Vec<Vec<Cost>>,
    pub penalties: Option<Vec<Cost>>,
}

impl Instance {
    pub fn cost(&self, facility: usize, client: usize) -> Cost {
        self.cost[facility][client]
    }

    pub fn has_penalties(&self) -> bool {
        self.penalties.is_some()
    }

    pub fn penalty(&self, client: usize) -> Cost {
        self.penalties.as_ref().map_or(0, |p| p[client])
    }
}

/// Per-client assignment: a serving facility or the penalty mark.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Assign {
    Facility(usize),
    Penalty,
}

/// An open facility set together with a feasible assignment and its cost.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solution {
    pub open: BTreeSet<usize>,
    pub assign: Vec<Assign>,
    pub total_cost: Cost,
}

impl Solution {
    /// Number of clients served by `facility`.
    pub fn load(&self, facility: usize) -> usize {
        self.assign
            .iter()
            .filter(|a| **a == Assign::Facility(facility))
            .count()
    }
}

/// The exact k-facility optimum, same shape as a solution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OptimumRecord {
    pub solution: Solution,
    pub k: usize,
}

/// Outcome of `validate_instance`; empty means valid.
#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("assignment has length {got}, expected {expected}")]
    AssignmentLength { got: usize, expected: usize },
    #[error("client {client} assigned to closed facility {facility}")]
    ClosedFacility { client: usize, facility: usize },
    #[error("facility {facility} serves {assigned} clients, capacity is {capacity}")]
    CapacityExceeded {
        facility: usize,
        assigned: usize,
        capacity: i64,
    },
    #[error("client {client} pays a penalty but the instance defines none")]
    PenaltyWithoutPenalties { client: usize },
}

/// Checks shapes, signs, and (when the metric flag is set) the
/// facility-client path inequality `c[i][j] <= c[i][j'] + c[i'][j'] + c[i'][j]`.
pub fn validate_instance(inst: &Instance) -> ValidationReport {
    let mut report = ValidationReport::default();
    let v = &mut report.violations;
    if inst.capacity < 1 {
        v.push(format!("capacity {} is not positive", inst.capacity));
    }
    if inst.k < 1 {
        v.push("k is not positive".to_string());
    }
    if inst.cost.len() != inst.num_facilities {
        v.push(format!(
            "cost matrix has {} rows, expected {}",
            inst.cost.len(),
            inst.num_facilities
        ));
        return report;
    }
    for (i, row) in inst.cost.iter().enumerate() {
        if row.len() != inst.num_clients {
            v.push(format!(
                "cost row {} has {} entries, expected {}",
                i,
                row.len(),
                inst.num_clients
            ));
            return report;
        }
        for (j, &c) in row.iter().enumerate() {
            if c < 0 {
                v.push(format!("negative cost at ({i}, {j})"));
            }
        }
    }
    if let Some(pen) = &inst.penalties {
        if pen.len() != inst.num_clients {
            v.push(format!(
                "penalties has {} entries, expected {}",
                pen.len(),
                inst.num_clients
            ));
        } else {
            for (j, &p) in pen.iter().enumerate() {
                if p < 0 {
                    v.push(format!("negative penalty at client {j}"));
                }
            }
        }
    }
    if inst.metric && v.is_empty() {
        'outer: for i in 0..inst.num_facilities {
            for j in 0..inst.num_clients {
                for i2 in 0..inst.num_facilities {
                    for j2 in 0..inst.num_clients {
                        let direct = inst.cost[i][j];
                        let path = inst.cost[i][j2] + inst.cost[i2][j2] + inst.cost[i2][j];
                        if direct > path {
                            v.push(format!(
                                "metric violated: cost[{i}][{j}] = {direct} > {path} via facility {i2} and client {j2}"
                            ));
                            break 'outer;
                        }
                    }
                }
            }
        }
    }
    report
}

/// Assignment cost plus penalty cost of `sol`, after checking that the
/// assignment is structurally consistent with `inst`.
pub fn cost_of(inst: &Instance, sol: &Solution) -> Result<Cost, ModelError> {
    if sol.assign.len() != inst.num_clients {
        return Err(ModelError::AssignmentLength {
            got: sol.assign.len(),
            expected: inst.num_clients,
        });
    }
    let mut loads = vec![0usize; inst.num_facilities];
    let mut total: Cost = 0;
    for (j, a) in sol.assign.iter().enumerate() {
        match *a {
            Assign::Facility(f) => {
                if f >= inst.num_facilities || !sol.open.contains(&f) {
                    return Err(ModelError::ClosedFacility {
                        client: j,
                        facility: f,
                    });
                }
                loads[f] += 1;
                total += inst.cost[f][j];
            }
            Assign::Penalty => match &inst.penalties {
                Some(pen) => total += pen[j],
                None => return Err(ModelError::PenaltyWithoutPenalties { client: j }),
            },
        }
    }
    for (f, &load) in loads.iter().enumerate() {
        if load as i64 > inst.capacity {
            return Err(ModelError::CapacityExceeded {
                facility: f,
                assigned: load,
                capacity: inst.capacity,
            });
        }
    }
    Ok(total)
}

/// Number of facilities the local search opens: `min(|F|, ceil(8k/3))`.
pub fn open_count_target(inst: &Instance) -> usize {
    let ceil = (8 * inst.k + 2) / 3;
    inst.num_facilities.min(ceil)
}

#[cfg(test)]
mod tests {
    use super::*;

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

    #[test]
    fn open_count_target_rounds_up_and_clamps() {
        let mut i = inst(vec![vec![0; 1]; 100], 1, 3);
        assert_eq!(open_count_target(&i), 8);
        i.k = 1;
        assert_eq!(open_count_target(&i), 3);
        i.k = 3;
        i.num_facilities = 5;
        i.cost = vec![vec![0; 1]; 5];
        assert_eq!(open_count_target(&i), 5);
    }

    #[test]
    fn open_count_target_at_least_k() {
        for k in 1..50 {
            let i = inst(vec![vec![0; 1]; 200], 1, k);
            assert!(open_count_target(&i) >= k);
        }
    }

    #[test]
    fn cost_of_single_assignment() {
        let i = inst(vec![vec![7]], 1, 1);
        let sol = Solution {
            open: BTreeSet::from([0]),
            assign: vec![Assign::Facility(0)],
            total_cost: 7,
        };
        assert_eq!(cost_of(&i, &sol), Ok(7));
    }

    #[test]
    fn cost_of_penalized_client() {
        let mut i = inst(vec![vec![7]], 1, 1);
        i.penalties = Some(vec![3]);
        let sol = Solution {
            open: BTreeSet::from([0]),
            assign: vec![Assign::Penalty],
            total_cost: 3,
        };
        assert_eq!(cost_of(&i, &sol), Ok(3));
    }

    #[test]
    fn cost_of_rejects_capacity_violation() {
        let i = inst(vec![vec![1, 1]], 1, 1);
        let sol = Solution {
            open: BTreeSet::from([0]),
            assign: vec![Assign::Facility(0), Assign::Facility(0)],
            total_cost: 2,
        };
        assert_eq!(
            cost_of(&i, &sol),
            Err(ModelError::CapacityExceeded {
                facility: 0,
                assigned: 2,
                capacity: 1,
            })
        );
    }

    #[test]
    fn cost_of_rejects_closed_facility_and_stray_penalty() {
        let i = inst(vec![vec![1], vec![2]], 1, 1);
        let sol = Solution {
            open: BTreeSet::from([0]),
            assign: vec![Assign::Facility(1)],
            total_cost: 2,
        };
        assert!(matches!(
            cost_of(&i, &sol),
            Err(ModelError::ClosedFacility { client: 0, facility: 1 })
        ));
        let sol = Solution {
            open: BTreeSet::from([0]),
            assign: vec![Assign::Penalty],
            total_cost: 0,
        };
        assert!(matches!(
            cost_of(&i, &sol),
            Err(ModelError::PenaltyWithoutPenalties { client: 0 })
        ));
    }

    #[test]
    fn cost_of_all_penalized_is_penalty_sum() {
        let mut i = inst(vec![vec![5, 9, 2]], 3, 1);
        i.penalties = Some(vec![4, 0, 11]);
        let sol = Solution {
            open: BTreeSet::new(),
            assign: vec![Assign::Penalty; 3],
            total_cost: 15,
        };
        assert_eq!(cost_of(&i, &sol), Ok(15));
    }

    #[test]
    fn cost_of_is_invariant_under_client_relabeling() {
        let i = inst(vec![vec![4, 1, 6], vec![2, 8, 3]], 2, 1);
        let perm = [2usize, 0, 1];
        let permuted = inst(
            vec![
                perm.iter().map(|&j| i.cost[0][j]).collect(),
                perm.iter().map(|&j| i.cost[1][j]).collect(),
            ],
            2,
            1,
        );
        let assign = vec![Assign::Facility(0), Assign::Facility(1), Assign::Facility(1)];
        let sol = Solution {
            open: BTreeSet::from([0, 1]),
            assign: assign.clone(),
            total_cost: 0,
        };
        let permuted_sol = Solution {
            open: BTreeSet::from([0, 1]),
            assign: perm.iter().map(|&j| assign[j]).collect(),
            total_cost: 0,
        };
        assert_eq!(
            cost_of(&i, &sol).unwrap(),
            cost_of(&permuted, &permuted_sol).unwrap()
        );
    }

    #[test]
    fn validate_accepts_well_formed() {
        let mut i = inst(vec![vec![1, 1], vec![1, 1]], 1, 1);
        i.metric = true;
        assert!(validate_instance(&i).is_valid());
    }

    #[test]
    fn validate_reports_negative_cost() {
        let i = inst(vec![vec![-1, 1], vec![1, 1]], 1, 1);
        let report = validate_instance(&i);
        assert_eq!(report.violations, vec!["negative cost at (0, 0)".to_string()]);
    }

    #[test]
    fn validate_reports_metric_violation() {
        let mut i = inst(vec![vec![1, 10], vec![1, 1]], 1, 1);
        i.metric = true;
        let report = validate_instance(&i);
        assert_eq!(report.violations.len(), 1);
        assert!(report.violations[0].starts_with("metric violated"));
    }

    #[test]
    fn ratio_parses_decimals_exactly() {
        assert_eq!(Ratio::parse_decimal("0.01"), Ratio::new(1, 100));
        assert_eq!(Ratio::parse_decimal("2"), Ratio::new(2, 1));
        assert_eq!(Ratio::parse_decimal("1.5"), Ratio::new(15, 10));
        assert_eq!(Ratio::parse_decimal("0"), None);
        assert_eq!(Ratio::parse_decimal("-1"), None);
        assert_eq!(Ratio::parse_decimal("x"), None);
    }
}
