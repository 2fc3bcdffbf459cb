//! Benchmark harness: solver versus oracle over generated suites.
//!
//! Each (spec, config) pair becomes one row: solve, ask the oracle for
//! the exact k-facility optimum, certify pure runs, time everything.
//! Oracle failures (budget, infeasibility) are recorded in the row
//! instead of failing the suite. Rows are computed in parallel but kept
//! in input order; `CKM_THREADS` caps the worker count.

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

use crate::certify::certify;
use crate::gen::{generate, Family, GenError, GenSpec};
use crate::model::{Cost, Ratio};
use crate::oracle::{exact_optimal, OracleBudget, OracleError};
use crate::search::{run, run_with_penalties, SearchConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub instance_id: String,
    pub seed: u64,
    pub p: usize,
    pub epsilon: Ratio,
    pub local_cost: Cost,
    pub exact_cost: Result<Cost, String>,
    pub ratio: Option<f64>,
    pub open_m: usize,
    pub iterations: usize,
    pub wall_time_ms: f64,
    pub certified: Option<bool>,
}

pub const CSV_HEADER: [&str; 11] = [
    "instance_id",
    "seed",
    "p",
    "epsilon",
    "local_cost",
    "exact_cost",
    "ratio",
    "open_m",
    "iterations",
    "wall_time_ms",
    "certified",
];

fn oracle_kind(err: &OracleError) -> String {
    match err {
        OracleError::Budget { .. } | OracleError::TimeCap(_) => "oracle budget".to_string(),
        OracleError::Infeasible { .. } => "infeasible".to_string(),
        OracleError::Flow(_) => "flow".to_string(),
    }
}

fn bench_one(spec: &GenSpec, config: &SearchConfig, budget: &OracleBudget) -> Result<BenchRow, GenError> {
    let inst = generate(spec)?;
    let effective = SearchConfig {
        seed: spec.seed,
        penalty_mode: inst.has_penalties(),
        ..config.clone()
    };
    let started = Instant::now();
    let solved = if inst.has_penalties() {
        run_with_penalties(&inst, &effective)
    } else {
        run(&inst, &effective)
    };
    let (solution, trace) = solved.map_err(|e| GenError::InvalidSpec(e.to_string()))?;
    let wall_time_ms = started.elapsed().as_secs_f64() * 1e3;

    let exact = exact_optimal(&inst, inst.k, inst.has_penalties(), budget);
    let exact_cost = exact
        .as_ref()
        .map(|o| o.solution.total_cost)
        .map_err(oracle_kind);
    let ratio = match exact_cost {
        Ok(0) if solution.total_cost == 0 => Some(1.0),
        Ok(0) => None,
        Ok(c) => Some(solution.total_cost as f64 / c as f64),
        Err(_) => None,
    };
    let certified = match (&exact, inst.has_penalties()) {
        (Ok(optimum), false) => Some(
            certify(&inst, &solution, optimum, effective.epsilon)
                .map(|report| report.certified)
                .unwrap_or(false),
        ),
        _ => None,
    };
    Ok(BenchRow {
        instance_id: spec.id(),
        seed: spec.seed,
        p: effective.p,
        epsilon: effective.epsilon,
        local_cost: solution.total_cost,
        exact_cost,
        ratio,
        open_m: solution.open.len(),
        iterations: trace.steps.len(),
        wall_time_ms,
        certified,
    })
}

fn worker_pool() -> rayon::ThreadPool {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(threads) = std::env::var("CKM_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&t| t > 0)
    {
        builder = builder.num_threads(threads);
    }
    builder.build().expect("worker pool")
}

/// Runs every (spec, config) pair and returns the rows in input order.
pub fn bench_suite(
    specs: &[GenSpec],
    configs: &[SearchConfig],
    budget: &OracleBudget,
) -> Result<Vec<BenchRow>, GenError> {
    let jobs: Vec<(&GenSpec, &SearchConfig)> = specs
        .iter()
        .flat_map(|s| configs.iter().map(move |c| (s, c)))
        .collect();
    worker_pool().install(|| {
        jobs.par_iter()
            .map(|(spec, config)| bench_one(spec, config, budget))
            .collect()
    })
}

/// Writes rows as RFC-4180 CSV with a fixed header.
pub fn write_csv(path: &Path, rows: &[BenchRow]) -> Result<(), csv::Error> {
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)?;
    writer.write_record(CSV_HEADER)?;
    for row in rows {
        let exact_cell = match &row.exact_cost {
            Ok(c) => c.to_string(),
            Err(kind) => kind.clone(),
        };
        let ratio_cell = row.ratio.map(|r| format!("{r:.6}")).unwrap_or_default();
        let certified_cell = row.certified.map(|c| c.to_string()).unwrap_or_default();
        writer.write_record([
            row.instance_id.as_str(),
            &row.seed.to_string(),
            &row.p.to_string(),
            &row.epsilon.to_string(),
            &row.local_cost.to_string(),
            &exact_cell,
            &ratio_cell,
            &row.open_m.to_string(),
            &row.iterations.to_string(),
            &format!("{:.3}", row.wall_time_ms),
            &certified_cell,
        ])?;
    }
    writer.flush()?;
    Ok(())
}

fn euclidean_spec(num_facilities: usize, num_clients: usize, capacity_u: i64, k: usize, seed: u64) -> GenSpec {
    GenSpec {
        family: Family::Euclidean,
        num_facilities,
        num_clients,
        capacity_u,
        k,
        penalty_range: None,
        seed,
        coord_range: 100,
    }
}

/// A quick metric suite: solvable in seconds, oracle always in budget.
pub fn small_suite() -> Vec<GenSpec> {
    let shapes = [
        (4, 2, 2, 1),
        (4, 3, 3, 1),
        (6, 4, 4, 1),
        (6, 4, 2, 2),
        (6, 6, 3, 2),
        (8, 8, 4, 2),
        (8, 6, 2, 3),
        (8, 9, 3, 3),
        (8, 12, 4, 3),
    ];
    shapes
        .iter()
        .enumerate()
        .map(|(i, &(f, c, u, k))| euclidean_spec(f, c, u, k, 1000 + i as u64))
        .collect()
}

/// A longer mixed suite: both metric families, more seeds, some penalty
/// instances.
pub fn medium_suite() -> Vec<GenSpec> {
    let mut specs = Vec::new();
    for seed in 0..5u64 {
        for &(f, c, u, k) in &[(6, 6, 3, 2), (8, 8, 4, 2), (8, 12, 4, 3), (10, 12, 4, 3)] {
            specs.push(euclidean_spec(f, c, u, k, 2000 + 13 * seed));
            let mut clustered = euclidean_spec(f, c, u, k, 3000 + 17 * seed);
            clustered.family = Family::Clustered;
            specs.push(clustered);
        }
        let mut penalized = euclidean_spec(8, 10, 3, 2, 4000 + 19 * seed);
        penalized.penalty_range = Some((0, 60));
        specs.push(penalized);
    }
    specs
}

/// Looks up a named suite for the command line.
pub fn suite(name: &str) -> Option<Vec<GenSpec>> {
    match name {
        "small" => Some(small_suite()),
        "medium" => Some(medium_suite()),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::open_count_target;
    use std::time::Duration;

    fn config() -> SearchConfig {
        SearchConfig::default()
    }

    #[test]
    fn empty_suite_writes_header_only_csv() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        let rows = bench_suite(&[], &[config()], &OracleBudget::default()).unwrap();
        assert!(rows.is_empty());
        write_csv(&path, &rows).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, format!("{}\n", CSV_HEADER.join(",")));
    }

    #[test]
    fn rows_keep_input_order_and_solver_invariants() {
        let specs = &small_suite()[..4];
        let rows = bench_suite(specs, &[config()], &OracleBudget::default()).unwrap();
        assert_eq!(rows.len(), 4);
        for (row, spec) in rows.iter().zip(specs) {
            assert_eq!(row.instance_id, spec.id());
            let inst = generate(spec).unwrap();
            assert_eq!(row.open_m, open_count_target(&inst));
            assert_eq!(row.certified, Some(true), "{}", row.instance_id);
            let ratio = row.ratio.unwrap();
            assert!(ratio.is_finite() && ratio <= 9.0, "{}", row.instance_id);
        }
    }

    #[test]
    fn reruns_match_except_wall_time() {
        let specs = &small_suite()[..2];
        let a = bench_suite(specs, &[config()], &OracleBudget::default()).unwrap();
        let b = bench_suite(specs, &[config()], &OracleBudget::default()).unwrap();
        for (x, y) in a.iter().zip(&b) {
            let mut x = x.clone();
            let mut y = y.clone();
            x.wall_time_ms = 0.0;
            y.wall_time_ms = 0.0;
            assert_eq!(x, y);
        }
    }

    #[test]
    fn oracle_budget_failure_is_recorded_not_fatal() {
        let budget = OracleBudget {
            max_subsets: 1,
            time_cap: Duration::from_secs(600),
        };
        let rows = bench_suite(&small_suite()[5..6], &[config()], &budget).unwrap();
        assert_eq!(rows[0].exact_cost, Err("oracle budget".to_string()));
        assert_eq!(rows[0].ratio, None);
        assert_eq!(rows[0].certified, None);
    }

    #[test]
    fn csv_rows_parse_back() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rows.csv");
        let mut specs = small_suite()[..2].to_vec();
        specs[1].penalty_range = Some((0, 10));
        let rows = bench_suite(&specs, &[config()], &OracleBudget::default()).unwrap();
        assert_eq!(rows[1].certified, None);
        write_csv(&path, &rows).unwrap();
        let mut reader = csv::Reader::from_path(&path).unwrap();
        assert_eq!(
            reader.headers().unwrap().iter().collect::<Vec<_>>(),
            CSV_HEADER.to_vec()
        );
        assert_eq!(reader.records().count(), 2);
    }

    #[test]
    fn named_suites_resolve() {
        assert_eq!(suite("small").unwrap().len(), small_suite().len());
        assert!(suite("medium").unwrap().len() > small_suite().len());
        assert!(suite("huge").is_none());
    }
}
