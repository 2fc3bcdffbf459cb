//! Seeded instance generators.
//!
//! Three families: `Euclidean` scatters facilities and clients uniformly
//! in a square, `Clustered` groups them around k cluster centers, and
//! `UniformMatrix` draws an arbitrary (non-metric) cost matrix. Costs are
//! integers; geometric families round distances half-up and redraw the
//! rare layout whose rounding breaks the path inequality. Penalties are
//! drawn after the geometry, so a spec with and without a penalty range
//! produces the same cost matrix for the same seed.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::files::rounded_distance;
use crate::model::{validate_instance, Cost, Instance};

const METRIC_RETRIES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Euclidean,
    Clustered,
    UniformMatrix,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Euclidean => "euclidean",
            Family::Clustered => "clustered",
            Family::UniformMatrix => "uniform",
        }
    }

    pub fn parse(s: &str) -> Option<Family> {
        match s {
            "euclidean" => Some(Family::Euclidean),
            "clustered" => Some(Family::Clustered),
            "uniform" | "uniform-random-matrix" => Some(Family::UniformMatrix),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenSpec {
    pub family: Family,
    pub num_facilities: usize,
    pub num_clients: usize,
    pub capacity_u: i64,
    pub k: usize,
    pub penalty_range: Option<(Cost, Cost)>,
    pub seed: u64,
    pub coord_range: i64,
}

impl GenSpec {
    /// Short identifier used in benchmark rows and file names.
    pub fn id(&self) -> String {
        format!(
            "{}-f{}-c{}-u{}-k{}-s{}",
            self.family.name(),
            self.num_facilities,
            self.num_clients,
            self.capacity_u,
            self.k,
            self.seed
        )
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GenError {
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
    #[error("pure spec infeasible: {open} openable facilities at capacity {capacity} cannot serve {clients} clients")]
    Infeasible {
        open: usize,
        capacity: i64,
        clients: usize,
    },
    #[error("metric still violated after {0} redraws")]
    MetricRetries(usize),
}

fn check_spec(spec: &GenSpec) -> Result<(), GenError> {
    let bad = |msg: &str| Err(GenError::InvalidSpec(msg.to_string()));
    if spec.num_facilities == 0 || spec.num_clients == 0 {
        return bad("facility and client counts must be positive");
    }
    if spec.capacity_u < 1 {
        return bad("capacity must be positive");
    }
    if spec.k < 1 {
        return bad("k must be positive");
    }
    if spec.coord_range < 1 {
        return bad("coordinate range must be positive");
    }
    if let Some((lo, hi)) = spec.penalty_range {
        if lo < 0 || hi < lo {
            return bad("penalty range must satisfy 0 <= min <= max");
        }
    }
    if spec.penalty_range.is_none() {
        let ceil = (8 * spec.k + 2) / 3;
        let open = spec.num_facilities.min(ceil);
        if (open as i64).saturating_mul(spec.capacity_u) < spec.num_clients as i64 {
            return Err(GenError::Infeasible {
                open,
                capacity: spec.capacity_u,
                clients: spec.num_clients,
            });
        }
    }
    Ok(())
}

fn uniform_points(rng: &mut ChaCha8Rng, n: usize, range: i64) -> Vec<[i64; 2]> {
    (0..n)
        .map(|_| [rng.random_range(0..=range), rng.random_range(0..=range)])
        .collect()
}

fn clustered_points(rng: &mut ChaCha8Rng, n: usize, centers: &[[i64; 2]], range: i64) -> Vec<[i64; 2]> {
    let std = (range as f64 / 20.0).max(1.0);
    (0..n)
        .map(|_| {
            let c = centers.choose(rng).copied().unwrap_or([0, 0]);
            let normal_x = Normal::new(c[0] as f64, std).unwrap();
            let normal_y = Normal::new(c[1] as f64, std).unwrap();
            let x = (normal_x.sample(rng).round() as i64).clamp(0, range);
            let y = (normal_y.sample(rng).round() as i64).clamp(0, range);
            [x, y]
        })
        .collect()
}

fn cost_matrix(facilities: &[[i64; 2]], clients: &[[i64; 2]]) -> Vec<Vec<Cost>> {
    facilities
        .iter()
        .map(|&f| clients.iter().map(|&c| rounded_distance(f, c)).collect())
        .collect()
}

/// Deterministically generates the instance described by `spec`.
pub fn generate(spec: &GenSpec) -> Result<Instance, GenError> {
    check_spec(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut inst = Instance {
        num_facilities: spec.num_facilities,
        num_clients: spec.num_clients,
        capacity: spec.capacity_u,
        k: spec.k,
        metric: spec.family != Family::UniformMatrix,
        cost: Vec::new(),
        penalties: None,
    };
    match spec.family {
        Family::UniformMatrix => {
            inst.cost = (0..spec.num_facilities)
                .map(|_| {
                    (0..spec.num_clients)
                        .map(|_| rng.random_range(0..=spec.coord_range))
                        .collect()
                })
                .collect();
        }
        Family::Euclidean | Family::Clustered => {
            let mut drawn = false;
            for _ in 0..METRIC_RETRIES {
                let (fac, cli) = match spec.family {
                    Family::Euclidean => (
                        uniform_points(&mut rng, spec.num_facilities, spec.coord_range),
                        uniform_points(&mut rng, spec.num_clients, spec.coord_range),
                    ),
                    _ => {
                        let centers = uniform_points(&mut rng, spec.k, spec.coord_range);
                        (
                            clustered_points(&mut rng, spec.num_facilities, &centers, spec.coord_range),
                            clustered_points(&mut rng, spec.num_clients, &centers, spec.coord_range),
                        )
                    }
                };
                inst.cost = cost_matrix(&fac, &cli);
                if validate_instance(&inst).is_valid() {
                    drawn = true;
                    break;
                }
            }
            if !drawn {
                return Err(GenError::MetricRetries(METRIC_RETRIES));
            }
        }
    }
    if let Some((lo, hi)) = spec.penalty_range {
        inst.penalties = Some((0..spec.num_clients).map(|_| rng.random_range(lo..=hi)).collect());
    }
    Ok(inst)
}
