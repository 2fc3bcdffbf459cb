//! Shared helpers for the criterion benchmarks.

pub use ckm_core::gen::{generate, Family, GenSpec};

/// A mid-sized euclidean instance the benchmarks agree on.
pub fn bench_spec(seed: u64) -> GenSpec {
    GenSpec {
        family: Family::Euclidean,
        num_facilities: 8,
        num_clients: 12,
        capacity_u: 4,
        k: 3,
        penalty_range: None,
        seed,
        coord_range: 100,
    }
}
