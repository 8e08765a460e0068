//! Shared fixtures for the criterion benchmarks.

use arena_core::lattice::{ArenaSpec, PlayerParams, ResultCounts, State};
use arena_core::sim::SimConfig;

pub fn two_two() -> ArenaSpec {
    ArenaSpec::new(2, 2).unwrap()
}

pub fn five_one() -> ArenaSpec {
    ArenaSpec::new(5, 1).unwrap()
}

/// The simulation study setup: 1023 background players plus a tagged one.
pub fn study_config(runs: u32, seed: u64) -> SimConfig {
    SimConfig {
        spec: two_two(),
        population: 1023,
        runs,
        background_rho: 0.5,
        tagged: Some(PlayerParams::new(1.0, 0.5).unwrap()),
        seed,
    }
}

/// A plausible 80-run tally at strength 1.0, fluctuation 0.5.
pub fn study_counts() -> ResultCounts {
    ResultCounts::from_pairs(
        two_two(),
        [
            (State::new(2, 0), 45),
            (State::new(2, 1), 30),
            (State::new(1, 2), 4),
            (State::new(0, 2), 1),
        ],
    )
    .unwrap()
}
