//! Statistics for knockout tournaments under the arena model.
//!
//! An arena repeatedly runs a fixed pool of players through random
//! pairwise eliminations until each player collects m wins or n losses.
//! This crate provides:
//!
//! - [`sim`]: a seeded Monte Carlo realization of m-n arenas with
//!   per-round Gaussian performance fluctuations;
//! - [`exact`]: grid-based state densities, conditional result
//!   probabilities and strength posteriors for the no-fluctuation model;
//! - [`approx`]: the normal approximation of state-strength distributions
//!   under uniform fluctuations, with closed-form moment recursions and a
//!   lattice forward pass for result probabilities;
//! - [`infer`]: MAP estimation of a player's strength and fluctuation
//!   coefficient, the closed-form 1-1 estimator, and plug-in / Bayesian /
//!   frequency predictors;
//! - [`worldcup`]: the FIFA World Cup knockout application on a 5-1 arena,
//!   with bundled train/test datasets.

pub mod approx;
pub mod error;
pub mod exact;
pub mod grid;
pub mod infer;
pub mod lattice;
pub mod normal;
pub mod sim;
pub mod worldcup;

pub use error::{ArenaError, Result};
pub use lattice::{
    path_count, terminal_probability, terminal_states, ArenaSpec, PlayerParams, PredictionDist,
    ResultCounts, State,
};
