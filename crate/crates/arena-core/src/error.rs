//! Error type shared by all arena operations.

use crate::lattice::State;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ArenaError {
    /// A parameter violated its domain (non-positive rho, bad grid step, ...).
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    /// The state is not a member of the terminal set S_{m,n}.
    #[error("state ({}, {}) is not terminal in a {m}-{n} arena", state.wins, state.losses)]
    NonTerminalState { state: State, m: u32, n: u32 },

    /// Player counts must keep every non-terminal pool even in every round.
    #[error("{total} players cannot be paired in a {m}-{n} arena: total must be divisible by {required}")]
    PoolParity { total: u64, m: u32, n: u32, required: u64 },

    /// No outcome rows mention this player.
    #[error("unknown player index {0}")]
    UnknownPlayer(u32),

    /// Grid spacing too coarse for the quadrature accuracy the recursions need.
    #[error("grid step {step} exceeds the accuracy guard of {max}")]
    GridTooCoarse { step: f64, max: f64 },

    /// Evaluation point where the prior density is (numerically) zero.
    #[error("x = {x} is outside the prior's support")]
    OutOfSupport { x: f64 },

    /// The likelihood vanished everywhere on the grid.
    #[error("likelihood is zero on the whole grid; data are inconsistent with the model")]
    DegenerateData,

    /// Strength and fluctuation coefficient cannot be separated in a 1-1 arena.
    #[error("(x, rho) is not identifiable from 1-1 arena results")]
    NonIdentifiable,

    /// An operation that needs observations received none.
    #[error("no observed results")]
    EmptyData,

    /// The 1-1 estimator's domain condition tan^2(pi T) > 1 failed: the sample
    /// is compatible only with unboundedly large fluctuations.
    #[error("fluctuations too large to resolve: tan^2(pi T) = {tan2} <= 1 at T = {t_stat}")]
    FluctuationsTooLarge { t_stat: f64, tan2: f64 },

    /// Malformed input data file.
    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    /// The same (country, year) appeared twice in one dataset.
    #[error("duplicate record for {country} in {year}")]
    DuplicateRecord { country: String, year: i32 },

    /// Train/test datasets must cover the same entities.
    #[error("country {country} is present in only one of the datasets")]
    MissingCountry { country: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, ArenaError>;
