//! Core domain types: the arena state lattice, terminal-result set,
//! player parameters, result tallies, and outcome distributions.
//!
//! An m-n arena ends a player's run once he collects m wins or n losses.
//! States are pairs (i, j) of wins and losses with 0 <= i <= m, 0 <= j <= n
//! and (m, n) excluded; the terminal set
//! `S_{m,n} = {(m,j): j < n} ∪ {(i,n): i < m}` has exactly m + n members.

use crate::error::{ArenaError, Result};
use std::collections::BTreeMap;
use std::fmt;

/// Lattice dimensions of an arena: win threshold `m`, loss threshold `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ArenaSpec {
    m: u32,
    n: u32,
}

impl ArenaSpec {
    pub fn new(m: u32, n: u32) -> Result<Self> {
        if m < 1 || n < 1 {
            return Err(ArenaError::InvalidParam(format!(
                "arena thresholds must be at least 1, got m = {m}, n = {n}"
            )));
        }
        Ok(Self { m, n })
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    /// Number of terminal results, `m + n`.
    pub fn num_terminals(&self) -> usize {
        (self.m + self.n) as usize
    }

    /// True iff `state` belongs to the lattice `ε ∪ S_{m,n}`.
    pub fn contains(&self, state: State) -> bool {
        state.wins <= self.m && state.losses <= self.n && (state.wins, state.losses) != (self.m, self.n)
    }

    /// True iff `state` is a member of the terminal set.
    pub fn is_terminal(&self, state: State) -> bool {
        self.contains(state) && (state.wins == self.m || state.losses == self.n)
    }

    /// All lattice states in topological order (by total rounds played,
    /// then by wins descending). Every state appears after both states
    /// that can precede it.
    pub fn states(&self) -> Vec<State> {
        let mut out = Vec::new();
        for total in 0..=(self.m + self.n - 1) {
            for wins in (0..=total.min(self.m)).rev() {
                let losses = total - wins;
                let state = State::new(wins, losses);
                if self.contains(state) {
                    out.push(state);
                }
            }
        }
        out
    }

    /// Dense index of a lattice state; the (m, n) hole is never handed out.
    pub(crate) fn state_index(&self, state: State) -> usize {
        (state.wins * (self.n + 1) + state.losses) as usize
    }

    pub(crate) fn num_slots(&self) -> usize {
        ((self.m + 1) * (self.n + 1)) as usize
    }
}

impl fmt::Display for ArenaSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.m, self.n)
    }
}

/// A win/loss tally (i, j) within one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct State {
    pub wins: u32,
    pub losses: u32,
}

impl State {
    pub fn new(wins: u32, losses: u32) -> Self {
        Self { wins, losses }
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.wins, self.losses)
    }
}

/// Latent parameters of one player: strength on the standard-normal prior
/// scale and the nonnegative coefficient of fluctuations. `rho = 0` recovers
/// the no-fluctuation model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlayerParams {
    pub strength: f64,
    pub rho: f64,
}

impl PlayerParams {
    pub fn new(strength: f64, rho: f64) -> Result<Self> {
        if !strength.is_finite() {
            return Err(ArenaError::InvalidParam(format!("strength must be finite, got {strength}")));
        }
        if !rho.is_finite() || rho < 0.0 {
            return Err(ArenaError::InvalidParam(format!(
                "fluctuation coefficient must be finite and nonnegative, got {rho}"
            )));
        }
        Ok(Self { strength, rho })
    }
}

/// The terminal set `S_{m,n}` in canonical order:
/// `(m,0), (m,1), ..., (m,n-1), (m-1,n), ..., (0,n)` — wins descending.
pub fn terminal_states(spec: ArenaSpec) -> Vec<State> {
    let mut out = Vec::with_capacity(spec.num_terminals());
    for j in 0..spec.n {
        out.push(State::new(spec.m, j));
    }
    for i in (0..spec.m).rev() {
        out.push(State::new(i, spec.n));
    }
    out
}

/// Number of monotone lattice paths from (0,0) to a terminal state whose
/// final step enters the terminal boundary: `C(m+j-1, m-1)` for (m, j) and
/// `C(n+i-1, n-1)` for (i, n).
pub fn path_count(spec: ArenaSpec, terminal: State) -> Result<u64> {
    if !spec.is_terminal(terminal) {
        return Err(ArenaError::NonTerminalState { state: terminal, m: spec.m, n: spec.n });
    }
    let count = if terminal.wins == spec.m {
        binomial(spec.m + terminal.losses - 1, spec.m - 1)
    } else {
        binomial(spec.n + terminal.wins - 1, spec.n - 1)
    };
    Ok(count)
}

/// Unconditional probability that a run ends at `terminal`,
/// `path_count * (1/2)^(i+j)`.
pub fn terminal_probability(spec: ArenaSpec, terminal: State) -> Result<f64> {
    let paths = path_count(spec, terminal)?;
    Ok(paths as f64 * 0.5_f64.powi((terminal.wins + terminal.losses) as i32))
}

fn binomial(n: u32, k: u32) -> u64 {
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for step in 0..k as u64 {
        acc = acc * (n as u64 - step) / (step + 1);
    }
    acc
}

/// Observed final-result tallies `N_{i,j}` of one player over `S_{m,n}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResultCounts {
    spec: ArenaSpec,
    counts: BTreeMap<State, u64>,
}

impl ResultCounts {
    pub fn new(spec: ArenaSpec) -> Self {
        Self { spec, counts: BTreeMap::new() }
    }

    pub fn from_pairs<I: IntoIterator<Item = (State, u64)>>(spec: ArenaSpec, pairs: I) -> Result<Self> {
        let mut out = Self::new(spec);
        for (state, count) in pairs {
            out.record_many(state, count)?;
        }
        Ok(out)
    }

    pub fn record(&mut self, state: State) -> Result<()> {
        self.record_many(state, 1)
    }

    pub fn record_many(&mut self, state: State, count: u64) -> Result<()> {
        if !self.spec.is_terminal(state) {
            return Err(ArenaError::NonTerminalState { state, m: self.spec.m, n: self.spec.n });
        }
        *self.counts.entry(state).or_insert(0) += count;
        Ok(())
    }

    pub fn merge(&mut self, other: &ResultCounts) {
        debug_assert_eq!(self.spec, other.spec);
        for (&state, &count) in &other.counts {
            *self.counts.entry(state).or_insert(0) += count;
        }
    }

    pub fn spec(&self) -> ArenaSpec {
        self.spec
    }

    pub fn get(&self, state: State) -> u64 {
        self.counts.get(&state).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.total() == 0
    }

    /// Tallies in canonical terminal order, zero-filled.
    pub fn canonical(&self) -> Vec<(State, u64)> {
        terminal_states(self.spec).into_iter().map(|t| (t, self.get(t))).collect()
    }
}

/// A probability vector over the terminal set, stored in canonical order.
///
/// Entries are nonnegative and sum to one within `SUM_SLACK`. Construction
/// accepts raw nonnegative masses: values already summing to one within
/// `SUM_SLACK` are kept bit-exact (frequencies stay exact twentieths and
/// the like), small quadrature drift up to `RAW_SUM_TOLERANCE` is
/// renormalized away, anything further off is rejected.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionDist {
    spec: ArenaSpec,
    probs: Vec<f64>,
}

/// Permitted |sum - 1| of a raw mass vector before normalization.
pub const RAW_SUM_TOLERANCE: f64 = 1e-6;

/// |sum - 1| the stored probabilities are allowed to keep.
pub const SUM_SLACK: f64 = 1e-9;

impl PredictionDist {
    /// Wraps raw terminal masses given in canonical order.
    pub fn from_raw(spec: ArenaSpec, raw: Vec<f64>) -> Result<Self> {
        if raw.len() != spec.num_terminals() {
            return Err(ArenaError::InvalidParam(format!(
                "expected {} terminal masses, got {}",
                spec.num_terminals(),
                raw.len()
            )));
        }
        if raw.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(ArenaError::InvalidParam("terminal masses must be finite and nonnegative".into()));
        }
        let sum: f64 = raw.iter().sum();
        if (sum - 1.0).abs() > RAW_SUM_TOLERANCE {
            return Err(ArenaError::InvalidParam(format!("terminal masses sum to {sum}, expected 1")));
        }
        let probs = if (sum - 1.0).abs() <= SUM_SLACK {
            raw
        } else {
            raw.into_iter().map(|p| p / sum).collect()
        };
        Ok(Self { spec, probs })
    }

    pub fn spec(&self) -> ArenaSpec {
        self.spec
    }

    /// Probability of one terminal state.
    pub fn prob(&self, terminal: State) -> Result<f64> {
        let idx = terminal_states(self.spec)
            .iter()
            .position(|t| *t == terminal)
            .ok_or(ArenaError::NonTerminalState { state: terminal, m: self.spec.m(), n: self.spec.n() })?;
        Ok(self.probs[idx])
    }

    /// Probabilities in canonical terminal order.
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn iter(&self) -> impl Iterator<Item = (State, f64)> + '_ {
        terminal_states(self.spec).into_iter().zip(self.probs.iter().copied())
    }

    /// Euclidean distance between two distributions over the same terminal set.
    pub fn euclidean_distance(&self, other: &PredictionDist) -> Result<f64> {
        if self.spec != other.spec {
            return Err(ArenaError::InvalidParam("distributions are over different arenas".into()));
        }
        let sq: f64 = self
            .probs
            .iter()
            .zip(other.probs.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        Ok(sq.sqrt())
    }
}
