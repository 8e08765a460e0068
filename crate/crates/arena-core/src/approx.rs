//! Normal approximation of state-strength distributions in arenas with
//! uniform fluctuations.
//!
//! Under uniform fluctuations the strength of players occupying state (i, j)
//! is approximated by `N(mu_{i,j}, sigma2_{i,j})`, with moments propagated
//! by closed-form recursions: a win updates
//! `mu' = mu + 2 sigma^2 / sqrt(2 pi (2 sigma^2 + rho^2))` and
//! `sigma2' = sigma2 (1 - 2 sigma^2 / (pi (2 sigma^2 + rho^2)))`,
//! a loss mirrors the mean shift with the same variance contraction, and
//! interior states mix their two predecessors with weights i/(i+j), j/(i+j).
//!
//! Result probabilities then come from a forward pass over the lattice in
//! which the chance of winning the next round from state (i, j) is
//! `Phi((x - mu_{i,j}) / sqrt(sigma2_{i,j} + rho^2))`.

use crate::error::{ArenaError, Result};
use crate::grid::DensityGrid;
use crate::lattice::{terminal_states, ArenaSpec, PredictionDist, ResultCounts, State};
use crate::normal::{normal_cdf, normal_pdf_scaled};
use std::f64::consts::PI;
use std::io::Write;

/// `E Phi(a + b xi)` for standard-normal `xi`, in closed form
/// `Phi(a / sqrt(1 + b^2))`.
pub fn gauss_phi_expectation(a: f64, b: f64) -> f64 {
    normal_cdf(a / (1.0 + b * b).sqrt())
}

/// Which way a round went.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Win,
    Lose,
}

/// One moment-recursion step: the mean and variance of the winner (or
/// loser) of a round between two players drawn from `N(mu, sigma2)`, each
/// perturbed by fluctuation noise of scale `rho`.
///
/// Requires `sigma2 > 0`.
pub fn next_moments(mu: f64, sigma2: f64, rho: f64, direction: Direction) -> (f64, f64) {
    debug_assert!(sigma2 > 0.0);
    let denom = 2.0 * sigma2 + rho * rho;
    let shift = 2.0 * sigma2 / (2.0 * PI * denom).sqrt();
    let variance = sigma2 * (1.0 - 2.0 * sigma2 / (PI * denom));
    match direction {
        Direction::Win => (mu + shift, variance),
        Direction::Lose => (mu - shift, variance),
    }
}

/// Normal-approximation moments `(mu_{i,j}, sigma2_{i,j})` for every state
/// of an arena with uniform fluctuation coefficient `rho`, terminal states
/// included.
#[derive(Debug, Clone)]
pub struct MomentTable {
    spec: ArenaSpec,
    rho: f64,
    mu: Vec<f64>,
    sigma2: Vec<f64>,
}

/// Fills the moment table by the six-case recursions.
pub fn build_moment_table(spec: ArenaSpec, rho: f64) -> Result<MomentTable> {
    if !rho.is_finite() || rho <= 0.0 {
        return Err(ArenaError::InvalidParam(format!(
            "uniform fluctuation coefficient must be positive and finite, got {rho}"
        )));
    }
    let slots = spec.num_slots();
    let mut mu = vec![f64::NAN; slots];
    let mut sigma2 = vec![f64::NAN; slots];

    for state in spec.states() {
        let idx = spec.state_index(state);
        let (i, j) = (state.wins, state.losses);
        let (m, s2) = if i == 0 && j == 0 {
            (0.0, 1.0)
        } else if j == 0 || i == spec.m() {
            let p = spec.state_index(State::new(i - 1, j));
            next_moments(mu[p], sigma2[p], rho, Direction::Win)
        } else if i == 0 || j == spec.n() {
            let p = spec.state_index(State::new(i, j - 1));
            next_moments(mu[p], sigma2[p], rho, Direction::Lose)
        } else {
            let pw = spec.state_index(State::new(i - 1, j));
            let pl = spec.state_index(State::new(i, j - 1));
            let wi = i as f64 / (i + j) as f64;
            let wj = j as f64 / (i + j) as f64;
            let (mw, s2w) = next_moments(mu[pw], sigma2[pw], rho, Direction::Win);
            let (ml, s2l) = next_moments(mu[pl], sigma2[pl], rho, Direction::Lose);
            (wi * mw + wj * ml, wi * s2w + wj * s2l)
        };
        mu[idx] = m;
        sigma2[idx] = s2;
    }

    Ok(MomentTable { spec, rho, mu, sigma2 })
}

impl MomentTable {
    pub fn spec(&self) -> ArenaSpec {
        self.spec
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn mu(&self, state: State) -> Option<f64> {
        self.spec.contains(state).then(|| self.mu[self.spec.state_index(state)])
    }

    pub fn sigma2(&self, state: State) -> Option<f64> {
        self.spec.contains(state).then(|| self.sigma2[self.spec.state_index(state)])
    }

    /// Probability that a player of strength `x` wins his next round from
    /// state (i, j): the opponent is `N(mu_{i,j}, sigma2_{i,j})` and both
    /// performances carry fluctuation noise of scale `rho`.
    pub fn win_probability(&self, state: State, x: f64) -> Option<f64> {
        let mu = self.mu(state)?;
        let s2 = self.sigma2(state)?;
        Some(normal_cdf((x - mu) / (s2 + self.rho * self.rho).sqrt()))
    }
}

/// Distribution of final results for a player of strength `x` under the
/// normal approximation: a forward pass pushes unit mass from (0, 0)
/// through the lattice, splitting at each non-terminal state by the win
/// probability. Mass is conserved by construction.
pub fn result_prob_approx(table: &MomentTable, x: f64) -> PredictionDist {
    let spec = table.spec();
    let mut mass = vec![0.0_f64; spec.num_slots()];
    mass[spec.state_index(State::new(0, 0))] = 1.0;

    for state in spec.states() {
        if spec.is_terminal(state) {
            continue;
        }
        let idx = spec.state_index(state);
        let arriving = mass[idx];
        if arriving == 0.0 {
            continue;
        }
        let win = table.win_probability(state, x).expect("state from spec.states()");
        mass[spec.state_index(State::new(state.wins + 1, state.losses))] += arriving * win;
        mass[spec.state_index(State::new(state.wins, state.losses + 1))] += arriving * (1.0 - win);
    }

    let raw: Vec<f64> = terminal_states(spec)
        .into_iter()
        .map(|t| mass[spec.state_index(t)])
        .collect();
    PredictionDist::from_raw(spec, raw).expect("forward pass conserves mass")
}

/// The density-ratio likelihood `prod p~_{i,j}(x)^{N_{i,j}} / p_{0,0}(x)^{N-1}`
/// with Gaussian state densities from the moment table.
///
/// This objective mis-approximates the density ratios and its conditional
/// result probabilities do not sum to one; it is provided as a diagnostic
/// baseline for comparison against [`crate::infer::map_estimate`], not as
/// an estimator.
pub fn likelihood_density_ratio(
    table: &MomentTable,
    prior: &DensityGrid,
    data: &ResultCounts,
    x: f64,
) -> Result<f64> {
    if data.spec() != table.spec() {
        return Err(ArenaError::InvalidParam("data and table describe different arenas".into()));
    }
    let p0 = prior.interpolate(x);
    if p0 < crate::exact::SUPPORT_FLOOR {
        return Err(ArenaError::OutOfSupport { x });
    }
    let total = data.total();
    let mut log = -(total as f64 - 1.0) * p0.ln();
    for (state, count) in data.canonical() {
        if count == 0 {
            continue;
        }
        let mu = table.mu(state).expect("terminal state in table");
        let s2 = table.sigma2(state).expect("terminal state in table");
        let density = normal_pdf_scaled(x, mu, s2);
        if density <= 0.0 {
            return Ok(0.0);
        }
        log += count as f64 * density.ln();
    }
    Ok(log.exp())
}

/// Dumps a moment table as CSV rows `i,j,mu,sigma2`.
pub fn write_moments_csv<W: Write>(out: &mut W, table: &MomentTable) -> Result<()> {
    writeln!(out, "i,j,mu,sigma2")?;
    for state in table.spec().states() {
        writeln!(
            out,
            "{},{},{},{}",
            state.wins,
            state.losses,
            table.mu(state).unwrap(),
            table.sigma2(state).unwrap()
        )?;
    }
    Ok(())
}
