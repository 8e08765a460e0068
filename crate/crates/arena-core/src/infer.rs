//! Parameter estimation and result prediction.
//!
//! The MAP estimator maximizes
//! `sum_t N_t ln P_rho(A_t | X = x) + ln p_00(x)`
//! over a rectangular search box by a two-stage grid scan (coarse step 0.05,
//! refinement step 0.005 around the best coarse cell), rebuilding the
//! opponent moment table for every candidate rho. A closed-form estimator
//! covers the 1-1 uniform-fluctuation arena, where (x, rho) is otherwise
//! not identifiable from one player's results.

use crate::approx::{build_moment_table, result_prob_approx};
use crate::error::{ArenaError, Result};
use crate::grid::DensityGrid;
use crate::lattice::{ArenaSpec, PredictionDist, ResultCounts};
use crate::sim::RunOutcome;
use rayon::prelude::*;
use std::f64::consts::PI;
use std::fmt;
use std::io::Write;

/// Coarse scan step for both coordinates.
pub const COARSE_STEP: f64 = 0.05;
/// Refinement step around the best coarse cell.
pub const REFINE_STEP: f64 = 0.005;

/// Rectangular search region for the MAP estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchBox {
    pub x_min: f64,
    pub x_max: f64,
    pub rho_min: f64,
    pub rho_max: f64,
}

impl Default for SearchBox {
    /// Covers every estimate the World Cup application produces, with margin.
    fn default() -> Self {
        Self { x_min: -4.0, x_max: 4.0, rho_min: 0.01, rho_max: 6.0 }
    }
}

impl SearchBox {
    pub fn validate(&self) -> Result<()> {
        let ok = self.x_min < self.x_max
            && self.rho_min < self.rho_max
            && self.x_min >= -6.0
            && self.x_max <= 6.0
            && self.rho_min >= 0.01
            && self.rho_max <= 10.0;
        if ok {
            Ok(())
        } else {
            Err(ArenaError::InvalidParam(format!(
                "search box x in [{}, {}], rho in [{}, {}] must sit within x in [-6, 6], rho in [0.01, 10]",
                self.x_min, self.x_max, self.rho_min, self.rho_max
            )))
        }
    }
}

/// A located maximum of the MAP objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapEstimate {
    pub x_hat: f64,
    pub rho_hat: f64,
    pub log_objective: f64,
    /// Set when the optimum sits on an x edge of the search box.
    pub at_x_bound: bool,
    /// Set when the optimum sits on a rho edge of the search box.
    pub at_rho_bound: bool,
}

/// The MAP objective `sum_t N_t ln P_rho(A_t|x) + ln p_00(x)` at one point.
pub fn map_objective(
    spec: ArenaSpec,
    prior: &DensityGrid,
    data: &ResultCounts,
    x: f64,
    rho: f64,
) -> Result<f64> {
    let table = build_moment_table(spec, rho)?;
    Ok(objective_with_table(&table, prior, data, x))
}

fn objective_with_table(
    table: &crate::approx::MomentTable,
    prior: &DensityGrid,
    data: &ResultCounts,
    x: f64,
) -> f64 {
    let probs = result_prob_approx(table, x);
    let mut log = 0.0;
    for ((_, count), p) in data.canonical().into_iter().zip(probs.probs()) {
        if count == 0 {
            continue;
        }
        if *p > 0.0 {
            log += count as f64 * p.ln();
        } else {
            return f64::NEG_INFINITY;
        }
    }
    let p0 = prior.interpolate(x);
    if p0 > 0.0 {
        log + p0.ln()
    } else {
        f64::NEG_INFINITY
    }
}

/// Inclusive grid `lo, lo + step, ...` ending at (or within half a step of) `hi`.
fn grid_points(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    (0..count).map(|k| lo + step * k as f64).collect()
}

struct Candidate {
    value: f64,
    x: f64,
    rho: f64,
}

impl Candidate {
    /// Highest value wins; exact ties go to the smallest x, then smallest rho.
    fn better_of(self, other: Candidate) -> Candidate {
        if other.value > self.value
            || (other.value == self.value && (other.x, other.rho) < (self.x, self.rho))
        {
            other
        } else {
            self
        }
    }
}

fn scan(
    spec: ArenaSpec,
    prior: &DensityGrid,
    data: &ResultCounts,
    xs: &[f64],
    rhos: &[f64],
) -> Result<Candidate> {
    rhos.par_iter()
        .map(|&rho| {
            let table = build_moment_table(spec, rho)?;
            let mut best = Candidate { value: f64::NEG_INFINITY, x: f64::NAN, rho };
            for &x in xs {
                let value = objective_with_table(&table, prior, data, x);
                best = best.better_of(Candidate { value, x, rho });
            }
            Ok(best)
        })
        .try_reduce(
            || Candidate { value: f64::NEG_INFINITY, x: f64::INFINITY, rho: f64::INFINITY },
            |a, b| Ok(a.better_of(b)),
        )
}

/// Two-stage grid search for the MAP estimate of `(x, rho)`.
pub fn map_estimate(
    spec: ArenaSpec,
    prior: &DensityGrid,
    data: &ResultCounts,
    bounds: &SearchBox,
) -> Result<MapEstimate> {
    if spec.m() == 1 && spec.n() == 1 {
        return Err(ArenaError::NonIdentifiable);
    }
    if data.is_empty() {
        return Err(ArenaError::EmptyData);
    }
    if data.spec() != spec {
        return Err(ArenaError::InvalidParam("data tallies belong to a different arena".into()));
    }
    bounds.validate()?;

    let coarse_xs = grid_points(bounds.x_min, bounds.x_max, COARSE_STEP);
    let coarse_rhos = grid_points(bounds.rho_min, bounds.rho_max, COARSE_STEP);
    let coarse = scan(spec, prior, data, &coarse_xs, &coarse_rhos)?;
    if !coarse.value.is_finite() {
        return Err(ArenaError::DegenerateData);
    }

    let fine_xs = grid_points(
        (coarse.x - COARSE_STEP).max(bounds.x_min),
        (coarse.x + COARSE_STEP).min(bounds.x_max),
        REFINE_STEP,
    );
    let fine_rhos = grid_points(
        (coarse.rho - COARSE_STEP).max(bounds.rho_min),
        (coarse.rho + COARSE_STEP).min(bounds.rho_max),
        REFINE_STEP,
    );
    let best = scan(spec, prior, data, &fine_xs, &fine_rhos)?.better_of(coarse);

    let edge = |v: f64, bound: f64| (v - bound).abs() < REFINE_STEP / 2.0;
    Ok(MapEstimate {
        x_hat: best.x,
        rho_hat: best.rho,
        log_objective: best.value,
        at_x_bound: edge(best.x, bounds.x_min) || edge(best.x, bounds.x_max),
        at_rho_bound: edge(best.rho, bounds.rho_min) || edge(best.rho, bounds.rho_max),
    })
}

/// Win indicators of M players over N runs of a 1-1 arena, with the
/// statistic `T = ((1/(MN)) sum Y_l^2 - 1/2) / (N - 1)` that drives the
/// closed-form fluctuation estimator.
#[derive(Debug, Clone)]
pub struct WinMatrix {
    indicators: Vec<Vec<bool>>,
    row_sums: Vec<u32>,
    t_stat: f64,
}

impl WinMatrix {
    pub fn new(indicators: Vec<Vec<bool>>) -> Result<Self> {
        let players = indicators.len();
        if players == 0 {
            return Err(ArenaError::EmptyData);
        }
        let runs = indicators[0].len();
        if runs < 2 {
            return Err(ArenaError::InvalidParam("the 1-1 estimator needs at least two runs".into()));
        }
        if indicators.iter().any(|row| row.len() != runs) {
            return Err(ArenaError::InvalidParam("ragged indicator matrix".into()));
        }
        let row_sums: Vec<u32> = indicators
            .iter()
            .map(|row| row.iter().map(|&w| w as u32).sum())
            .collect();
        let sum_sq: f64 = row_sums.iter().map(|&y| (y as f64) * (y as f64)).sum();
        let t_stat = (sum_sq / (players as f64 * runs as f64) - 0.5) / (runs as f64 - 1.0);
        Ok(Self { indicators, row_sums, t_stat })
    }

    /// Builds the matrix from simulator outcomes of a 1-1 arena.
    pub fn from_outcomes(outcomes: &[RunOutcome], players: u32, runs: u32) -> Result<Self> {
        let mut grid = vec![vec![false; runs as usize]; players as usize];
        let mut seen = vec![false; (players as usize) * (runs as usize)];
        for o in outcomes {
            if o.final_state.wins + o.final_state.losses != 1 {
                return Err(ArenaError::InvalidParam(format!(
                    "outcome {} is not a 1-1 arena result",
                    o.final_state
                )));
            }
            if o.player_index >= players || o.run_index >= runs {
                return Err(ArenaError::InvalidParam(format!(
                    "outcome for player {} run {} is outside the {players} x {runs} matrix",
                    o.player_index, o.run_index
                )));
            }
            let flat = (o.player_index as usize) * (runs as usize) + o.run_index as usize;
            if seen[flat] {
                return Err(ArenaError::InvalidParam(format!(
                    "duplicate outcome for player {} run {}",
                    o.player_index, o.run_index
                )));
            }
            seen[flat] = true;
            grid[o.player_index as usize][o.run_index as usize] = o.final_state.wins == 1;
        }
        if seen.iter().any(|s| !s) {
            return Err(ArenaError::InvalidParam("missing outcomes for some (player, run) cells".into()));
        }
        Self::new(grid)
    }

    pub fn indicators(&self) -> &[Vec<bool>] {
        &self.indicators
    }

    pub fn row_sums(&self) -> &[u32] {
        &self.row_sums
    }

    pub fn t_stat(&self) -> f64 {
        self.t_stat
    }
}

/// Outcome of the closed-form 1-1 fluctuation estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhoEstimate {
    pub rho: f64,
    /// Set when `tan^2(pi T) >= 3`: the sample is more regular than the
    /// zero-fluctuation model allows and the estimate was clamped to zero.
    pub clamped: bool,
}

/// `rho_hat = sqrt((3 - tan^2(pi T)) / (tan^2(pi T) - 1))` from the matrix
/// statistic; see [`rho_from_t_stat`] for the domain handling.
pub fn estimate_rho_1v1(matrix: &WinMatrix) -> Result<RhoEstimate> {
    rho_from_t_stat(matrix.t_stat())
}

/// The estimator itself, exposed for direct evaluation of the statistic.
pub fn rho_from_t_stat(t: f64) -> Result<RhoEstimate> {
    let tan2 = (PI * t).tan().powi(2);
    if tan2 <= 1.0 {
        return Err(ArenaError::FluctuationsTooLarge { t_stat: t, tan2 });
    }
    // the epsilon absorbs tan() roundoff right at the rho = 0 boundary
    if tan2 >= 3.0 - 1e-9 {
        return Ok(RhoEstimate { rho: 0.0, clamped: true });
    }
    Ok(RhoEstimate { rho: ((3.0 - tan2) / (tan2 - 1.0)).sqrt(), clamped: false })
}

/// Plug-in predictor: result probabilities evaluated at the MAP estimate.
pub fn predict_map(spec: ArenaSpec, estimate: &MapEstimate) -> Result<PredictionDist> {
    let table = build_moment_table(spec, estimate.rho_hat)?;
    Ok(result_prob_approx(&table, estimate.x_hat))
}

/// Bayesian predictor with rho held fixed: integrates the result
/// probabilities against the grid posterior of x.
pub fn predict_bayes(
    spec: ArenaSpec,
    prior: &DensityGrid,
    data: &ResultCounts,
    rho_fixed: f64,
) -> Result<PredictionDist> {
    if data.spec() != spec {
        return Err(ArenaError::InvalidParam("data tallies belong to a different arena".into()));
    }
    let table = build_moment_table(spec, rho_fixed)?;
    let counts = data.canonical();
    let n_nodes = prior.len();

    let mut loglik = Vec::with_capacity(n_nodes);
    let mut node_probs: Vec<Vec<f64>> = Vec::with_capacity(n_nodes);
    for node in prior.nodes() {
        let probs = result_prob_approx(&table, node);
        let mut ll = 0.0_f64;
        for ((_, count), p) in counts.iter().zip(probs.probs()) {
            if *count == 0 {
                continue;
            }
            ll += if *p > 0.0 { *count as f64 * p.ln() } else { f64::NEG_INFINITY };
        }
        loglik.push(ll);
        node_probs.push(probs.probs().to_vec());
    }
    let max = loglik.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(ArenaError::DegenerateData);
    }

    let mut accum = vec![0.0_f64; spec.num_terminals()];
    let mut normalizer = 0.0;
    for k in 0..n_nodes {
        if !loglik[k].is_finite() {
            continue;
        }
        let trap = if k == 0 || k == n_nodes - 1 { 0.5 } else { 1.0 };
        let weight = (loglik[k] - max).exp() * prior.values()[k] * trap * prior.step();
        normalizer += weight;
        for (acc, p) in accum.iter_mut().zip(&node_probs[k]) {
            *acc += weight * p;
        }
    }
    if normalizer <= 0.0 {
        return Err(ArenaError::DegenerateData);
    }
    for acc in &mut accum {
        *acc /= normalizer;
    }
    PredictionDist::from_raw(spec, accum)
}

/// Nonparametric baseline: observed frequencies as probabilities.
pub fn predict_frequency(data: &ResultCounts) -> Result<PredictionDist> {
    let total = data.total();
    if total == 0 {
        return Err(ArenaError::EmptyData);
    }
    let raw = data
        .canonical()
        .into_iter()
        .map(|(_, count)| count as f64 / total as f64)
        .collect();
    PredictionDist::from_raw(data.spec(), raw)
}

/// Which engine produced a prediction row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PredictionMethod {
    Map,
    Bayes,
    Frequency,
    Exact,
}

impl fmt::Display for PredictionMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            PredictionMethod::Map => "map",
            PredictionMethod::Bayes => "bayes",
            PredictionMethod::Frequency => "frequency",
            PredictionMethod::Exact => "exact",
        };
        f.write_str(name)
    }
}

/// Writes estimates as CSV rows
/// `entity,x_hat,rho_hat,log_objective,at_x_bound,at_rho_bound`.
pub fn write_estimates_csv<W: Write>(out: &mut W, rows: &[(String, MapEstimate)]) -> Result<()> {
    writeln!(out, "entity,x_hat,rho_hat,log_objective,at_x_bound,at_rho_bound")?;
    for (entity, est) in rows {
        writeln!(
            out,
            "{entity},{},{},{},{},{}",
            est.x_hat, est.rho_hat, est.log_objective, est.at_x_bound, est.at_rho_bound
        )?;
    }
    Ok(())
}

/// Writes predictions as CSV rows `entity,wins,losses,probability,method`.
pub fn write_predictions_csv<W: Write>(
    out: &mut W,
    rows: &[(String, PredictionDist, PredictionMethod)],
) -> Result<()> {
    writeln!(out, "entity,wins,losses,probability,method")?;
    for (entity, dist, method) in rows {
        for (state, prob) in dist.iter() {
            writeln!(out, "{entity},{},{},{},{}", state.wins, state.losses, prob, method)?;
        }
    }
    Ok(())
}
