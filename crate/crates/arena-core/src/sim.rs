//! Monte Carlo realization of an m-n arena with fluctuations.
//!
//! A fixed roster of players (background strengths drawn i.i.d. standard
//! normal once per simulation, plus an optional tagged player with chosen
//! parameters) repeatedly runs the arena. Within each round every
//! non-terminal pool is paired uniformly at random and each match is decided
//! by comparing performances `X + (rho / sqrt(2)) eps` with independent
//! standard-normal `eps`.
//!
//! All randomness comes from counter-based ChaCha substreams keyed by
//! (master seed, purpose, run, round, pool), so results are a pure function
//! of the configuration no matter how runs are scheduled across threads.

use crate::error::{ArenaError, Result};
use crate::lattice::{ArenaSpec, PlayerParams, ResultCounts, State};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use std::f64::consts::FRAC_1_SQRT_2;
use std::io::Write;

/// Configuration of one simulation experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub spec: ArenaSpec,
    /// Number of background players (excluding the tagged player).
    pub population: u64,
    /// Number of complete arena runs.
    pub runs: u32,
    /// Uniform fluctuation coefficient of the background players.
    pub background_rho: f64,
    /// The studied player, if any; placed at index `population`.
    pub tagged: Option<PlayerParams>,
    pub seed: u64,
}

impl SimConfig {
    /// Total player count including the tagged player.
    pub fn total_players(&self) -> u64 {
        self.population + self.tagged.is_some() as u64
    }

    /// Pool parity requires the total player count to be divisible by
    /// `2^(m+n-1)`, so every non-terminal pool stays even in every round.
    pub fn required_divisor(&self) -> u64 {
        1u64 << (self.spec.m() + self.spec.n() - 1)
    }

    pub fn validate(&self) -> Result<()> {
        let depth = self.spec.m() + self.spec.n() - 1;
        if depth >= 63 {
            return Err(ArenaError::InvalidParam(format!(
                "arena depth {depth} is too large to simulate"
            )));
        }
        if self.runs == 0 {
            return Err(ArenaError::InvalidParam("need at least one run".into()));
        }
        if !self.background_rho.is_finite() || self.background_rho < 0.0 {
            return Err(ArenaError::InvalidParam(format!(
                "background rho must be finite and nonnegative, got {}",
                self.background_rho
            )));
        }
        let total = self.total_players();
        let required = self.required_divisor();
        if total == 0 || !total.is_multiple_of(required) {
            return Err(ArenaError::PoolParity {
                total,
                m: self.spec.m(),
                n: self.spec.n(),
                required,
            });
        }
        Ok(())
    }
}

/// One player's recorded final result in one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOutcome {
    pub player_index: u32,
    pub run_index: u32,
    pub final_state: State,
}

/// Per-round player states of a single run, for inspecting pool dynamics.
#[derive(Debug, Clone)]
pub struct RunTrace {
    /// `after_round[k]` holds every player's state once round k+1 finished.
    pub after_round: Vec<Vec<State>>,
}

impl RunTrace {
    /// Final state of every player.
    pub fn finals(&self) -> &[State] {
        self.after_round.last().expect("every run has at least one round")
    }

    /// Number of players sitting in `state` once `rounds` rounds finished.
    pub fn pool_size(&self, rounds: usize, state: State) -> usize {
        self.after_round[rounds - 1].iter().filter(|s| **s == state).count()
    }
}

// Substream purposes.
const STREAM_STRENGTHS: u64 = 0;
const STREAM_PAIRING: u64 = 1;
const STREAM_NOISE: u64 = 2;

/// Counter-based substream: the 256-bit ChaCha key encodes the master seed
/// and the (purpose, run, context) counters directly, so streams never
/// depend on how much randomness another stream consumed.
fn substream(seed: u64, purpose: u64, run: u64, ctx: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&purpose.to_le_bytes());
    key[16..24].copy_from_slice(&run.to_le_bytes());
    key[24..32].copy_from_slice(&ctx.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

fn pool_ctx(round: u32, state_index: usize) -> u64 {
    ((round as u64) << 52) | (state_index as u64)
}

/// A validated experiment with its roster drawn.
#[derive(Debug, Clone)]
pub struct Simulation {
    config: SimConfig,
    strengths: Vec<f64>,
    rhos: Vec<f64>,
}

impl Simulation {
    /// Validates the configuration and draws the fixed roster.
    pub fn new(config: SimConfig) -> Result<Self> {
        config.validate()?;
        let total = config.total_players() as usize;
        let mut strengths = Vec::with_capacity(total);
        let mut rhos = Vec::with_capacity(total);
        let mut rng = substream(config.seed, STREAM_STRENGTHS, 0, 0);
        for _ in 0..config.population {
            strengths.push(rng.sample::<f64, _>(StandardNormal));
            rhos.push(config.background_rho);
        }
        if let Some(tagged) = config.tagged {
            strengths.push(tagged.strength);
            rhos.push(tagged.rho);
        }
        Ok(Self { config, strengths, rhos })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    /// Fixed roster strengths, background players first.
    pub fn strengths(&self) -> &[f64] {
        &self.strengths
    }

    /// Index of the tagged player, when present.
    pub fn tagged_index(&self) -> Option<u32> {
        self.config.tagged.map(|_| self.config.population as u32)
    }

    fn run_impl(&self, run: u32, mut trace: Option<&mut Vec<Vec<State>>>) -> Vec<State> {
        let spec = self.config.spec;
        let total = self.config.total_players() as usize;
        let rounds = spec.m() + spec.n() - 1;
        let mut states = vec![State::new(0, 0); total];
        let mut pools: Vec<Vec<u32>> = vec![Vec::new(); spec.num_slots()];
        let lattice_order: Vec<State> =
            spec.states().into_iter().filter(|s| !spec.is_terminal(*s)).collect();

        for round in 0..rounds {
            for pool in &mut pools {
                pool.clear();
            }
            let mut active = false;
            for (player, state) in states.iter().enumerate() {
                if !spec.is_terminal(*state) {
                    pools[spec.state_index(*state)].push(player as u32);
                    active = true;
                }
            }
            if !active {
                break;
            }
            for &state in &lattice_order {
                let sidx = spec.state_index(state);
                if pools[sidx].is_empty() {
                    continue;
                }
                debug_assert_eq!(pools[sidx].len() % 2, 0, "parity violated at {state}");
                let ctx = pool_ctx(round, sidx);
                pools[sidx].shuffle(&mut substream(self.config.seed, STREAM_PAIRING, run as u64, ctx));
                let mut noise = substream(self.config.seed, STREAM_NOISE, run as u64, ctx);
                for pair in pools[sidx].chunks_exact(2) {
                    let (a, b) = (pair[0] as usize, pair[1] as usize);
                    let perf_a = self.performance(a, &mut noise);
                    let perf_b = self.performance(b, &mut noise);
                    // ties carry zero probability; break toward the first listed
                    let (winner, loser) = if perf_a >= perf_b { (a, b) } else { (b, a) };
                    states[winner].wins += 1;
                    states[loser].losses += 1;
                }
            }
            if let Some(tr) = trace.as_deref_mut() {
                tr.push(states.clone());
            }
        }
        debug_assert!(states.iter().all(|s| spec.is_terminal(*s)));
        states
    }

    fn performance<R: Rng>(&self, player: usize, noise: &mut R) -> f64 {
        let rho = self.rhos[player];
        if rho == 0.0 {
            self.strengths[player]
        } else {
            let eps: f64 = noise.sample(StandardNormal);
            self.strengths[player] + rho * FRAC_1_SQRT_2 * eps
        }
    }

    /// Final state of every player in one run.
    pub fn run_finals(&self, run: u32) -> Vec<State> {
        self.run_impl(run, None)
    }

    /// One run with per-round state snapshots.
    pub fn run_trace(&self, run: u32) -> RunTrace {
        let mut after_round = Vec::new();
        self.run_impl(run, Some(&mut after_round));
        RunTrace { after_round }
    }

    /// Every player's result in every run, ordered by run then player index.
    pub fn outcomes(&self) -> Vec<RunOutcome> {
        (0..self.config.runs)
            .into_par_iter()
            .map(|run| self.run_finals(run))
            .collect::<Vec<_>>()
            .into_iter()
            .enumerate()
            .flat_map(|(run, finals)| {
                finals.into_iter().enumerate().map(move |(player, final_state)| RunOutcome {
                    player_index: player as u32,
                    run_index: run as u32,
                    final_state,
                })
            })
            .collect()
    }

    /// Result tallies of one player over all runs, without materializing the
    /// full outcome list.
    pub fn tally_of(&self, player_index: u32) -> Result<ResultCounts> {
        if player_index as u64 >= self.config.total_players() {
            return Err(ArenaError::UnknownPlayer(player_index));
        }
        let spec = self.config.spec;
        let counts = (0..self.config.runs)
            .into_par_iter()
            .fold(
                || ResultCounts::new(spec),
                |mut acc, run| {
                    let finals = self.run_finals(run);
                    acc.record(finals[player_index as usize]).expect("final states are terminal");
                    acc
                },
            )
            .reduce(
                || ResultCounts::new(spec),
                |mut a, b| {
                    a.merge(&b);
                    a
                },
            );
        Ok(counts)
    }
}

/// Runs a whole experiment and returns every player's outcome per run.
pub fn simulate(config: SimConfig) -> Result<Vec<RunOutcome>> {
    Ok(Simulation::new(config)?.outcomes())
}

/// Tallies one player's final results from an outcome list.
///
/// An empty outcome list yields all-zero counts; a nonempty list that never
/// mentions the player is an error.
pub fn tally(spec: ArenaSpec, outcomes: &[RunOutcome], player_index: u32) -> Result<ResultCounts> {
    let mut counts = ResultCounts::new(spec);
    if outcomes.is_empty() {
        return Ok(counts);
    }
    let mut seen = false;
    for outcome in outcomes {
        if outcome.player_index == player_index {
            counts.record(outcome.final_state)?;
            seen = true;
        }
    }
    if !seen {
        return Err(ArenaError::UnknownPlayer(player_index));
    }
    Ok(counts)
}

/// Writes outcomes as CSV with header `player_id,run,wins,losses`.
pub fn write_outcomes_csv<W: Write>(out: &mut W, outcomes: &[RunOutcome]) -> Result<()> {
    writeln!(out, "player_id,run,wins,losses")?;
    for o in outcomes {
        writeln!(out, "{},{},{},{}", o.player_index, o.run_index, o.final_state.wins, o.final_state.losses)?;
    }
    Ok(())
}
