//! Exact inference for arenas without fluctuations.
//!
//! State densities and CDFs follow the six-case recursions: a win from
//! (i-1, j) contributes `2 p_{i-1,j}(x) F_{i-1,j}(x)`, a loss from (i, j-1)
//! contributes `2 p_{i,j-1}(x) (1 - F_{i,j-1}(x))`, and interior states mix
//! the two with weights i/(i+j) and j/(i+j). CDFs propagate in closed form
//! (`F^2` on wins, `1-(1-F)^2` on losses) from the prior's cumulative
//! integral, so quadrature error does not compound across the lattice.

use crate::error::{ArenaError, Result};
use crate::grid::{trapezoid, DensityGrid};
use crate::lattice::{terminal_states, ArenaSpec, PredictionDist, ResultCounts, State};
use std::io::Write;

/// Coarsest grid step accepted by [`build_lattice`]; beyond this the
/// quadrature error would exceed the documented tolerances.
pub const MAX_GRID_STEP: f64 = 0.05;

/// Density evaluations below this are treated as "outside the support".
pub const SUPPORT_FLOOR: f64 = 1e-12;

/// Per-state densities `p_{i,j}` and CDFs `F_{i,j}` of an arena without
/// fluctuations, sampled on the prior's grid.
#[derive(Debug, Clone)]
pub struct LatticeDensities {
    spec: ArenaSpec,
    prior: DensityGrid,
    densities: Vec<Vec<f64>>,
    cdfs: Vec<Vec<f64>>,
}

/// Runs the density and CDF recursions over the whole lattice.
pub fn build_lattice(spec: ArenaSpec, prior: &DensityGrid) -> Result<LatticeDensities> {
    if prior.step() > MAX_GRID_STEP {
        return Err(ArenaError::GridTooCoarse { step: prior.step(), max: MAX_GRID_STEP });
    }
    let slots = spec.num_slots();
    let mut densities: Vec<Vec<f64>> = vec![Vec::new(); slots];
    let mut cdfs: Vec<Vec<f64>> = vec![Vec::new(); slots];

    for state in spec.states() {
        let idx = spec.state_index(state);
        let (i, j) = (state.wins, state.losses);
        let (density, cdf) = if i == 0 && j == 0 {
            (prior.values().to_vec(), prior.cumulative())
        } else if j == 0 || i == spec.m() {
            // entered by a win from (i-1, j)
            let parent = spec.state_index(State::new(i - 1, j));
            let p = win_density(&densities[parent], &cdfs[parent]);
            let f = cdfs[parent].iter().map(|f| f * f).collect();
            (p, f)
        } else if i == 0 || j == spec.n() {
            // entered by a loss from (i, j-1)
            let parent = spec.state_index(State::new(i, j - 1));
            let p = loss_density(&densities[parent], &cdfs[parent]);
            let f = cdfs[parent].iter().map(|f| 1.0 - (1.0 - f) * (1.0 - f)).collect();
            (p, f)
        } else {
            let win_parent = spec.state_index(State::new(i - 1, j));
            let loss_parent = spec.state_index(State::new(i, j - 1));
            let wi = i as f64 / (i + j) as f64;
            let wj = j as f64 / (i + j) as f64;
            let pw = win_density(&densities[win_parent], &cdfs[win_parent]);
            let pl = loss_density(&densities[loss_parent], &cdfs[loss_parent]);
            let p = pw.iter().zip(&pl).map(|(w, l)| wi * w + wj * l).collect();
            let f = cdfs[win_parent]
                .iter()
                .zip(&cdfs[loss_parent])
                .map(|(fw, fl)| wi * fw * fw + wj * (1.0 - (1.0 - fl) * (1.0 - fl)))
                .collect();
            (p, f)
        };
        densities[idx] = renormalize(prior.step(), density);
        cdfs[idx] = cdf;
    }

    Ok(LatticeDensities { spec, prior: prior.clone(), densities, cdfs })
}

fn win_density(parent: &[f64], parent_cdf: &[f64]) -> Vec<f64> {
    parent.iter().zip(parent_cdf).map(|(p, f)| 2.0 * p * f).collect()
}

fn loss_density(parent: &[f64], parent_cdf: &[f64]) -> Vec<f64> {
    parent.iter().zip(parent_cdf).map(|(p, f)| 2.0 * p * (1.0 - f)).collect()
}

// A state's density can vanish identically under a degenerate prior (all
// its mass on one node); the zeros are kept and surface later as
// `DegenerateData` instead of poisoning the grid with NaNs.
fn renormalize(step: f64, mut values: Vec<f64>) -> Vec<f64> {
    let total = trapezoid(step, &values);
    if total > f64::MIN_POSITIVE {
        for v in &mut values {
            *v /= total;
        }
    }
    values
}

impl LatticeDensities {
    pub fn spec(&self) -> ArenaSpec {
        self.spec
    }

    pub fn prior(&self) -> &DensityGrid {
        &self.prior
    }

    /// Density samples `p_{i,j}` for a lattice state.
    pub fn density(&self, state: State) -> Option<&[f64]> {
        if !self.spec.contains(state) {
            return None;
        }
        Some(&self.densities[self.spec.state_index(state)])
    }

    /// CDF samples `F_{i,j}` for a lattice state.
    pub fn cdf(&self, state: State) -> Option<&[f64]> {
        if !self.spec.contains(state) {
            return None;
        }
        Some(&self.cdfs[self.spec.state_index(state)])
    }

    fn density_at(&self, state: State, x: f64) -> f64 {
        let idx = self.spec.state_index(state);
        crate::grid::interpolate_on(self.prior.lo(), self.prior.step(), &self.densities[idx], x)
    }

    /// Raw conditional result masses `P(A_t | X = x)` in canonical terminal
    /// order. They sum to one only up to quadrature error; callers that need
    /// a distribution should use [`exact_result_prob`].
    pub fn result_masses(&self, x: f64) -> Result<Vec<f64>> {
        if x < self.prior.lo() || x > self.prior.hi() {
            return Err(ArenaError::OutOfSupport { x });
        }
        let p0 = self.density_at(State::new(0, 0), x);
        if p0 < SUPPORT_FLOOR {
            return Err(ArenaError::OutOfSupport { x });
        }
        terminal_states(self.spec)
            .into_iter()
            .map(|t| {
                let coef = crate::lattice::terminal_probability(self.spec, t)?;
                Ok(coef * self.density_at(t, x) / p0)
            })
            .collect()
    }
}

/// Conditional distribution of final results for a player of strength `x`
/// in the no-fluctuation model.
pub fn exact_result_prob(lattice: &LatticeDensities, x: f64) -> Result<PredictionDist> {
    let masses = lattice.result_masses(x)?;
    PredictionDist::from_raw(lattice.spec(), masses)
}

/// Posterior density of a player's strength given observed result tallies,
/// with the lattice's prior as the prior.
pub fn posterior_no_fluct(lattice: &LatticeDensities, data: &ResultCounts) -> Result<DensityGrid> {
    if data.spec() != lattice.spec() {
        return Err(ArenaError::InvalidParam("data and lattice describe different arenas".into()));
    }
    let prior = lattice.prior();
    let n_nodes = prior.len();
    let p0 = lattice.density(State::new(0, 0)).expect("origin state always present");

    // log-likelihood per node, then exp-normalize against the largest value
    let mut loglik = vec![0.0_f64; n_nodes];
    for (state, count) in data.canonical() {
        if count == 0 {
            continue;
        }
        let coef = crate::lattice::terminal_probability(lattice.spec(), state)?;
        let pt = lattice.density(state).expect("terminal state always present");
        for k in 0..n_nodes {
            let prob = if p0[k] < SUPPORT_FLOOR { 0.0 } else { coef * pt[k] / p0[k] };
            loglik[k] += if prob > 0.0 { count as f64 * prob.ln() } else { f64::NEG_INFINITY };
        }
    }
    let max = loglik.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(ArenaError::DegenerateData);
    }
    let values: Vec<f64> = (0..n_nodes)
        .map(|k| {
            if loglik[k].is_finite() {
                (loglik[k] - max).exp() * prior.values()[k]
            } else {
                0.0
            }
        })
        .collect();
    DensityGrid::from_values(prior.lo(), prior.step(), values).map_err(|_| ArenaError::DegenerateData)
}

/// Dumps all state densities and CDFs as CSV rows `i,j,x,p,F`.
pub fn write_lattice_csv<W: Write>(out: &mut W, lattice: &LatticeDensities) -> Result<()> {
    writeln!(out, "i,j,x,p,F")?;
    for state in lattice.spec().states() {
        let density = lattice.density(state).expect("state from spec.states()");
        let cdf = lattice.cdf(state).expect("state from spec.states()");
        for (k, x) in lattice.prior().nodes().enumerate() {
            writeln!(out, "{},{},{},{},{}", state.wins, state.losses, x, density[k], cdf[k])?;
        }
    }
    Ok(())
}
