//! Densities sampled on a uniform grid, with the quadrature the lattice
//! recursions are built on.

use crate::error::{ArenaError, Result};
use crate::normal::normal_pdf;

/// Default grid for the standard-normal prior: [-6, 6] in steps of 0.01.
/// The prior mass outside is below 2e-9.
pub const DEFAULT_LO: f64 = -6.0;
pub const DEFAULT_HI: f64 = 6.0;
pub const DEFAULT_STEP: f64 = 0.01;

/// A probability density sampled at uniformly spaced nodes.
///
/// Construction renormalizes the samples so the trapezoid integral over
/// the grid is exactly one.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    lo: f64,
    step: f64,
    values: Vec<f64>,
}

impl DensityGrid {
    /// Wraps raw nonnegative density samples; rescales them to unit integral.
    pub fn from_values(lo: f64, step: f64, values: Vec<f64>) -> Result<Self> {
        if !lo.is_finite() || !step.is_finite() || step <= 0.0 {
            return Err(ArenaError::InvalidParam(format!("bad grid geometry: lo = {lo}, step = {step}")));
        }
        if values.len() < 2 {
            return Err(ArenaError::InvalidParam("a density grid needs at least two nodes".into()));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(ArenaError::InvalidParam("density samples must be finite and nonnegative".into()));
        }
        let mut grid = Self { lo, step, values };
        let total = grid.integral();
        if total <= 1e-12 || !total.is_finite() {
            return Err(ArenaError::InvalidParam(format!("density integrates to {total}; cannot normalize")));
        }
        for v in &mut grid.values {
            *v /= total;
        }
        Ok(grid)
    }

    /// Samples `f` over `[lo, hi]` with spacing `step` and normalizes.
    pub fn from_fn(lo: f64, hi: f64, step: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        if hi.is_nan() || hi <= lo {
            return Err(ArenaError::InvalidParam(format!("empty grid range [{lo}, {hi}]")));
        }
        let len = ((hi - lo) / step).round() as usize + 1;
        let values = (0..len).map(|k| f(lo + step * k as f64)).collect();
        Self::from_values(lo, step, values)
    }

    /// The standard-normal prior on the default grid.
    pub fn standard_normal() -> Self {
        Self::from_fn(DEFAULT_LO, DEFAULT_HI, DEFAULT_STEP, normal_pdf)
            .expect("standard normal on the default grid is a valid density")
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.lo + self.step * (self.values.len() - 1) as f64
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn node(&self, k: usize) -> f64 {
        self.lo + self.step * k as f64
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|k| self.node(k))
    }

    /// Index of the node nearest to `x`, when `x` lies on the grid.
    pub fn node_index(&self, x: f64) -> Option<usize> {
        if x < self.lo - 0.5 * self.step || x > self.hi() + 0.5 * self.step {
            return None;
        }
        let k = ((x - self.lo) / self.step).round() as usize;
        Some(k.min(self.len() - 1))
    }

    /// Linear interpolation between nodes; zero outside the grid.
    pub fn interpolate(&self, x: f64) -> f64 {
        interpolate_on(self.lo, self.step, &self.values, x)
    }

    /// Trapezoid integral over the grid.
    pub fn integral(&self) -> f64 {
        trapezoid(self.step, &self.values)
    }

    /// Prefix integrals `F(x_k) = ∫_{lo}^{x_k} f`, by trapezoid sums with an
    /// Euler-Maclaurin endpoint correction. The correction term
    /// `h^2/12 (f'(lo) - f'(x_k))` (with central-difference derivatives)
    /// lifts the accuracy from O(h^2) to O(h^4): at step 0.01 a plain
    /// cumulative trapezoid of the normal density is off by 2e-6, the
    /// corrected one by under 1e-9.
    pub fn cumulative(&self) -> Vec<f64> {
        let n = self.len();
        let h = self.step;
        let mut out = Vec::with_capacity(n);
        let mut acc = 0.0;
        out.push(0.0);
        for k in 1..n {
            acc += 0.5 * h * (self.values[k - 1] + self.values[k]);
            out.push(acc);
        }
        let deriv = |k: usize| -> f64 {
            if k == 0 {
                (self.values[1] - self.values[0]) / h
            } else if k == n - 1 {
                (self.values[n - 1] - self.values[n - 2]) / h
            } else {
                (self.values[k + 1] - self.values[k - 1]) / (2.0 * h)
            }
        };
        let d0 = deriv(0);
        for (k, f) in out.iter_mut().enumerate() {
            *f += h * h / 12.0 * (d0 - deriv(k));
            *f = f.clamp(0.0, 1.0);
        }
        out
    }
}

/// Linear interpolation of `values` sampled from `lo` at spacing `step`.
pub(crate) fn interpolate_on(lo: f64, step: f64, values: &[f64], x: f64) -> f64 {
    let t = (x - lo) / step;
    if t < 0.0 || t > (values.len() - 1) as f64 {
        return 0.0;
    }
    let k = (t.floor() as usize).min(values.len() - 2);
    let frac = t - k as f64;
    values[k] * (1.0 - frac) + values[k + 1] * frac
}

/// Trapezoid rule with uniform spacing `h`.
pub(crate) fn trapezoid(h: f64, values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let interior: f64 = values[1..values.len() - 1].iter().sum();
    h * (0.5 * values[0] + interior + 0.5 * values[values.len() - 1])
}
