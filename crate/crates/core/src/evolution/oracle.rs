use super::{EvolveOptions, Scheme};
use crate::error::{Error, Result};
use crate::grid::GridFunction;

/// Largest grid handled by [`Scheme::brute_force_value`].
pub const BRUTE_FORCE_NODES: usize = 12;
/// Most steps handled by [`Scheme::brute_force_value`].
pub const BRUTE_FORCE_STEPS: usize = 6;

/// h_T(y, ·) on the grid. Nodes the scheme cannot reach from `y` in time T
/// keep values of the order of `big`.
#[derive(Debug, Clone, PartialEq)]
pub struct MinimalAction {
    pub source: usize,
    pub values: GridFunction,
    pub big: f64,
}

impl MinimalAction {
    pub fn reachable(&self, x: usize) -> bool {
        self.values.values[x] < 1e-3 * self.big
    }

    pub fn value(&self, x: usize) -> Option<f64> {
        self.reachable(x).then(|| self.values.values[x])
    }
}

impl Scheme {
    /// Largest |cost| / Δt over all candidates, a bound on |L| along steps.
    pub fn max_rate(&self) -> f64 {
        self.stencils
            .iter()
            .flatten()
            .map(|c| c.cost.abs())
            .fold(0.0, f64::max)
            / self.params.dt
    }

    /// h_T(y, ·): evolution of 0 at `y` and BIG elsewhere.
    pub fn minimal_action(&self, y: usize, horizon: f64) -> Result<MinimalAction> {
        let n = self.params.steps_for(horizon)?;
        if y >= self.grid.len() {
            return Err(Error::GridMismatch {
                expected: self.grid.len(),
                got: y,
            });
        }
        let big = 1e6 * (1.0 + self.max_rate() * horizon);
        let mut phi = GridFunction::constant(&self.grid, big);
        phi.values[y] = 0.0;
        let traj = self.evolve_steps(
            &phi,
            n,
            &EvolveOptions {
                snapshot_every: n.max(1),
                ..Default::default()
            },
        )?;
        let mut values = traj.last().clone();
        values.time = horizon;
        Ok(MinimalAction { source: y, values, big })
    }

    /// v(x, nΔt) by exhaustive recursion over every sequence of candidate
    /// steps, without sharing intermediate layers.
    pub fn brute_force_value(&self, phi: &GridFunction, n: usize, x: usize) -> Result<f64> {
        phi.check(&self.grid)?;
        if self.grid.len() > BRUTE_FORCE_NODES || n > BRUTE_FORCE_STEPS {
            return Err(Error::InstanceTooLarge(format!(
                "{} nodes and {} steps (limits {} and {})",
                self.grid.len(),
                n,
                BRUTE_FORCE_NODES,
                BRUTE_FORCE_STEPS
            )));
        }
        Ok(self.enumerate(&phi.values, n, x))
    }

    fn enumerate(&self, phi: &[f64], k: usize, x: usize) -> f64 {
        if k == 0 {
            return phi[x];
        }
        let mut best = f64::INFINITY;
        for (i, c) in self.stencils[x].iter().enumerate() {
            let a = self.enumerate(phi, k - 1, c.a);
            let total = if c.wb == 0.0 {
                c.wa * a + c.cost
            } else {
                c.wa * a + c.wb * self.enumerate(phi, k - 1, c.b) + c.cost
            };
            if i == 0 || total < best {
                best = total;
            }
        }
        best
    }
}
