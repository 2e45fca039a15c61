use serde::Serialize;

use super::stencil::{Motion, Piece};
use super::{Scheme, Trajectory};
use crate::error::{Error, Result};
use crate::network::NetworkPoint;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepKind {
    Wait,
    Move { foot: NetworkPoint, pieces: Vec<Piece> },
}

/// One step of a backtracked curve, ending at node `to` at time k·Δt.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryStep {
    pub k: usize,
    /// Predecessor node followed by the backtrack.
    pub from: usize,
    pub to: usize,
    pub kind: StepKind,
    /// Δt-integrated Lagrangian of the step.
    pub cost: f64,
    /// v_k(to) − v_{k−1}(from) − cost: what linear interpolation at the foot
    /// point contributes beyond the followed node. Zero up to rounding when
    /// foot points are grid nodes.
    pub defect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteCurve {
    pub start: usize,
    pub end: usize,
    /// Steps in time order.
    pub steps: Vec<TrajectoryStep>,
    pub cost: f64,
    pub defect: f64,
}

impl DiscreteCurve {
    /// Node at time k·Δt, k = 0..=n.
    pub fn nodes(&self) -> Vec<usize> {
        std::iter::once(self.start).chain(self.steps.iter().map(|s| s.to)).collect()
    }

    /// First time index k at which the curve sits on a node of `set`.
    pub fn first_visit(&self, set: &[bool]) -> Option<usize> {
        self.nodes().iter().position(|&n| set[n])
    }

    /// Number of trailing steps spent waiting at `node`.
    pub fn final_wait(&self, node: usize) -> usize {
        self.steps
            .iter()
            .rev()
            .take_while(|s| s.to == node && s.from == node && s.kind == StepKind::Wait)
            .count()
    }
}

impl Scheme {
    /// Follows the recorded argmin choices from node `x` at the final time
    /// back to t = 0, taking the dominant predecessor of each foot point.
    pub fn backtrack(&self, traj: &Trajectory, x: usize) -> Result<DiscreteCurve> {
        let h = traj.history.as_ref().ok_or(Error::MissingBackpointers)?;
        if x >= self.grid.len() {
            return Err(Error::GridMismatch {
                expected: self.grid.len(),
                got: x,
            });
        }
        let mut steps = Vec::with_capacity(traj.steps);
        let mut node = x;
        for k in (1..=traj.steps).rev() {
            let cand = &self.stencils[node][h.choices[k - 1][node] as usize];
            let from = cand.dominant();
            let defect = h.values[k][node] - h.values[k - 1][from] - cand.cost;
            let kind = match &cand.motion {
                Motion::Wait => StepKind::Wait,
                Motion::Path { foot, pieces } => StepKind::Move {
                    foot: *foot,
                    pieces: pieces.clone(),
                },
            };
            steps.push(TrajectoryStep {
                k,
                from,
                to: node,
                kind,
                cost: cand.cost,
                defect,
            });
            node = from;
        }
        steps.reverse();
        Ok(DiscreteCurve {
            start: node,
            end: x,
            cost: steps.iter().map(|s| s.cost).sum(),
            defect: steps.iter().map(|s| s.defect).sum(),
            steps,
        })
    }
}

#[cfg(test)]
mod tests {
    use crate::evolution::{EvolveOptions, Scheme, SchemeParams};
    use crate::fixtures;
    use crate::flux::FluxLimiter;
    use crate::grid::GridFunction;
    use crate::hamiltonian::level_constants;
    use crate::Error;

    #[test]
    fn constant_datum_backtracks_to_a_wait() {
        let seg = fixtures::segment();
        let flux = FluxLimiter::minimal(&seg.network, &level_constants(&seg.hamiltonians));
        let scheme = Scheme::new(&seg.network, &seg.hamiltonians, &flux, SchemeParams::new(8, 0.05, 10.0)).unwrap();
        let phi = GridFunction::constant(scheme.grid(), 2.0);
        let opts = EvolveOptions {
            backpointers: true,
            ..Default::default()
        };
        let traj = scheme.evolve_steps(&phi, 10, &opts).unwrap();
        for x in 0..scheme.grid().len() {
            let curve = scheme.backtrack(&traj, x).unwrap();
            assert!(curve.nodes().iter().all(|&n| n == x));
            assert_eq!(curve.final_wait(x), 10);
            assert_eq!(curve.cost, 0.0);
        }
        let plain = scheme.evolve_steps(&phi, 10, &EvolveOptions::default()).unwrap();
        assert!(matches!(scheme.backtrack(&plain, 0), Err(Error::MissingBackpointers)));
    }

    #[test]
    fn cost_and_defect_telescope() {
        let big = fixtures::bigon();
        let flux = FluxLimiter::minimal(&big.network, &level_constants(&big.hamiltonians));
        let scheme = Scheme::new(&big.network, &big.hamiltonians, &flux, SchemeParams::new(8, 0.02, 10.0)).unwrap();
        let phi = GridFunction::new((0..scheme.grid().len()).map(|i| (i as f64 * 1.3).sin()).collect());
        let opts = EvolveOptions {
            backpointers: true,
            ..Default::default()
        };
        let traj = scheme.evolve_steps(&phi, 40, &opts).unwrap();
        for x in 0..scheme.grid().len() {
            let c = scheme.backtrack(&traj, x).unwrap();
            let total = traj.last().values[x] - phi.values[c.start];
            assert!((c.cost + c.defect - total).abs() < 1e-12);
        }
    }
}
