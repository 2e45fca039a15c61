//! Time-dependent problem: a semi-Lagrangian discretization of the
//! Lax–Oleinik semigroup with flux limiters at the vertices.

mod curve;
mod datum;
mod oracle;
mod stencil;

use serde::{Deserialize, Serialize};

pub use curve::{DiscreteCurve, StepKind, TrajectoryStep};
pub use datum::{datum, DatumSpec};
pub use oracle::MinimalAction;
pub use stencil::{Candidate, Motion, Piece};

use crate::error::{Error, Result};
use crate::flux::FluxLimiter;
use crate::grid::{Grid, GridFunction};
use crate::hamiltonian::{Hamiltonians, Sign};
use crate::network::Network;
use crate::par::{map_indexed, Execution};

fn default_substeps() -> usize {
    16
}

fn default_fine_levels() -> usize {
    4
}

fn default_hold_steps() -> usize {
    50
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeParams {
    /// Grid cells per arc.
    #[serde(rename = "M")]
    pub m: usize,
    pub dt: f64,
    /// Largest parameter speed of a step.
    pub lambda_max: f64,
    /// Foot points per grid cell (R).
    #[serde(default = "default_substeps")]
    pub substeps: usize,
    /// Extra foot points at h/(2R), …, h/(2^J·R) for slow motion (J).
    #[serde(default = "default_fine_levels")]
    pub fine_levels: usize,
    /// Convergence tolerance; twice the measured scheme error when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol_conv: Option<f64>,
    #[serde(default = "default_hold_steps")]
    pub hold_steps: usize,
}

impl SchemeParams {
    pub fn new(m: usize, dt: f64, lambda_max: f64) -> Self {
        SchemeParams {
            m,
            dt,
            lambda_max,
            substeps: default_substeps(),
            fine_levels: default_fine_levels(),
            tol_conv: None,
            hold_steps: default_hold_steps(),
        }
    }

    /// Foot points on grid nodes only.
    pub fn node_only(m: usize, dt: f64, lambda_max: f64) -> Self {
        SchemeParams {
            substeps: 1,
            fine_levels: 0,
            ..Self::new(m, dt, lambda_max)
        }
    }

    /// Doubles M and halves Δt. The foot-point spacing in velocity, h/(R·Δt),
    /// is halved as well by doubling R, and one more fine level is added.
    pub fn refined(&self) -> Self {
        SchemeParams {
            m: 2 * self.m,
            dt: 0.5 * self.dt,
            substeps: (2 * self.substeps).min(64),
            fine_levels: self.fine_levels + 1,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidScheme(msg));
        if self.m < 4 {
            return bad(format!("M = {} < 4", self.m));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return bad(format!("dt = {} must be positive", self.dt));
        }
        if !(self.lambda_max.is_finite() && self.lambda_max > 0.0) {
            return bad(format!("lambda_max = {} must be positive", self.lambda_max));
        }
        if self.lambda_max * self.dt > 1.0 + 1e-12 {
            return bad(format!("lambda_max * dt = {} exceeds one arc per step", self.lambda_max * self.dt));
        }
        if self.substeps == 0 || self.substeps > 64 {
            return bad(format!("substeps = {} outside 1..=64", self.substeps));
        }
        if self.fine_levels > 16 {
            return bad(format!("fine_levels = {} > 16", self.fine_levels));
        }
        if stencil::distances(self).1.is_empty() {
            return bad(String::from("lambda_max * dt is below the smallest foot-point distance"));
        }
        if let Some(t) = self.tol_conv {
            if !(t.is_finite() && t > 0.0) {
                return bad(format!("tol_conv = {t} must be positive"));
            }
        }
        if self.hold_steps == 0 {
            return bad(String::from("hold_steps must be positive"));
        }
        Ok(())
    }

    /// Number of steps covering `horizon`.
    pub fn steps_for(&self, horizon: f64) -> Result<usize> {
        let n = (horizon / self.dt).round();
        if !horizon.is_finite() || horizon < 0.0 || (n * self.dt - horizon).abs() > 1e-9 * horizon.max(1.0) {
            return Err(Error::HorizonNotMultiple { horizon, dt: self.dt });
        }
        Ok(n as usize)
    }
}

/// Twice the largest parameter speed of an a-Lagrangian parametrization,
/// ∂H/∂μ at σ±_a, over all arcs.
pub fn required_lambda_max(hams: &Hamiltonians, a: f64) -> Result<f64> {
    let mut speed: f64 = 0.0;
    for (_, h) in hams.iter() {
        let n = h.quadrature_nodes();
        let view = h.forward();
        for j in 0..n {
            let s = j as f64 / (n - 1) as f64;
            for sign in [Sign::Plus, Sign::Minus] {
                if let Some(mu) = view.sigma(a, s, sign)? {
                    speed = speed.max(view.dh_dmu(s, mu).abs());
                }
            }
        }
    }
    Ok(2.0 * speed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvolveOptions {
    /// Keep every k-th layer (the last layer is always kept).
    pub snapshot_every: usize,
    /// Keep all layers and argmin choices for backtracking.
    pub backpointers: bool,
    pub execution: Execution,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions {
            snapshot_every: 1,
            backpointers: false,
            execution: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct History {
    /// v at every step, index 0 is the datum.
    pub values: Vec<Vec<f64>>,
    /// Argmin candidate index per node for steps 1..=n (index k − 1).
    pub choices: Vec<Vec<u32>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub dt: f64,
    pub steps: usize,
    /// Snapshots in time order; the first is the datum, the last is t = n·Δt.
    pub layers: Vec<GridFunction>,
    pub history: Option<History>,
}

impl Trajectory {
    pub fn last(&self) -> &GridFunction {
        self.layers.last().expect("trajectory has the datum layer")
    }

    /// CSV with columns t, node, arc, s, value.
    pub fn to_csv(&self, net: &Network, grid: &Grid) -> String {
        let mut out = String::from("t,node,arc,s,value\n");
        for layer in &self.layers {
            for (i, v) in layer.values.iter().enumerate() {
                let (arc, s) = grid.node_location(net, i);
                out.push_str(&format!("{},{},{},{},{}\n", layer.time, grid.node_name(net, i), arc, s, v));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LipschitzEstimate {
    /// max |v(x,t) − v(x′,t)| / d_Γ(x,x′) over adjacent nodes.
    pub space: f64,
    /// max |v(x,t+Δt) − v(x,t)| / Δt.
    pub time: f64,
}

/// Discrete semigroup on a fixed grid: the candidate stencil of every node.
#[derive(Debug, Clone)]
pub struct Scheme {
    grid: Grid,
    params: SchemeParams,
    stencils: Vec<Vec<Candidate>>,
    adjacent: Vec<(usize, usize, f64)>,
}

impl Scheme {
    pub fn new(net: &Network, hams: &Hamiltonians, flux: &FluxLimiter, params: SchemeParams) -> Result<Self> {
        params.validate()?;
        let grid = Grid::new(net, params.m)?;
        let stencils = stencil::build(net, hams, flux, &grid, &params);
        let mut adjacent = Vec::new();
        for arc in net.arc_ids() {
            let a = net.arc(arc);
            let nodes = grid.arc_nodes(arc);
            for j in 0..params.m {
                let len = a.partial_length((j + 1) as f64 / params.m as f64) - a.partial_length(j as f64 / params.m as f64);
                adjacent.push((nodes[j], nodes[j + 1], len));
            }
        }
        Ok(Scheme {
            grid,
            params,
            stencils,
            adjacent,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn params(&self) -> &SchemeParams {
        &self.params
    }

    pub fn dt(&self) -> f64 {
        self.params.dt
    }

    pub fn candidates(&self, node: usize) -> &[Candidate] {
        &self.stencils[node]
    }

    /// Smallest value and its candidate index; ties go to the earlier
    /// candidate, i.e. the smaller predecessor node.
    fn best(&self, node: usize, v: &[f64]) -> (f64, u32) {
        let cands = &self.stencils[node];
        let mut best = cands[0].value(v);
        let mut arg = 0;
        for (i, c) in cands.iter().enumerate().skip(1) {
            let x = c.value(v);
            if x < best {
                best = x;
                arg = i;
            }
        }
        (best, arg as u32)
    }

    fn advance(&self, v: &[f64], exec: Execution) -> (Vec<f64>, Vec<u32>) {
        map_indexed(self.grid.len(), exec, |i| self.best(i, v)).into_iter().unzip()
    }

    pub fn step(&self, v: &GridFunction) -> Result<GridFunction> {
        self.step_with(v, Execution::default())
    }

    pub fn step_with(&self, v: &GridFunction, exec: Execution) -> Result<GridFunction> {
        v.check(&self.grid)?;
        let values = map_indexed(self.grid.len(), exec, |i| self.best(i, &v.values).0);
        Ok(GridFunction {
            time: v.time + self.params.dt,
            values,
        })
    }

    pub fn evolve(&self, phi: &GridFunction, horizon: f64, opts: &EvolveOptions) -> Result<Trajectory> {
        let n = self.params.steps_for(horizon)?;
        self.evolve_steps(phi, n, opts)
    }

    pub fn evolve_steps(&self, phi: &GridFunction, n: usize, opts: &EvolveOptions) -> Result<Trajectory> {
        phi.check(&self.grid)?;
        if opts.snapshot_every == 0 {
            return Err(Error::InvalidScheme(String::from("snapshot_every must be positive")));
        }
        let mut layers = vec![phi.clone()];
        let mut history = opts.backpointers.then(|| History {
            values: vec![phi.values.clone()],
            choices: Vec::with_capacity(n),
        });
        let mut v = phi.values.clone();
        for k in 1..=n {
            let (next, choices) = self.advance(&v, opts.execution);
            v = next;
            if let Some(h) = history.as_mut() {
                h.values.push(v.clone());
                h.choices.push(choices);
            }
            if k % opts.snapshot_every == 0 || k == n {
                layers.push(GridFunction {
                    time: phi.time + k as f64 * self.params.dt,
                    values: v.clone(),
                });
            }
        }
        Ok(Trajectory {
            dt: self.params.dt,
            steps: n,
            layers,
            history,
        })
    }

    /// Space and time difference quotients over consecutive snapshots with
    /// t ≥ t0. Snapshots must be one step apart for the time quotient.
    pub fn lipschitz_estimate(&self, traj: &Trajectory, t0: f64) -> LipschitzEstimate {
        let mut est = LipschitzEstimate { space: 0.0, time: 0.0 };
        let late: Vec<&GridFunction> = traj.layers.iter().filter(|l| l.time >= t0 - 1e-12).collect();
        for layer in &late {
            for &(i, j, len) in &self.adjacent {
                est.space = est.space.max((layer.values[i] - layer.values[j]).abs() / len);
            }
        }
        for w in late.windows(2) {
            let dt = w[1].time - w[0].time;
            for (a, b) in w[0].values.iter().zip(&w[1].values) {
                est.time = est.time.max((b - a).abs() / dt);
            }
        }
        est
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::hamiltonian::level_constants;
    use crate::network::NetworkPoint;

    fn minimal(p: &fixtures::Problem) -> FluxLimiter {
        FluxLimiter::minimal(&p.network, &level_constants(&p.hamiltonians))
    }

    #[test]
    fn params_validation() {
        assert!(SchemeParams::new(40, 0.01, 10.0).validate().is_ok());
        assert!(SchemeParams::new(3, 0.01, 10.0).validate().is_err());
        assert!(SchemeParams::new(40, 0.0, 10.0).validate().is_err());
        assert!(SchemeParams::new(40, 0.2, 10.0).validate().is_err());
        assert!(SchemeParams::node_only(40, 0.001, 1.0).validate().is_err());
        let p = SchemeParams::new(40, 0.01, 10.0);
        assert_eq!(p.steps_for(10.0).unwrap(), 1000);
        assert!(matches!(p.steps_for(0.015), Err(Error::HorizonNotMultiple { .. })));
    }

    #[test]
    fn params_json_defaults() {
        let p: SchemeParams = serde_json::from_str(r#"{"M":40,"dt":0.01,"lambda_max":10}"#).unwrap();
        assert_eq!(p, SchemeParams::new(40, 0.01, 10.0));
        let back: SchemeParams = serde_json::from_str(&serde_json::to_string(&p).unwrap()).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn constant_datum_is_stationary_on_segment() {
        let seg = fixtures::segment();
        let scheme = Scheme::new(&seg.network, &seg.hamiltonians, &minimal(&seg), SchemeParams::new(8, 0.05, 10.0)).unwrap();
        let phi = GridFunction::constant(scheme.grid(), 3.5);
        let next = scheme.step(&phi).unwrap();
        assert!(next.values.iter().all(|&v| v == 3.5));
        assert_eq!(next.time, 0.05);
    }

    #[test]
    fn one_step_crossing_the_segment() {
        let seg = fixtures::segment();
        let net = &seg.network;
        let params = SchemeParams::node_only(4, 0.1, 10.0);
        let scheme = Scheme::new(net, &seg.hamiltonians, &minimal(&seg), params).unwrap();
        let v0 = net.vertex_id("v0").unwrap();
        let v1 = net.vertex_id("v1").unwrap();
        let phi = GridFunction::from_points(scheme.grid(), |p| if p == NetworkPoint::Vertex(v0) { 0.0 } else { 10.0 });
        let next = scheme.step(&phi).unwrap();
        // L(λ) = λ²/4 at λ = 10 over Δt = 0.1
        assert!((next.values[scheme.grid().vertex_node(v1)] - 2.5).abs() < 1e-12);
    }

    #[test]
    fn vertex_wait_rewards_the_flux_limiter() {
        let seg = fixtures::segment();
        let net = &seg.network;
        let v1 = net.vertex_id("v1").unwrap();
        let flux = FluxLimiter::custom(net, &level_constants(&seg.hamiltonians), &[(v1, 2.0)]).unwrap();
        let scheme = Scheme::new(net, &seg.hamiltonians, &flux, SchemeParams::new(8, 0.05, 10.0)).unwrap();
        let phi = GridFunction::new((0..scheme.grid().len()).map(|i| (i as f64).cos()).collect());
        let next = scheme.step(&phi).unwrap();
        let n1 = scheme.grid().vertex_node(v1);
        assert!(next.values[n1] <= phi.values[n1] - 2.0 * 0.05);
    }

    #[test]
    fn stencils_are_sorted_and_weights_sum_to_one() {
        let big = fixtures::bigon();
        let scheme = Scheme::new(&big.network, &big.hamiltonians, &minimal(&big), SchemeParams::new(8, 0.02, 10.0)).unwrap();
        for node in 0..scheme.grid().len() {
            let c = scheme.candidates(node);
            assert!(c.windows(2).all(|w| (w[0].a, w[0].b) <= (w[1].a, w[1].b)));
            for cand in c {
                assert_eq!(cand.wa + cand.wb, 1.0);
                assert!(cand.wa >= 0.0 && cand.wb >= 0.0);
                if let Motion::Path { pieces, .. } = &cand.motion {
                    let total: f64 = pieces.iter().map(|p| p.duration).sum();
                    assert!((total - 0.02).abs() < 1e-15);
                    assert!(pieces.len() <= 2);
                }
            }
        }
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let tri = fixtures::triangle();
        let scheme = Scheme::new(&tri.network, &tri.hamiltonians, &minimal(&tri), SchemeParams::new(8, 0.02, 10.0)).unwrap();
        let phi = GridFunction::new((0..scheme.grid().len()).map(|i| ((i * 7) % 5) as f64).collect());
        let seq = EvolveOptions {
            execution: Execution::Sequential,
            ..Default::default()
        };
        let par = EvolveOptions {
            execution: Execution::Parallel,
            ..Default::default()
        };
        let a = scheme.evolve_steps(&phi, 20, &seq).unwrap();
        let b = scheme.evolve_steps(&phi, 20, &par).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn snapshots_and_csv() {
        let seg = fixtures::segment();
        let scheme = Scheme::new(&seg.network, &seg.hamiltonians, &minimal(&seg), SchemeParams::new(4, 0.1, 10.0)).unwrap();
        let phi = GridFunction::constant(scheme.grid(), 1.0);
        let opts = EvolveOptions {
            snapshot_every: 3,
            ..Default::default()
        };
        let traj = scheme.evolve(&phi, 0.7, &opts).unwrap();
        let times: Vec<f64> = traj.layers.iter().map(|l| l.time).collect();
        assert_eq!(times.len(), 4);
        assert!((times[3] - 0.7).abs() < 1e-12);
        let csv = traj.to_csv(&seg.network, scheme.grid());
        assert!(csv.starts_with("t,node,arc,s,value\n0,v0,,0,1\n"));
        let empty = scheme.evolve(&phi, 0.0, &opts).unwrap();
        assert_eq!(empty.layers, vec![phi]);
    }

    #[test]
    fn required_speed_on_the_bigon() {
        let big = fixtures::bigon();
        // σ = ±√a on g1 and 2 ± √a on g2, speed 2√a
        assert!((required_lambda_max(&big.hamiltonians, 1.0).unwrap() - 4.0).abs() < 1e-9);
    }
}
