use serde::{Deserialize, Serialize};

use super::cycles::min_cycle_gap;
use super::distance::SemiDistance;
use super::level::{Edge, LevelGraph};
use crate::error::{Error, Result};
use crate::flux::FluxLimiter;
use crate::grid::{Grid, GridFunction, NodeHost};
use crate::hamiltonian::{level_constants, Hamiltonians, LevelConstants};
use crate::network::{ArcId, Network, NetworkPoint, VertexId};
use crate::par::Execution;

/// Resolution for comparing levels: c_x against c, a_γ against c, max c_x
/// against c when choosing the regime.
pub const LEVEL_TOL: f64 = 1e-7;

/// Cycle gaps above −GAP_TOL at a₀ count as nonnegative.
const GAP_TOL: f64 = 1e-10;

/// Bisection tolerance on the critical value.
pub const CRITICAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalValue {
    pub c: f64,
    pub a0: f64,
    /// min_cycle_gap at `c`; nonnegative by construction.
    pub gap: f64,
    /// False when c = a₀ was accepted without bisection.
    pub bisected: bool,
}

pub fn critical_value(net: &Network, hams: &Hamiltonians) -> Result<CriticalValue> {
    critical_value_with(net, hams, Execution::default())
}

pub fn critical_value_with(net: &Network, hams: &Hamiltonians, exec: Execution) -> Result<CriticalValue> {
    let a0 = level_constants(hams).a0;
    let gap = |a: f64| -> Result<f64> {
        let g = LevelGraph::with_execution(net, hams, a, exec)?;
        Ok(min_cycle_gap(&g)?.value)
    };
    let at_a0 = gap(a0)?;
    if at_a0 >= -GAP_TOL {
        return Ok(CriticalValue {
            c: a0,
            a0,
            gap: at_a0,
            bisected: false,
        });
    }
    let mut lo = a0;
    let mut step = a0.abs().max(1.0);
    let mut hi = a0 + step;
    let mut gap_hi = gap(hi)?;
    let mut doublings = 0;
    while gap_hi < 0.0 {
        lo = hi;
        step *= 2.0;
        hi = a0 + step;
        gap_hi = gap(hi)?;
        doublings += 1;
        if doublings > 200 || !hi.is_finite() {
            return Err(Error::NonBracketing(String::from("critical value search found no level with a nonnegative cycle gap")));
        }
    }
    while hi - lo > CRITICAL_TOL * hi.abs().max(1.0) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let g = gap(mid)?;
        if g >= 0.0 {
            hi = mid;
            gap_hi = g;
        } else {
            lo = mid;
        }
    }
    Ok(CriticalValue {
        c: hi,
        a0,
        gap: gap_hi,
        bisected: true,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaticClass {
    pub arcs: Vec<ArcId>,
    pub vertices: Vec<VertexId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AubryData {
    pub c: f64,
    /// Support of the Aubry set, as whole arcs (sorted).
    pub arcs: Vec<ArcId>,
    pub vertices: Vec<VertexId>,
    pub classes: Vec<StaticClass>,
    /// Vertices off the Aubry set with c_x = c.
    pub extended_vertices: Vec<VertexId>,
    pub tight_edges: Vec<Edge>,
}

impl AubryData {
    pub fn contains_arc(&self, arc: ArcId) -> bool {
        self.arcs.binary_search(&arc).is_ok()
    }

    pub fn contains_vertex(&self, v: VertexId) -> bool {
        self.vertices.binary_search(&v).is_ok()
    }

    pub fn is_extended_vertex(&self, v: VertexId) -> bool {
        self.contains_vertex(v) || self.extended_vertices.binary_search(&v).is_ok()
    }

    /// Membership of each grid node in the extended Aubry set.
    pub fn extended_nodes(&self, grid: &Grid) -> Vec<bool> {
        (0..grid.len())
            .map(|i| match grid.host(i) {
                NodeHost::Vertex(v) => self.is_extended_vertex(v),
                NodeHost::Interior { arc, .. } => self.contains_arc(arc),
            })
            .collect()
    }

    /// Points where the limit formula is minimized: vertices of the extended
    /// Aubry set and midpoints of Aubry arcs.
    pub fn representatives(&self) -> Vec<NetworkPoint> {
        let mut vertices: Vec<VertexId> = self.vertices.iter().chain(&self.extended_vertices).copied().collect();
        vertices.sort();
        vertices
            .into_iter()
            .map(NetworkPoint::Vertex)
            .chain(self.arcs.iter().map(|&a| NetworkPoint::on(a, 0.5)))
            .collect()
    }
}

fn find(parent: &mut [usize], x: usize) -> usize {
    let mut root = x;
    while parent[root] != root {
        root = parent[root];
    }
    let mut x = x;
    while parent[x] != root {
        let next = parent[x];
        parent[x] = root;
        x = next;
    }
    root
}

fn reachability(n: usize, edges: &[Edge]) -> Vec<Vec<bool>> {
    let mut out = vec![Vec::new(); n];
    for e in edges {
        out[e.from.0].push(e.to.0);
    }
    (0..n)
        .map(|s| {
            let mut seen = vec![false; n];
            let mut stack = vec![s];
            seen[s] = true;
            while let Some(v) = stack.pop() {
                for &w in &out[v] {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
            seen
        })
        .collect()
}

fn aubry_from(
    net: &Network,
    consts: &LevelConstants,
    flux: &FluxLimiter,
    c: f64,
    sd: &SemiDistance,
) -> AubryData {
    let edges = sd.graph().edges();
    let max_w = edges.iter().map(|e| e.weight.abs()).fold(0.0, f64::max);
    let tol_tight = 1e-6 * (1.0 + max_w);
    let tight: Vec<Edge> = edges
        .into_iter()
        .filter(|e| (e.weight + sd.vertex(e.to, e.from)).abs() <= tol_tight)
        .collect();

    let n = net.vertices().len();
    let reach = reachability(n, &tight);
    let mut in_support = vec![false; net.arcs().len()];
    for e in &tight {
        if reach[e.to.0][e.from.0] {
            in_support[e.arc.0] = true;
        }
    }
    for (i, &a) in consts.per_arc.iter().enumerate() {
        if (a - c).abs() <= LEVEL_TOL {
            in_support[i] = true;
        }
    }

    let mut parent: Vec<usize> = (0..n).collect();
    let arcs: Vec<ArcId> = net.arc_ids().filter(|a| in_support[a.0]).collect();
    for &a in &arcs {
        let arc = net.arc(a);
        let (x, y) = (find(&mut parent, arc.tail.0), find(&mut parent, arc.head.0));
        parent[x] = y;
    }
    let mut on_aubry = vec![false; n];
    for &a in &arcs {
        on_aubry[net.arc(a).tail.0] = true;
        on_aubry[net.arc(a).head.0] = true;
    }
    let vertices: Vec<VertexId> = net.vertex_ids().filter(|v| on_aubry[v.0]).collect();

    let mut classes: Vec<(usize, StaticClass)> = Vec::new();
    for &v in &vertices {
        let root = find(&mut parent, v.0);
        match classes.iter_mut().find(|(r, _)| *r == root) {
            Some((_, class)) => class.vertices.push(v),
            None => classes.push((
                root,
                StaticClass {
                    arcs: Vec::new(),
                    vertices: vec![v],
                },
            )),
        }
    }
    for &a in &arcs {
        let root = find(&mut parent, net.arc(a).tail.0);
        if let Some((_, class)) = classes.iter_mut().find(|(r, _)| *r == root) {
            class.arcs.push(a);
        }
    }

    let extended_vertices = net
        .vertex_ids()
        .filter(|v| !on_aubry[v.0] && (flux.value(*v) - c).abs() <= LEVEL_TOL)
        .collect();

    AubryData {
        c,
        arcs,
        vertices,
        classes: classes.into_iter().map(|(_, c)| c).collect(),
        extended_vertices,
        tight_edges: tight,
    }
}

/// Everything the static layer knows about a network: level constants, the
/// critical value, S_c, and the (extended) Aubry set under a flux limiter.
#[derive(Debug, Clone)]
pub struct StaticAnalysis {
    pub constants: LevelConstants,
    pub critical: CriticalValue,
    pub semidistance: SemiDistance,
    pub aubry: AubryData,
}

impl StaticAnalysis {
    pub fn new(net: &Network, hams: &Hamiltonians, flux: &FluxLimiter) -> Result<Self> {
        Self::with_execution(net, hams, flux, Execution::default())
    }

    pub fn with_execution(net: &Network, hams: &Hamiltonians, flux: &FluxLimiter, exec: Execution) -> Result<Self> {
        let constants = level_constants(hams);
        let critical = critical_value_with(net, hams, exec)?;
        let semidistance = SemiDistance::new(LevelGraph::with_execution(net, hams, critical.c, exec)?)?;
        let aubry = aubry_from(net, &constants, flux, critical.c, &semidistance);
        Ok(StaticAnalysis {
            constants,
            critical,
            semidistance,
            aubry,
        })
    }

    pub fn c(&self) -> f64 {
        self.critical.c
    }

    /// Critical when max c_x ≤ c (up to [`LEVEL_TOL`]).
    pub fn regime(&self, flux: &FluxLimiter) -> Regime {
        if flux.max_value() <= self.c() + LEVEL_TOL {
            Regime::Critical
        } else {
            Regime::Supercritical
        }
    }
}

pub fn aubry(net: &Network, hams: &Hamiltonians, flux: &FluxLimiter) -> Result<AubryData> {
    Ok(StaticAnalysis::new(net, hams, flux)?.aubry)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Critical,
    Supercritical,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub regime: Regime,
    /// The drift b: c in the critical regime, ā = max c_x otherwise.
    pub drift: f64,
    pub u: GridFunction,
    /// Points the limit formula minimizes over.
    pub targets: Vec<NetworkPoint>,
}

/// u(x) = min_y (min_z (φ(z) + S(z, y)) + S(y, x)) with y over `targets`.
fn limit_through(
    net: &Network,
    grid: &Grid,
    sd: &SemiDistance,
    phi: &GridFunction,
    targets: &[NetworkPoint],
) -> Result<GridFunction> {
    let mut u = vec![f64::INFINITY; grid.len()];
    for &y in targets {
        let into = sd.to_point(net, grid, y)?;
        let inner = phi
            .values
            .iter()
            .zip(&into)
            .map(|(p, s)| p + s)
            .fold(f64::INFINITY, f64::min);
        for (ux, s) in u.iter_mut().zip(sd.from_point(net, grid, y)?) {
            *ux = ux.min(inner + s);
        }
    }
    Ok(GridFunction::new(u))
}

/// The large-time limit of 𝒮(t)φ + b·t predicted by the static layer.
pub fn predicted_limit(
    net: &Network,
    hams: &Hamiltonians,
    flux: &FluxLimiter,
    analysis: &StaticAnalysis,
    grid: &Grid,
    phi: &GridFunction,
) -> Result<Prediction> {
    phi.check(grid)?;
    match analysis.regime(flux) {
        Regime::Critical => {
            let targets = analysis.aubry.representatives();
            let u = limit_through(net, grid, &analysis.semidistance, phi, &targets)?;
            Ok(Prediction {
                regime: Regime::Critical,
                drift: analysis.c(),
                u,
                targets,
            })
        }
        Regime::Supercritical => {
            let a_bar = flux.max_value();
            let sd = SemiDistance::new(LevelGraph::new(net, hams, a_bar)?)?;
            let targets: Vec<NetworkPoint> = net
                .vertex_ids()
                .filter(|&v| (flux.value(v) - a_bar).abs() <= LEVEL_TOL)
                .map(NetworkPoint::Vertex)
                .collect();
            let u = limit_through(net, grid, &sd, phi, &targets)?;
            Ok(Prediction {
                regime: Regime::Supercritical,
                drift: a_bar,
                u,
                targets,
            })
        }
    }
}

/// The maximal subsolution at the level of `sd` not exceeding `boundary`:
/// u(x) = min_y (w(y) + S_a(y, x)).
pub fn solve_eikonal(
    net: &Network,
    grid: &Grid,
    sd: &SemiDistance,
    boundary: &[(NetworkPoint, f64)],
) -> Result<GridFunction> {
    if boundary.is_empty() {
        return Err(Error::EmptyBoundary);
    }
    let mut u = vec![f64::INFINITY; grid.len()];
    for &(y, w) in boundary {
        for (ux, s) in u.iter_mut().zip(sd.from_point(net, grid, y)?) {
            *ux = ux.min(w + s);
        }
    }
    Ok(GridFunction::new(u))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsolutionViolation {
    pub from: usize,
    pub to: usize,
    /// w(to) − w(from) − S_a(from, to) > 0.
    pub excess: f64,
}

/// All grid pairs (y, x) with w(x) − w(y) > S_a(y, x) + tol.
pub fn check_subsolution(
    net: &Network,
    grid: &Grid,
    sd: &SemiDistance,
    w: &GridFunction,
    tol: f64,
) -> Result<Vec<SubsolutionViolation>> {
    w.check(grid)?;
    let mut out = Vec::new();
    for y in 0..grid.len() {
        let row = sd.from_point(net, grid, grid.point(y))?;
        for (x, s) in row.into_iter().enumerate() {
            let excess = w.values[x] - w.values[y] - s;
            if excess > tol {
                out.push(SubsolutionViolation { from: y, to: x, excess });
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::hamiltonian::level_constants;

    fn minimal(p: &fixtures::Problem) -> FluxLimiter {
        FluxLimiter::minimal(&p.network, &level_constants(&p.hamiltonians))
    }

    #[test]
    fn critical_values_of_fixtures() {
        let seg = fixtures::segment();
        let cv = critical_value(&seg.network, &seg.hamiltonians).unwrap();
        assert_eq!(cv.c, 0.0);
        assert!(!cv.bisected);
        let big = fixtures::bigon();
        let cv = critical_value(&big.network, &big.hamiltonians).unwrap();
        assert!((cv.c - 1.0).abs() < 1e-8);
        assert!(cv.gap >= 0.0 && cv.gap < 1e-8);
        assert_eq!(cv.a0, 0.0);
        let tri = fixtures::triangle();
        assert_eq!(critical_value(&tri.network, &tri.hamiltonians).unwrap().c, 0.0);
    }

    #[test]
    fn bigon_aubry_set() {
        let big = fixtures::bigon();
        let a = aubry(&big.network, &big.hamiltonians, &minimal(&big)).unwrap();
        assert_eq!(a.arcs.len(), 2);
        assert_eq!(a.classes.len(), 1);
        assert!(a.extended_vertices.is_empty());
        assert_eq!(a.tight_edges.len(), 2);
    }

    #[test]
    fn triangle_aubry_set_and_extension() {
        let tri = fixtures::triangle();
        let net = &tri.network;
        let consts = level_constants(&tri.hamiltonians);
        let a = aubry(net, &tri.hamiltonians, &minimal(&tri)).unwrap();
        assert_eq!(a.arcs, vec![net.arc_id("AB").unwrap()]);
        assert_eq!(a.classes.len(), 1);
        assert!(a.extended_vertices.is_empty());

        let vc = net.vertex_id("C").unwrap();
        let flux = FluxLimiter::custom(net, &consts, &[(vc, 0.0)]).unwrap();
        let a = aubry(net, &tri.hamiltonians, &flux).unwrap();
        assert_eq!(a.extended_vertices, vec![vc]);
        assert!(a.is_extended_vertex(vc));
    }

    #[test]
    fn solve_eikonal_examples() {
        let seg = fixtures::segment();
        let analysis = StaticAnalysis::new(&seg.network, &seg.hamiltonians, &minimal(&seg)).unwrap();
        let grid = Grid::new(&seg.network, 8).unwrap();
        let v0 = NetworkPoint::Vertex(seg.network.vertex_id("v0").unwrap());
        let u = solve_eikonal(&seg.network, &grid, &analysis.semidistance, &[(v0, 5.0)]).unwrap();
        assert!(u.values.iter().all(|&x| x == 5.0));
        assert!(matches!(
            solve_eikonal(&seg.network, &grid, &analysis.semidistance, &[]),
            Err(Error::EmptyBoundary)
        ));

        let big = fixtures::bigon();
        let analysis = StaticAnalysis::new(&big.network, &big.hamiltonians, &minimal(&big)).unwrap();
        let grid = Grid::new(&big.network, 8).unwrap();
        let v0 = big.network.vertex_id("v0").unwrap();
        let v1 = big.network.vertex_id("v1").unwrap();
        let u = solve_eikonal(&big.network, &grid, &analysis.semidistance, &[(NetworkPoint::Vertex(v0), 0.0)]).unwrap();
        assert!(u.values[grid.vertex_node(v0)].abs() < 1e-12);
        assert!((u.values[grid.vertex_node(v1)] - 1.0).abs() < 1e-8);
        assert!(check_subsolution(&big.network, &grid, &analysis.semidistance, &u, 1e-9)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn check_subsolution_flags_steep_data() {
        let big = fixtures::bigon();
        let analysis = StaticAnalysis::new(&big.network, &big.hamiltonians, &minimal(&big)).unwrap();
        let grid = Grid::new(&big.network, 4).unwrap();
        let v0 = big.network.vertex_id("v0").unwrap();
        let v1 = big.network.vertex_id("v1").unwrap();
        let w = GridFunction::from_points(&grid, |p| match p {
            NetworkPoint::Vertex(v) if v == v1 => 2.0,
            _ => 0.0,
        });
        let bad = check_subsolution(&big.network, &grid, &analysis.semidistance, &w, 1e-9).unwrap();
        let (n0, n1) = (grid.vertex_node(v0), grid.vertex_node(v1));
        assert!(bad.iter().any(|v| v.from == n0 && v.to == n1 && (v.excess - 1.0).abs() < 1e-8));

        let seg = fixtures::segment();
        let analysis = StaticAnalysis::new(&seg.network, &seg.hamiltonians, &minimal(&seg)).unwrap();
        let grid = Grid::new(&seg.network, 4).unwrap();
        let w = GridFunction::constant(&grid, 3.0);
        assert!(check_subsolution(&seg.network, &grid, &analysis.semidistance, &w, 0.0)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn segment_limit_is_min_of_datum() {
        let seg = fixtures::segment();
        let flux = minimal(&seg);
        let analysis = StaticAnalysis::new(&seg.network, &seg.hamiltonians, &flux).unwrap();
        let grid = Grid::new(&seg.network, 8).unwrap();
        let phi = GridFunction::new((0..grid.len()).map(|i| (i as f64 * 0.7).sin()).collect());
        let p = predicted_limit(&seg.network, &seg.hamiltonians, &flux, &analysis, &grid, &phi).unwrap();
        assert_eq!(p.regime, Regime::Critical);
        assert_eq!(p.drift, 0.0);
        assert!(p.u.values.iter().all(|&x| x == phi.min()));
    }

    #[test]
    fn supercritical_segment_limit() {
        let seg = fixtures::segment();
        let net = &seg.network;
        let v1 = net.vertex_id("v1").unwrap();
        let flux = FluxLimiter::custom(net, &level_constants(&seg.hamiltonians), &[(v1, 2.0)]).unwrap();
        let analysis = StaticAnalysis::new(net, &seg.hamiltonians, &flux).unwrap();
        let grid = Grid::new(net, 8).unwrap();
        let phi = GridFunction::from_points(&grid, |p| match p {
            NetworkPoint::Vertex(_) => 1.0,
            NetworkPoint::OnArc { s, .. } => 1.0 + s * (1.0 - s),
        });
        let p = predicted_limit(net, &seg.hamiltonians, &flux, &analysis, &grid, &phi).unwrap();
        assert_eq!(p.regime, Regime::Supercritical);
        assert_eq!(p.drift, 2.0);
        // S₂ is √2 times the parameter distance
        let r = 2f64.sqrt();
        let inner = (0..grid.len())
            .map(|i| {
                let s = match grid.point(i) {
                    NetworkPoint::Vertex(v) if v == v1 => 1.0,
                    NetworkPoint::Vertex(_) => 0.0,
                    NetworkPoint::OnArc { s, .. } => s,
                };
                phi.values[i] + r * (1.0 - s)
            })
            .fold(f64::INFINITY, f64::min);
        for i in 0..grid.len() {
            let s = match grid.point(i) {
                NetworkPoint::Vertex(v) if v == v1 => 1.0,
                NetworkPoint::Vertex(_) => 0.0,
                NetworkPoint::OnArc { s, .. } => s,
            };
            assert!((p.u.values[i] - (inner + r * (1.0 - s))).abs() < 1e-9);
        }
    }
}
