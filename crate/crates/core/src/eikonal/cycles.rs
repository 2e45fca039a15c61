//! Shortest paths and cycle weights on the level graph. Weights can be
//! negative, so everything here is Bellman–Ford based.

use serde::{Deserialize, Serialize};

use super::level::{Edge, LevelGraph};
use crate::error::{Error, Result};

/// Arc counts up to this size get exact simple-cycle enumeration.
pub const ENUMERATION_LIMIT: usize = 12;

/// Relaxations must improve a distance by more than this (relative) amount.
const RELAX_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleGap {
    /// Minimum total weight over directed cycles, or a lower bound on it when
    /// `exact` is false.
    pub value: f64,
    pub exact: bool,
    /// Edges of a minimizing cycle when known.
    #[serde(skip)]
    pub cycle: Vec<Edge>,
}

/// Shortest distances from `source`, or from every vertex at once (a virtual
/// source with zero-weight edges) when `source` is `None`. Fails on a
/// reachable negative cycle.
pub fn bellman_ford(n: usize, edges: &[Edge], source: Option<usize>, level: f64) -> Result<Vec<f64>> {
    let mut dist = match source {
        Some(s) => {
            let mut d = vec![f64::INFINITY; n];
            d[s] = 0.0;
            d
        }
        None => vec![0.0; n],
    };
    let relax = |dist: &mut [f64]| {
        let mut changed = false;
        for e in edges {
            let (u, v) = (e.from.0, e.to.0);
            if dist[u].is_finite() {
                let candidate = dist[u] + e.weight;
                if candidate < dist[v] - RELAX_TOL * (1.0 + dist[v].abs().min(candidate.abs())) {
                    dist[v] = candidate;
                    changed = true;
                }
            }
        }
        changed
    };
    for _ in 0..n {
        if !relax(&mut dist) {
            return Ok(dist);
        }
    }
    if relax(&mut dist) {
        return Err(Error::NegativeCycle(level));
    }
    Ok(dist)
}

/// Minimum total weight over directed cycles of a feasible level graph,
/// 2-cycles γ·γ̃ included.
pub fn min_cycle_gap(graph: &LevelGraph) -> Result<CycleGap> {
    if !graph.is_feasible() {
        return Err(Error::InfeasibleLevel {
            arc: String::from("(level graph)"),
            level: graph.level(),
            floor: f64::NAN,
        });
    }
    let edges = graph.edges();
    if graph.arc_count() <= ENUMERATION_LIMIT {
        Ok(enumerate_cycles(graph.vertex_count(), &edges))
    } else {
        shifted_search(graph.vertex_count(), &edges, graph.level())
    }
}

/// Exact minimum over simple cycles by depth-first enumeration; each cycle is
/// generated once, from its smallest vertex.
pub fn enumerate_cycles(n: usize, edges: &[Edge]) -> CycleGap {
    let mut out_edges = vec![Vec::new(); n];
    for (i, e) in edges.iter().enumerate() {
        out_edges[e.from.0].push(i);
    }
    let mut best = CycleGap {
        value: f64::INFINITY,
        exact: true,
        cycle: Vec::new(),
    };
    let mut on_path = vec![false; n];
    let mut path = Vec::new();

    #[allow(clippy::too_many_arguments)]
    fn dfs(
        start: usize,
        v: usize,
        weight: f64,
        edges: &[Edge],
        out_edges: &[Vec<usize>],
        on_path: &mut [bool],
        path: &mut Vec<usize>,
        best: &mut CycleGap,
    ) {
        for &i in &out_edges[v] {
            let e = &edges[i];
            let w = e.to.0;
            if w == start {
                let total = weight + e.weight;
                if total < best.value {
                    best.value = total;
                    best.cycle = path.iter().chain(std::iter::once(&i)).map(|&k| edges[k]).collect();
                }
            } else if w > start && !on_path[w] {
                on_path[w] = true;
                path.push(i);
                dfs(start, w, weight + e.weight, edges, out_edges, on_path, path, best);
                path.pop();
                on_path[w] = false;
            }
        }
    }

    for start in 0..n {
        on_path[start] = true;
        dfs(start, start, 0.0, edges, &out_edges, &mut on_path, &mut path, &mut best);
        on_path[start] = false;
    }
    best
}

fn shifted(edges: &[Edge], delta: f64) -> Vec<Edge> {
    edges
        .iter()
        .map(|e| Edge {
            weight: e.weight + delta,
            ..*e
        })
        .collect()
}

/// Large graphs: when no negative cycle exists the minimum cycle weight is
/// exact (min over edges of w(e) + dist(head, tail)); otherwise the minimum
/// cycle mean is bracketed by bisection on a uniform shift and the returned
/// value is the lower bound `mean × |V|`.
fn shifted_search(n: usize, edges: &[Edge], level: f64) -> Result<CycleGap> {
    match bellman_ford(n, edges, None, level) {
        Ok(_) => {
            let mut best = f64::INFINITY;
            let dist: Vec<Vec<f64>> = (0..n)
                .map(|s| bellman_ford(n, edges, Some(s), level))
                .collect::<Result<_>>()?;
            for e in edges {
                best = best.min(e.weight + dist[e.to.0][e.from.0]);
            }
            Ok(CycleGap {
                value: best,
                exact: true,
                cycle: Vec::new(),
            })
        }
        Err(Error::NegativeCycle(_)) => {
            let mut lo = 0.0;
            let mut hi = edges.iter().map(|e| e.weight.abs()).fold(1.0, f64::max);
            while bellman_ford(n, &shifted(edges, hi), None, level).is_err() {
                lo = hi;
                hi *= 2.0;
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if hi - lo <= 1e-12 * hi.max(1.0) {
                    break;
                }
                if bellman_ford(n, &shifted(edges, mid), None, level).is_err() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Ok(CycleGap {
                value: -hi * n as f64,
                exact: false,
                cycle: Vec::new(),
            })
        }
        Err(e) => Err(e),
    }
}
