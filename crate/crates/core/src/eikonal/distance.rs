use super::cycles::bellman_ford;
use super::level::LevelGraph;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::network::{Network, NetworkPoint, VertexId};

/// The semidistance S_a at a level a ≥ c: all vertex pairs by Bellman–Ford,
/// points inside arcs by splitting their host arc.
#[derive(Debug, Clone)]
pub struct SemiDistance {
    graph: LevelGraph,
    matrix: Vec<Vec<f64>>,
}

/// Ways to leave (or enter) a canonical point without crossing another vertex.
fn exits(graph: &LevelGraph, p: NetworkPoint, leaving: bool) -> Vec<(VertexId, f64)> {
    match p {
        NetworkPoint::Vertex(v) => vec![(v, 0.0)],
        NetworkPoint::OnArc { arc, s, .. } => {
            let level = graph.arc(arc).expect("feasible level graph");
            let (tail, head) = graph.endpoints(arc);
            if leaving {
                vec![(tail, level.cost(s, 0.0)), (head, level.cost(s, 1.0))]
            } else {
                vec![(tail, level.cost(0.0, s)), (head, level.cost(1.0, s))]
            }
        }
    }
}

impl SemiDistance {
    /// Fails with [`Error::NegativeCycle`] when the level is below the critical value.
    pub fn new(graph: LevelGraph) -> Result<Self> {
        if !graph.is_feasible() {
            return Err(Error::NegativeCycle(graph.level()));
        }
        let edges = graph.edges();
        let n = graph.vertex_count();
        let matrix = (0..n)
            .map(|s| bellman_ford(n, &edges, Some(s), graph.level()))
            .collect::<Result<Vec<_>>>()?;
        Ok(SemiDistance { graph, matrix })
    }

    pub fn level(&self) -> f64 {
        self.graph.level()
    }

    pub fn graph(&self) -> &LevelGraph {
        &self.graph
    }

    /// S_a between vertices; rows are the starting vertex.
    pub fn vertex(&self, from: VertexId, to: VertexId) -> f64 {
        self.matrix[from.0][to.0]
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.matrix
    }

    /// S_a(y, x).
    pub fn between(&self, net: &Network, y: NetworkPoint, x: NetworkPoint) -> Result<f64> {
        let y = net.canonicalize(y)?;
        let x = net.canonicalize(x)?;
        Ok(self.between_canonical(y, x))
    }

    fn between_canonical(&self, y: NetworkPoint, x: NetworkPoint) -> f64 {
        if y == x {
            return 0.0;
        }
        let mut best = f64::INFINITY;
        if let (NetworkPoint::OnArc { arc: a, s: sy, .. }, NetworkPoint::OnArc { arc: b, s: sx, .. }) = (y, x) {
            if a == b {
                best = self.graph.arc(a).expect("feasible level graph").cost(sy, sx);
            }
        }
        for (p, out) in exits(&self.graph, y, true) {
            for (q, inn) in exits(&self.graph, x, false) {
                best = best.min(out + self.matrix[p.0][q.0] + inn);
            }
        }
        best
    }

    /// S_a(y, ·) on every grid node.
    pub fn from_point(&self, net: &Network, grid: &Grid, y: NetworkPoint) -> Result<Vec<f64>> {
        let y = net.canonicalize(y)?;
        Ok(grid.points().iter().map(|&x| self.between_canonical(y, x)).collect())
    }

    /// S_a(·, x) on every grid node.
    pub fn to_point(&self, net: &Network, grid: &Grid, x: NetworkPoint) -> Result<Vec<f64>> {
        let x = net.canonicalize(x)?;
        Ok(grid.points().iter().map(|&y| self.between_canonical(y, x)).collect())
    }

    /// CSV with a header row of vertex ids; row = from-vertex, column = to-vertex.
    pub fn to_csv(&self, net: &Network) -> String {
        let ids: Vec<&str> = net.vertices().iter().map(|v| v.id.as_str()).collect();
        let mut out = format!("from,{}\n", ids.join(","));
        for (i, row) in self.matrix.iter().enumerate() {
            out.push_str(ids[i]);
            for v in row {
                out.push(',');
                out.push_str(&v.to_string());
            }
            out.push('\n');
        }
        out
    }
}
