//! Uniform discretization of a network: M + 1 nodes per arc at s_j = j / M,
//! with the endpoint nodes of incident arcs aliased to one node per vertex.
//!
//! Node order is vertices first (sorted by id), then the interior nodes of
//! each arc (arcs sorted by id, j ascending).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{ArcId, Network, NetworkPoint, VertexId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeHost {
    Vertex(VertexId),
    Interior { arc: ArcId, j: usize },
}

#[derive(Debug, Clone)]
pub struct Grid {
    m: usize,
    hosts: Vec<NodeHost>,
    points: Vec<NetworkPoint>,
    arc_nodes: Vec<Vec<usize>>,
    vertex_nodes: Vec<usize>,
}

impl Grid {
    pub fn new(net: &Network, m: usize) -> Result<Self> {
        if m < 4 {
            return Err(Error::InvalidScheme(format!("M = {m} < 4 nodes per arc")));
        }
        let mut hosts = Vec::new();
        let mut points = Vec::new();
        let mut vertex_nodes = Vec::new();
        for v in net.vertex_ids() {
            vertex_nodes.push(hosts.len());
            hosts.push(NodeHost::Vertex(v));
            points.push(NetworkPoint::Vertex(v));
        }
        let mut arc_nodes = Vec::new();
        for arc in net.arc_ids() {
            let a = net.arc(arc);
            let mut nodes = vec![vertex_nodes[a.tail.0]];
            for j in 1..m {
                nodes.push(hosts.len());
                hosts.push(NodeHost::Interior { arc, j });
                points.push(NetworkPoint::on(arc, j as f64 / m as f64));
            }
            nodes.push(vertex_nodes[a.head.0]);
            arc_nodes.push(nodes);
        }
        Ok(Grid {
            m,
            hosts,
            points,
            arc_nodes,
            vertex_nodes,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.hosts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hosts.is_empty()
    }

    /// Parameter spacing 1 / M.
    pub fn spacing(&self) -> f64 {
        1.0 / self.m as f64
    }

    pub fn host(&self, node: usize) -> NodeHost {
        self.hosts[node]
    }

    pub fn point(&self, node: usize) -> NetworkPoint {
        self.points[node]
    }

    pub fn points(&self) -> &[NetworkPoint] {
        &self.points
    }

    pub fn vertex_node(&self, v: VertexId) -> usize {
        self.vertex_nodes[v.0]
    }

    pub fn is_vertex(&self, node: usize) -> bool {
        matches!(self.hosts[node], NodeHost::Vertex(_))
    }

    /// The M + 1 nodes of `arc` in parameter order, endpoints included.
    pub fn arc_nodes(&self, arc: ArcId) -> &[usize] {
        &self.arc_nodes[arc.0]
    }

    /// Node `j` of `arc` (0 and M are the tail and head vertex nodes).
    pub fn arc_node(&self, arc: ArcId, j: usize) -> usize {
        self.arc_nodes[arc.0][j]
    }

    /// Linear interpolation stencil at parameter `s` of `arc`: nodes and
    /// weights. A parameter that falls on a node yields a single term.
    pub fn locate(&self, arc: ArcId, s: f64) -> [(usize, f64); 2] {
        let x = s.clamp(0.0, 1.0) * self.m as f64;
        let j = (x.floor() as usize).min(self.m - 1);
        let frac = x - j as f64;
        let lo = self.arc_nodes[arc.0][j];
        let hi = self.arc_nodes[arc.0][j + 1];
        if frac == 0.0 {
            [(lo, 1.0), (lo, 0.0)]
        } else if frac == 1.0 {
            [(hi, 1.0), (hi, 0.0)]
        } else {
            [(lo, 1.0 - frac), (hi, frac)]
        }
    }

    pub fn node_name(&self, net: &Network, node: usize) -> String {
        match self.hosts[node] {
            NodeHost::Vertex(v) => net.vertex(v).id.clone(),
            NodeHost::Interior { arc, j } => format!("{}#{}", net.arc(arc).id, j),
        }
    }

    /// (arc id, s) columns for CSV output; vertices report an empty arc and s = 0.
    pub fn node_location(&self, net: &Network, node: usize) -> (String, f64) {
        match self.hosts[node] {
            NodeHost::Vertex(_) => (String::new(), 0.0),
            NodeHost::Interior { arc, j } => (net.arc(arc).id.clone(), j as f64 / self.m as f64),
        }
    }

    /// Pairs of nodes adjacent along some arc, each pair listed once.
    pub fn neighbor_pairs(&self) -> Vec<(usize, usize)> {
        self.arc_nodes
            .iter()
            .flat_map(|nodes| nodes.windows(2).map(|w| (w[0], w[1])))
            .collect()
    }
}

/// Values of a scalar function on the grid nodes at time `time`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    pub time: f64,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn new(values: Vec<f64>) -> Self {
        GridFunction { time: 0.0, values }
    }

    pub fn constant(grid: &Grid, value: f64) -> Self {
        Self::new(vec![value; grid.len()])
    }

    pub fn from_points(grid: &Grid, f: impl Fn(NetworkPoint) -> f64) -> Self {
        Self::new(grid.points().iter().map(|&p| f(p)).collect())
    }

    pub fn check(&self, grid: &Grid) -> Result<()> {
        if self.values.len() != grid.len() {
            return Err(Error::GridMismatch {
                expected: grid.len(),
                got: self.values.len(),
            });
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn shifted(&self, delta: f64) -> Self {
        GridFunction {
            time: self.time,
            values: self.values.iter().map(|v| v + delta).collect(),
        }
    }

    /// ‖self + offset − other‖∞.
    pub fn sup_distance(&self, other: &GridFunction, offset: f64) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a + offset - b).abs())
            .fold(0.0, f64::max)
    }
}
