//! Embedded networks: vertices, oriented arcs with polyline geometry, and
//! points on the network.
//!
//! A network is built from a [`NetworkSpec`] (the JSON-facing description).
//! [`validate`] reports every structural problem as data; [`Network::new`]
//! refuses specs with any violation. Vertices and arcs are stored sorted by
//! id, so [`VertexId`] and [`ArcId`] indices are deterministic regardless of
//! the order of the input listing.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VertexId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ArcId(pub usize);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexSpec {
    pub id: String,
    pub coords: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArcSpec {
    pub id: String,
    pub tail: String,
    pub head: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub vertices: Vec<VertexSpec>,
    pub arcs: Vec<ArcSpec>,
}

impl NetworkSpec {
    pub fn vertex(mut self, id: &str, coords: &[f64]) -> Self {
        self.vertices.push(VertexSpec {
            id: id.to_string(),
            coords: coords.to_vec(),
        });
        self
    }

    pub fn arc(mut self, id: &str, tail: &str, head: &str) -> Self {
        self.arcs.push(ArcSpec {
            id: id.to_string(),
            tail: tail.to_string(),
            head: head.to_string(),
            geometry: None,
        });
        self
    }

    pub fn arc_with_geometry(mut self, id: &str, tail: &str, head: &str, geometry: Vec<Vec<f64>>) -> Self {
        self.arcs.push(ArcSpec {
            id: id.to_string(),
            tail: tail.to_string(),
            head: head.to_string(),
            geometry: Some(geometry),
        });
        self
    }
}

/// A structural problem found by [`validate`].
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", content = "at", rename_all = "snake_case")]
pub enum Violation {
    EmptyNetwork,
    DuplicateVertex(String),
    DuplicateArc(String),
    NonFiniteCoords(String),
    DimensionMismatch(String),
    UnknownEndpoint { arc: String, vertex: String },
    Loop(String),
    GeometryEndpoints(String),
    IrregularGeometry(String),
    Disconnected,
    H5(String),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyNetwork => write!(f, "network has no vertices"),
            Violation::DuplicateVertex(id) => write!(f, "duplicate vertex id {id}"),
            Violation::DuplicateArc(id) => write!(f, "duplicate arc id {id}"),
            Violation::NonFiniteCoords(id) => write!(f, "non-finite coordinates at vertex {id}"),
            Violation::DimensionMismatch(id) => write!(f, "coordinate dimension mismatch at {id}"),
            Violation::UnknownEndpoint { arc, vertex } => {
                write!(f, "arc {arc} references unknown vertex {vertex}")
            }
            Violation::Loop(id) => write!(f, "loop at arc {id}"),
            Violation::GeometryEndpoints(id) => {
                write!(f, "geometry of arc {id} does not start at tail and end at head")
            }
            Violation::IrregularGeometry(id) => {
                write!(f, "geometry of arc {id} has repeated consecutive points")
            }
            Violation::Disconnected => write!(f, "network not connected"),
            Violation::H5(id) => write!(f, "H5 violated on {id}"),
        }
    }
}

/// Reports every structural problem of `spec`. The result is sorted, so it does
/// not depend on the order in which vertices and arcs are listed.
pub fn validate(spec: &NetworkSpec) -> Vec<Violation> {
    let mut out = BTreeSet::new();
    if spec.vertices.is_empty() {
        out.insert(Violation::EmptyNetwork);
    }
    let dim = spec.vertices.first().map(|v| v.coords.len()).unwrap_or(0);
    let mut coords: HashMap<&str, &[f64]> = HashMap::new();
    for v in &spec.vertices {
        if coords.insert(v.id.as_str(), &v.coords).is_some() {
            out.insert(Violation::DuplicateVertex(v.id.clone()));
        }
        if v.coords.iter().any(|c| !c.is_finite()) {
            out.insert(Violation::NonFiniteCoords(v.id.clone()));
        }
        if v.coords.len() != dim || dim == 0 {
            out.insert(Violation::DimensionMismatch(v.id.clone()));
        }
    }
    let mut arc_ids = BTreeSet::new();
    for a in &spec.arcs {
        if !arc_ids.insert(a.id.as_str()) {
            out.insert(Violation::DuplicateArc(a.id.clone()));
        }
        if a.tail == a.head {
            out.insert(Violation::Loop(a.id.clone()));
        }
        let mut endpoints_known = true;
        for end in [&a.tail, &a.head] {
            if !coords.contains_key(end.as_str()) {
                endpoints_known = false;
                out.insert(Violation::UnknownEndpoint {
                    arc: a.id.clone(),
                    vertex: end.clone(),
                });
            }
        }
        if let (Some(geometry), true) = (&a.geometry, endpoints_known) {
            let tail = coords[a.tail.as_str()];
            let head = coords[a.head.as_str()];
            if geometry.len() < 2
                || geometry.first().map(Vec::as_slice) != Some(tail)
                || geometry.last().map(Vec::as_slice) != Some(head)
            {
                out.insert(Violation::GeometryEndpoints(a.id.clone()));
            }
            if geometry.iter().any(|p| p.len() != dim || p.iter().any(|c| !c.is_finite())) {
                out.insert(Violation::DimensionMismatch(a.id.clone()));
            }
            if geometry.windows(2).any(|w| w[0] == w[1]) {
                out.insert(Violation::IrregularGeometry(a.id.clone()));
            }
        } else if endpoints_known && a.tail != a.head && coords[a.tail.as_str()] == coords[a.head.as_str()] {
            // default straight segment between coincident points
            out.insert(Violation::IrregularGeometry(a.id.clone()));
        }
    }
    if !spec.vertices.is_empty() && !is_connected(spec) {
        out.insert(Violation::Disconnected);
    }
    out.into_iter().collect()
}

fn is_connected(spec: &NetworkSpec) -> bool {
    let index: HashMap<&str, usize> = spec
        .vertices
        .iter()
        .enumerate()
        .map(|(i, v)| (v.id.as_str(), i))
        .collect();
    let mut adjacency = vec![Vec::new(); spec.vertices.len()];
    for a in &spec.arcs {
        if let (Some(&t), Some(&h)) = (index.get(a.tail.as_str()), index.get(a.head.as_str())) {
            adjacency[t].push(h);
            adjacency[h].push(t);
        }
    }
    let mut seen = vec![false; spec.vertices.len()];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    while let Some(v) = queue.pop_front() {
        for &w in &adjacency[v] {
            if !seen[w] {
                seen[w] = true;
                queue.push_back(w);
            }
        }
    }
    seen.iter().all(|&s| s)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vertex {
    pub id: String,
    pub coords: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Arc {
    pub id: String,
    pub tail: VertexId,
    pub head: VertexId,
    /// Polyline samples at uniform parameters `j / (len - 1)`.
    pub geometry: Vec<Vec<f64>>,
    cumulative: Vec<f64>,
}

impl Arc {
    pub fn length(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }

    /// Length of the piece of the arc between parameters 0 and `s`.
    pub fn partial_length(&self, s: f64) -> f64 {
        let segments = self.geometry.len() - 1;
        let x = s.clamp(0.0, 1.0) * segments as f64;
        let j = (x.floor() as usize).min(segments - 1);
        let frac = x - j as f64;
        self.cumulative[j] + frac * (self.cumulative[j + 1] - self.cumulative[j])
    }

    /// Minimum of |γ̇| over the polyline (per unit parameter).
    pub fn min_speed(&self) -> f64 {
        let segments = (self.geometry.len() - 1) as f64;
        self.cumulative
            .windows(2)
            .map(|w| (w[1] - w[0]) * segments)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn endpoint(&self, end: End) -> VertexId {
        match end {
            End::Tail => self.tail,
            End::Head => self.head,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum End {
    Tail,
    Head,
}

impl End {
    pub fn param(self) -> f64 {
        match self {
            End::Tail => 0.0,
            End::Head => 1.0,
        }
    }
}

/// An arc seen from one of its endpoints: `end` says which end of the stored
/// parametrization sits at the vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Incidence {
    pub arc: ArcId,
    pub end: End,
}

/// A point of the network, possibly described through the reversed
/// parametrization γ̃(s) = γ(1 − s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NetworkPoint {
    Vertex(VertexId),
    OnArc { arc: ArcId, reversed: bool, s: f64 },
}

impl NetworkPoint {
    pub fn on(arc: ArcId, s: f64) -> Self {
        NetworkPoint::OnArc { arc, reversed: false, s }
    }

    pub fn on_reversed(arc: ArcId, s: f64) -> Self {
        NetworkPoint::OnArc { arc, reversed: true, s }
    }

    pub fn is_canonical(&self) -> bool {
        match *self {
            NetworkPoint::Vertex(_) => true,
            NetworkPoint::OnArc { reversed, s, .. } => !reversed && s > 0.0 && s < 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Network {
    vertices: Vec<Vertex>,
    arcs: Vec<Arc>,
    vertex_index: HashMap<String, VertexId>,
    arc_index: HashMap<String, ArcId>,
    incidence: Vec<Vec<Incidence>>,
    vertex_distance: Vec<Vec<f64>>,
}

impl Network {
    pub fn new(spec: &NetworkSpec) -> Result<Self> {
        let violations = validate(spec);
        if !violations.is_empty() {
            return Err(Error::InvalidNetwork(violations));
        }
        let mut vertex_specs: Vec<&VertexSpec> = spec.vertices.iter().collect();
        vertex_specs.sort_by(|a, b| a.id.cmp(&b.id));
        let vertices: Vec<Vertex> = vertex_specs
            .into_iter()
            .map(|v| Vertex {
                id: v.id.clone(),
                coords: v.coords.clone(),
            })
            .collect();
        let vertex_index: HashMap<String, VertexId> = vertices
            .iter()
            .enumerate()
            .map(|(i, v)| (v.id.clone(), VertexId(i)))
            .collect();

        let mut arc_specs: Vec<&ArcSpec> = spec.arcs.iter().collect();
        arc_specs.sort_by(|a, b| a.id.cmp(&b.id));
        let arcs: Vec<Arc> = arc_specs
            .into_iter()
            .map(|a| {
                let tail = vertex_index[&a.tail];
                let head = vertex_index[&a.head];
                let geometry = a.geometry.clone().unwrap_or_else(|| {
                    vec![vertices[tail.0].coords.clone(), vertices[head.0].coords.clone()]
                });
                let mut cumulative = vec![0.0];
                for w in geometry.windows(2) {
                    let seg = w[0]
                        .iter()
                        .zip(&w[1])
                        .map(|(p, q)| (q - p) * (q - p))
                        .sum::<f64>()
                        .sqrt();
                    cumulative.push(cumulative.last().unwrap() + seg);
                }
                Arc {
                    id: a.id.clone(),
                    tail,
                    head,
                    geometry,
                    cumulative,
                }
            })
            .collect();
        let arc_index = arcs
            .iter()
            .enumerate()
            .map(|(i, a)| (a.id.clone(), ArcId(i)))
            .collect();

        let mut incidence = vec![Vec::new(); vertices.len()];
        for (i, a) in arcs.iter().enumerate() {
            incidence[a.tail.0].push(Incidence { arc: ArcId(i), end: End::Tail });
            incidence[a.head.0].push(Incidence { arc: ArcId(i), end: End::Head });
        }

        let mut net = Network {
            vertices,
            arcs,
            vertex_index,
            arc_index,
            incidence,
            vertex_distance: Vec::new(),
        };
        net.vertex_distance = (0..net.vertices.len())
            .map(|v| net.dijkstra(VertexId(v)))
            .collect();
        Ok(net)
    }

    fn dijkstra(&self, source: VertexId) -> Vec<f64> {
        use std::cmp::Ordering;
        use std::collections::BinaryHeap;

        #[derive(PartialEq)]
        struct Entry(f64, usize);
        impl Eq for Entry {}
        impl PartialOrd for Entry {
            fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
                Some(self.cmp(other))
            }
        }
        impl Ord for Entry {
            fn cmp(&self, other: &Self) -> Ordering {
                other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
            }
        }

        let mut dist = vec![f64::INFINITY; self.vertices.len()];
        dist[source.0] = 0.0;
        let mut heap = BinaryHeap::from([Entry(0.0, source.0)]);
        while let Some(Entry(d, v)) = heap.pop() {
            if d > dist[v] {
                continue;
            }
            for inc in &self.incidence[v] {
                let arc = &self.arcs[inc.arc.0];
                let other = match inc.end {
                    End::Tail => arc.head,
                    End::Head => arc.tail,
                };
                let nd = d + arc.length();
                if nd < dist[other.0] {
                    dist[other.0] = nd;
                    heap.push(Entry(nd, other.0));
                }
            }
        }
        dist
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn vertex(&self, id: VertexId) -> &Vertex {
        &self.vertices[id.0]
    }

    pub fn arc(&self, id: ArcId) -> &Arc {
        &self.arcs[id.0]
    }

    pub fn vertex_ids(&self) -> impl Iterator<Item = VertexId> {
        (0..self.vertices.len()).map(VertexId)
    }

    pub fn arc_ids(&self) -> impl Iterator<Item = ArcId> {
        (0..self.arcs.len()).map(ArcId)
    }

    pub fn vertex_id(&self, name: &str) -> Result<VertexId> {
        self.vertex_index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownVertex(name.to_string()))
    }

    pub fn arc_id(&self, name: &str) -> Result<ArcId> {
        self.arc_index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownArc(name.to_string()))
    }

    /// Arcs touching `v`, each with the end of the stored parametrization lying at `v`.
    pub fn incidence(&self, v: VertexId) -> &[Incidence] {
        &self.incidence[v.0]
    }

    pub fn to_spec(&self) -> NetworkSpec {
        NetworkSpec {
            vertices: self
                .vertices
                .iter()
                .map(|v| VertexSpec {
                    id: v.id.clone(),
                    coords: v.coords.clone(),
                })
                .collect(),
            arcs: self
                .arcs
                .iter()
                .map(|a| ArcSpec {
                    id: a.id.clone(),
                    tail: self.vertices[a.tail.0].id.clone(),
                    head: self.vertices[a.head.0].id.clone(),
                    geometry: (a.geometry.len() > 2).then(|| a.geometry.clone()),
                })
                .collect(),
        }
    }

    /// Maps endpoint parameters to vertices and reversed descriptions to the
    /// stored orientation. Idempotent.
    pub fn canonicalize(&self, p: NetworkPoint) -> Result<NetworkPoint> {
        match p {
            NetworkPoint::Vertex(v) => {
                if v.0 >= self.vertices.len() {
                    return Err(Error::UnknownVertex(format!("#{}", v.0)));
                }
                Ok(p)
            }
            NetworkPoint::OnArc { arc, reversed, s } => {
                if arc.0 >= self.arcs.len() {
                    return Err(Error::UnknownArc(format!("#{}", arc.0)));
                }
                if !(0.0..=1.0).contains(&s) {
                    return Err(Error::ParameterOutOfRange(s));
                }
                let s = if reversed { 1.0 - s } else { s };
                let a = &self.arcs[arc.0];
                Ok(if s == 0.0 {
                    NetworkPoint::Vertex(a.tail)
                } else if s == 1.0 {
                    NetworkPoint::Vertex(a.head)
                } else {
                    NetworkPoint::on(arc, s)
                })
            }
        }
    }

    pub fn same_point(&self, p: NetworkPoint, q: NetworkPoint) -> Result<bool> {
        Ok(self.canonicalize(p)? == self.canonicalize(q)?)
    }

    pub fn point_name(&self, p: NetworkPoint) -> String {
        match self.canonicalize(p) {
            Ok(NetworkPoint::Vertex(v)) => self.vertices[v.0].id.clone(),
            Ok(NetworkPoint::OnArc { arc, s, .. }) => format!("{}@{}", self.arcs[arc.0].id, s),
            Err(_) => "?".to_string(),
        }
    }

    /// Geodesic distance d_Γ between two points.
    pub fn geodesic_distance(&self, p: NetworkPoint, q: NetworkPoint) -> Result<f64> {
        let p = self.canonicalize(p)?;
        let q = self.canonicalize(q)?;
        if p == q {
            return Ok(0.0);
        }
        let mut best = f64::INFINITY;
        if let (
            NetworkPoint::OnArc { arc: a, s: sp, .. },
            NetworkPoint::OnArc { arc: b, s: sq, .. },
        ) = (p, q)
        {
            if a == b {
                let arc = &self.arcs[a.0];
                best = (arc.partial_length(sp) - arc.partial_length(sq)).abs();
            }
        }
        for (vp, dp) in self.exits(p) {
            for (vq, dq) in self.exits(q) {
                best = best.min(dp + self.vertex_distance[vp.0][vq.0] + dq);
            }
        }
        Ok(best)
    }

    /// Vertices reachable from a canonical point without crossing another
    /// vertex, with the length of the connecting piece.
    fn exits(&self, p: NetworkPoint) -> Vec<(VertexId, f64)> {
        match p {
            NetworkPoint::Vertex(v) => vec![(v, 0.0)],
            NetworkPoint::OnArc { arc, s, .. } => {
                let a = &self.arcs[arc.0];
                let to_tail = a.partial_length(s);
                vec![(a.tail, to_tail), (a.head, a.length() - to_tail)]
            }
        }
    }

    /// Largest geodesic distance between two vertices.
    pub fn vertex_diameter(&self) -> f64 {
        self.vertex_distance
            .iter()
            .flatten()
            .copied()
            .fold(0.0, f64::max)
    }
}
