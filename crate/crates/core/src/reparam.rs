//! Costs of curves on the network, a-Lagrangian traversal times and the
//! retiming of a curve that approaches the σ-cost from above.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::eikonal::ArcLevel;
use crate::error::{Error, Result};
use crate::flux::FluxLimiter;
use crate::hamiltonian::{ArcHamiltonian, Directed, Hamiltonians, Sign};
use crate::network::{ArcId, Network, NetworkPoint, VertexId};

/// Gap target of [`approx_optimal_time`].
pub const DEFAULT_ETA: f64 = 1e-4;
/// Total duration beyond which [`approx_optimal_time`] gives up.
pub const T_CAP: f64 = 1e3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SegmentSpec {
    Move { arc: String, from: f64, to: f64, dt: f64 },
    Wait { wait: String, dt: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSpec {
    pub segments: Vec<SegmentSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Segment {
    /// Uniform motion from parameter `from` to `to` on `arc` in time `dt`.
    Move { arc: ArcId, from: f64, to: f64, dt: f64 },
    Wait { vertex: VertexId, dt: f64 },
}

impl Segment {
    pub fn dt(&self) -> f64 {
        match *self {
            Segment::Move { dt, .. } | Segment::Wait { dt, .. } => dt,
        }
    }

    fn with_dt(self, dt: f64) -> Self {
        match self {
            Segment::Move { arc, from, to, .. } => Segment::Move { arc, from, to, dt },
            Segment::Wait { vertex, .. } => Segment::Wait { vertex, dt },
        }
    }

    fn start(&self) -> NetworkPoint {
        match *self {
            Segment::Move { arc, from, .. } => NetworkPoint::on(arc, from),
            Segment::Wait { vertex, .. } => NetworkPoint::Vertex(vertex),
        }
    }

    fn end(&self) -> NetworkPoint {
        match *self {
            Segment::Move { arc, to, .. } => NetworkPoint::on(arc, to),
            Segment::Wait { vertex, .. } => NetworkPoint::Vertex(vertex),
        }
    }
}

/// A piecewise-uniform curve on the network.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkCurve {
    segments: Vec<Segment>,
}

impl NetworkCurve {
    pub fn new(net: &Network, segments: Vec<Segment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::InvalidCurve("no segments".into()));
        }
        for (i, seg) in segments.iter().enumerate() {
            let dt = seg.dt();
            if !(dt.is_finite() && dt > 0.0) {
                return Err(Error::InvalidCurve(format!("segment {i}: duration {dt} must be positive")));
            }
            match *seg {
                Segment::Move { arc, from, to, .. } => {
                    if arc.0 >= net.arcs().len() {
                        return Err(Error::UnknownArc(format!("#{}", arc.0)));
                    }
                    for s in [from, to] {
                        if !(0.0..=1.0).contains(&s) {
                            return Err(Error::ParameterOutOfRange(s));
                        }
                    }
                }
                Segment::Wait { vertex, .. } => {
                    if vertex.0 >= net.vertices().len() {
                        return Err(Error::UnknownVertex(format!("#{}", vertex.0)));
                    }
                }
            }
        }
        for (i, w) in segments.windows(2).enumerate() {
            if !net.same_point(w[0].end(), w[1].start())? {
                return Err(Error::InvalidCurve(format!(
                    "segment {} ends at {} but segment {} starts at {}",
                    i,
                    net.point_name(w[0].end()),
                    i + 1,
                    net.point_name(w[1].start())
                )));
            }
        }
        Ok(NetworkCurve { segments })
    }

    pub fn from_spec(net: &Network, spec: &CurveSpec) -> Result<Self> {
        let segments = spec
            .segments
            .iter()
            .map(|s| {
                Ok(match s {
                    SegmentSpec::Move { arc, from, to, dt } => Segment::Move {
                        arc: net.arc_id(arc)?,
                        from: *from,
                        to: *to,
                        dt: *dt,
                    },
                    SegmentSpec::Wait { wait, dt } => Segment::Wait {
                        vertex: net.vertex_id(wait)?,
                        dt: *dt,
                    },
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(net, segments)
    }

    pub fn to_spec(&self, net: &Network) -> CurveSpec {
        CurveSpec {
            segments: self
                .segments
                .iter()
                .map(|s| match *s {
                    Segment::Move { arc, from, to, dt } => SegmentSpec::Move {
                        arc: net.arc(arc).id.clone(),
                        from,
                        to,
                        dt,
                    },
                    Segment::Wait { vertex, dt } => SegmentSpec::Wait {
                        wait: net.vertex(vertex).id.clone(),
                        dt,
                    },
                })
                .collect(),
        }
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn duration(&self) -> f64 {
        self.segments.iter().map(Segment::dt).sum()
    }

    pub fn durations(&self) -> Vec<f64> {
        self.segments.iter().map(Segment::dt).collect()
    }

    /// The same path with new segment durations.
    pub fn retimed(&self, durations: &[f64]) -> Result<Self> {
        if durations.len() != self.segments.len() {
            return Err(Error::InvalidCurve(format!(
                "{} durations for {} segments",
                durations.len(),
                self.segments.len()
            )));
        }
        let segments = self.segments.iter().zip(durations).map(|(s, &dt)| s.with_dt(dt)).collect();
        let out = NetworkCurve { segments };
        if let Some(dt) = durations.iter().find(|&&dt| !(dt.is_finite() && dt > 0.0)) {
            return Err(Error::InvalidCurve(format!("duration {dt} must be positive")));
        }
        Ok(out)
    }
}

/// ∫σ_a along the curve. Waits contribute nothing and durations never enter.
pub fn cost_sigma(net: &Network, hams: &Hamiltonians, curve: &NetworkCurve, a: f64) -> Result<f64> {
    let mut levels: BTreeMap<ArcId, ArcLevel> = BTreeMap::new();
    let mut total = 0.0;
    for seg in &curve.segments {
        if let Segment::Move { arc, from, to, .. } = *seg {
            if !levels.contains_key(&arc) {
                let ham = hams.get(arc);
                let level = ArcLevel::new(ham, a)?.ok_or_else(|| Error::InfeasibleLevel {
                    arc: net.arc(arc).id.clone(),
                    level: a,
                    floor: ham.arc_level(),
                })?;
                levels.insert(arc, level);
            }
            total += levels[&arc].cost(from, to);
        }
    }
    Ok(total)
}

/// Quadrature cells of the arc met by the monotone sweep `from` → `to`, as
/// (start, end) pairs in time order.
fn cells(ham: &ArcHamiltonian, from: f64, to: f64) -> Vec<(f64, f64)> {
    let n = (ham.quadrature_nodes() - 1) as f64;
    let (lo, hi) = (from.min(to), from.max(to));
    let mut cuts = vec![lo];
    let first = (lo * n).floor() as usize + 1;
    let mut j = first;
    while (j as f64) < hi * n {
        cuts.push(j as f64 / n);
        j += 1;
    }
    cuts.push(hi);
    let mut out: Vec<(f64, f64)> = cuts.windows(2).map(|w| (w[0], w[1])).filter(|(a, b)| b > a).collect();
    if to < from {
        out.reverse();
        for c in &mut out {
            *c = (c.1, c.0);
        }
    }
    out
}

fn move_cost(hams: &Hamiltonians, arc: ArcId, from: f64, to: f64, dt: f64) -> f64 {
    let ham = hams.get(arc);
    let view = ham.forward();
    let speed = (to - from) / dt;
    if from == to {
        return dt * view.lagrangian(from, 0.0);
    }
    cells(ham, from, to)
        .into_iter()
        .map(|(a, b)| {
            let tau = dt * (b - a) / (to - from);
            tau * view.lagrangian(0.5 * (a + b), speed)
        })
        .sum()
}

/// ∫L along the curve: the arc Lagrangian at uniform speed on each segment
/// (midpoint rule on the arc's quadrature cells) and −c_x per unit time at a
/// vertex at rest.
pub fn cost_lagrangian(net: &Network, hams: &Hamiltonians, flux: &FluxLimiter, curve: &NetworkCurve) -> Result<f64> {
    let mut total = 0.0;
    for seg in &curve.segments {
        total += match *seg {
            Segment::Wait { vertex, dt } => -flux.value(vertex) * dt,
            Segment::Move { arc, from, to, dt } => {
                if from == to {
                    if let NetworkPoint::Vertex(v) = net.canonicalize(NetworkPoint::on(arc, from))? {
                        total += -flux.value(v) * dt;
                        continue;
                    }
                }
                move_cost(hams, arc, from, to, dt)
            }
        };
    }
    Ok(total)
}

/// max of −V over [lo, hi]: attained at an end or a sample node.
fn max_neg_potential(ham: &ArcHamiltonian, lo: f64, hi: f64) -> f64 {
    let v = ham.potential();
    let n = v.cells() as f64;
    let mut best = (-v.eval(lo)).max(-v.eval(hi));
    for (j, &x) in v.samples.iter().enumerate() {
        let s = j as f64 / n;
        if s > lo && s < hi {
            best = best.max(-x);
        }
    }
    best
}

/// a_ξ = max over the points the curve visits of −L(x, 0).
pub fn admissible_floor(net: &Network, hams: &Hamiltonians, flux: &FluxLimiter, curve: &NetworkCurve) -> Result<f64> {
    let mut floor = f64::NEG_INFINITY;
    for seg in &curve.segments {
        match *seg {
            Segment::Wait { vertex, .. } => floor = floor.max(flux.value(vertex)),
            Segment::Move { arc, from, to, .. } => {
                let (lo, hi) = (from.min(to), from.max(to));
                floor = floor.max(max_neg_potential(hams.get(arc), lo, hi));
                for s in [lo, hi] {
                    if let NetworkPoint::Vertex(v) = net.canonicalize(NetworkPoint::on(arc, s))? {
                        floor = floor.max(flux.value(v));
                    }
                }
            }
        }
    }
    Ok(floor)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Forward,
    Backward,
}

const GAUSS: [(f64, f64); 5] = [
    (0.0, 0.568_888_888_888_888_9),
    (-0.538_469_310_105_683, 0.478_628_670_499_366_5),
    (0.538_469_310_105_683, 0.478_628_670_499_366_5),
    (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
    (0.906_179_845_938_664, 0.236_926_885_056_189_1),
];

/// Parameter speed of the a-Lagrangian parametrization, ∂H/∂μ(s, σ⁺_a(s)),
/// in the frame of `view`.
fn lagrangian_speed(view: Directed<'_>, a: f64, s: f64) -> Result<f64> {
    let mu = view
        .sigma(a, s, Sign::Plus)?
        .ok_or_else(|| Error::NonBracketing(format!("σ⁺ undefined at level {a}, s = {s}")))?;
    Ok(view.dh_dmu(s, mu))
}

/// Time the a-Lagrangian parametrization takes to sweep `from` → `to`.
fn sweep_time(net: &Network, hams: &Hamiltonians, arc: ArcId, a: f64, from: f64, to: f64) -> Result<f64> {
    let ham = hams.get(arc);
    let (lo, hi) = (from.min(to), from.max(to));
    let floor = max_neg_potential(ham, lo, hi);
    if a.is_nan() || a <= floor {
        return Err(Error::NotAdmissible {
            arc: net.arc(arc).id.clone(),
            level: a,
            floor,
        });
    }
    let reversed = to < from;
    let view = ham.view(reversed);
    let frame = |s: f64| if reversed { 1.0 - s } else { s };
    let mut total = 0.0;
    for (x0, x1) in cells(ham, lo, hi) {
        let (half, mid) = (0.5 * (x1 - x0), 0.5 * (x0 + x1));
        for (node, w) in GAUSS {
            let s = mid + half * node;
            total += w * half / lagrangian_speed(view, a, frame(s))?;
        }
    }
    Ok(total)
}

/// T(a) = ∫₀¹ ds / ∂H/∂μ(s, σ⁺_a(s)) for the full traversal of `arc`.
/// Refuses levels a ≤ a_γ, where the parametrization may stall.
pub fn lagrangian_traversal_time(
    net: &Network,
    hams: &Hamiltonians,
    arc: ArcId,
    a: f64,
    direction: Direction,
) -> Result<f64> {
    let floor = hams.get(arc).arc_level();
    if a.is_nan() || a <= floor {
        return Err(Error::NotAdmissible {
            arc: net.arc(arc).id.clone(),
            level: a,
            floor,
        });
    }
    match direction {
        Direction::Forward => sweep_time(net, hams, arc, a, 0.0, 1.0),
        Direction::Backward => sweep_time(net, hams, arc, a, 1.0, 0.0),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Retiming {
    /// Level of the Lagrangian parametrization used.
    pub a: f64,
    /// The path split into the arcs' quadrature cells, each timed by the
    /// a-Lagrangian parametrization. Waits keep their durations.
    pub curve: NetworkCurve,
    /// cost_lagrangian + c·T − cost_sigma(c).
    pub gap: f64,
    /// Whether the gap reached η within total duration [`T_CAP`].
    pub attained: bool,
}

fn retime(net: &Network, hams: &Hamiltonians, curve: &NetworkCurve, a: f64) -> Result<NetworkCurve> {
    let mut segments = Vec::new();
    for seg in &curve.segments {
        match *seg {
            Segment::Move { arc, from, to, .. } if from != to => {
                for (x0, x1) in cells(hams.get(arc), from, to) {
                    let dt = sweep_time(net, hams, arc, a, x0, x1)?;
                    segments.push(Segment::Move { arc, from: x0, to: x1, dt });
                }
            }
            other => segments.push(other),
        }
    }
    NetworkCurve::new(net, segments)
}

/// Retimes the motion of `curve` by the a-Lagrangian parametrization so that
/// ∫(L + c) approaches ∫σ_c. Uses a = c when c exceeds the admissible floor
/// a_ξ, and otherwise lets a decrease to a_ξ until the gap is below `eta` or
/// the duration exceeds [`T_CAP`].
pub fn approx_optimal_time(
    net: &Network,
    hams: &Hamiltonians,
    flux: &FluxLimiter,
    curve: &NetworkCurve,
    c: f64,
    eta: f64,
) -> Result<Retiming> {
    let target = cost_sigma(net, hams, curve, c)?;
    let gap_of = |retimed: &NetworkCurve| -> Result<f64> {
        Ok(cost_lagrangian(net, hams, flux, retimed)? + c * retimed.duration() - target)
    };
    let moving = curve
        .segments
        .iter()
        .any(|s| matches!(s, Segment::Move { from, to, .. } if from != to));
    if !moving {
        let gap = gap_of(curve)?;
        return Ok(Retiming {
            a: c,
            curve: curve.clone(),
            gap,
            attained: gap <= eta,
        });
    }

    let mut floor = f64::NEG_INFINITY;
    for seg in &curve.segments {
        if let Segment::Move { arc, from, to, .. } = *seg {
            if from != to {
                floor = floor.max(max_neg_potential(hams.get(arc), from.min(to), from.max(to)));
            }
        }
    }
    if c > floor {
        let retimed = retime(net, hams, curve, c)?;
        let gap = gap_of(&retimed)?;
        return Ok(Retiming {
            a: c,
            curve: retimed,
            gap,
            attained: gap <= eta,
        });
    }

    let scale = floor.abs().max(1.0);
    let mut best: Option<Retiming> = None;
    for k in 0..200 {
        let a = floor + scale * 0.5f64.powi(k);
        let retimed = retime(net, hams, curve, a)?;
        let gap = gap_of(&retimed)?;
        let too_long = retimed.duration() > T_CAP;
        let step = Retiming {
            a,
            curve: retimed,
            gap,
            attained: gap <= eta && !too_long,
        };
        if step.attained {
            return Ok(step);
        }
        if too_long {
            return Ok(best.unwrap_or(step));
        }
        if best.as_ref().is_none_or(|b| gap < b.gap) {
            best = Some(step);
        }
    }
    Ok(best.expect("at least one level tried"))
}
