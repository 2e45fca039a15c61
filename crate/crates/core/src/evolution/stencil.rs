//! Backward characteristics of one time step. Every candidate predecessor of
//! a node is a foot point reached by walking a fixed parameter distance
//! backwards from the node (crossing at most one vertex), with the cost of
//! traversing the walk forwards in time Δt at uniform speed.
//!
//! Distances are integers in units of 1 / (M·Q) with Q = R·2^J, so foot
//! points and interpolation weights are exact rationals.

use serde::{Deserialize, Serialize};

use super::SchemeParams;
use crate::flux::FluxLimiter;
use crate::grid::{Grid, NodeHost};
use crate::hamiltonian::Hamiltonians;
use crate::network::{ArcId, End, Network, NetworkPoint};

/// Motion along one arc during part of a step, in the arc's own parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub arc: ArcId,
    pub from: f64,
    pub to: f64,
    pub duration: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Motion {
    Wait,
    /// Pieces in time order, ending at the node.
    Path { foot: NetworkPoint, pieces: Vec<Piece> },
}

/// v′(x) candidate: wa·v(a) + wb·v(b) + cost.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub a: usize,
    pub b: usize,
    pub wa: f64,
    pub wb: f64,
    pub cost: f64,
    pub motion: Motion,
}

impl Candidate {
    #[inline]
    pub fn value(&self, v: &[f64]) -> f64 {
        if self.wb == 0.0 {
            self.wa * v[self.a] + self.cost
        } else {
            self.wa * v[self.a] + self.wb * v[self.b] + self.cost
        }
    }

    /// The predecessor node carrying the larger interpolation weight (the
    /// lower index on a tie).
    pub fn dominant(&self) -> usize {
        if self.wb > self.wa || (self.wb == self.wa && self.b < self.a) {
            self.b
        } else {
            self.a
        }
    }
}

struct Builder<'a> {
    net: &'a Network,
    hams: &'a Hamiltonians,
    grid: &'a Grid,
    dt: f64,
    /// Q: subdivisions of one grid cell.
    q: u64,
    /// M·Q: units per arc.
    span: u64,
}

/// A walk segment on one arc in integer units, `from` → `to` in time order.
#[derive(Clone, Copy)]
struct Leg {
    arc: ArcId,
    from: u64,
    to: u64,
}

impl Builder<'_> {
    fn param(&self, units: u64) -> f64 {
        units as f64 / self.span as f64
    }

    /// Foot point at `units` on `arc` with its interpolation stencil.
    fn foot(&self, arc: ArcId, units: u64) -> (NetworkPoint, [(usize, f64); 2]) {
        let j = (units / self.q) as usize;
        let rem = units % self.q;
        let point = self.net.canonicalize(NetworkPoint::on(arc, self.param(units))).expect("valid arc");
        if rem == 0 {
            let n = self.grid.arc_node(arc, j);
            (point, [(n, 1.0), (n, 0.0)])
        } else {
            let frac = rem as f64 / self.q as f64;
            (
                point,
                [
                    (self.grid.arc_node(arc, j), 1.0 - frac),
                    (self.grid.arc_node(arc, j + 1), frac),
                ],
            )
        }
    }

    /// Cost and pieces of a walk of total length `d` units traversed in Δt.
    fn traverse(&self, legs: &[Leg], d: u64) -> (f64, Vec<Piece>) {
        let speed = self.param(d) / self.dt;
        let mut cost = 0.0;
        let mut pieces = Vec::with_capacity(legs.len());
        for leg in legs {
            let view = self.hams.get(leg.arc).forward();
            let lambda = if leg.to > leg.from { speed } else { -speed };
            let (lo, hi) = (leg.from.min(leg.to), leg.from.max(leg.to));
            // split at grid nodes, midpoint rule on each cell piece
            let mut x = lo;
            while x < hi {
                let next = ((x / self.q + 1) * self.q).min(hi);
                let tau = self.dt * (next - x) as f64 / d as f64;
                let mid = 0.5 * (self.param(x) + self.param(next));
                cost += tau * view.lagrangian(mid, lambda);
                x = next;
            }
            pieces.push(Piece {
                arc: leg.arc,
                from: self.param(leg.from),
                to: self.param(leg.to),
                duration: self.dt * (hi - lo) as f64 / d as f64,
            });
        }
        (cost, pieces)
    }

    fn push(&self, out: &mut Vec<Candidate>, legs: &[Leg], d: u64) {
        let first = legs[0];
        let (foot, [(a, wa), (b, wb)]) = self.foot(first.arc, first.from);
        let (cost, pieces) = self.traverse(legs, d);
        out.push(Candidate {
            a,
            b,
            wa,
            wb,
            cost,
            motion: Motion::Path { foot, pieces },
        });
    }

    fn end_units(&self, end: End) -> u64 {
        match end {
            End::Tail => 0,
            End::Head => self.span,
        }
    }

    /// Walk `d` units into `arc` from its `end`, ending at that end.
    fn leg_into(&self, arc: ArcId, end: End, d: u64) -> Leg {
        let at = self.end_units(end);
        let from = match end {
            End::Tail => d,
            End::Head => self.span - d,
        };
        Leg { arc, from, to: at }
    }
}

/// Parameter distances of the stencil, in units of 1 / (M·Q), ascending.
pub(crate) fn distances(params: &SchemeParams) -> (u64, Vec<u64>) {
    let r = params.substeps as u64;
    let fine = 1u64 << params.fine_levels;
    let q = r * fine;
    let span = params.m as u64 * q;
    let reach = (params.lambda_max * params.dt * span as f64 * (1.0 + 1e-12)).floor() as u64;
    let reach = reach.min(span);
    let mut d: Vec<u64> = (1..).map(|k| k * fine).take_while(|&u| u <= reach).collect();
    for j in 1..=params.fine_levels {
        let u = fine >> j;
        if u <= reach {
            d.push(u);
        }
    }
    d.sort_unstable();
    d.dedup();
    (q, d)
}

pub(crate) fn build(
    net: &Network,
    hams: &Hamiltonians,
    flux: &FluxLimiter,
    grid: &Grid,
    params: &SchemeParams,
) -> Vec<Vec<Candidate>> {
    let (q, dists) = distances(params);
    let b = Builder {
        net,
        hams,
        grid,
        dt: params.dt,
        q,
        span: params.m as u64 * q,
    };
    (0..grid.len())
        .map(|node| {
            let mut out = Vec::new();
            match grid.host(node) {
                NodeHost::Vertex(v) => {
                    out.push(Candidate {
                        a: node,
                        b: node,
                        wa: 1.0,
                        wb: 0.0,
                        cost: -flux.value(v) * params.dt,
                        motion: Motion::Wait,
                    });
                    for inc in net.incidence(v) {
                        for &d in &dists {
                            b.push(&mut out, &[b.leg_into(inc.arc, inc.end, d)], d);
                        }
                    }
                }
                NodeHost::Interior { arc, j } => {
                    let here = j as u64 * q;
                    let s = b.param(here);
                    out.push(Candidate {
                        a: node,
                        b: node,
                        wa: 1.0,
                        wb: 0.0,
                        cost: params.dt * hams.get(arc).forward().lagrangian(s, 0.0),
                        motion: Motion::Wait,
                    });
                    let host = net.arc(arc);
                    for &d in &dists {
                        // arriving from the tail side
                        if d <= here {
                            b.push(&mut out, &[Leg { arc, from: here - d, to: here }], d);
                        } else {
                            let rest = d - here;
                            let last = Leg { arc, from: 0, to: here };
                            for inc in net.incidence(host.tail).iter().filter(|i| i.arc != arc) {
                                b.push(&mut out, &[b.leg_into(inc.arc, inc.end, rest), last], d);
                            }
                        }
                        // arriving from the head side
                        if here + d <= b.span {
                            b.push(&mut out, &[Leg { arc, from: here + d, to: here }], d);
                        } else {
                            let rest = here + d - b.span;
                            let last = Leg { arc, from: b.span, to: here };
                            for inc in net.incidence(host.head).iter().filter(|i| i.arc != arc) {
                                b.push(&mut out, &[b.leg_into(inc.arc, inc.end, rest), last], d);
                            }
                        }
                    }
                }
            }
            out.sort_by_key(|c| (c.a, c.b));
            out
        })
        .collect()
}
