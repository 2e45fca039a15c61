//! Independent oracles shared by the integration tests. Nothing here calls the
//! library's level graphs, semidistances or cycle searches.
#![allow(dead_code)]

use netkam::evolution::SchemeParams;
use netkam::fixtures::Problem;
use netkam::flux::{minimal_values, FluxLimiter};
use netkam::hamiltonian::{level_constants, ArcHamiltonian, Sampled};
use netkam::network::{Incidence, Network, NetworkSpec, VertexId};
use netkam::reparam::{NetworkCurve, Segment};
use rand::Rng;

/// ∫ (c0 + k s)^q ds over [s0, s1] in closed form, with c0 + k s ≥ 0 there.
fn power_integral(c0: f64, k: f64, q: f64, s0: f64, s1: f64) -> f64 {
    let at = |s: f64| (c0 + k * s).max(0.0);
    if k.abs() < 1e-13 {
        return at(0.5 * (s0 + s1)).powf(q) * (s1 - s0);
    }
    (at(s1).powf(q + 1.0) - at(s0).powf(q + 1.0)) / (k * (q + 1.0))
}

/// ∫₀¹ (scale·(a + V(s)))^q ds for piecewise-linear V.
fn root_integral(v: &Sampled, a: f64, scale: f64, q: f64) -> f64 {
    let n = v.samples.len() - 1;
    let h = 1.0 / n as f64;
    (0..n)
        .map(|j| {
            let (lo, hi) = (v.samples[j], v.samples[j + 1]);
            let s0 = j as f64 * h;
            let k = scale * (hi - lo) / h;
            let c0 = scale * (a + lo) - k * s0;
            power_integral(c0, k, q, s0, s0 + h)
        })
        .sum()
}

fn linear_integral(b: &Sampled) -> f64 {
    let n = b.samples.len() - 1;
    b.samples.windows(2).map(|w| 0.5 * (w[0] + w[1])).sum::<f64>() / n as f64
}

/// (forward, backward) traversal weights ∫σ⁺ and −∫σ⁻ at level a.
pub fn exact_weights(ham: &ArcHamiltonian, a: f64) -> Option<(f64, f64)> {
    if a + ham.potential().min() < 0.0 {
        return None;
    }
    Some(match ham {
        ArcHamiltonian::PowerPotential { p, potential } => {
            let w = root_integral(potential, a, 1.0, 1.0 / p);
            (w, w)
        }
        ArcHamiltonian::ShiftedQuadratic { alpha, drift, potential } => {
            let r = root_integral(potential, a, 1.0 / alpha, 0.5);
            let b = linear_integral(drift);
            (b + r, r - b)
        }
    })
}

#[derive(Debug, Clone, Copy)]
pub struct DirectedEdge {
    pub from: usize,
    pub to: usize,
    pub weight: f64,
}

pub fn exact_edges(net: &Network, hams: &netkam::hamiltonian::Hamiltonians, a: f64) -> Option<Vec<DirectedEdge>> {
    let mut out = Vec::new();
    for (id, ham) in hams.iter() {
        let arc = net.arc(id);
        let (fwd, bwd) = exact_weights(ham, a)?;
        out.push(DirectedEdge { from: arc.tail.0, to: arc.head.0, weight: fwd });
        out.push(DirectedEdge { from: arc.head.0, to: arc.tail.0, weight: bwd });
    }
    Some(out)
}

/// Minimum weight over simple paths from `from` to `to`; 0 for `from == to`.
pub fn path_enumeration(n: usize, edges: &[DirectedEdge], from: usize, to: usize) -> f64 {
    fn walk(edges: &[DirectedEdge], at: usize, to: usize, seen: &mut Vec<bool>, acc: f64, best: &mut f64) {
        if at == to {
            *best = best.min(acc);
            return;
        }
        for e in edges.iter().filter(|e| e.from == at) {
            if seen[e.to] {
                continue;
            }
            seen[e.to] = true;
            walk(edges, e.to, to, seen, acc + e.weight, best);
            seen[e.to] = false;
        }
    }
    let mut seen = vec![false; n];
    seen[from] = true;
    let mut best = f64::INFINITY;
    walk(edges, from, to, &mut seen, 0.0, &mut best);
    best
}

/// Minimum weight over simple cycles, including back-and-forth on one arc.
pub fn min_simple_cycle(n: usize, edges: &[DirectedEdge]) -> f64 {
    // cycles are rooted at their smallest vertex
    fn walk(edges: &[DirectedEdge], root: usize, at: usize, seen: &mut Vec<bool>, acc: f64, best: &mut f64) {
        for e in edges.iter().filter(|e| e.from == at && e.to >= root) {
            if e.to == root {
                *best = best.min(acc + e.weight);
            } else if !seen[e.to] {
                seen[e.to] = true;
                walk(edges, root, e.to, seen, acc + e.weight, best);
                seen[e.to] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    for root in 0..n {
        let mut seen = vec![false; n];
        seen[root] = true;
        walk(edges, root, root, &mut seen, 0.0, &mut best);
    }
    best
}

pub fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Critical value from simple-cycle enumeration: the smallest a ≥ a₀ with
/// every cycle nonnegative.
pub fn critical_value_oracle(net: &Network, hams: &netkam::hamiltonian::Hamiltonians) -> f64 {
    let a0 = hams.iter().map(|(_, h)| -h.potential().min()).fold(f64::NEG_INFINITY, f64::max);
    let n = net.vertices().len();
    let gap = |a: f64| min_simple_cycle(n, &exact_edges(net, hams, a).unwrap());
    if gap(a0) >= 0.0 {
        return a0;
    }
    let mut hi = a0 + 1.0;
    while gap(hi) < 0.0 {
        hi = a0 + 2.0 * (hi - a0);
    }
    bisect(a0, hi, gap)
}

pub fn random_hamiltonian(rng: &mut impl Rng) -> ArcHamiltonian {
    let samples = |rng: &mut dyn rand::RngCore, lo: f64, hi: f64| {
        let n = rng.gen_range(2..=5);
        Sampled::new((0..n).map(|_| rng.gen_range(lo..hi)).collect())
    };
    if rng.gen_bool(0.5) {
        let p = [1.5, 2.0, 3.0][rng.gen_range(0..3)];
        ArcHamiltonian::power(p, samples(rng, 0.0, 1.5))
    } else {
        let alpha = rng.gen_range(0.5..2.0);
        ArcHamiltonian::shifted(alpha, samples(rng, -1.0, 1.0), samples(rng, 0.0, 1.5))
    }
}

pub fn square_spec() -> NetworkSpec {
    NetworkSpec::default()
        .vertex("A", &[0.0, 0.0])
        .vertex("B", &[1.0, 0.0])
        .vertex("C", &[1.0, 1.0])
        .vertex("D", &[0.0, 1.0])
        .arc("AB", "A", "B")
        .arc("BC", "B", "C")
        .arc("CD", "C", "D")
        .arc("DA", "D", "A")
        .arc("AC", "A", "C")
}

pub fn random_problem(spec: &NetworkSpec, rng: &mut impl Rng) -> Problem {
    let hams = spec
        .arcs
        .iter()
        .map(|a| (a.id.as_str(), random_hamiltonian(rng)))
        .collect();
    Problem::new(spec, hams)
}

/// A network with at most four vertices and random Hamiltonians.
pub fn random_small_problem(rng: &mut impl Rng) -> Problem {
    let spec = match rng.gen_range(0..4) {
        0 => netkam::fixtures::segment_spec(),
        1 => netkam::fixtures::bigon_spec(),
        2 => netkam::fixtures::triangle_spec(),
        _ => square_spec(),
    };
    random_problem(&spec, rng)
}

/// Flux values between the minimal ones and the minimal ones plus `spread`.
pub fn random_flux(p: &Problem, spread: f64, rng: &mut impl Rng) -> FluxLimiter {
    let consts = level_constants(&p.hamiltonians);
    let floor = minimal_values(&p.network, &consts);
    let mut overrides = Vec::new();
    for v in p.network.vertex_ids() {
        if rng.gen_bool(0.5) {
            overrides.push((v, floor[v.0] + rng.gen_range(0.0..spread)));
        }
    }
    FluxLimiter::custom(&p.network, &consts, &overrides).unwrap()
}

/// A random chain of waits, full arc traversals and excursions into arcs.
pub fn random_curve(net: &Network, rng: &mut impl Rng) -> NetworkCurve {
    let mut v = VertexId(rng.gen_range(0..net.vertices().len()));
    let mut segments = Vec::new();
    for _ in 0..rng.gen_range(1..=5) {
        let dt = rng.gen_range(0.1..3.0);
        let inc = net.incidence(v);
        let Incidence { arc, end } = inc[rng.gen_range(0..inc.len())];
        let from = end.param();
        match rng.gen_range(0..3) {
            0 => segments.push(Segment::Wait { vertex: v, dt }),
            1 => {
                segments.push(Segment::Move { arc, from, to: 1.0 - from, dt });
                let a = net.arc(arc);
                v = if from == 0.0 { a.head } else { a.tail };
            }
            _ => {
                let s = rng.gen_range(0.05..0.95);
                segments.push(Segment::Move { arc, from, to: s, dt });
                segments.push(Segment::Move { arc, from: s, to: from, dt: rng.gen_range(0.1..3.0) });
            }
        }
    }
    NetworkCurve::new(net, segments).unwrap()
}

/// Valid scheme parameters on a coarse grid.
pub fn random_params(rng: &mut impl Rng) -> SchemeParams {
    loop {
        let dt = [0.02, 0.05, 0.1][rng.gen_range(0..3)];
        let params = SchemeParams {
            substeps: rng.gen_range(1..=4),
            fine_levels: rng.gen_range(0..=2),
            ..SchemeParams::new(rng.gen_range(6..=12), dt, rng.gen_range(2.0..(1.0 / dt).min(10.0)))
        };
        if params.validate().is_ok() {
            return params;
        }
    }
}

pub fn all_specs() -> [NetworkSpec; 4] {
    [
        netkam::fixtures::segment_spec(),
        netkam::fixtures::bigon_spec(),
        netkam::fixtures::triangle_spec(),
        square_spec(),
    ]
}
