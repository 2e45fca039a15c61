//! Arc Hamiltonians H_γ(s, μ) from two closed-form families, their
//! Lagrangians, the support functions σ±_{γ,a} and the level constants a_γ, a₀.
//!
//! Coefficients are piecewise linear on a uniform grid of [0, 1]. Everything
//! that depends on the orientation of an arc goes through [`Directed`], which
//! derives the reversed Hamiltonian H_γ̃(s, μ) = H_γ(1 − s, −μ) on the fly.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flux::FluxLimiter;
use crate::network::{ArcId, Network, NetworkPoint, Violation};

/// Relative tolerance of the σ root finder.
pub const ROOT_TOL: f64 = 1e-12;

/// A piecewise-linear function on [0, 1] sampled at `j / (len - 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sampled {
    pub samples: Vec<f64>,
}

impl Sampled {
    pub fn new(samples: Vec<f64>) -> Self {
        Sampled { samples }
    }

    pub fn constant(value: f64) -> Self {
        Sampled {
            samples: vec![value, value],
        }
    }

    /// Samples `f` at `n` uniform nodes.
    pub fn from_fn(n: usize, f: impl Fn(f64) -> f64) -> Self {
        let cells = (n - 1) as f64;
        Sampled {
            samples: (0..n).map(|j| f(j as f64 / cells)).collect(),
        }
    }

    pub fn cells(&self) -> usize {
        self.samples.len() - 1
    }

    pub fn eval(&self, s: f64) -> f64 {
        let cells = self.cells();
        let x = s.clamp(0.0, 1.0) * cells as f64;
        let j = (x.floor() as usize).min(cells - 1);
        let frac = x - j as f64;
        let (lo, hi) = (self.samples[j], self.samples[j + 1]);
        if frac == 0.0 {
            lo
        } else {
            lo + frac * (hi - lo)
        }
    }

    pub fn max(&self) -> f64 {
        self.samples.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.samples.iter().copied().fold(f64::INFINITY, f64::min)
    }

    fn check(&self, arc: &str, name: &str) -> Result<()> {
        if self.samples.len() < 2 || self.samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidHamiltonian {
                arc: arc.to_string(),
                reason: format!("{name} needs at least two finite samples"),
            });
        }
        Ok(())
    }
}

/// H(s, μ) = |μ|^p − V(s)  or  H(s, μ) = α (μ − b(s))² − V(s).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ArcHamiltonian {
    PowerPotential {
        p: f64,
        #[serde(rename = "V")]
        potential: Sampled,
    },
    ShiftedQuadratic {
        alpha: f64,
        #[serde(rename = "b")]
        drift: Sampled,
        #[serde(rename = "V")]
        potential: Sampled,
    },
}

impl ArcHamiltonian {
    pub fn power(p: f64, potential: Sampled) -> Self {
        ArcHamiltonian::PowerPotential { p, potential }
    }

    pub fn quadratic() -> Self {
        Self::power(2.0, Sampled::constant(0.0))
    }

    pub fn shifted(alpha: f64, drift: Sampled, potential: Sampled) -> Self {
        ArcHamiltonian::ShiftedQuadratic { alpha, drift, potential }
    }

    pub fn check(&self, arc: &str) -> Result<()> {
        let bad = |reason: &str| Error::InvalidHamiltonian {
            arc: arc.to_string(),
            reason: reason.to_string(),
        };
        match self {
            ArcHamiltonian::PowerPotential { p, potential } => {
                if !(p.is_finite() && *p > 1.0) {
                    return Err(bad("exponent must be a finite number > 1"));
                }
                potential.check(arc, "V")
            }
            ArcHamiltonian::ShiftedQuadratic { alpha, drift, potential } => {
                if !(alpha.is_finite() && *alpha > 0.0) {
                    return Err(bad("stiffness must be a finite number > 0"));
                }
                drift.check(arc, "b")?;
                potential.check(arc, "V")
            }
        }
    }

    pub fn potential(&self) -> &Sampled {
        match self {
            ArcHamiltonian::PowerPotential { potential, .. }
            | ArcHamiltonian::ShiftedQuadratic { potential, .. } => potential,
        }
    }

    pub fn forward(&self) -> Directed<'_> {
        Directed { ham: self, reversed: false }
    }

    pub fn reversed(&self) -> Directed<'_> {
        Directed { ham: self, reversed: true }
    }

    pub fn view(&self, reversed: bool) -> Directed<'_> {
        Directed { ham: self, reversed }
    }

    /// Number of nodes of the quadrature grid: a refinement of every
    /// coefficient grid with at least 65 nodes.
    pub fn quadrature_nodes(&self) -> usize {
        let mut cells = self.potential().cells();
        if let ArcHamiltonian::ShiftedQuadratic { drift, .. } = self {
            cells = lcm(cells, drift.cells());
        }
        let refine = 64usize.div_ceil(cells).max(1);
        cells * refine + 1
    }

    /// Coefficient breakpoints as parameters in [0, 1].
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut cells = self.potential().cells();
        if let ArcHamiltonian::ShiftedQuadratic { drift, .. } = self {
            cells = lcm(cells, drift.cells());
        }
        (0..=cells).map(|j| j as f64 / cells as f64).collect()
    }

    /// a_γ = max_s min_μ H_γ(s, μ). The minimum is −V(s) for both families,
    /// so the maximum sits at a sample node and is exact.
    pub fn arc_level(&self) -> f64 {
        0.0 - self.potential().min()
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

/// An arc Hamiltonian seen along the stored orientation or the reversed one.
#[derive(Debug, Clone, Copy)]
pub struct Directed<'a> {
    ham: &'a ArcHamiltonian,
    reversed: bool,
}

impl<'a> Directed<'a> {
    fn base(&self, s: f64, mu: f64) -> (f64, f64) {
        if self.reversed {
            (1.0 - s, -mu)
        } else {
            (s, mu)
        }
    }

    pub fn is_reversed(&self) -> bool {
        self.reversed
    }

    pub fn h(&self, s: f64, mu: f64) -> f64 {
        let (s, mu) = self.base(s, mu);
        match self.ham {
            ArcHamiltonian::PowerPotential { p, potential } => mu.abs().powf(*p) - potential.eval(s),
            ArcHamiltonian::ShiftedQuadratic { alpha, drift, potential } => {
                let d = mu - drift.eval(s);
                alpha * d * d - potential.eval(s)
            }
        }
    }

    /// ∂H/∂μ.
    pub fn dh_dmu(&self, s: f64, mu: f64) -> f64 {
        let (s, m) = self.base(s, mu);
        let d = match self.ham {
            ArcHamiltonian::PowerPotential { p, .. } => p * m.abs().powf(p - 1.0) * m.signum(),
            ArcHamiltonian::ShiftedQuadratic { alpha, drift, .. } => 2.0 * alpha * (m - drift.eval(s)),
        };
        if self.reversed {
            -d
        } else {
            d
        }
    }

    /// (min_μ H(s, μ), argmin).
    pub fn min_h(&self, s: f64) -> (f64, f64) {
        let (bs, _) = self.base(s, 0.0);
        let (m, arg) = match self.ham {
            ArcHamiltonian::PowerPotential { potential, .. } => (-potential.eval(bs), 0.0),
            ArcHamiltonian::ShiftedQuadratic { drift, potential, .. } => (-potential.eval(bs), drift.eval(bs)),
        };
        if self.reversed {
            (m, -arg)
        } else {
            (m, arg)
        }
    }

    /// L(s, λ) = sup_μ (λμ − H(s, μ)), in closed form.
    pub fn lagrangian(&self, s: f64, lambda: f64) -> f64 {
        let (s, l) = self.base(s, lambda);
        match self.ham {
            ArcHamiltonian::PowerPotential { p, potential } => {
                let q = p / (p - 1.0);
                (p - 1.0) * (l.abs() / p).powf(q) + potential.eval(s)
            }
            ArcHamiltonian::ShiftedQuadratic { alpha, drift, potential } => {
                l * l / (4.0 * alpha) + drift.eval(s) * l + potential.eval(s)
            }
        }
    }

    /// σ±_a(s): the largest (`Plus`) or smallest (`Minus`) root of H(s, ·) = a,
    /// or `None` when a is below min_μ H(s, μ). Bracketed bisection outward
    /// from the minimizer.
    pub fn sigma(&self, a: f64, s: f64, sign: Sign) -> Result<Option<f64>> {
        if !a.is_finite() {
            return Err(Error::NonFiniteLevel(a));
        }
        let (m, arg) = self.min_h(s);
        if a < m {
            return Ok(None);
        }
        if a == m {
            return Ok(Some(arg));
        }
        let dir = match sign {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        };
        // inner end: H <= a, outer end: H > a
        let mut inner = arg;
        let mut step = arg.abs() + 1.0;
        let mut outer = arg + dir * step;
        let mut guard = 0;
        while self.h(s, outer) <= a {
            inner = outer;
            step *= 2.0;
            outer = arg + dir * step;
            guard += 1;
            if guard > 2000 || !outer.is_finite() {
                return Err(Error::NonBracketing(format!("sigma at level {a}, s = {s}")));
            }
        }
        loop {
            let mid = 0.5 * (inner + outer);
            if (outer - inner).abs() <= ROOT_TOL * mid.abs().max(1.0) || mid == inner || mid == outer {
                return Ok(Some(mid));
            }
            if self.h(s, mid) <= a {
                inner = mid;
            } else {
                outer = mid;
            }
        }
    }
}

/// Hamiltonians of every arc, indexed by [`ArcId`].
#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonians {
    per_arc: Vec<ArcHamiltonian>,
}

impl Hamiltonians {
    pub fn new(net: &Network, per_arc: Vec<ArcHamiltonian>) -> Result<Self> {
        if per_arc.len() != net.arcs().len() {
            let missing = net.arcs().get(per_arc.len()).map(|a| a.id.clone()).unwrap_or_default();
            return Err(Error::MissingHamiltonian(missing));
        }
        for (a, h) in net.arcs().iter().zip(&per_arc) {
            h.check(&a.id)?;
        }
        Ok(Hamiltonians { per_arc })
    }

    pub fn from_map(net: &Network, map: &BTreeMap<String, ArcHamiltonian>) -> Result<Self> {
        for key in map.keys() {
            net.arc_id(key)?;
        }
        let per_arc = net
            .arcs()
            .iter()
            .map(|a| map.get(&a.id).cloned().ok_or_else(|| Error::MissingHamiltonian(a.id.clone())))
            .collect::<Result<Vec<_>>>()?;
        Self::new(net, per_arc)
    }

    pub fn to_map(&self, net: &Network) -> BTreeMap<String, ArcHamiltonian> {
        net.arcs().iter().map(|a| a.id.clone()).zip(self.per_arc.iter().cloned()).collect()
    }

    pub fn get(&self, arc: ArcId) -> &ArcHamiltonian {
        &self.per_arc[arc.0]
    }

    pub fn iter(&self) -> impl Iterator<Item = (ArcId, &ArcHamiltonian)> {
        self.per_arc.iter().enumerate().map(|(i, h)| (ArcId(i), h))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelConstants {
    /// a_γ per arc, indexed by [`ArcId`].
    pub per_arc: Vec<f64>,
    pub a0: f64,
}

pub fn level_constants(hams: &Hamiltonians) -> LevelConstants {
    let per_arc: Vec<f64> = hams.iter().map(|(_, h)| h.arc_level()).collect();
    let a0 = per_arc.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    LevelConstants { per_arc, a0 }
}

/// A tangent vector of the network: a point and a parameter speed along the
/// arc named by the point. At a vertex with nonzero speed the point must be
/// given as an arc endpoint so that the arc is identified.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tangent {
    pub point: NetworkPoint,
    pub speed: f64,
}

/// The Lagrangian on the tangent bundle of the network under a flux limiter.
pub fn lagrangian_network(net: &Network, hams: &Hamiltonians, flux: &FluxLimiter, tangent: Tangent) -> Result<f64> {
    let canonical = net.canonicalize(tangent.point)?;
    match (canonical, tangent.point) {
        (NetworkPoint::Vertex(v), _) if tangent.speed == 0.0 => Ok(-flux.value(v)),
        (NetworkPoint::Vertex(_), NetworkPoint::Vertex(v)) => Err(Error::InvalidCurve(format!(
            "nonzero speed at vertex {} without a named arc",
            net.vertex(v).id
        ))),
        (_, NetworkPoint::OnArc { arc, reversed, s }) => {
            Ok(hams.get(arc).view(reversed).lagrangian(s, tangent.speed))
        }
        (NetworkPoint::OnArc { .. }, NetworkPoint::Vertex(_)) => unreachable!("vertices canonicalize to vertices"),
    }
}

/// Arcs at the critical level that break the requirement that s ↦ min_μ H_γ(s, μ)
/// be constant when c = a₀.
pub fn validate_h5(net: &Network, hams: &Hamiltonians, consts: &LevelConstants, c: f64, tol: f64) -> Vec<Violation> {
    if (c - consts.a0).abs() > tol {
        return Vec::new();
    }
    hams.iter()
        .filter(|(id, _)| (consts.per_arc[id.0] - c).abs() <= tol)
        .filter(|(_, h)| h.potential().max() - h.potential().min() > tol)
        .map(|(id, _)| Violation::H5(net.arc(id).id.clone()))
        .collect()
}
