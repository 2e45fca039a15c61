use crate::error::{Error, Result};
use crate::hamiltonian::{ArcHamiltonian, Hamiltonians, Sign};
use crate::network::{ArcId, Network, VertexId};
use crate::par::{map_indexed, Execution};

/// σ±_{γ,a} = b ± g^q tabulated on an arc's quadrature grid, where g is
/// linear on every quadrature cell (g = a + V, q = 1/p for the power family;
/// g = (a + V)/α, q = 1/2 with drift b for the shifted one). Integrals over
/// whole and partial cells are exact.
#[derive(Debug, Clone, PartialEq)]
pub struct ArcLevel {
    plus: Vec<f64>,
    minus: Vec<f64>,
    root: Vec<f64>,
    drift: Vec<f64>,
    q: f64,
    cum_plus: Vec<f64>,
    cum_minus: Vec<f64>,
}

/// ∫₀ᵗ (g0 + u (g1 − g0))^q du for t in [0, 1].
fn root_integral(g0: f64, g1: f64, q: f64, t: f64) -> f64 {
    let d = g1 - g0;
    let gt = (g0 + t * d).max(0.0);
    if d.abs() <= 1e-6 * g0.max(g1) {
        // Simpson on a nearly constant integrand
        let mid = (g0 + 0.5 * t * d).max(0.0);
        return t * (g0.powf(q) + 4.0 * mid.powf(q) + gt.powf(q)) / 6.0;
    }
    (gt.powf(q + 1.0) - g0.powf(q + 1.0)) / ((q + 1.0) * d)
}

impl ArcLevel {
    /// `None` when `a < a_γ`, i.e. σ is undefined somewhere on the arc.
    pub fn new(ham: &ArcHamiltonian, a: f64) -> Result<Option<Self>> {
        if !a.is_finite() {
            return Err(Error::NonFiniteLevel(a));
        }
        if a < ham.arc_level() {
            return Ok(None);
        }
        let n = ham.quadrature_nodes();
        let at = |j: usize| j as f64 / (n - 1) as f64;
        let (root, drift, q): (Vec<f64>, Vec<f64>, f64) = match ham {
            ArcHamiltonian::PowerPotential { p, potential } => (
                (0..n).map(|j| (a + potential.eval(at(j))).max(0.0)).collect(),
                vec![0.0; n],
                1.0 / p,
            ),
            ArcHamiltonian::ShiftedQuadratic { alpha, drift, potential } => (
                (0..n).map(|j| ((a + potential.eval(at(j))) / alpha).max(0.0)).collect(),
                (0..n).map(|j| drift.eval(at(j))).collect(),
                0.5,
            ),
        };
        let plus = root.iter().zip(&drift).map(|(g, b)| b + g.powf(q)).collect();
        let minus = root.iter().zip(&drift).map(|(g, b)| b - g.powf(q)).collect();
        let mut level = ArcLevel {
            plus,
            minus,
            root,
            drift,
            q,
            cum_plus: vec![0.0; n],
            cum_minus: vec![0.0; n],
        };
        for j in 0..n - 1 {
            level.cum_plus[j + 1] = level.cum_plus[j] + level.partial(Sign::Plus, j, 1.0);
            level.cum_minus[j + 1] = level.cum_minus[j] + level.partial(Sign::Minus, j, 1.0);
        }
        Ok(Some(level))
    }

    /// ∫ σ^sign over the first fraction `t` of cell j.
    fn partial(&self, sign: Sign, j: usize, t: f64) -> f64 {
        let h = 1.0 / (self.root.len() - 1) as f64;
        let (b0, b1) = (self.drift[j], self.drift[j + 1]);
        let b = t * b0 + 0.5 * t * t * (b1 - b0);
        let r = root_integral(self.root[j], self.root[j + 1], self.q, t);
        match sign {
            Sign::Plus => h * (b + r),
            Sign::Minus => h * (b - r),
        }
    }

    fn table(&self, sign: Sign) -> (&[f64], &[f64]) {
        match sign {
            Sign::Plus => (&self.plus, &self.cum_plus),
            Sign::Minus => (&self.minus, &self.cum_minus),
        }
    }

    /// σ^sign at `s` (linear interpolation of the table).
    pub fn sigma(&self, sign: Sign, s: f64) -> f64 {
        let (values, _) = self.table(sign);
        let cells = values.len() - 1;
        let x = s.clamp(0.0, 1.0) * cells as f64;
        let j = (x.floor() as usize).min(cells - 1);
        let frac = x - j as f64;
        values[j] + frac * (values[j + 1] - values[j])
    }

    /// ∫₀ˢ σ^sign.
    fn running(&self, sign: Sign, s: f64) -> f64 {
        let (values, cum) = self.table(sign);
        let cells = values.len() - 1;
        let x = s.clamp(0.0, 1.0) * cells as f64;
        let j = (x.floor() as usize).min(cells - 1);
        let frac = x - j as f64;
        if frac == 0.0 {
            return cum[j];
        }
        cum[j] + self.partial(sign, j, frac)
    }

    /// ∫_{lo}^{hi} σ^sign for lo ≤ hi.
    pub fn integral(&self, sign: Sign, lo: f64, hi: f64) -> f64 {
        if lo == 0.0 && hi == 1.0 {
            return *self.table(sign).1.last().unwrap();
        }
        self.running(sign, hi) - self.running(sign, lo)
    }

    /// σ-cost of the monotone traversal of the arc from parameter `from` to
    /// `to`: ∫σ⁺ forward, −∫σ⁻ backward.
    pub fn cost(&self, from: f64, to: f64) -> f64 {
        if to >= from {
            self.integral(Sign::Plus, from, to)
        } else {
            -self.integral(Sign::Minus, to, from)
        }
    }

    /// W⁺ = ∫₀¹ σ⁺.
    pub fn forward_weight(&self) -> f64 {
        *self.cum_plus.last().unwrap()
    }

    /// W⁻ = −∫₀¹ σ⁻.
    pub fn backward_weight(&self) -> f64 {
        -*self.cum_minus.last().unwrap()
    }

    pub fn max_abs_sigma(&self) -> f64 {
        self.plus
            .iter()
            .chain(&self.minus)
            .map(|v| v.abs())
            .fold(0.0, f64::max)
    }
}

/// A directed edge of the level graph: an arc traversed along (`reversed ==
/// false`, tail → head) or against its stored orientation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub arc: ArcId,
    pub reversed: bool,
    pub from: VertexId,
    pub to: VertexId,
    pub weight: f64,
}

/// The level-a weighted digraph: each arc contributes a forward edge with
/// weight ∫σ⁺ and a backward edge with weight −∫σ⁻.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelGraph {
    level: f64,
    vertex_count: usize,
    endpoints: Vec<(VertexId, VertexId)>,
    arcs: Vec<Option<ArcLevel>>,
}

impl LevelGraph {
    pub fn new(net: &Network, hams: &Hamiltonians, a: f64) -> Result<Self> {
        Self::with_execution(net, hams, a, Execution::default())
    }

    pub fn with_execution(net: &Network, hams: &Hamiltonians, a: f64, exec: Execution) -> Result<Self> {
        if !a.is_finite() {
            return Err(Error::NonFiniteLevel(a));
        }
        let arcs = map_indexed(net.arcs().len(), exec, |i| ArcLevel::new(hams.get(ArcId(i)), a))
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        Ok(LevelGraph {
            level: a,
            vertex_count: net.vertices().len(),
            endpoints: net.arcs().iter().map(|arc| (arc.tail, arc.head)).collect(),
            arcs,
        })
    }

    pub fn level(&self) -> f64 {
        self.level
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn arc_count(&self) -> usize {
        self.arcs.len()
    }

    pub fn is_feasible(&self) -> bool {
        self.arcs.iter().all(Option::is_some)
    }

    pub fn arc(&self, arc: ArcId) -> Option<&ArcLevel> {
        self.arcs[arc.0].as_ref()
    }

    /// Like [`LevelGraph::arc`] but reports the infeasible arc.
    pub fn require(&self, net: &Network, hams: &Hamiltonians, arc: ArcId) -> Result<&ArcLevel> {
        self.arcs[arc.0].as_ref().ok_or_else(|| Error::InfeasibleLevel {
            arc: net.arc(arc).id.clone(),
            level: self.level,
            floor: hams.get(arc).arc_level(),
        })
    }

    pub fn endpoints(&self, arc: ArcId) -> (VertexId, VertexId) {
        self.endpoints[arc.0]
    }

    /// All directed edges, forward before backward for each arc. Infeasible
    /// arcs contribute nothing.
    pub fn edges(&self) -> Vec<Edge> {
        let mut out = Vec::with_capacity(2 * self.arcs.len());
        for (i, arc) in self.arcs.iter().enumerate() {
            let Some(level) = arc else { continue };
            let (tail, head) = self.endpoints[i];
            out.push(Edge {
                arc: ArcId(i),
                reversed: false,
                from: tail,
                to: head,
                weight: level.forward_weight(),
            });
            out.push(Edge {
                arc: ArcId(i),
                reversed: true,
                from: head,
                to: tail,
                weight: level.backward_weight(),
            });
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::hamiltonian::Sampled;

    fn running_integral(values: &[f64]) -> Vec<f64> {
        let h = 1.0 / (values.len() - 1) as f64;
        let mut out = vec![0.0];
        for w in values.windows(2) {
            out.push(out.last().unwrap() + 0.5 * h * (w[0] + w[1]));
        }
        out
    }

    #[test]
    fn segment_weights_vanish_at_zero() {
        let seg = fixtures::segment();
        let g = LevelGraph::new(&seg.network, &seg.hamiltonians, 0.0).unwrap();
        let arc = g.arc(ArcId(0)).unwrap();
        assert_eq!(arc.forward_weight(), 0.0);
        assert_eq!(arc.backward_weight(), 0.0);
    }

    #[test]
    fn bigon_weights_at_one() {
        let big = fixtures::bigon();
        let g = LevelGraph::new(&big.network, &big.hamiltonians, 1.0).unwrap();
        let g1 = g.arc(big.network.arc_id("g1").unwrap()).unwrap();
        let g2 = g.arc(big.network.arc_id("g2").unwrap()).unwrap();
        for (w, expected) in [
            (g1.forward_weight(), 1.0),
            (g1.backward_weight(), 1.0),
            (g2.forward_weight(), 3.0),
            (g2.backward_weight(), -1.0),
        ] {
            assert!((w - expected).abs() < 1e-10, "{w} vs {expected}");
        }
        assert!(g.is_feasible());
    }

    #[test]
    fn bigon_below_minimum_is_infeasible() {
        let big = fixtures::bigon();
        let g = LevelGraph::new(&big.network, &big.hamiltonians, -0.5).unwrap();
        assert!(!g.is_feasible());
        assert!(g.edges().is_empty());
    }

    #[test]
    fn backward_weight_is_reversed_forward_weight() {
        let h = ArcHamiltonian::shifted(1.3, Sampled::new(vec![0.5, -1.0, 2.0]), Sampled::new(vec![0.1, 0.7]));
        let a = 2.0;
        let lvl = ArcLevel::new(&h, a).unwrap().unwrap();
        // forward weight of the reversed arc, by direct quadrature of σ⁺_γ̃
        let n = 20_001;
        let rev = h.reversed();
        let integrand: Vec<f64> = (0..n)
            .map(|j| rev.sigma(a, j as f64 / (n - 1) as f64, Sign::Plus).unwrap().unwrap())
            .collect();
        let reversed_forward = running_integral(&integrand).last().copied().unwrap();
        assert!((lvl.backward_weight() - reversed_forward).abs() < 1e-6);
    }

    #[test]
    fn partial_integrals_are_additive() {
        let h = ArcHamiltonian::power(2.0, Sampled::new(vec![0.0, 1.0, 0.5]));
        let lvl = ArcLevel::new(&h, 0.5).unwrap().unwrap();
        for &(a, b, c) in &[(0.0, 0.3, 1.0), (0.11, 0.5, 0.93), (0.2, 0.2, 0.7)] {
            let whole = lvl.integral(Sign::Plus, a, c);
            let split = lvl.integral(Sign::Plus, a, b) + lvl.integral(Sign::Plus, b, c);
            assert!((whole - split).abs() < 1e-14);
        }
        assert!((lvl.cost(0.0, 1.0) - lvl.forward_weight()).abs() < 1e-15);
        assert!((lvl.cost(1.0, 0.0) - lvl.backward_weight()).abs() < 1e-15);
    }
}
