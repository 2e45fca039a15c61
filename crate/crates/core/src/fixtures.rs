//! Small reference networks used throughout the tests, benches and CLI docs.
//!
//! * segment: two vertices `v0`, `v1`, one unit arc `g1`, H = μ².
//! * bigon: vertices `v0`, `v1` joined by two unit arcs, H₁ = μ² on `g1` and
//!   H₂ = (μ − 2)² on `g2`. Critical value 1.
//! * triangle: equilateral `A`, `B`, `C` with arcs `AB`, `BC`, `CA`;
//!   H = μ² on `AB` and H = μ² − 1 on the two other arcs. Critical value 0.

use crate::hamiltonian::{ArcHamiltonian, Hamiltonians, Sampled};
use crate::network::{Network, NetworkSpec};

#[derive(Debug, Clone)]
pub struct Problem {
    pub network: Network,
    pub hamiltonians: Hamiltonians,
}

impl Problem {
    pub fn new(spec: &NetworkSpec, hams: Vec<(&str, ArcHamiltonian)>) -> Self {
        let network = Network::new(spec).expect("fixture network is valid");
        let map = hams.into_iter().map(|(k, h)| (k.to_string(), h)).collect();
        let hamiltonians = Hamiltonians::from_map(&network, &map).expect("fixture hamiltonians are valid");
        Problem { network, hamiltonians }
    }
}

pub fn segment_spec() -> NetworkSpec {
    NetworkSpec::default()
        .vertex("v0", &[0.0])
        .vertex("v1", &[1.0])
        .arc("g1", "v0", "v1")
}

pub fn segment() -> Problem {
    Problem::new(&segment_spec(), vec![("g1", ArcHamiltonian::quadratic())])
}

pub fn bigon_spec() -> NetworkSpec {
    NetworkSpec::default()
        .vertex("v0", &[0.0, 0.0])
        .vertex("v1", &[1.0, 0.0])
        .arc("g1", "v0", "v1")
        .arc_with_geometry(
            "g2",
            "v0",
            "v1",
            vec![vec![0.0, 0.0], vec![0.5, 0.0], vec![1.0, 0.0]],
        )
}

pub fn bigon() -> Problem {
    Problem::new(
        &bigon_spec(),
        vec![
            ("g1", ArcHamiltonian::quadratic()),
            (
                "g2",
                ArcHamiltonian::shifted(1.0, Sampled::constant(2.0), Sampled::constant(0.0)),
            ),
        ],
    )
}

pub fn triangle_spec() -> NetworkSpec {
    let h = 3f64.sqrt() / 2.0;
    NetworkSpec::default()
        .vertex("A", &[0.0, 0.0])
        .vertex("B", &[1.0, 0.0])
        .vertex("C", &[0.5, h])
        .arc("AB", "A", "B")
        .arc("BC", "B", "C")
        .arc("CA", "C", "A")
}

pub fn triangle() -> Problem {
    triangle_with_ab_potential(Sampled::constant(0.0))
}

/// The triangle with a custom potential on `AB` (H = μ² − V on that arc).
pub fn triangle_with_ab_potential(v: Sampled) -> Problem {
    Problem::new(
        &triangle_spec(),
        vec![
            ("AB", ArcHamiltonian::power(2.0, v)),
            ("BC", ArcHamiltonian::power(2.0, Sampled::constant(1.0))),
            ("CA", ArcHamiltonian::power(2.0, Sampled::constant(1.0))),
        ],
    )
}
