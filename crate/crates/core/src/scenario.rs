//! Scenario files: a network, its Hamiltonians and flux limiter, an initial
//! datum, scheme parameters and command options in one JSON document.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{datum, DatumSpec, SchemeParams};
use crate::flux::{FluxLimiter, FluxSpec};
use crate::grid::{Grid, GridFunction};
use crate::hamiltonian::{level_constants, ArcHamiltonian, Hamiltonians, LevelConstants};
use crate::network::{Network, NetworkPoint, NetworkSpec};
use crate::reparam::CurveSpec;

fn minimal_flux() -> FluxSpec {
    FluxSpec::Minimal
}

/// `{"vertex":"v0"}` or `{"arc":"g1","s":0.25}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointSpec {
    Vertex { vertex: String },
    OnArc { arc: String, s: f64 },
}

impl PointSpec {
    pub fn resolve(&self, net: &Network) -> Result<NetworkPoint> {
        match self {
            PointSpec::Vertex { vertex } => Ok(NetworkPoint::Vertex(net.vertex_id(vertex)?)),
            PointSpec::OnArc { arc, s } => net.canonicalize(NetworkPoint::on(net.arc_id(arc)?, *s)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryValue {
    pub point: PointSpec,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Options {
    /// Level a of `distances` and `solve-eikonal`; the critical value when
    /// absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub boundary: Vec<BoundaryValue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curve: Option<CurveSpec>,
    /// Gap target of the retiming in `reparam-cost`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_every: Option<usize>,
    /// Record argmin choices and emit backtracked curves.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub backpointers: bool,
    /// Random node pairs checked by `solve-eikonal`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_pairs: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub network: NetworkSpec,
    pub hamiltonians: BTreeMap<String, ArcHamiltonian>,
    #[serde(default = "minimal_flux")]
    pub flux: FluxSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub datum: Option<DatumSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scheme: Option<SchemeParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default)]
    pub options: Options,
}

/// A scenario with every id resolved.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub network: Network,
    pub hamiltonians: Hamiltonians,
    pub constants: LevelConstants,
    pub flux: FluxLimiter,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidScenario(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn load(&self) -> Result<Loaded> {
        let network = Network::new(&self.network)?;
        let hamiltonians = Hamiltonians::from_map(&network, &self.hamiltonians)?;
        let constants = level_constants(&hamiltonians);
        let flux = FluxLimiter::from_spec(&network, &constants, &self.flux)?;
        if let Some(p) = &self.scheme {
            p.validate()?;
        }
        Ok(Loaded {
            network,
            hamiltonians,
            constants,
            flux,
        })
    }

    pub fn scheme_params(&self) -> Result<&SchemeParams> {
        self.scheme
            .as_ref()
            .ok_or_else(|| Error::InvalidScenario("missing `scheme`".into()))
    }

    pub fn horizon(&self) -> Result<f64> {
        self.horizon
            .ok_or_else(|| Error::InvalidScenario("missing `horizon`".into()))
    }

    pub fn initial_datum(&self, net: &Network, grid: &Grid) -> Result<GridFunction> {
        let spec = self
            .datum
            .as_ref()
            .ok_or_else(|| Error::InvalidScenario("missing `datum`".into()))?;
        datum(net, grid, spec)
    }

    pub fn boundary(&self, net: &Network) -> Result<Vec<(NetworkPoint, f64)>> {
        self.options
            .boundary
            .iter()
            .map(|b| {
                if !b.value.is_finite() {
                    return Err(Error::InvalidScenario(format!("boundary value {} is not finite", b.value)));
                }
                Ok((b.point.resolve(net)?, b.value))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BIGON: &str = r#"{
        "network": {
            "vertices": [{"id": "v0", "coords": [0, 0]}, {"id": "v1", "coords": [1, 0]}],
            "arcs": [
                {"id": "g1", "tail": "v0", "head": "v1"},
                {"id": "g2", "tail": "v0", "head": "v1", "geometry": [[0, 0], [0.5, 0], [1, 0]]}
            ]
        },
        "hamiltonians": {
            "g1": {"family": "power_potential", "p": 2, "V": {"samples": [0, 0]}},
            "g2": {"family": "shifted_quadratic", "alpha": 1, "b": {"samples": [2, 2]}, "V": {"samples": [0, 0]}}
        },
        "flux": {"mode": "custom", "values": {"v0": 1, "v1": 1}},
        "datum": {"kind": "vertex_bump", "vertex": "v0", "depth": 1},
        "scheme": {"M": 8, "dt": 0.05, "lambda_max": 10},
        "horizon": 1,
        "options": {"boundary": [{"point": {"arc": "g1", "s": 0.5}, "value": 0}]}
    }"#;

    #[test]
    fn loads_and_round_trips() {
        let sc = Scenario::from_json(BIGON).unwrap();
        let loaded = sc.load().unwrap();
        assert_eq!(loaded.flux.values(), &[1.0, 1.0]);
        assert_eq!(loaded.constants.a0, 0.0);
        let b = sc.boundary(&loaded.network).unwrap();
        assert_eq!(b[0].0, NetworkPoint::on(crate::network::ArcId(0), 0.5));
        assert_eq!(Scenario::from_json(&sc.to_json()).unwrap(), sc);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(Scenario::from_json("{"), Err(Error::InvalidScenario(_))));
        let unknown = BIGON.replace("\"boundary\"", "\"bondary\"");
        assert!(Scenario::from_json(&unknown).is_err());
        let mut sc = Scenario::from_json(BIGON).unwrap();
        sc.hamiltonians.remove("g2");
        assert!(matches!(sc.load(), Err(Error::MissingHamiltonian(_))));
        let mut sc = Scenario::from_json(BIGON).unwrap();
        sc.network.arcs[0].head = "v0".into();
        assert!(matches!(sc.load(), Err(Error::InvalidNetwork(_))));
        let mut sc = Scenario::from_json(BIGON).unwrap();
        sc.scheme.as_mut().unwrap().dt = 0.5;
        assert!(matches!(sc.load(), Err(Error::InvalidScheme(_))));
    }
}
