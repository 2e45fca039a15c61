//! Flux limiters: per-vertex constants c_x ≥ max_{γ ∈ Γ_x} a_γ.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::LevelConstants;
use crate::network::{Network, VertexId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FluxMode {
    Minimal,
    Custom,
}

/// JSON form: `{"mode":"minimal"}` or `{"mode":"custom","values":{"v1":2.0}}`.
/// Vertices missing from `values` take their minimal value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum FluxSpec {
    Minimal,
    Custom { values: BTreeMap<String, f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FluxLimiter {
    values: Vec<f64>,
    mode: FluxMode,
}

/// max_{γ ∈ Γ_x} a_γ for every vertex.
pub fn minimal_values(net: &Network, consts: &LevelConstants) -> Vec<f64> {
    net.vertex_ids()
        .map(|v| {
            net.incidence(v)
                .iter()
                .map(|inc| consts.per_arc[inc.arc.0])
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect()
}

impl FluxLimiter {
    pub fn minimal(net: &Network, consts: &LevelConstants) -> Self {
        FluxLimiter {
            values: minimal_values(net, consts),
            mode: FluxMode::Minimal,
        }
    }

    pub fn custom(net: &Network, consts: &LevelConstants, overrides: &[(VertexId, f64)]) -> Result<Self> {
        let floor = minimal_values(net, consts);
        let mut values = floor.clone();
        for &(v, c) in overrides {
            if !c.is_finite() || c < floor[v.0] {
                return Err(Error::InvalidFlux {
                    vertex: net.vertex(v).id.clone(),
                    value: c,
                    floor: floor[v.0],
                });
            }
            values[v.0] = c;
        }
        Ok(FluxLimiter {
            values,
            mode: FluxMode::Custom,
        })
    }

    pub fn from_spec(net: &Network, consts: &LevelConstants, spec: &FluxSpec) -> Result<Self> {
        match spec {
            FluxSpec::Minimal => Ok(Self::minimal(net, consts)),
            FluxSpec::Custom { values } => {
                let overrides = values
                    .iter()
                    .map(|(k, &c)| Ok((net.vertex_id(k)?, c)))
                    .collect::<Result<Vec<_>>>()?;
                Self::custom(net, consts, &overrides)
            }
        }
    }

    pub fn to_spec(&self, net: &Network) -> FluxSpec {
        match self.mode {
            FluxMode::Minimal => FluxSpec::Minimal,
            FluxMode::Custom => FluxSpec::Custom {
                values: net
                    .vertices()
                    .iter()
                    .map(|v| v.id.clone())
                    .zip(self.values.iter().copied())
                    .collect(),
            },
        }
    }

    pub fn value(&self, v: VertexId) -> f64 {
        self.values[v.0]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mode(&self) -> FluxMode {
        self.mode
    }

    /// max_x c_x.
    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::hamiltonian::level_constants;

    #[test]
    fn minimal_takes_incident_max() {
        let tri = fixtures::triangle();
        let k = level_constants(&tri.hamiltonians);
        let flux = FluxLimiter::minimal(&tri.network, &k);
        let id = |n| tri.network.vertex_id(n).unwrap();
        assert_eq!(flux.value(id("A")), 0.0);
        assert_eq!(flux.value(id("B")), 0.0);
        assert_eq!(flux.value(id("C")), -1.0);
    }

    #[test]
    fn custom_below_floor_is_rejected() {
        let seg = fixtures::segment();
        let k = level_constants(&seg.hamiltonians);
        let v0 = seg.network.vertex_id("v0").unwrap();
        assert!(matches!(
            FluxLimiter::custom(&seg.network, &k, &[(v0, -0.5)]),
            Err(Error::InvalidFlux { .. })
        ));
    }

    #[test]
    fn spec_round_trip() {
        let json = r#"{"mode":"custom","values":{"v1":2.0}}"#;
        let spec: FluxSpec = serde_json::from_str(json).unwrap();
        let seg = fixtures::segment();
        let k = level_constants(&seg.hamiltonians);
        let flux = FluxLimiter::from_spec(&seg.network, &k, &spec).unwrap();
        assert_eq!(flux.values(), &[0.0, 2.0]);
        let back = FluxLimiter::from_spec(&seg.network, &k, &flux.to_spec(&seg.network)).unwrap();
        assert_eq!(back, flux);
        let minimal: FluxSpec = serde_json::from_str(r#"{"mode":"minimal"}"#).unwrap();
        assert_eq!(minimal, FluxSpec::Minimal);
    }
}
