use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction, NodeHost};
use crate::hamiltonian::Sampled;
use crate::network::{Network, NetworkPoint};

fn default_radius() -> f64 {
    0.5
}

/// Initial data φ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatumSpec {
    Constant {
        value: f64,
    },
    /// baseline − depth·max(0, 1 − d_Γ(x, vertex) / radius).
    VertexBump {
        vertex: String,
        depth: f64,
        #[serde(default)]
        baseline: f64,
        #[serde(default = "default_radius")]
        radius: f64,
    },
    /// Uniform samples along each arc, interpolated linearly.
    ArcSamples {
        values: BTreeMap<String, Vec<f64>>,
    },
}

fn finite(x: f64, what: &str) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::InvalidDatum(format!("{what} = {x} is not finite")))
    }
}

/// Samples a datum on the grid.
pub fn datum(net: &Network, grid: &Grid, spec: &DatumSpec) -> Result<GridFunction> {
    match spec {
        DatumSpec::Constant { value } => Ok(GridFunction::constant(grid, finite(*value, "value")?)),
        DatumSpec::VertexBump {
            vertex,
            depth,
            baseline,
            radius,
        } => {
            let v = net
                .vertex_id(vertex)
                .map_err(|_| Error::InvalidDatum(format!("unknown vertex `{vertex}`")))?;
            let depth = finite(*depth, "depth")?;
            let baseline = finite(*baseline, "baseline")?;
            if !(radius.is_finite() && *radius > 0.0) {
                return Err(Error::InvalidDatum(format!("radius = {radius} must be positive")));
            }
            let values = grid
                .points()
                .iter()
                .map(|&p| {
                    let d = net.geodesic_distance(p, NetworkPoint::Vertex(v))?;
                    Ok(baseline - depth * (1.0 - d / radius).max(0.0))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(GridFunction::new(values))
        }
        DatumSpec::ArcSamples { values } => {
            for name in values.keys() {
                net.arc_id(name)
                    .map_err(|_| Error::InvalidDatum(format!("unknown arc `{name}`")))?;
            }
            let mut per_arc = Vec::new();
            for arc in net.arcs() {
                let samples = values
                    .get(&arc.id)
                    .ok_or_else(|| Error::InvalidDatum(format!("no samples for arc `{}`", arc.id)))?;
                if samples.len() < 2 || samples.iter().any(|x| !x.is_finite()) {
                    return Err(Error::InvalidDatum(format!(
                        "arc `{}` needs at least two finite samples",
                        arc.id
                    )));
                }
                per_arc.push(Sampled::new(samples.clone()));
            }
            let mut out = vec![f64::NAN; grid.len()];
            for (i, slot) in out.iter_mut().enumerate() {
                if let NodeHost::Interior { arc, j } = grid.host(i) {
                    *slot = per_arc[arc.0].eval(j as f64 / grid.m() as f64);
                }
            }
            for (k, arc) in net.arcs().iter().enumerate() {
                let ends = [(arc.tail, per_arc[k].samples[0]), (arc.head, *per_arc[k].samples.last().unwrap())];
                for (v, x) in ends {
                    let slot = &mut out[grid.vertex_node(v)];
                    if slot.is_nan() {
                        *slot = x;
                    } else if (*slot - x).abs() > 1e-12 * x.abs().max(1.0) {
                        return Err(Error::InvalidDatum(format!(
                            "arc samples disagree at vertex `{}`: {} vs {}",
                            net.vertex(v).id,
                            slot,
                            x
                        )));
                    }
                }
            }
            Ok(GridFunction::new(out))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn bump_on_segment() {
        let seg = fixtures::segment();
        let grid = Grid::new(&seg.network, 4).unwrap();
        let spec: DatumSpec = serde_json::from_str(r#"{"kind":"vertex_bump","vertex":"v0","depth":1}"#).unwrap();
        let phi = datum(&seg.network, &grid, &spec).unwrap();
        // nodes: v0, v1, s = 0.25, 0.5, 0.75
        assert_eq!(phi.values, vec![-1.0, 0.0, -0.5, 0.0, 0.0]);
        assert_eq!(phi.min(), -1.0);
    }

    #[test]
    fn arc_samples_and_errors() {
        let big = fixtures::bigon();
        let grid = Grid::new(&big.network, 4).unwrap();
        let spec: DatumSpec =
            serde_json::from_str(r#"{"kind":"arc_samples","values":{"g1":[0,1],"g2":[0,3,1]}}"#).unwrap();
        let phi = datum(&big.network, &grid, &spec).unwrap();
        assert_eq!(phi.values[0], 0.0);
        assert_eq!(phi.values[1], 1.0);
        assert_eq!(phi.values[grid.arc_node(big.network.arc_id("g2").unwrap(), 2)], 3.0);

        let bad: DatumSpec = serde_json::from_str(r#"{"kind":"arc_samples","values":{"g1":[0,1],"g2":[0,2]}}"#).unwrap();
        assert!(matches!(datum(&big.network, &grid, &bad), Err(Error::InvalidDatum(_))));
        let missing: DatumSpec = serde_json::from_str(r#"{"kind":"arc_samples","values":{"g1":[0,1]}}"#).unwrap();
        assert!(datum(&big.network, &grid, &missing).is_err());
        let unknown: DatumSpec = serde_json::from_str(r#"{"kind":"vertex_bump","vertex":"q","depth":1}"#).unwrap();
        assert!(datum(&big.network, &grid, &unknown).is_err());
        assert!(serde_json::from_str::<DatumSpec>(r#"{"kind":"spline"}"#).is_err());
    }
}
