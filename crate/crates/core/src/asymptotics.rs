//! Long-time behavior of the scheme measured against the static prediction.

use serde::{Deserialize, Serialize};

use crate::eikonal::{check_subsolution, predicted_limit, Prediction, Regime, StaticAnalysis, LEVEL_TOL};
use crate::error::{Error, Result};
use crate::evolution::{Scheme, SchemeParams, Trajectory};
use crate::flux::FluxLimiter;
use crate::grid::{Grid, GridFunction, NodeHost};
use crate::hamiltonian::Hamiltonians;
use crate::network::Network;
use crate::par::Execution;

/// Steps of the self-test that measures the scheme error.
pub const SELF_TEST_STEPS: usize = 1000;
/// Smallest default convergence tolerance.
pub const TOL_FLOOR: f64 = 1e-12;
/// Slack of the subsolution test in [`finite_time_certificate`].
pub const SUBSOLUTION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub regime: Regime,
    /// Drift b: c, or ā = max c_x when supercritical.
    pub b: f64,
    pub c: f64,
    pub a0: f64,
    /// Start of the first run of `hold_steps` consecutive residuals below
    /// `tol_conv`.
    #[serde(rename = "T_detect")]
    pub t_detect: Option<f64>,
    /// r(k) = ‖v(·, kΔt) + b·kΔt − u‖∞ for k = 0..=n.
    pub residuals: Vec<f64>,
    pub epsilon_scheme: f64,
    pub tol_conv: f64,
    pub hold_steps: usize,
    pub dt: f64,
    /// Detected, and the residual stays below tolerance up to the horizon.
    pub converged: bool,
    pub final_residual: f64,
}

impl ConvergenceReport {
    pub fn horizon(&self) -> f64 {
        (self.residuals.len() - 1) as f64 * self.dt
    }

    pub fn residual_csv(&self) -> String {
        let mut out = String::from("t,r\n");
        for (k, r) in self.residuals.iter().enumerate() {
            out.push_str(&format!("{},{}\n", k as f64 * self.dt, r));
        }
        out
    }

    /// max_{k ≥ k0} r(k).
    pub fn tail_max(&self, k0: usize) -> f64 {
        self.residuals[k0.min(self.residuals.len())..].iter().copied().fold(0.0, f64::max)
    }
}

/// First index starting `hold` consecutive entries ≤ `tol`.
pub fn detect(residuals: &[f64], tol: f64, hold: usize) -> Option<usize> {
    let mut run = 0;
    for (k, &r) in residuals.iter().enumerate() {
        if r <= tol {
            run += 1;
            if run >= hold {
                return Some(k + 1 - hold);
            }
        } else {
            run = 0;
        }
    }
    None
}

/// max_{k ≤ steps} ‖v(·, kΔt) + b·kΔt − u‖∞ for v(·, 0) = u.
pub fn self_test_residual(scheme: &Scheme, u: &GridFunction, b: f64, steps: usize, exec: Execution) -> Result<f64> {
    u.check(scheme.grid())?;
    let mut v = GridFunction::new(u.values.clone());
    let mut worst: f64 = 0.0;
    for _ in 0..steps {
        v = scheme.step_with(&v, exec)?;
        worst = worst.max(v.sup_distance(u, b * v.time));
    }
    Ok(worst)
}

/// ‖evolve(u, t_probe) + b·t_probe − u‖∞.
pub fn fixed_point_residual(scheme: &Scheme, u: &GridFunction, b: f64, t_probe: f64, exec: Execution) -> Result<f64> {
    u.check(scheme.grid())?;
    let n = scheme.params().steps_for(t_probe)?;
    let mut v = GridFunction::new(u.values.clone());
    for _ in 0..n {
        v = scheme.step_with(&v, exec)?;
    }
    Ok(v.sup_distance(u, b * v.time))
}

#[derive(Debug, Clone)]
pub struct AsymptoticRun {
    pub report: ConvergenceReport,
    pub prediction: Prediction,
    pub last: GridFunction,
}

/// Evolves φ up to `horizon` and tracks its distance to the predicted limit.
#[allow(clippy::too_many_arguments)]
pub fn run_asymptotics(
    net: &Network,
    hams: &Hamiltonians,
    flux: &FluxLimiter,
    analysis: &StaticAnalysis,
    scheme: &Scheme,
    phi: &GridFunction,
    horizon: f64,
    exec: Execution,
) -> Result<AsymptoticRun> {
    let params: &SchemeParams = scheme.params();
    let n = params.steps_for(horizon)?;
    let grid = scheme.grid();
    phi.check(grid)?;
    let prediction = predicted_limit(net, hams, flux, analysis, grid, phi)?;
    let b = prediction.drift;
    let epsilon_scheme = self_test_residual(scheme, &prediction.u, b, SELF_TEST_STEPS, exec)?;
    let tol_conv = params.tol_conv.unwrap_or((2.0 * epsilon_scheme).max(TOL_FLOOR));

    let mut v = GridFunction::new(phi.values.clone());
    let mut residuals = Vec::with_capacity(n + 1);
    residuals.push(v.sup_distance(&prediction.u, 0.0));
    for _ in 0..n {
        v = scheme.step_with(&v, exec)?;
        residuals.push(v.sup_distance(&prediction.u, b * v.time));
    }
    let start = detect(&residuals, tol_conv, params.hold_steps);
    let converged = start.is_some_and(|k| residuals[k..].iter().all(|&r| r <= tol_conv));
    let report = ConvergenceReport {
        regime: prediction.regime,
        b,
        c: analysis.c(),
        a0: analysis.constants.a0,
        t_detect: start.map(|k| k as f64 * params.dt),
        final_residual: *residuals.last().unwrap(),
        residuals,
        epsilon_scheme,
        tol_conv,
        hold_steps: params.hold_steps,
        dt: params.dt,
        converged,
    };
    Ok(AsymptoticRun { report, prediction, last: v })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FiniteReason {
    Supercritical,
    /// c > a₀ and every static class holds a vertex with c_x = c.
    CriticalFluxInEveryClass,
    /// φ is a subsolution at the critical level.
    Subsolution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub expected_finite: bool,
    pub reason: Option<FiniteReason>,
    pub observed: bool,
    #[serde(rename = "T_detect")]
    pub t_detect: Option<f64>,
}

/// Whether the static data guarantee that 𝒮(t)φ + bt reaches its limit in
/// finite time, next to what the run observed.
pub fn finite_time_certificate(
    net: &Network,
    grid: &Grid,
    flux: &FluxLimiter,
    analysis: &StaticAnalysis,
    phi: &GridFunction,
    report: &ConvergenceReport,
) -> Result<Certificate> {
    let c = analysis.c();
    let reason = if report.regime == Regime::Supercritical {
        Some(FiniteReason::Supercritical)
    } else if c > analysis.constants.a0 + LEVEL_TOL
        && !analysis.aubry.classes.is_empty()
        && analysis
            .aubry
            .classes
            .iter()
            .all(|cl| cl.vertices.iter().any(|&v| (flux.value(v) - c).abs() <= LEVEL_TOL))
    {
        Some(FiniteReason::CriticalFluxInEveryClass)
    } else if check_subsolution(net, grid, &analysis.semidistance, phi, SUBSOLUTION_TOL)?.is_empty() {
        Some(FiniteReason::Subsolution)
    } else {
        None
    };
    Ok(Certificate {
        expected_finite: reason.is_some(),
        reason,
        observed: report.converged,
        t_detect: report.t_detect,
    })
}

/// Nodes of the set optimal curves must visit: the extended Aubry set in the
/// critical regime, the vertices with c_x = ā otherwise.
pub fn limit_targets(grid: &Grid, analysis: &StaticAnalysis, flux: &FluxLimiter) -> Vec<bool> {
    match analysis.regime(flux) {
        Regime::Critical => analysis.aubry.extended_nodes(grid),
        Regime::Supercritical => {
            let a_bar = flux.max_value();
            (0..grid.len())
                .map(|i| match grid.host(i) {
                    NodeHost::Vertex(v) => (flux.value(v) - a_bar).abs() <= LEVEL_TOL,
                    NodeHost::Interior { .. } => false,
                })
                .collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AubryHits {
    /// Per node, the first time its backtracked curve sits on a target node.
    pub first_visit: Vec<Option<f64>>,
    pub all_visited: bool,
}

/// Backtracks the optimal discrete curve of every node of a trajectory with
/// backpointers spanning at least `t_scan` and records target visits.
pub fn check_optimal_curves_hit_aubry(
    scheme: &Scheme,
    traj: &Trajectory,
    targets: &[bool],
    t_scan: f64,
) -> Result<AubryHits> {
    if traj.history.is_none() {
        return Err(Error::MissingBackpointers);
    }
    if targets.len() != scheme.grid().len() {
        return Err(Error::GridMismatch {
            expected: scheme.grid().len(),
            got: targets.len(),
        });
    }
    if (traj.steps as f64) * traj.dt < t_scan - 1e-9 {
        return Err(Error::InvalidScheme(format!(
            "trajectory spans {} < t_scan = {}",
            traj.steps as f64 * traj.dt,
            t_scan
        )));
    }
    let first_visit = (0..scheme.grid().len())
        .map(|x| {
            let curve = scheme.backtrack(traj, x)?;
            Ok(curve.first_visit(targets).map(|k| k as f64 * traj.dt))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AubryHits {
        all_visited: first_visit.iter().all(Option::is_some),
        first_visit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::{datum, DatumSpec, EvolveOptions};
    use crate::fixtures;
    use crate::hamiltonian::level_constants;
    use crate::network::VertexId;

    fn bump(p: &fixtures::Problem, grid: &Grid) -> GridFunction {
        let spec = DatumSpec::VertexBump {
            vertex: "v0".into(),
            depth: 1.0,
            baseline: 0.0,
            radius: 0.5,
        };
        datum(&p.network, grid, &spec).unwrap()
    }

    #[test]
    fn detection_needs_a_full_run() {
        let r = [3.0, 0.1, 0.1, 2.0, 0.1, 0.1, 0.1, 0.1];
        assert_eq!(detect(&r, 0.5, 2), Some(1));
        assert_eq!(detect(&r, 0.5, 3), Some(4));
        assert_eq!(detect(&r, 0.5, 5), None);
    }

    #[test]
    fn supercritical_segment_converges_in_finite_time() {
        let seg = fixtures::segment();
        let (net, hams) = (&seg.network, &seg.hamiltonians);
        let flux = FluxLimiter::custom(net, &level_constants(hams), &[(VertexId(1), 2.0)]).unwrap();
        let analysis = StaticAnalysis::new(net, hams, &flux).unwrap();
        let scheme = Scheme::new(net, hams, &flux, SchemeParams::new(20, 0.02, 10.0)).unwrap();
        let phi = bump(&seg, scheme.grid());
        let run = run_asymptotics(net, hams, &flux, &analysis, &scheme, &phi, 4.0, Execution::default()).unwrap();
        let rep = &run.report;
        assert_eq!(rep.regime, Regime::Supercritical);
        assert_eq!(rep.b, 2.0);
        assert!(rep.converged);
        assert!(rep.t_detect.unwrap() <= rep.horizon());
        let cert = finite_time_certificate(net, scheme.grid(), &flux, &analysis, &phi, rep).unwrap();
        assert_eq!(cert.reason, Some(FiniteReason::Supercritical));
        assert!(cert.observed);

        let json = serde_json::to_string(rep).unwrap();
        assert!(json.contains("\"T_detect\""));
        assert_eq!(serde_json::from_str::<ConvergenceReport>(&json).unwrap(), *rep);
        assert!(rep.residual_csv().starts_with("t,r\n0,"));
    }

    #[test]
    fn fixed_point_residual_grows_with_wrong_drift() {
        let seg = fixtures::segment();
        let (net, hams) = (&seg.network, &seg.hamiltonians);
        let flux = FluxLimiter::minimal(net, &level_constants(hams));
        let analysis = StaticAnalysis::new(net, hams, &flux).unwrap();
        let scheme = Scheme::new(net, hams, &flux, SchemeParams::new(10, 0.05, 10.0)).unwrap();
        let phi = bump(&seg, scheme.grid());
        let pred = predicted_limit(net, hams, &flux, &analysis, scheme.grid(), &phi).unwrap();
        let exec = Execution::default();
        assert!(fixed_point_residual(&scheme, &pred.u, 0.0, 1.0, exec).unwrap() < 1e-12);
        let off = fixed_point_residual(&scheme, &pred.u, 0.5, 1.0, exec).unwrap();
        assert!((off - 0.5).abs() < 1e-12);
    }

    #[test]
    fn certificate_on_the_bigon() {
        let big = fixtures::bigon();
        let (net, hams) = (&big.network, &big.hamiltonians);
        let consts = level_constants(hams);
        let critical = FluxLimiter::custom(net, &consts, &[(VertexId(0), 1.0), (VertexId(1), 1.0)]).unwrap();
        let minimal = FluxLimiter::minimal(net, &consts);
        let params = SchemeParams::new(10, 0.05, 10.0);
        for (flux, expected) in [(&critical, true), (&minimal, false)] {
            let analysis = StaticAnalysis::new(net, hams, flux).unwrap();
            let scheme = Scheme::new(net, hams, flux, params.clone()).unwrap();
            let phi = bump(&big, scheme.grid());
            let run = run_asymptotics(net, hams, flux, &analysis, &scheme, &phi, 1.0, Execution::default()).unwrap();
            let cert = finite_time_certificate(net, scheme.grid(), flux, &analysis, &phi, &run.report).unwrap();
            assert_eq!(cert.expected_finite, expected);
        }
    }

    #[test]
    fn optimal_curves_reach_the_waiting_vertex() {
        let seg = fixtures::segment();
        let (net, hams) = (&seg.network, &seg.hamiltonians);
        let flux = FluxLimiter::custom(net, &level_constants(hams), &[(VertexId(1), 2.0)]).unwrap();
        let analysis = StaticAnalysis::new(net, hams, &flux).unwrap();
        let scheme = Scheme::new(net, hams, &flux, SchemeParams::new(10, 0.05, 10.0)).unwrap();
        let phi = bump(&seg, scheme.grid());
        let opts = EvolveOptions {
            backpointers: true,
            ..Default::default()
        };
        let traj = scheme.evolve(&phi, 3.0, &opts).unwrap();
        let targets = limit_targets(scheme.grid(), &analysis, &flux);
        assert_eq!(targets.iter().filter(|&&t| t).count(), 1);
        let hits = check_optimal_curves_hit_aubry(&scheme, &traj, &targets, 3.0).unwrap();
        assert!(hits.all_visited);
        assert!(check_optimal_curves_hit_aubry(&scheme, &traj, &targets, 5.0).is_err());
        let plain = scheme.evolve(&phi, 1.0, &EvolveOptions::default()).unwrap();
        assert!(matches!(
            check_optimal_curves_hit_aubry(&scheme, &plain, &targets, 1.0),
            Err(Error::MissingBackpointers)
        ));
    }
}
