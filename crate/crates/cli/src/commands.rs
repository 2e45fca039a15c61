use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use netkam::asymptotics::{finite_time_certificate, run_asymptotics};
use netkam::eikonal::{self, check_subsolution, LevelGraph, SemiDistance, StaticAnalysis};
use netkam::evolution::{EvolveOptions, Scheme};
use netkam::grid::{Grid, GridFunction};
use netkam::hamiltonian::validate_h5;
use netkam::network::Network;
use netkam::reparam::{
    admissible_floor, approx_optimal_time, cost_lagrangian, cost_sigma, NetworkCurve, DEFAULT_ETA,
};
use netkam::scenario::{Loaded, Scenario};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::Context;

/// Grid resolution when a scenario has no scheme block.
const DEFAULT_M: usize = 40;
const DEFAULT_SAMPLE_PAIRS: usize = 100;
const H5_TOL: f64 = 1e-9;
const SUBSOLUTION_TOL: f64 = 1e-9;

#[derive(Debug)]
pub enum CliError {
    Validation(String, Option<Value>),
    Numerical(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(..) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }

    pub fn to_json(&self) -> String {
        let v = match self {
            CliError::Validation(msg, violations) => {
                let mut v = json!({"kind": "validation", "error": msg});
                if let Some(list) = violations {
                    v["violations"] = list.clone();
                }
                v
            }
            CliError::Numerical(msg) => json!({"kind": "numerical", "error": msg}),
            CliError::Io(msg) => json!({"kind": "io", "error": msg}),
        };
        v.to_string()
    }
}

impl From<netkam::Error> for CliError {
    fn from(e: netkam::Error) -> Self {
        if e.is_numerical() {
            return CliError::Numerical(e.to_string());
        }
        let violations = match &e {
            netkam::Error::InvalidNetwork(list) => Some(serde_json::to_value(list).expect("violations serialize")),
            _ => None,
        };
        CliError::Validation(e.to_string(), violations)
    }
}

/// Files to write into the output directory and the document echoed on
/// stdout.
pub struct Output {
    pub stdout: Value,
    pub files: Vec<(&'static str, String)>,
}

pub fn read_scenario(path: &Path) -> Result<Scenario, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display()), None))?;
    Ok(Scenario::from_json(&text)?)
}

pub fn emit(ctx: &Context, out: Output) -> Result<(), CliError> {
    fs::create_dir_all(&ctx.out_dir).map_err(|e| CliError::Io(e.to_string()))?;
    for (name, body) in &out.files {
        fs::write(ctx.out_dir.join(name), body).map_err(|e| CliError::Io(format!("{name}: {e}")))?;
    }
    // a closed pipe on stdout is not an error: the files are written
    let _ = std::io::stdout().lock().write_all(pretty(&out.stdout).as_bytes());
    Ok(())
}

fn pretty<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("output serializes");
    s.push('\n');
    s
}

fn vertex_names(net: &Network) -> Vec<String> {
    net.vertices().iter().map(|v| v.id.clone()).collect()
}

fn arc_names<'a>(net: &'a Network, arcs: impl IntoIterator<Item = &'a netkam::network::ArcId>) -> Vec<String> {
    arcs.into_iter().map(|&a| net.arc(a).id.clone()).collect()
}

fn matrix_json(net: &Network, sd: &SemiDistance) -> BTreeMap<String, BTreeMap<String, f64>> {
    let names = vertex_names(net);
    sd.matrix()
        .iter()
        .enumerate()
        .map(|(i, row)| (names[i].clone(), names.iter().cloned().zip(row.iter().copied()).collect()))
        .collect()
}

fn grid_for(sc: &Scenario, net: &Network) -> Result<Grid, CliError> {
    let m = sc.scheme.as_ref().map_or(DEFAULT_M, |p| p.m);
    Ok(Grid::new(net, m)?)
}

fn grid_csv(net: &Network, grid: &Grid, f: &GridFunction) -> String {
    let mut out = String::from("node,arc,s,value\n");
    for (i, v) in f.values.iter().enumerate() {
        let (arc, s) = grid.node_location(net, i);
        out.push_str(&format!("{},{},{},{}\n", grid.node_name(net, i), arc, s, v));
    }
    out
}

fn grid_json(net: &Network, grid: &Grid, f: &GridFunction) -> Value {
    json!({
        "time": f.time,
        "nodes": (0..grid.len()).map(|i| grid.node_name(net, i)).collect::<Vec<_>>(),
        "values": f.values,
    })
}

fn analysis(ctx: &Context, l: &Loaded) -> Result<StaticAnalysis, CliError> {
    Ok(StaticAnalysis::with_execution(&l.network, &l.hamiltonians, &l.flux, ctx.execution)?)
}

fn level_semidistance(sc: &Scenario, l: &Loaded, an: &StaticAnalysis) -> Result<SemiDistance, CliError> {
    match sc.options.level {
        None => Ok(an.semidistance.clone()),
        Some(a) => Ok(SemiDistance::new(LevelGraph::new(&l.network, &l.hamiltonians, a)?)?),
    }
}

pub fn analyze(ctx: &Context, sc: &Scenario) -> Result<Output, CliError> {
    let l = sc.load()?;
    let net = &l.network;
    let an = analysis(ctx, &l)?;
    let c = an.c();
    let a_gamma: BTreeMap<String, f64> = net
        .arcs()
        .iter()
        .zip(&l.constants.per_arc)
        .map(|(a, &v)| (a.id.clone(), v))
        .collect();
    let flux: BTreeMap<String, f64> = vertex_names(net).into_iter().zip(l.flux.values().iter().copied()).collect();
    let classes: Vec<Value> = an
        .aubry
        .classes
        .iter()
        .map(|cl| {
            json!({
                "arcs": arc_names(net, &cl.arcs),
                "vertices": cl.vertices.iter().map(|&v| net.vertex(v).id.clone()).collect::<Vec<_>>(),
            })
        })
        .collect();
    let report = json!({
        "a0": l.constants.a0,
        "a_gamma": a_gamma,
        "c": c,
        "h5_violations": validate_h5(net, &l.hamiltonians, &l.constants, c, H5_TOL),
        "aubry_arcs": arc_names(net, &an.aubry.arcs),
        "aubry_vertices": an.aubry.vertices.iter().map(|&v| net.vertex(v).id.clone()).collect::<Vec<_>>(),
        "classes": classes.len(),
        "static_classes": classes,
        "extended_vertices": an.aubry.extended_vertices.iter().map(|&v| net.vertex(v).id.clone()).collect::<Vec<_>>(),
        "flux": flux,
        "regime": an.regime(&l.flux),
        "S_c": matrix_json(net, &an.semidistance),
    });
    Ok(Output {
        files: vec![
            ("analysis.json", pretty(&report)),
            ("semidistance.csv", an.semidistance.to_csv(net)),
        ],
        stdout: report,
    })
}

pub fn distances(ctx: &Context, sc: &Scenario) -> Result<Output, CliError> {
    let l = sc.load()?;
    let an = analysis(ctx, &l)?;
    let sd = level_semidistance(sc, &l, &an)?;
    let report = json!({"level": sd.level(), "S": matrix_json(&l.network, &sd)});
    Ok(Output {
        files: vec![("distances.json", pretty(&report)), ("distances.csv", sd.to_csv(&l.network))],
        stdout: report,
    })
}

pub fn solve_eikonal(ctx: &Context, sc: &Scenario) -> Result<Output, CliError> {
    let l = sc.load()?;
    let net = &l.network;
    let an = analysis(ctx, &l)?;
    let sd = level_semidistance(sc, &l, &an)?;
    let grid = grid_for(sc, net)?;
    let w = eikonal::solve_eikonal(net, &grid, &sd, &sc.boundary(net)?)?;
    let violations = check_subsolution(net, &grid, &sd, &w, SUBSOLUTION_TOL)?;

    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let pairs = sc.options.sample_pairs.unwrap_or(DEFAULT_SAMPLE_PAIRS);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..pairs {
        let (y, x) = (rng.gen_range(0..grid.len()), rng.gen_range(0..grid.len()));
        let s = sd.between(net, grid.point(y), grid.point(x))?;
        worst = worst.max(w.values[x] - w.values[y] - s);
    }
    let report = json!({
        "level": sd.level(),
        "solution": grid_json(net, &grid, &w),
        "subsolution_violations": violations,
        "sampled_pairs": pairs,
        "seed": ctx.seed,
        "max_pair_excess": if pairs == 0 { Value::Null } else { json!(worst) },
    });
    Ok(Output {
        files: vec![("eikonal.json", pretty(&report)), ("eikonal.csv", grid_csv(net, &grid, &w))],
        stdout: json!({"level": sd.level(), "violations": violations.len(), "nodes": grid.len()}),
    })
}

pub fn evolve(ctx: &Context, sc: &Scenario) -> Result<Output, CliError> {
    let l = sc.load()?;
    let net = &l.network;
    let params = sc.scheme_params()?.clone();
    let horizon = sc.horizon()?;
    let scheme = Scheme::new(net, &l.hamiltonians, &l.flux, params)?;
    let phi = sc.initial_datum(net, scheme.grid())?;
    let snapshot_every = ctx.snapshot_every.or(sc.options.snapshot_every).unwrap_or(1);
    if snapshot_every == 0 {
        return Err(CliError::Validation("snapshot_every must be positive".into(), None));
    }
    let opts = EvolveOptions {
        snapshot_every,
        backpointers: sc.options.backpointers,
        execution: ctx.execution,
    };
    let traj = scheme.evolve(&phi, horizon, &opts)?;
    let last = grid_json(net, scheme.grid(), traj.last());
    let mut files = vec![
        ("trajectory.csv", traj.to_csv(net, scheme.grid())),
        ("final.json", pretty(&last)),
    ];
    if sc.options.backpointers {
        let curves = (0..scheme.grid().len())
            .map(|x| scheme.backtrack(&traj, x))
            .collect::<netkam::Result<Vec<_>>>()?;
        files.push(("curves.json", pretty(&curves)));
    }
    Ok(Output {
        files,
        stdout: json!({"steps": traj.steps, "layers": traj.layers.len(), "final": last}),
    })
}

pub fn asymptotics(ctx: &Context, sc: &Scenario) -> Result<Output, CliError> {
    let l = sc.load()?;
    let net = &l.network;
    let params = sc.scheme_params()?.clone();
    let horizon = sc.horizon()?;
    params.steps_for(horizon)?;
    let an = analysis(ctx, &l)?;
    let scheme = Scheme::new(net, &l.hamiltonians, &l.flux, params)?;
    let phi = sc.initial_datum(net, scheme.grid())?;
    let run = run_asymptotics(net, &l.hamiltonians, &l.flux, &an, &scheme, &phi, horizon, ctx.execution)?;
    let cert = finite_time_certificate(net, scheme.grid(), &l.flux, &an, &phi, &run.report)?;
    let rep = &run.report;
    Ok(Output {
        files: vec![
            ("report.json", pretty(rep)),
            ("residuals.csv", rep.residual_csv()),
            ("certificate.json", pretty(&cert)),
            ("limit.json", pretty(&grid_json(net, scheme.grid(), &run.prediction.u))),
        ],
        stdout: json!({
            "regime": rep.regime,
            "b": rep.b,
            "c": rep.c,
            "a0": rep.a0,
            "T_detect": rep.t_detect,
            "converged": rep.converged,
            "final_residual": rep.final_residual,
            "epsilon_scheme": rep.epsilon_scheme,
            "tol_conv": rep.tol_conv,
            "certificate": cert,
        }),
    })
}

pub fn reparam_cost(ctx: &Context, sc: &Scenario) -> Result<Output, CliError> {
    let l = sc.load()?;
    let (net, hams) = (&l.network, &l.hamiltonians);
    let spec = sc
        .options
        .curve
        .as_ref()
        .ok_or_else(|| CliError::Validation("missing `options.curve`".into(), None))?;
    let curve = NetworkCurve::from_spec(net, spec)?;
    let an = analysis(ctx, &l)?;
    let c = an.c();
    let a = sc.options.level.unwrap_or(c);
    let sigma = cost_sigma(net, hams, &curve, a)?;
    let lagrangian = cost_lagrangian(net, hams, &l.flux, &curve)?;
    let retimed = approx_optimal_time(net, hams, &l.flux, &curve, c, sc.options.eta.unwrap_or(DEFAULT_ETA))?;
    let report = json!({
        "level": a,
        "c": c,
        "duration": curve.duration(),
        "cost_sigma": sigma,
        "cost_lagrangian": lagrangian,
        "admissible_floor": admissible_floor(net, hams, &l.flux, &curve)?,
        "lagrangian_bound_slack": lagrangian + a * curve.duration() - sigma,
        "retiming": {
            "a": retimed.a,
            "gap": retimed.gap,
            "attained": retimed.attained,
            "duration": retimed.curve.duration(),
            "curve": retimed.curve.to_spec(net),
        },
    });
    Ok(Output {
        files: vec![("reparam.json", pretty(&report))],
        stdout: report,
    })
}
