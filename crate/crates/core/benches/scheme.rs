use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use netkam::eikonal::StaticAnalysis;
use netkam::evolution::{datum, DatumSpec, Scheme, SchemeParams};
use netkam::fixtures;
use netkam::flux::FluxLimiter;
use netkam::hamiltonian::level_constants;
use netkam::par::Execution;

fn step(c: &mut Criterion) {
    let tri = fixtures::triangle();
    let (net, hams) = (&tri.network, &tri.hamiltonians);
    let flux = FluxLimiter::minimal(net, &level_constants(hams));
    let mut group = c.benchmark_group("step");
    for m in [40, 160] {
        let scheme = Scheme::new(net, hams, &flux, SchemeParams::new(m, 0.01, 10.0)).unwrap();
        let spec = DatumSpec::VertexBump {
            vertex: "C".into(),
            depth: 3.0,
            baseline: 0.0,
            radius: 0.5,
        };
        let phi = datum(net, scheme.grid(), &spec).unwrap();
        for (name, exec) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)] {
            group.bench_with_input(BenchmarkId::new(name, m), &phi, |b, phi| {
                b.iter(|| scheme.step_with(phi, exec).unwrap())
            });
        }
    }
    group.finish();
}

fn static_layer(c: &mut Criterion) {
    let big = fixtures::bigon();
    let flux = FluxLimiter::minimal(&big.network, &level_constants(&big.hamiltonians));
    let mut group = c.benchmark_group("static");
    for (name, exec) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)] {
        group.bench_function(name, |b| {
            b.iter(|| StaticAnalysis::with_execution(&big.network, &big.hamiltonians, &flux, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, step, static_layer);
criterion_main!(benches);
