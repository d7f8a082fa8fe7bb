//! Compares the data-parallel node map against its sequential twin on the
//! real per-node workload (the inner radial integral), plus an end-to-end
//! seminorm evaluation. With the default `parallel` feature the first group
//! shows the rayon speedup on multi-core machines; results are bit-identical
//! either way.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use fracnorm::{
    gauss_legendre_unit, map_nodes, map_nodes_serial, sample_domain, seminorm_p, sphere_rule,
    Domain, Point, QuadratureConfig, SamplingPlan, SeminormSpec, TestFunction, Variant,
};

struct Workload {
    nodes: Vec<(Point, f64)>,
    domain: Domain,
    f: TestFunction,
    sphere: Vec<(Point, f64)>,
    radial: Vec<(f64, f64)>,
    spec: SeminormSpec,
}

fn workload() -> Workload {
    let domain = Domain::unit_ball(2).unwrap();
    let f = TestFunction::GaussianBump {
        center: Point::new(&[0.2, -0.1]).unwrap(),
        width: 0.6,
    };
    let nodes = sample_domain(&domain, &SamplingPlan::grid(48), 0).unwrap();
    let sphere = sphere_rule(2, 32).unwrap();
    let radial = gauss_legendre_unit(16);
    let spec = SeminormSpec::new(0.875, 2.0, 2.0, 0.5, f64::INFINITY, Variant::Tilde).unwrap();
    Workload {
        nodes,
        domain,
        f,
        sphere,
        radial,
        spec,
    }
}

fn per_node_value(w: &Workload, k: usize) -> f64 {
    use fracnorm::quadrature::{inner_integral, Seg};
    let (x, weight) = &w.nodes[k];
    let dist = -w.domain.signed_distance(x).unwrap();
    let delta = w.spec.tau * dist;
    let eval = |y: &Point| Ok(w.f.eval(y));
    let member = |_: &Point| true;
    let inner = inner_integral(
        x,
        w.f.eval(x),
        &eval,
        &member,
        &[Seg::Singular { upper: delta }],
        w.spec.s,
        w.spec.q,
        &w.sphere,
        &w.radial,
    )
    .unwrap();
    weight * inner
}

fn bench_node_map(c: &mut Criterion) {
    let w = workload();
    let n = w.nodes.len();
    let mut group = c.benchmark_group("node_map");
    group.sample_size(10);
    group.bench_function("parallel", |b| {
        b.iter_batched(
            || (),
            |_| map_nodes(n, |k| per_node_value(&w, k)),
            BatchSize::SmallInput,
        )
    });
    group.bench_function("serial", |b| {
        b.iter_batched(
            || (),
            |_| map_nodes_serial(n, |k| per_node_value(&w, k)),
            BatchSize::SmallInput,
        )
    });
    group.finish();
}

fn bench_seminorm(c: &mut Criterion) {
    let domain = Domain::unit_ball(2).unwrap();
    let f = TestFunction::GaussianBump {
        center: Point::new(&[0.2, -0.1]).unwrap(),
        width: 0.6,
    };
    let spec = SeminormSpec::new(0.875, 2.0, 2.0, 0.5, f64::INFINITY, Variant::Tilde).unwrap();
    let plan = SamplingPlan::grid(32);
    let quad = QuadratureConfig {
        sphere_order: 24,
        radial_nodes: 12,
    };
    let mut group = c.benchmark_group("seminorm_p");
    group.sample_size(10);
    group.bench_function("tilde_disk_gaussian", |b| {
        b.iter(|| seminorm_p(&domain, &f, &spec, &plan, &quad, 0).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_node_map, bench_seminorm);
criterion_main!(benches);
