use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use convexq::body::SupportFunction;
use convexq::inequality::poincare_sphere;
use convexq::quermass::quermassintegrals;
use convexq::sphere::{build_rule, SphereField};
use convexq::suite::FieldSpec;
use convexq::Execution;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn bench_quermass(c: &mut Criterion) {
    let h = SupportFunction::ellipsoid_axes(&[2.0, 1.0, 0.7]).unwrap();
    let mut g = c.benchmark_group("quermassintegrals");
    for r in [32, 64] {
        for (name, mode) in MODES {
            let rule = build_rule(3, r).unwrap().with_execution(mode);
            g.bench_with_input(BenchmarkId::new(name, format!("{r}x{}", 2 * r)), &rule, |b, rule| {
                b.iter(|| quermassintegrals(black_box(&h), rule).unwrap())
            });
        }
    }
    g.finish();
}

fn bench_poincare(c: &mut Criterion) {
    let g4 = FieldSpec::Harmonic { coefficients: vec![0.0, 0.0, 0.0, 0.0, 1.0] }.build(3).unwrap();
    let h = SupportFunction::perturbed_ball(3, 0.05, &g4).unwrap();
    let phi: SphereField = FieldSpec::Random { seed: 7, max_degree: 4, scale: 1.0 }.build(3).unwrap();
    let mut g = c.benchmark_group("poincare_sphere");
    g.sample_size(20);
    for (name, mode) in MODES {
        let rule = build_rule(3, 64).unwrap().with_execution(mode);
        g.bench_function(BenchmarkId::new(name, "64x128"), |b| {
            b.iter(|| poincare_sphere(1, black_box(&h), &phi, &rule, 1e-6).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, bench_quermass, bench_poincare);
criterion_main!(benches);
