use atlplus::checker::{random_instance, Limits};
use atlplus::{model_check, parse_formula, Cgm, Engine};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

const PSI: &str = "<<a1>> ((!(X p3) & <<a2>> X p1) | (F p1 & (!p1) U p2))";

fn fixtures(c: &mut Criterion) {
    let cases = [
        ("mstar", PSI),
        ("m3", "<<a2>>(G p1 | F p2)"),
        ("hub", "<<a>> (F p & F q)"),
    ];
    let mut group = c.benchmark_group("fixtures");
    for (model, text) in cases {
        let m = Cgm::fixture(model).unwrap();
        let phi = parse_formula(text).unwrap();
        for engine in Engine::ALL {
            if engine == Engine::Fixpoint {
                continue;
            }
            group.bench_with_input(BenchmarkId::new(engine.name(), model), &phi, |b, phi| {
                b.iter(|| model_check(&m, phi, engine).unwrap())
            });
        }
    }
    group.finish();
}

fn random_models(c: &mut Criterion) {
    let limits = Limits::default();
    let instances: Vec<_> = (0..20).map(|s| random_instance(s, limits)).collect();
    let mut group = c.benchmark_group("random");
    for engine in [Engine::Buchi, Engine::Bounded, Engine::StatusOracle] {
        group.bench_function(engine.name(), |b| {
            b.iter(|| {
                for (m, phi) in &instances {
                    let _ = model_check(m, phi, engine);
                }
            })
        });
    }
    group.finish();
}

criterion_group!(benches, fixtures, random_models);
criterion_main!(benches);
