use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use leakcount::sat::{Engine, SolverConfig};
use leakcount_bench::random_3cnf;

fn random_3sat(c: &mut Criterion) {
    let mut g = c.benchmark_group("3sat-ratio-4.26");
    for vars in [20u32, 40] {
        let f = random_3cnf(vars as u64, vars, vars * 426 / 100);
        for (name, cfg) in [("learning", SolverConfig::default()), ("plain", SolverConfig::plain())] {
            g.bench_with_input(BenchmarkId::new(name, vars), &f, |b, f| {
                b.iter(|| {
                    let mut e = Engine::with_config(cfg.clone());
                    e.assert_term(f).unwrap();
                    e.check()
                })
            });
        }
    }
    g.finish();
}

criterion_group!(benches, random_3sat);
criterion_main!(benches);
