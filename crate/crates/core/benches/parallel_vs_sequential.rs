use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use mdpde_core::robustness::{influence_report, GridPolicy};
use mdpde_core::sim::{run_scenario, Case, Scenario, SimFamily};
use mdpde_core::{data, fit, Execution, SolverOptions};

const MODES: [(&str, Execution); 2] = [("parallel", Execution::Parallel), ("sequential", Execution::Sequential)];

fn replications(c: &mut Criterion) {
    let mut group = c.benchmark_group("replications");
    group.sample_size(10);
    let scenarios = [
        ("poisson-I-n50", Scenario::published(SimFamily::Poisson, Case::I, 50)),
        ("logistic-IV-n100", Scenario::published(SimFamily::Logistic, Case::IV, 100)),
    ];
    for (label, s) in scenarios {
        let s = s.with_replications(32, 7);
        for (mode, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(label, mode), &s, |b, s| {
                b.iter(|| run_scenario(black_box(s), exec).unwrap())
            });
        }
    }
    group.finish();
}

fn influence_grid(c: &mut Criterion) {
    let mut group = c.benchmark_group("influence");
    let spec = data::preset("aids").unwrap().model().unwrap();
    let f = fit(&spec, 0.5, &SolverOptions::default()).unwrap();
    for (mode, exec) in MODES {
        group.bench_function(BenchmarkId::new("aids-alpha0.5", mode), |b| {
            b.iter(|| influence_report(&spec, &f, 20, &GridPolicy::Default, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, replications, influence_grid);
criterion_main!(benches);
