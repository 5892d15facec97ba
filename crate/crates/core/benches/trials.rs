use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use wiretap_core::harness::{self, run_experiment_with};
use wiretap_core::metrics::estimate_dosa_montecarlo_with;
use wiretap_core::{Exec, SeedStream};

const MODES: [(&str, Exec); 2] = [
    ("sequential", Exec::Sequential),
    ("parallel", Exec::Parallel),
];

fn keyless(c: &mut Criterion) {
    let mut cfg = harness::preset("table2").unwrap();
    cfg.grid.error_floor = vec![0.2];
    cfg.grid.trial_count = vec![32];
    cfg.grid.q = vec![20];
    let mut group = c.benchmark_group("keyless_trials");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| run_experiment_with(&cfg, exec).unwrap())
        });
    }
    group.finish();
}

fn nbkg(c: &mut Criterion) {
    let mut cfg = harness::preset("nbkg-sweep").unwrap();
    cfg.grid.snr_db = vec![25.0];
    cfg.grid.trial_count = vec![256];
    cfg.nbkg.dosa_samples = 0;
    let mut group = c.benchmark_group("nbkg_trials");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| run_experiment_with(&cfg, exec).unwrap())
        });
    }
    group.finish();
}

fn dosa_mc(c: &mut Criterion) {
    let seed = SeedStream::new(1, "bench");
    let mut group = c.benchmark_group("dosa_montecarlo");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| estimate_dosa_montecarlo_with(1e3, 200_000, &seed, 0.5, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, keyless, nbkg, dosa_mc);
criterion_main!(benches);
