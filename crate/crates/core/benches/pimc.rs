use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use sbeq::pimc::{estimate, PimcSettings};
use sbeq::{BathParams, Execution, ModelParams, SpectralDensity};

fn parallel_vs_sequential(c: &mut Criterion) {
    let model = ModelParams::new(1.0, 3.0, 1.0).unwrap();
    let bath: SpectralDensity = BathParams::new(10.0, 5.0).unwrap().into();
    let mut group = c.benchmark_group("pimc_estimate");
    group.sample_size(10);
    for (name, execution) in [("parallel", Execution::Parallel), ("sequential", Execution::Sequential)] {
        let settings = PimcSettings {
            steps: 128,
            n_samples: 20_000,
            seed: 1,
            execution,
            ..Default::default()
        };
        group.bench_with_input(BenchmarkId::new(name, settings.n_samples), &settings, |b, s| {
            b.iter(|| estimate(&model, &bath, s).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, parallel_vs_sequential);
criterion_main!(benches);
