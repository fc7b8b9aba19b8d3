use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use polent::criteria::opt_combo;
use polent::entangle::{input_covariance, optimized_direction_map, optimized_output_covariance, BeamSplitterSpec};
use polent::gaussian::{mc_validate_with, sample_covariance_with, Execution, MCConfig};
use polent::stokes::{DarkPlaneAngle, PolSqueezedSource};

fn modes() -> Vec<(&'static str, Execution)> {
    let mut m = vec![("sequential", Execution::Sequential)];
    #[cfg(feature = "parallel")]
    m.push(("parallel", Execution::Parallel));
    m
}

fn bench_mc(c: &mut Criterion) {
    let theta = DarkPlaneAngle::from_degrees(4.5);
    let a = PolSqueezedSource::from_db(-4.2, 19.7, theta, 1.0).unwrap();
    let b = PolSqueezedSource::from_db(-4.0, 19.6, theta, 1.0).unwrap();
    let bs = BeamSplitterSpec::new(0.521).unwrap();
    let input = input_covariance(&a, &b);
    let map = optimized_direction_map(&bs).unwrap();
    let out = optimized_output_covariance(&a, &b, &bs).unwrap();
    let w = opt_combo().with_gain(1.02).unwrap().weights(&out).unwrap();

    let mut group = c.benchmark_group("mc_validate");
    group.sample_size(10);
    for samples in [100_000usize, 1_000_000] {
        let mc = MCConfig::new(samples, 1).unwrap();
        for (name, exec) in modes() {
            group.bench_with_input(BenchmarkId::new(name, samples), &mc, |bch, &mc| {
                bch.iter(|| mc_validate_with(&input, &map, &w, mc, exec).unwrap())
            });
        }
    }
    group.finish();

    let mut group = c.benchmark_group("sample_covariance");
    group.sample_size(10);
    let mc = MCConfig::new(200_000, 1).unwrap();
    for (name, exec) in modes() {
        group.bench_function(name, |bch| bch.iter(|| sample_covariance_with(&input, &map, mc, exec).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, bench_mc);
criterion_main!(benches);
