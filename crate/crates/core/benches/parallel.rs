use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use fsmmint::encode::Completeness;
use fsmmint::harness::{brute_force_exists, make_instance, InstanceSpec};
use fsmmint::par::Execution;
use fsmmint::synth::{identify, Method};

fn exhaustive_search(c: &mut Criterion) {
    let spec = InstanceSpec {
        scenario_count: 3,
        total_length: 12,
        formula_count: 2,
        ..InstanceSpec::scaled(3, 2, 1, 11)
    };
    let inst = make_instance(&spec).expect("instance");
    let mut group = c.benchmark_group("exhaustive_search");
    group.sample_size(10);
    for exec in [Execution::Sequential, Execution::Parallel] {
        group.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &exec, |b, &exec| {
            b.iter(|| {
                // Size 2 cannot be solved by most draws, so the whole space is scanned.
                brute_force_exists(
                    2,
                    1,
                    black_box(&inst.scenarios),
                    &inst.formulas,
                    Completeness::AtLeastOne,
                    3,
                    exec,
                )
            })
        });
    }
    group.finish();
}

fn exponential_method(c: &mut Criterion) {
    let inst = make_instance(&InstanceSpec::scaled(3, 2, 2, 5)).expect("instance");
    let mut group = c.benchmark_group("exponential_method");
    group.sample_size(10);
    for exec in [Execution::Sequential, Execution::Parallel] {
        group.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &exec, |b, &exec| {
            b.iter(|| {
                let mut req = inst.request().with_method(Method::Exponential);
                req.execution = exec;
                identify(black_box(&req)).expect("identify")
            })
        });
    }
    group.finish();
}

criterion_group!(benches, exhaustive_search, exponential_method);
criterion_main!(benches);
