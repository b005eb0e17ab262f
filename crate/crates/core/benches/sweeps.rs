//! Parallel vs sequential sweep evaluation.
//!
//! Run with `cargo bench -p nla-core`. The parallel group only exists when
//! the `parallel` feature (default) is enabled; compare against
//! `cargo bench -p nla-core --no-default-features` for the fallback path.

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use nla_core::sweep::{preset, run_sequential, SweepSpec};

fn specs() -> Vec<(&'static str, SweepSpec)> {
    vec![
        ("epr_channel_scan", preset("fig3").unwrap()),
        ("equivalent_circuit_scan", preset("fig8").unwrap()),
        ("fidelity_scan_small", {
            match preset("fig5").unwrap() {
                SweepSpec::FidelityScan {
                    t_values,
                    v_e,
                    mut chi_targets,
                    opt_grid,
                } => {
                    chi_targets.count = 5;
                    SweepSpec::FidelityScan {
                        t_values,
                        v_e,
                        chi_targets,
                        opt_grid,
                    }
                }
                _ => unreachable!(),
            }
        }),
    ]
}

fn bench_sequential(c: &mut Criterion) {
    let mut group = c.benchmark_group("sequential");
    for (name, spec) in specs() {
        group.bench_function(name, |b| {
            b.iter(|| run_sequential(black_box(&spec)).unwrap())
        });
    }
    group.finish();
}

#[cfg(feature = "parallel")]
fn bench_parallel(c: &mut Criterion) {
    use nla_core::sweep::run_parallel;
    let mut group = c.benchmark_group("parallel");
    for (name, spec) in specs() {
        group.bench_function(name, |b| {
            b.iter(|| run_parallel(black_box(&spec), None).unwrap())
        });
    }
    group.finish();
}

#[cfg(feature = "parallel")]
criterion_group!(benches, bench_sequential, bench_parallel);
#[cfg(not(feature = "parallel"))]
criterion_group!(benches, bench_sequential);
criterion_main!(benches);
