//! Hot kernels under the data-parallel core and the sequential fallback.
//!
//! With the default `parallel` feature every kernel runs twice: on a one-thread
//! rayon pool and on the global pool. `cargo bench --no-default-features` runs the
//! plain sequential build under the `sequential` label.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use entire_ma::ball_grid::{BallGrid, GridSpec};
use entire_ma::density::DensitySpec;
use entire_ma::group::{cyclic, lemma1_epsilon};
use entire_ma::measure::{GradientImage, TestSet};
use entire_ma::plc::sampled_quadratic;
use std::hint::black_box;

fn modes() -> Vec<(&'static str, Option<usize>)> {
    if cfg!(feature = "parallel") {
        vec![("rayon-1-thread", Some(1)), ("rayon-global", None)]
    } else {
        vec![("sequential", None)]
    }
}

#[cfg(feature = "parallel")]
fn run_in<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    match threads {
        Some(t) => rayon::ThreadPoolBuilder::new().num_threads(t).build().expect("thread pool").install(f),
        None => f(),
    }
}

#[cfg(not(feature = "parallel"))]
fn run_in<R: Send>(_threads: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    f()
}

fn kernels(c: &mut Criterion) {
    let one = DensitySpec::constant(2, 1.0).unwrap();
    let phi = sampled_quadratic(2, 1.0, 1.0, 12);
    let grid = BallGrid::new(&one, 1.0, GridSpec::uniform(128)).unwrap();
    let c8 = cyclic(8).unwrap();

    let mut group = c.benchmark_group("kernels");
    group.sample_size(10);
    for (label, threads) in modes() {
        group.bench_with_input(BenchmarkId::new("assign", label), &threads, |b, &t| {
            b.iter(|| run_in(t, || black_box(grid.assign(&phi, true).masses.len())))
        });
        group.bench_with_input(BenchmarkId::new("gradient_image", label), &threads, |b, &t| {
            b.iter(|| {
                run_in(t, || {
                    let img = GradientImage::new(&phi, &one, 1.0, 200, None);
                    black_box(img.measure(&TestSet::centered_ball(2, 0.5)))
                })
            })
        });
        group.bench_with_input(BenchmarkId::new("legendre", label), &threads, |b, &t| {
            b.iter(|| run_in(t, || black_box(phi.legendre_transform(1.0, 60).len())))
        });
        group.bench_with_input(BenchmarkId::new("epsilon", label), &threads, |b, &t| {
            b.iter(|| run_in(t, || black_box(lemma1_epsilon(&c8, 4096))))
        });
    }
    group.finish();
}

criterion_group!(benches, kernels);
criterion_main!(benches);
