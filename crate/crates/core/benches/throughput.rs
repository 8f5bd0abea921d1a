//! Parallel versus single-threaded throughput.
//!
//! With the default `parallel` feature every benchmark runs twice: on the
//! global rayon pool and inside a one-thread pool. Build with
//! `--no-default-features` to measure the sequential code path itself.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use segscore::metrics::Comparison;
use segscore::overlap::build_overlap_table;
use segscore::simulator::{gen_scene, simulate, DegradationMode, SimulationConfig};
use segscore::{evaluate, evaluate_many, Canvas, EvalOptions, InstanceSet};

fn scene(seed: u64, objects: usize) -> (InstanceSet, InstanceSet) {
    let c = Canvas::new(512, 512).unwrap();
    let gt = gen_scene(c, objects, (200, 800), seed).unwrap();
    let mut pred = InstanceSet::empty(c);
    for (k, m) in gt.instances().iter().enumerate() {
        let shift = (k % 5) as isize - 2;
        pred.push(m.translated(c, shift, -shift).unwrap_or_else(|_| m.clone()));
    }
    (gt, pred)
}

/// Runs `f` under each available execution mode.
fn modes(c: &mut Criterion, group: &str, mut f: impl FnMut() + Send) {
    let mut g = c.benchmark_group(group);
    #[cfg(feature = "parallel")]
    {
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        g.bench_function(BenchmarkId::from_parameter("rayon"), |b| b.iter(&mut f));
        g.bench_function(BenchmarkId::from_parameter("one-thread"), |b| {
            b.iter(|| single.install(&mut f))
        });
    }
    #[cfg(not(feature = "parallel"))]
    g.bench_function(BenchmarkId::from_parameter("sequential"), |b| {
        b.iter(&mut f)
    });
    g.finish();
}

fn benches(c: &mut Criterion) {
    let (gt, pred) = scene(1, 200);
    modes(c, "overlap_table_200", || {
        black_box(build_overlap_table(&pred, &gt).unwrap());
    });

    let cmp = Comparison::new(&pred, &gt).unwrap();
    let options = EvalOptions::default();
    modes(c, "evaluate_all_metrics_200", || {
        black_box(segscore::eval::evaluate_comparison(&cmp, &options).unwrap());
    });
    modes(c, "evaluate_from_masks_200", || {
        black_box(evaluate(&gt, &pred, &options).unwrap());
    });

    let batch: Vec<_> = (0..16).map(|s| scene(100 + s, 60)).collect();
    modes(c, "evaluate_many_16x60", || {
        black_box(evaluate_many(&batch, &options));
    });

    let base = gen_scene(Canvas::new(512, 512).unwrap(), 30, (200, 800), 7).unwrap();
    let config = SimulationConfig {
        fraction: 0.02,
        ..SimulationConfig::new(DegradationMode::PixelRemoval, 20, 7)
    };
    modes(c, "pixel_removal_trace_30x20", || {
        black_box(simulate(&base, &config).unwrap());
    });
}

criterion_group! {
    name = throughput;
    config = Criterion::default().sample_size(20);
    targets = benches
}
criterion_main!(throughput);
