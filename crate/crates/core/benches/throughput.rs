//! Parallel (rayon global pool) versus single-thread throughput of the
//! data-parallel kernels. Without the `parallel` feature only the
//! sequential variant runs.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use holofit::body_model::{default_skeleton, ParamLayout};
use holofit::metrics::{dtw_mje, JointSequence};
use holofit::objective::{default_limits, Objective, ObjectiveWeights};
use holofit::quantize::{quantize_nearest, Codebook, CodebookKind};
use holofit::synth::{synth_clip, SynthOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Runs a workload either in the current pool or pinned to one thread.
type Runner = Box<dyn Fn(&mut (dyn FnMut() + Send))>;

fn variants() -> Vec<(&'static str, Runner)> {
    let mut v: Vec<(&'static str, Runner)> = Vec::new();
    #[cfg(feature = "parallel")]
    {
        v.push(("parallel", Box::new(|f: &mut (dyn FnMut() + Send)| f())));
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .expect("1-thread pool");
        v.push((
            "sequential",
            Box::new(move |f: &mut (dyn FnMut() + Send)| pool.install(f)),
        ));
    }
    #[cfg(not(feature = "parallel"))]
    v.push(("sequential", Box::new(|f: &mut (dyn FnMut() + Send)| f())));
    v
}

fn random_rows(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect()
}

fn objective(c: &mut Criterion) {
    let model = default_skeleton();
    let opts = SynthOptions {
        frames: 30,
        ..SynthOptions::default()
    };
    let clip = synth_clip(&model, &opts, 0).expect("synthetic clip");
    let limits = default_limits(&model);
    let obj = Objective::new(
        &model,
        &clip.camera,
        Some(&clip.noisy),
        clip.motion.len(),
        Some(&limits),
        ObjectiveWeights::default(),
    )
    .expect("objective");
    let x = ParamLayout::new(&model, clip.motion.len()).pack(&clip.init);
    let mut group = c.benchmark_group("objective_evaluate_T30");
    for (name, run) in variants() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                run(&mut || {
                    black_box(obj.evaluate(black_box(&x), true).expect("evaluate"));
                })
            })
        });
    }
    group.finish();
}

fn quantize(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let book = Codebook::new(random_rows(&mut rng, 512, 64), CodebookKind::Motion).expect("codebook");
    let feats = random_rows(&mut rng, 4096, 64);
    let mut group = c.benchmark_group("quantize_4096x512x64");
    for (name, run) in variants() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                run(&mut || {
                    black_box(quantize_nearest(black_box(&feats), &book).expect("quantize"));
                })
            })
        });
    }
    group.finish();
}

fn dtw(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut seq = |n: usize| JointSequence {
        fps: 30.0,
        joints: Vec::new(),
        frames: (0..n)
            .map(|_| {
                (0..50)
                    .map(|_| [0, 1, 2].map(|_| rng.random_range(-1.0..1.0)))
                    .collect()
            })
            .collect(),
    };
    let (a, b) = (seq(300), seq(280));
    let mut group = c.benchmark_group("dtw_mje_300x280x50");
    for (name, run) in variants() {
        group.bench_function(BenchmarkId::from_parameter(name), |bench| {
            bench.iter(|| {
                run(&mut || {
                    black_box(dtw_mje(black_box(&a), &b).expect("dtw"));
                })
            })
        });
    }
    group.finish();
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = objective, quantize, dtw
}
criterion_main!(benches);
