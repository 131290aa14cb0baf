//! Feature extraction and bound sweeps on one worker versus the full pool.
//!
//! Build with `--no-default-features` to time the purely sequential code path.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use frameshift::network::preset_scattering;
use frameshift::verify::{sweep_lipschitz, white_noise};
use frameshift::{extract, parallel, Grid, ModuleSequence};

fn image_net(n: usize) -> ModuleSequence {
    let cfg = format!(
        r#"{{"grid": {{"dim": 2, "n": {n}, "spacing": 1.0}}, "depth": 3,
            "layers": [{{"frame": {{"kind": "dir2d", "J": 3, "K": 8}},
                         "nonlinearity": "modulus", "pooling": "subsample:2"}}]}}"#
    );
    ModuleSequence::from_config(&serde_json::from_str(&cfg).unwrap(), std::path::Path::new(".")).unwrap()
}

fn workers() -> Vec<(&'static str, Option<usize>)> {
    let mut w = vec![("1-thread", Some(1))];
    if parallel::is_parallel() {
        w.push(("all-threads", None));
    }
    w
}

fn bench_extract(c: &mut Criterion) {
    let mut group = c.benchmark_group("extract");
    group.sample_size(10);
    for n in [64, 128] {
        let seq = image_net(n);
        let f = white_noise(*seq.input_grid(), 1);
        for (name, threads) in workers() {
            group.bench_with_input(BenchmarkId::new(name, n), &n, |b, _| {
                b.iter(|| parallel::with_threads(threads, || extract(&seq, &f).unwrap()))
            });
        }
    }
    let scat = preset_scattering(Grid::new(2, 64, 1.0).unwrap(), 3, 8, 2).unwrap();
    let f = white_noise(*scat.input_grid(), 2);
    for (name, threads) in workers() {
        group.bench_function(BenchmarkId::new(name, "scattering-64"), |b| {
            b.iter(|| parallel::with_threads(threads, || extract(&scat, &f).unwrap()))
        });
    }
    group.finish();
}

fn bench_sweep(c: &mut Criterion) {
    let mut group = c.benchmark_group("sweep_lipschitz");
    group.sample_size(10);
    let seq = image_net(64);
    for (name, threads) in workers() {
        group.bench_function(name, |b| {
            b.iter(|| parallel::with_threads(threads, || sweep_lipschitz(&seq, 8, 3, 0.25).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_extract, bench_sweep);
criterion_main!(benches);
