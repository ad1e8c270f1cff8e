use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use riskpath::decoders::{hybrid_decode, kblock_pvd_decode, pmap_decode, rabiner_block_decode, viterbi_decode};
use riskpath::fixtures::random_categorical_model;
use riskpath::model::sample_trajectory;
use riskpath::transform::{transformed_forward_backward, Exponent};
use riskpath::{forward_backward, RiskWeights};

fn inference(c: &mut Criterion) {
    let mut group = c.benchmark_group("forward_backward");
    for horizon in [100, 1000, 10_000] {
        let model = random_categorical_model(1, 4, 6, 0.0);
        let (_, obs) = sample_trajectory(&model, horizon, 2).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(horizon), &obs, |b, obs| {
            b.iter(|| forward_backward(black_box(&model), black_box(obs)).unwrap())
        });
    }
    group.finish();
}

fn decoders(c: &mut Criterion) {
    let model = random_categorical_model(3, 4, 6, 0.0);
    let (_, obs) = sample_trajectory(&model, 1000, 4).unwrap();
    let summary = forward_backward(&model, &obs).unwrap();
    let weights = RiskWeights::new(1.0, 0.5, 0.2, 0.1, 0.5, 0.0).unwrap();
    let mut group = c.benchmark_group("decode_T1000_K4");
    group.bench_function("viterbi", |b| b.iter(|| viterbi_decode(&model, &summary).unwrap()));
    group.bench_function("pmap", |b| b.iter(|| pmap_decode(&model, &summary).unwrap()));
    group.bench_function("hybrid", |b| b.iter(|| hybrid_decode(&model, &summary, &weights).unwrap()));
    group.bench_function("kblock_5", |b| b.iter(|| kblock_pvd_decode(&model, &summary, 5).unwrap()));
    group.bench_function("rabiner_3", |b| b.iter(|| rabiner_block_decode(&model, &summary, 3).unwrap()));
    group.finish();
}

fn transform(c: &mut Criterion) {
    let model = random_categorical_model(5, 4, 6, 0.0);
    let (_, obs) = sample_trajectory(&model, 1000, 6).unwrap();
    let mut group = c.benchmark_group("power_transform_T1000");
    for (name, q) in [("q2", Exponent::Finite(2.0)), ("qinf", Exponent::Infinity)] {
        for rescaled in [false, true] {
            let id = format!("{name}_{}", if rescaled { "rescaled" } else { "plain" });
            group.bench_function(id, |b| b.iter(|| transformed_forward_backward(&model, &obs, q, rescaled).unwrap()));
        }
    }
    group.finish();
}

criterion_group!(benches, inference, decoders, transform);
criterion_main!(benches);
