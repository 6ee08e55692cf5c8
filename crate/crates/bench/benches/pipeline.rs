use criterion::{criterion_group, criterion_main, BatchSize, BenchmarkId, Criterion};
use std::hint::black_box;

use msp_bench::{fixture_a, skewed_matrix};
use msp_core::{
    build_graph, chain_to_exponents, components, exponents_to_chain, mle_fit, swap_mcmc,
    verify_substitute, Corpus, ExponentialFamilyModel, FiniteSampler, ParamVector, SeededRng,
};

fn graph(c: &mut Criterion) {
    let mut group = c.benchmark_group("graph");
    for max_len in [6, 8] {
        let (_, pairs, domain) = fixture_a(max_len);
        group.bench_with_input(BenchmarkId::new("components", max_len), &max_len, |b, _| {
            b.iter(|| components(&domain, &build_graph(black_box(&domain), &pairs)))
        });
    }
    group.finish();
}

fn model(c: &mut Criterion) {
    let (_, pairs, domain) = fixture_a(7);
    c.bench_function("expfam/build_full len<=7", |b| {
        b.iter(|| ExponentialFamilyModel::build_full(black_box(&domain), &pairs).unwrap())
    });

    let model = ExponentialFamilyModel::build_full(&domain, &pairs).unwrap();
    let mut beta = model.zero_params();
    beta.free.iter_mut().for_each(|x| *x = -0.7);
    let p = model.to_measure(&beta);
    c.bench_function("verify/len<=7", |b| {
        b.iter(|| verify_substitute(black_box(&p), &pairs, &domain))
    });
}

fn inference(c: &mut Criterion) {
    let (dict, pairs, domain) = fixture_a(8);
    let c1 = msp_core::components_containing(
        &domain,
        &components(&domain, &build_graph(&domain, &pairs)),
        &[dict.parse("a c").unwrap(), dict.parse("c a").unwrap()],
    )
    .unwrap();
    let model = ExponentialFamilyModel::build(&domain, &pairs, &c1).unwrap();
    let truth = ParamVector::new(vec![-1.0; model.free_pairs().len()], vec![0.0; c1.len()]);
    let sampler = FiniteSampler::new(&model.to_measure(&truth)).unwrap();
    let mut rng = SeededRng::new(1);
    let corpus =
        Corpus::from_sentences((0..10_000).map(|_| sampler.sample(&mut rng).clone())).unwrap();
    c.bench_function("mle_fit/C1+C2 1e4 draws", |b| {
        b.iter(|| mle_fit(black_box(&corpus), &model, 1e-8, 500).unwrap())
    });

    let ex = model.exponents_from_params(&truth);
    let start = dict.parse("a c").unwrap();
    c.bench_function("swap_mcmc/1e4 steps", |b| {
        b.iter_batched(
            || SeededRng::new(7),
            |mut rng| swap_mcmc(&start, &ex, &domain, 10_000, &mut rng).unwrap(),
            BatchSize::SmallInput,
        )
    });
}

fn chain(c: &mut Criterion) {
    let mut group = c.benchmark_group("chain_round_trip");
    for n in [2, 5, 8] {
        let m = skewed_matrix(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| {
                let table = chain_to_exponents(black_box(&m), 4).unwrap();
                exponents_to_chain(&table, n, 0).unwrap()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, graph, model, inference, chain);
criterion_main!(benches);
