use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;

use hashtopic::hashgraph::{build_graph, louvain, ModularityParams};
use hashtopic::labeler::ConstraintMatrix;
use hashtopic::tsnmf::{fit, SolverConfig};
use hashtopic::vectorizer::{build_vocabulary, count_matrix, tfidf};
use hashtopic_bench::planted_documents;

fn bench_vectorize(c: &mut Criterion) {
    let docs = planted_documents(2000, 1);
    c.bench_function("tfidf_2000_docs", |b| {
        b.iter(|| {
            let vocab = build_vocabulary(black_box(&docs), 5).unwrap();
            tfidf(&count_matrix(&docs, &vocab)).unwrap()
        })
    });
}

fn bench_louvain(c: &mut Criterion) {
    let docs = planted_documents(5000, 2);
    let graph = build_graph(&docs, 1);
    let params = ModularityParams::new(1.0).unwrap();
    c.bench_function("louvain_planted_tags", |b| b.iter(|| louvain(black_box(&graph), &params, 7)));
}

fn bench_fit(c: &mut Criterion) {
    let docs = planted_documents(2000, 3);
    let vocab = build_vocabulary(&docs, 5).unwrap();
    let x = tfidf(&count_matrix(&docs, &vocab)).unwrap();
    let cfg = SolverConfig {
        k: 10,
        max_iter: 20,
        tol: f64::MIN_POSITIVE,
        ..SolverConfig::default()
    };
    let mask = ConstraintMatrix::all_ones(x.rows(), cfg.k);
    let mut group = c.benchmark_group("tsnmf");
    group.sample_size(10);
    group.bench_function("fit_20_iters_k10", |b| {
        b.iter_batched(|| (), |_| fit(&x, &mask, &cfg).unwrap(), BatchSize::SmallInput)
    });
    group.finish();
}

criterion_group!(benches, bench_vectorize, bench_louvain, bench_fit);
criterion_main!(benches);
