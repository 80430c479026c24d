use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use folkmetrics::partition::split_supertaggers;
use folkmetrics::similarity::{similarity_curve, Dimension};
use folkmetrics::spear::{spear_user_scores, SpearConfig};
use folkmetrics::taxonomy::{conditional_table, induce_forest};
use folkmetrics::{FolksonomyIndex, TimeGranularity};
use folkmetrics_bench::{corpus, index};

fn build_index(c: &mut Criterion) {
    let mut group = c.benchmark_group("index_build");
    for users in [2_000, 20_000] {
        let anns = corpus(users);
        group.throughput(Throughput::Elements(anns.len() as u64));
        group.bench_with_input(BenchmarkId::from_parameter(users), &anns, |b, anns| {
            b.iter(|| FolksonomyIndex::build(black_box(anns), TimeGranularity::Seconds, false))
        });
    }
    group.finish();
}

fn spear(c: &mut Criterion) {
    let idx = index(5_000).deduplicated();
    let config = SpearConfig { top_k: 200, min_users: 5, ..SpearConfig::default() };
    c.bench_function("spear_top200_tags", |b| b.iter(|| spear_user_scores(black_box(&idx), &config).unwrap()));
}

fn similarity(c: &mut Criterion) {
    let idx = index(20_000);
    let partition = split_supertaggers(&idx, 0.5).unwrap();
    let mut group = c.benchmark_group("similarity_curve");
    for dim in [Dimension::Tag, Dimension::Item] {
        group.bench_function(dim.to_string(), |b| {
            b.iter(|| similarity_curve(black_box(&idx), &partition, dim, None).unwrap())
        });
    }
    group.finish();
}

fn taxonomy(c: &mut Criterion) {
    let idx = index(5_000).deduplicated();
    let tags: Vec<_> = idx.tag_ids().filter(|&t| idx.tag_user_count(t) >= 5).collect();
    c.bench_function("conditional_table", |b| b.iter(|| conditional_table(black_box(&idx), &tags, 2)));
    let table = conditional_table(&idx, &tags, 2);
    c.bench_function("induce_forest", |b| b.iter(|| induce_forest(black_box(&table), 0.8).unwrap()));
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = build_index, spear, similarity, taxonomy
}
criterion_main!(benches);
