use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use specsheaf_bench::{frame_fixture, ks_poset, random_fixture, rng};
use specsheaf_core::{
    global_section_search, reconstruct_state, sampling, ClopenSubobject, ContextPoset, Measure, Tolerances,
};

fn poset_build(c: &mut Criterion) {
    let t = Tolerances::default();
    let mut group = c.benchmark_group("poset_build");
    for dim in [3, 4] {
        let f = random_fixture(dim, 40, 1);
        let contexts = f.poset.contexts().to_vec();
        group.bench_with_input(BenchmarkId::from_parameter(dim), &contexts, |b, contexts| {
            b.iter(|| ContextPoset::from_contexts(contexts.clone(), true, &t, &Default::default()).unwrap())
        });
    }
    group.finish();
}

fn daseinise(c: &mut Criterion) {
    let t = Tolerances::default();
    let f = random_fixture(4, 60, 2);
    c.bench_function("daseinise/dim4", |b| {
        b.iter(|| {
            for p in &f.projections {
                black_box(ClopenSubobject::daseinise(p, &f.poset, &t).unwrap());
            }
        })
    });
}

fn measure(c: &mut Criterion) {
    let f = random_fixture(4, 60, 3);
    let mu = Measure::from_state(&f.state, &f.poset).unwrap();
    let mut r = rng(4);
    let subs: Vec<_> = (0..32).map(|_| sampling::subobject(&mut r, &f.poset)).collect();
    c.bench_function("measure/evaluate", |b| {
        b.iter(|| {
            for s in &subs {
                black_box(mu.evaluate(s).unwrap());
            }
        })
    });
}

fn reconstruct(c: &mut Criterion) {
    let t = Tolerances::default();
    let mut group = c.benchmark_group("reconstruct");
    for dim in [3, 4] {
        let f = frame_fixture(dim, 5);
        let mu = Measure::from_state(&f.state, &f.poset).unwrap();
        group.bench_function(BenchmarkId::from_parameter(dim), |b| {
            b.iter(|| reconstruct_state(&mu, &f.projections, &f.poset, &t).unwrap())
        });
    }
    group.finish();
}

fn ks_search(c: &mut Criterion) {
    let t = Tolerances::default();
    let poset = ks_poset();
    c.bench_function("ks/cabello18", |b| {
        b.iter(|| global_section_search(&poset, 1_000_000, &t).unwrap())
    });
}

criterion_group!(benches, poset_build, daseinise, measure, reconstruct, ks_search);
criterion_main!(benches);
