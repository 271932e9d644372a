use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use num_complex::Complex64;
use znwedge::{eta_closed_form, fusion_table_for, onshell_transform, ElementEvaluator, Sign};
use znwedge_bench::{left_test_function, model, request};

fn s_matrix(c: &mut Criterion) {
    let m = model(5);
    let s = m.component(2, 3).expect("component");
    let z = Complex64::new(0.4, 0.9);
    c.bench_function("s_component_n5", |b| b.iter(|| s.value(black_box(z))));
    c.bench_function("zn_model_build_n5", |b| b.iter(|| model(black_box(5))));
}

fn transforms(c: &mut Criterion) {
    let f = left_test_function();
    let z = Complex64::new(0.3, 1.1);
    c.bench_function("onshell_transform", |b| {
        b.iter(|| onshell_transform(black_box(&f), 1, 1.0, Sign::Plus, black_box(z)))
    });
}

fn elements(c: &mut Criterion) {
    let m = model(3);
    let table = eta_closed_form(&fusion_table_for(&m).expect("table"));
    let (req, rule) = request(&m, 0);
    let mut group = c.benchmark_group("weak_locality_level0");
    group.sample_size(10);
    group.bench_function("phi_orderings", |b| {
        b.iter(|| {
            ElementEvaluator::new(&m, &rule)
                .phi_orderings(black_box(&req))
                .expect("element")
        })
    });
    group.bench_function("chi_orderings", |b| {
        b.iter(|| {
            ElementEvaluator::new(&m, &rule)
                .chi_orderings(&table, black_box(&req))
                .expect("element")
        })
    });
    group.bench_function("residue_formula", |b| {
        b.iter(|| {
            ElementEvaluator::new(&m, &rule)
                .residue_formula(black_box(&req))
                .expect("element")
        })
    });
    group.finish();
}

criterion_group!(benches, s_matrix, transforms, elements);
criterion_main!(benches);
