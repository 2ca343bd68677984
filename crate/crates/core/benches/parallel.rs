use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use latcrit::catalog::load_catalog;
use latcrit::enumerate::{layer_moments, DEFAULT_BUDGET};
use latcrit::height::{grad_f_form, SumOptions};
use latcrit::manifold::RealForm;
use latcrit::modular::{fully_critical, FullyCriticalOptions};
use latcrit::rational::rat;
use latcrit::Exec;

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn enumeration(c: &mut Criterion) {
    let catalog = load_catalog().unwrap();
    let q = catalog.get("ste10a").unwrap().descriptor.gram.double();
    let mut group = c.benchmark_group("layer_moments/ste10a");
    group.sample_size(10);
    for (label, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(label), &exec, |b, &exec| {
            b.iter(|| layer_moments(black_box(&q), &rat(120), exec, DEFAULT_BUDGET).unwrap())
        });
    }
    group.finish();
}

fn certification(c: &mut Criterion) {
    let catalog = load_catalog().unwrap();
    let d = catalog.get("std20").unwrap().descriptor.clone();
    let mut group = c.benchmark_group("fully_critical/std20");
    group.sample_size(10);
    for (label, exec) in MODES {
        let opts = FullyCriticalOptions { exec, ..Default::default() };
        group.bench_with_input(BenchmarkId::from_parameter(label), &opts, |b, opts| {
            b.iter(|| fully_critical(black_box(&d), opts).unwrap())
        });
    }
    group.finish();
}

fn gradient(c: &mut Criterion) {
    let catalog = load_catalog().unwrap();
    let form = RealForm::normalized(&catalog.get("stc12").unwrap().descriptor.gram);
    let mut group = c.benchmark_group("gradient/stc12");
    group.sample_size(10);
    for (label, exec) in MODES {
        let opts = SumOptions { exec, ..Default::default() };
        group.bench_with_input(BenchmarkId::from_parameter(label), &opts, |b, opts| {
            b.iter(|| grad_f_form(black_box(&form), opts).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, enumeration, certification, gradient);
criterion_main!(benches);
