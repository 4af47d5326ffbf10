use std::hint::black_box;

use bellscope::ineq::{catalog, CatalogId};
use bellscope::nmbqc::{self, PMatrix};
use bellscope::qopt::{self, QoptOptions};
use bellscope::{ffun, loophole, poly, sym, Caps, FiniteFunction, Scenario};
use criterion::{criterion_group, criterion_main, Criterion};

fn hulls(c: &mut Criterion) {
    let caps = Caps::default();
    let mut g = c.benchmark_group("hull");
    g.sample_size(10);
    for (n, cc, d) in [(2, 2, 2), (2, 2, 3), (2, 3, 2), (3, 2, 2), (2, 2, 4)] {
        let s = Scenario::new(n, cc, d).unwrap();
        g.bench_function(format!("lhv_polytope {s}"), |b| b.iter(|| poly::lhv_polytope(black_box(s), &caps).unwrap()));
    }
    g.finish();
}

fn orbits(c: &mut Criterion) {
    let caps = Caps::default();
    let s = Scenario::new(3, 2, 2).unwrap();
    let facets = poly::lhv_polytope(s, &caps).unwrap().facets.unwrap();
    c.bench_function("orbits (3,2,2)", |b| b.iter(|| sym::orbits_linear(black_box(&facets), s, &caps).unwrap()));
}

fn quantum(c: &mut Criterion) {
    let caps = Caps::default();
    let mut g = c.benchmark_group("quantum");
    g.sample_size(10);
    let o = QoptOptions { restarts: 16, ..QoptOptions::default() };
    let chsh = catalog(CatalogId::Chsh, &caps).unwrap();
    g.bench_function("ww chsh", |b| b.iter(|| qopt::ww_bound(black_box(&chsh), &o).unwrap()));
    let mermin = catalog(CatalogId::MerminKlyshko(5), &caps).unwrap();
    g.bench_function("ww mermin-klyshko(5)", |b| b.iter(|| qopt::ww_bound(black_box(&mermin), &o).unwrap()));
    let cglmp = catalog(CatalogId::Cglmp(3), &caps).unwrap();
    g.bench_function("mbs cglmp(3)", |b| b.iter(|| qopt::mbs_bound(black_box(&cglmp), &o).unwrap()));
    g.finish();
}

fn functions(c: &mut Criterion) {
    let caps = Caps::default();
    let s = Scenario::new(3, 3, 3).unwrap();
    let f = FiniteFunction::from_fn(s, |x| (x[0] * x[1] + x[2] * x[2]) % 3);
    c.bench_function("classify (3,3,3)", |b| b.iter(|| ffun::classify(black_box(&f))));
    c.bench_function("max_overlap (3,3,3)", |b| b.iter(|| ffun::max_overlap(black_box(&f), None, &caps).unwrap()));
}

fn nmbqc_and_loophole(c: &mut Criterion) {
    let nand = FiniteFunction::from_fn(Scenario::new(3, 2, 2).unwrap(), |x| 1 ^ x.iter().product::<usize>());
    let p = PMatrix::from_masks(3, &(1..8).collect::<Vec<_>>()).unwrap();
    c.bench_function("decide nand3 n=7", |b| b.iter(|| nmbqc::decide_deterministic(black_box(&p), &nand).unwrap()));
    c.bench_function("mk threshold n=75", |b| b.iter(|| loophole::mk_threshold(black_box(75)).unwrap()));
    let mut g = c.benchmark_group("rules");
    g.sample_size(10);
    g.bench_function("exhaustive LOI n=3", |b| b.iter(|| loophole::exhaustive_linear_rules(black_box(3), true).unwrap()));
    g.finish();
}

criterion_group!(benches, hulls, orbits, quantum, functions, nmbqc_and_loophole);
criterion_main!(benches);
