use criterion::{black_box, criterion_group, criterion_main, Criterion};
use dissipa::cubegrid::{components, invariant_part, outer_approximation};
use dissipa::dynamics::{eqn1, integrate, EscapePolicy};
use dissipa::homology::{conley_index_one, homology};
use dissipa::{CellSet, MapOptions};
use dissipa_bench::square;

fn integrator(c: &mut Criterion) {
    let flow = eqn1();
    let policy = EscapePolicy::new(100.0).unwrap();
    c.bench_function("integrate eqn1 t=50", |b| {
        b.iter(|| integrate(&flow, 0.25, black_box(&[1.0, 0.5]), 50.0, &policy, 1e-6).unwrap())
    });
}

fn maps(c: &mut Criterion) {
    let flow = eqn1();
    let g = square(6.0, 128);
    let opts = MapOptions::new(0.5).bloat(1);
    let mut group = c.benchmark_group("grid");
    group.sample_size(10);
    group.bench_function("outer approximation 128x128", |b| {
        b.iter(|| outer_approximation(&flow, 0.5, &g, &opts).unwrap())
    });
    let map = outer_approximation(&flow, 0.5, &g, &opts).unwrap();
    let full = CellSet::full(&g);
    group.bench_function("invariant part 128x128", |b| b.iter(|| invariant_part(&map, black_box(&full)).unwrap()));
    let inv = invariant_part(&map, &full).unwrap();
    group.bench_function("components of the invariant part", |b| b.iter(|| components(black_box(&inv))));
    let origin = CellSet::covering(&g, |p| p[0].hypot(p[1]) < 0.3);
    let k = invariant_part(&map, &origin.collar(2)).unwrap();
    group.bench_function("conley index of the origin", |b| b.iter(|| conley_index_one(&map, black_box(&k), 2).unwrap()));
    group.finish();
}

fn homology_bench(c: &mut Criterion) {
    let g = square(6.0, 256);
    let ring = CellSet::covering(&g, |p| (p[0].hypot(p[1]) - 4.0).abs() < 0.05);
    c.bench_function("homology of a thin ring", |b| b.iter(|| homology(black_box(&ring)).unwrap()));
}

criterion_group!(benches, integrator, maps, homology_bench);
criterion_main!(benches);
