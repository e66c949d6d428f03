use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use natmap_core::barycenter::{radial_profile_full, solve_barycenter};
use natmap_core::groups::enumerate_orbit;
use natmap_core::hypgeo::busemann;
use natmap_core::natural_map::{build_lambda, eval_natural_map, jacobian};
use natmap_core::volume::vol_dev;
use natmap_core::{BoundaryPoint, Measure, Point};
use natmap_lab::load_scenario;

fn geometry(c: &mut Criterion) {
    let y = Point::from_polar(2.5, &[0.3, -0.4, 0.8]).unwrap();
    let theta = BoundaryPoint::from_direction(&[-0.2, 0.9, 0.1]).unwrap();
    c.bench_function("busemann", |b| {
        b.iter(|| busemann(black_box(&y), black_box(&theta)))
    });
    c.bench_function("radial_profile_n3", |b| {
        b.iter(|| radial_profile_full(3, black_box(1.7)))
    });
}

fn natural_map(c: &mut Criterion) {
    let scn = load_scenario("bundled:figure-eight").unwrap();
    let data = &scn.representation;
    let l = scn.natmap.word_length;
    c.bench_function("orbit_figure_eight_L4", |b| {
        b.iter(|| enumerate_orbit(data, black_box(4)).unwrap())
    });
    let orbit = enumerate_orbit(data, l).unwrap();
    let cfg = scn.natmap_config(0.1, l).unwrap();
    let x = Point::from_polar(0.4, &[0.3, -0.5, 0.2]).unwrap();
    let lambda: Measure = build_lambda(&x, &orbit, &cfg).unwrap().into();
    c.bench_function("barycenter_visual_mixture", |b| {
        b.iter(|| solve_barycenter(black_box(&lambda)).unwrap())
    });
    c.bench_function("natmap_eval", |b| {
        b.iter(|| eval_natural_map(black_box(&x), &orbit, &cfg).unwrap())
    });
    c.bench_function("natmap_jacobian", |b| {
        b.iter(|| jacobian(black_box(&x), &orbit, &cfg).unwrap())
    });
}

fn volume(c: &mut Criterion) {
    let scn = load_scenario("bundled:figure-eight").unwrap();
    let spec = scn.developing_spec().unwrap().unwrap();
    let mut g = c.benchmark_group("volume");
    g.sample_size(10);
    g.bench_function("vol_dev_figure_eight", |b| {
        b.iter(|| vol_dev(black_box(&spec)).unwrap())
    });
    g.finish();
}

criterion_group!(benches, geometry, natural_map, volume);
criterion_main!(benches);
