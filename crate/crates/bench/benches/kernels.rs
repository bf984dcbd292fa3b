use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use symplanar::billiard::{tangency, Orientation};
use symplanar::characteristics::{default_timestep, flow};
use symplanar::john::{john_ellipse, section};
use symplanar::symplectic::basis;
use symplanar::Vector;
use symplanar_bench::fixtures;

fn support(c: &mut Criterion) {
    let u = Vector::from_vec(vec![0.3, -0.8, 0.5, 0.1]);
    let mut group = c.benchmark_group("support");
    for (name, body) in fixtures() {
        group.bench_function(name, |b| b.iter(|| body.support(black_box(&u)).unwrap()));
    }
    group.finish();
}

fn characteristic_flow(c: &mut Criterion) {
    let mut group = c.benchmark_group("flow");
    group.sample_size(10);
    for (name, body) in fixtures() {
        let z0 = body.boundary_point(&Vector::from_vec(vec![1.0, 0.2, 0.4, -0.3])).unwrap();
        let dt = default_timestep(&body);
        group.bench_function(name, |b| b.iter(|| flow(&body, black_box(&z0), 7.0, dt).unwrap()));
    }
    group.finish();
}

fn outer_billiard_tangency(c: &mut Criterion) {
    let mut group = c.benchmark_group("tangency");
    for (name, body) in fixtures() {
        let b0 = body.boundary_point(&Vector::from_vec(vec![0.4, 1.0, -0.2, 0.5])).unwrap();
        let x = body.center() + (&b0 - body.center()) * 1.8;
        group.bench_function(name, |b| {
            b.iter(|| tangency(&body, black_box(&x), Orientation::Forward).unwrap())
        });
    }
    group.finish();
}

fn john(c: &mut Criterion) {
    let mut group = c.benchmark_group("john_ellipse");
    for (name, body) in fixtures() {
        let s = section(&body, body.center(), &basis(4, 0), &basis(4, 2), 256).unwrap();
        group.bench_function(name, |b| b.iter(|| john_ellipse(black_box(&s.polygon)).unwrap()));
    }
    group.finish();
}

criterion_group!(kernels, support, characteristic_flow, outer_billiard_tangency, john);
criterion_main!(kernels);
