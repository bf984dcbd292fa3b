use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use rand::Rng;
use rand_distr::StandardNormal;

use super::*;
use crate::rng::stream_rng;
use crate::symplectic::{basis, random_affine_symplectic};

fn ball() -> ConvexBody {
    ConvexBody::ball(2).unwrap()
}

fn ellipsoid(a: &[f64]) -> ConvexBody {
    ConvexBody::ellipsoid_from_coefficients(a).unwrap()
}

fn v4(a: [f64; 4]) -> Vector {
    Vector::from_vec(a.to_vec())
}

/// Vertex `k` of the unit-ball orbit from `x`: rotation by
/// `-2 arccos(1/|x|)` per step in the complex line of `x`.
fn circle_vertex(x: &Vector, k: usize) -> Vector {
    let theta = 2.0 * (1.0 / x.norm()).acos() * k as f64;
    x * theta.cos() - apply_j(x) * theta.sin()
}

fn check_step_invariants(body: &ConvexBody, tr: &OuterBilliardTrajectory) {
    for (i, z) in tr.tangencies.iter().enumerate() {
        let x = &tr.vertices[i];
        let y = &tr.vertices[i + 1];
        assert!((((x + y) * 0.5) - z).norm() <= 1e-8);
        assert!((body.value(z).unwrap() - 1.0).abs() <= 1e-8);
        let w = body.frame_at(z).unwrap().char_dir;
        let d = (x - z).normalize();
        let angle = (&d - &w * d.dot(&w)).norm().atan2(d.dot(&w));
        let expected = if tr.orientation == Orientation::Forward { 0.0 } else { PI };
        assert!((angle - expected).abs() <= 1e-8, "angle {angle}");
    }
}

#[test]
fn ball_tangency_matches_circle_geometry() {
    let x = basis(4, 0) * 2.0;
    let tan = tangency(&ball(), &x, Orientation::Forward).unwrap();
    let expected = v4([0.5, -(3f64.sqrt()) / 2.0, 0.0, 0.0]);
    assert!((&tan.point - expected).norm() < 1e-10);
    assert!((tan.t - 3f64.sqrt()).abs() < 1e-10);
    let y = step(&ball(), &x, Orientation::Forward).unwrap();
    assert!((&y - v4([-1.0, -(3f64.sqrt()), 0.0, 0.0])).norm() < 1e-10);
    assert!((y.norm() - 2.0).abs() < 1e-12);
    let y3 = step(&ball(), &step(&ball(), &y, Orientation::Forward).unwrap(), Orientation::Forward).unwrap();
    assert!((y3 - x).norm() < 1e-8);
}

#[test]
fn ball_tangency_is_orthogonal_to_radius() {
    let mut rng = stream_rng(3, 0);
    for _ in 0..50 {
        let u = Vector::from_fn(4, |_, _| rng.sample(StandardNormal)).normalize();
        let x = u * rng.random_range(1.01..5.0);
        let tan = tangency(&ball(), &x, Orientation::Forward).unwrap();
        assert!((tan.point.dot(&x) - 1.0).abs() < 1e-10);
        assert!((tan.point.norm() - 1.0).abs() < 1e-10);
        assert!(tan.t > 0.0);
    }
}

#[test]
fn tangency_commutes_with_symplectic_maps() {
    let base = ConvexBody::smoothed_polydisc(4, vec![1.0, 0.8], Vector::zeros(4)).unwrap();
    let map = random_affine_symplectic(4, 21, 0.4).unwrap();
    let image = ConvexBody::transformed(base.clone(), map.clone()).unwrap();
    let mut rng = stream_rng(4, 0);
    for _ in 0..20 {
        let x = Vector::from_fn(4, |_, _| rng.sample(StandardNormal)).normalize() * 2.5;
        let a = tangency(&base, &x, Orientation::Forward).unwrap();
        let b = tangency(&image, &map.apply(&x), Orientation::Forward).unwrap();
        assert!((map.apply(&a.point) - &b.point).norm() <= 1e-8);
    }
}

#[test]
fn hard_tangencies_converge() {
    let egg = ConvexBody::egg(v4([1.0, 0.5, -0.3, 0.8]), 0.3, Vector::zeros(4)).unwrap();
    let flat = ConvexBody::smoothed_polydisc(16, vec![1.0, 0.6], v4([0.5, 0.0, -1.0, 2.0])).unwrap();
    let mut rng = stream_rng(5, 0);
    for body in [egg, flat] {
        for _ in 0..30 {
            let d = Vector::from_fn(4, |_, _| rng.sample(StandardNormal));
            let b = body.boundary_point(&d).unwrap();
            for factor in [1.0 + 1e-5, 1.3, 20.0] {
                let x = body.center() + (&b - body.center()) * factor;
                let tan = tangency(&body, &x, Orientation::Forward)
                    .unwrap_or_else(|e| panic!("{} factor {factor}: {e}", body.label()));
                assert!(tan.residual <= TANGENCY_TOL * 20.0);
                assert!(tan.t > 0.0);
            }
        }
    }
}

#[test]
fn clearance_is_enforced() {
    let inside = basis(4, 0) * 0.5;
    assert!(matches!(
        tangency(&ball(), &inside, Orientation::Forward),
        Err(Error::InsufficientClearance { .. })
    ));
    let close = basis(4, 0) * (1.0 + 1e-8);
    assert!(matches!(
        step(&ball(), &close, Orientation::Forward),
        Err(Error::InsufficientClearance { .. })
    ));
}

#[test]
fn reverse_map_inverts_forward_map() {
    for body in [ellipsoid(&[1.0, 2.0]), ConvexBody::smoothed_polydisc(6, vec![1.0, 0.7], Vector::zeros(4)).unwrap()] {
        let x = v4([1.2, -0.4, 0.9, 1.1]);
        let y = step(&body, &x, Orientation::Forward).unwrap();
        let back = step(&body, &y, Orientation::Reverse).unwrap();
        assert!((back - &x).norm() <= 1e-7);
        let tr = trajectory(&body, &x, 10, Orientation::Reverse).unwrap();
        check_step_invariants(&body, &tr);
    }
}

#[test]
fn ball_period_three_and_five() {
    let x = v4([1.2, 0.4, -0.8, 1.2]).normalize() * 2.0;
    let tr = trajectory(&ball(), &x, 100, Orientation::Forward).unwrap();
    assert_eq!(tr.period, PeriodVerdict::Periodic { period: 3 });
    assert!(tr.planarity_residual().unwrap() < 1e-9);
    for (k, v) in tr.vertices.iter().enumerate() {
        assert!((v - circle_vertex(&x, k)).norm() < 1e-8);
    }
    check_step_invariants(&ball(), &tr);

    let r = 1.0 / (PI / 5.0).cos();
    let x = basis(4, 2) * r;
    let tr = trajectory(&ball(), &x, 100, Orientation::Forward).unwrap();
    assert_eq!(tr.period.period(), Some(5));
    assert!(tr.planarity_residual().unwrap() < 1e-9);
    for (k, v) in tr.vertices.iter().enumerate() {
        assert!((v - circle_vertex(&x, k)).norm() < 1e-8);
    }
}

#[test]
fn irrational_ellipsoid_trajectories_leave_every_plane() {
    let body = ellipsoid(&[1.0, SQRT_2]);
    let x = v4([1.1, 0.3, -0.7, 0.9]);
    let tr = trajectory(&body, &x, 200, Orientation::Forward).unwrap();
    assert!(tr.truncated);
    assert!(tr.planarity_residual().unwrap() > 1e-3);
    check_step_invariants(&body, &tr);
}

#[test]
fn symplectic_ball_trajectories_are_planar() {
    for seed in 0..3 {
        let map = random_affine_symplectic(4, seed, 0.5).unwrap();
        let body = ConvexBody::transformed(ball(), map.clone()).unwrap();
        let x = map.apply(&(v4([0.3, -1.0, 0.8, 0.2]).normalize() * 1.7));
        let tr = trajectory(&body, &x, 60, Orientation::Forward).unwrap();
        assert!(tr.planarity_residual().unwrap() <= 1e-6);
        check_step_invariants(&body, &tr);
    }
}

#[test]
fn trajectories_are_equivariant() {
    let base = ellipsoid(&[1.0, 2.0]);
    let map = random_affine_symplectic(4, 9, 0.5).unwrap();
    let image = ConvexBody::transformed(base.clone(), map.clone()).unwrap();
    let x = v4([1.1, 0.3, -0.7, 0.9]);
    let a = trajectory(&base, &x, 40, Orientation::Forward).unwrap();
    let b = trajectory(&image, &map.apply(&x), 40, Orientation::Forward).unwrap();
    assert_eq!(a.vertices.len(), b.vertices.len());
    for (p, q) in a.vertices.iter().zip(&b.vertices) {
        assert!((map.apply(p) - q).norm() <= 1e-6);
    }
}

#[test]
fn good_points_of_round_and_block_sections() {
    let o = Vector::zeros(4);
    let r = good_points(&ball(), &o, &basis(4, 0), &basis(4, 1), 256, 1e-8).unwrap();
    assert!(r.all_good);
    assert_eq!(r.good_points.len(), 256);
    let e = ellipsoid(&[1.0, SQRT_2]);
    let r = good_points(&e, &o, &basis(4, 0), &basis(4, 1), 256, 1e-8).unwrap();
    assert!(r.all_good);
    let u = (basis(4, 0) + basis(4, 2)) * FRAC_1_SQRT_2;
    let r = good_points(&e, &o, &u, &basis(4, 1), 4096, 1e-6).unwrap();
    assert!(!r.all_good);
    assert!(r.good_points.len() < 16);
    assert!(r.deviations.iter().all(|d| d.is_finite()));
}

#[test]
fn isolated_good_points_are_refined() {
    // Characteristic directions leave a tilted plane except at isolated angles.
    let e = ellipsoid(&[1.0, 2.0]);
    let u = v4([1.0, 0.0, 1.0, 0.0]).normalize();
    let v = v4([0.0, 1.0, 0.0, 0.3]).normalize();
    let r = good_points(&e, &Vector::zeros(4), &u, &v, 512, 1e-6).unwrap();
    for g in &r.good_points {
        assert!(g.deviation <= 1e-6);
        let z = r.section.lift(g.point);
        assert!((e.value(&z).unwrap() - 1.0).abs() < 1e-8);
    }
}

#[test]
fn uniformity_is_not_applicable_when_everything_is_good() {
    let o = Vector::zeros(4);
    let x = basis(4, 0) * 2.0;
    let tr = trajectory(&ball(), &x, 10, Orientation::Forward).unwrap();
    let r = good_points(&ball(), &o, &basis(4, 0), &basis(4, 1), 128, 1e-8).unwrap();
    assert!(matches!(uniform_distribution_check(&r, &tr), Uniformity::NotApplicable { .. }));

    let e = ellipsoid(&[1.0, SQRT_2]);
    let tr = trajectory(&e, &(basis(4, 0) * 2.0), 10, Orientation::Forward).unwrap();
    let r = good_points(&e, &o, &basis(4, 0), &basis(4, 1), 128, 1e-8).unwrap();
    assert!(matches!(uniform_distribution_check(&r, &tr), Uniformity::NotApplicable { .. }));
}

/// Period-3 ball orbit in the `(p_1, q_1)` plane with a prescribed good set.
fn fixture(good_angles: &[f64]) -> (GoodPointReport, OuterBilliardTrajectory) {
    let o = Vector::zeros(4);
    let tr = trajectory(&ball(), &(basis(4, 0) * 2.0), 10, Orientation::Forward).unwrap();
    let mut r = good_points(&ball(), &o, &basis(4, 0), &basis(4, 1), 64, 1e-8).unwrap();
    r.all_good = false;
    r.good_points = good_angles
        .iter()
        .map(|&a| GoodPoint {
            angle: a,
            point: [a.cos(), a.sin()],
            deviation: 0.0,
        })
        .collect();
    (r, tr)
}

#[test]
fn uniformity_fixture() {
    // Tangencies sit at -60, -180 and -300 degrees.
    let (r, tr) = fixture(&[0.0, 2.0 * PI / 3.0, 4.0 * PI / 3.0]);
    let tangent_angles: Vec<f64> = tr.tangencies.iter().map(|z| r.angle_of(z)).collect();
    assert!((tangent_angles[0] - 5.0 * PI / 3.0).abs() < 1e-9);
    assert_eq!(
        uniform_distribution_check(&r, &tr),
        Uniformity::Equal { counts: vec![1, 1, 1] }
    );
    let (r, tr) = fixture(&[0.0, 0.5, 2.0 * PI / 3.0, 4.0 * PI / 3.0]);
    match uniform_distribution_check(&r, &tr) {
        Uniformity::Unequal { counts } => assert_eq!(counts.iter().sum::<usize>(), 4),
        other => panic!("{other:?}"),
    }
    let open = trajectory(&ball(), &(basis(4, 0) * 2.2), 5, Orientation::Forward).unwrap();
    assert!(matches!(uniform_distribution_check(&r, &open), Uniformity::NotApplicable { .. }));
}

#[test]
fn ball_period_scan() {
    let z = basis(4, 0);
    let golden = 1.0 / (PI * (3.0 - 5f64.sqrt()) / 2.0).cos();
    let grid = [1.0, 3f64.sqrt(), (golden * golden - 1.0).sqrt()];
    let scan = period_scan(&ball(), &z, &grid, 10_000).unwrap();
    assert_eq!(scan.entries[0].period, Some(4));
    assert_eq!(scan.entries[1].period, Some(3));
    assert_eq!(scan.entries[2].verdict, Some(PeriodVerdict::Aperiodic));
    assert!(scan.entries.iter().all(|e| e.error.is_none()));
    assert!(period_scan(&ball(), &z, &[1.0, 0.5], 10).is_err());
    assert!(period_scan(&ball(), &z, &[0.0], 10).is_err());
    assert!(period_scan(&ball(), &(z * 1.1), &[1.0], 10).is_err());
}

#[test]
fn outer_billiard_map_is_symplectic() {
    let d = symplecticity_defect(&ball(), &(basis(4, 0) * 2.0), 1e-5).unwrap();
    assert!(d < 1e-5, "{d}");
    let e = ellipsoid(&[1.0, 2.0]);
    let mut rng = stream_rng(6, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let u = Vector::from_fn(4, |_, _| rng.sample(StandardNormal));
        let x = e.boundary_point(&u).unwrap() * rng.random_range(1.2..3.0);
        worst = worst.max(symplecticity_defect(&e, &x, 1e-5).unwrap());
    }
    assert!(worst < 1e-4, "{worst}");
    let x = v4([0.3, 0.1, -2.0, 0.5]);
    assert!(symplecticity_defect_of(|y| Ok(y.clone()), &x, 1e-5).unwrap() < 1e-10);
    assert!(symplecticity_defect_of(|y| Ok(y * 2.0), &x, 1e-5).unwrap() > 1.0);
}
