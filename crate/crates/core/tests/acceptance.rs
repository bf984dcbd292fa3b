//! Acceptance suite. Prints one PASS/FAIL line per criterion and fails if
//! any criterion fails.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::f64::consts::{PI, SQRT_2};
use std::time::{Duration, Instant};

use nalgebra::{Matrix2, Vector2};
use rand::Rng;
use rand_distr::StandardNormal;
use symplanar::billiard::{symplecticity_defect, trajectory, Orientation};
use symplanar::body::{minkowski_difference, polar_body};
use symplanar::capacity::{
    ehz_capacity, is_symplectic_ball, santalo_product, viterbo_report, EhzOptions, ReportOptions,
};
use symplanar::characteristics::{default_horizon, flow, survey, SurveyOptions};
use symplanar::john::john_ellipse;
use symplanar::rng::stream_rng;
use symplanar::symplectic::{apply_j, random_affine_symplectic, AffineSymplecticMap};
use symplanar::{ConvexBody, Matrix, PeriodVerdict, Vector, VolumeMethod};

type Check = Result<String, String>;
/// Name, check and optional time budget.
type Criterion = (&'static str, fn() -> Check, Option<Duration>);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn err(e: symplanar::Error) -> String {
    e.to_string()
}

fn ball() -> ConvexBody {
    ConvexBody::ball(2).unwrap()
}

fn ellipsoid(a: &[f64]) -> ConvexBody {
    ConvexBody::ellipsoid_from_coefficients(a).unwrap()
}

fn v4(a: [f64; 4]) -> Vector {
    Vector::from_vec(a.to_vec())
}

fn random_unit(rng: &mut impl Rng, dim: usize) -> Vector {
    Vector::from_fn(dim, |_, _| rng.sample(StandardNormal)).normalize()
}

fn linear_symplectic(seed: u64) -> AffineSymplecticMap {
    let m = random_affine_symplectic(4, seed, 0.5).unwrap();
    AffineSymplecticMap::linear_only(m.linear().clone()).unwrap()
}

fn ball_invariants() -> Check {
    let b = ball();
    let s = survey(&b, 100, 1, default_horizon(&b), &SurveyOptions::default()).map_err(err)?;
    ensure!(s.closed_count == 100, "{} of 100 closed", s.closed_count);
    ensure!(s.planar_count == 100, "{} of 100 planar", s.planar_count);
    let worst_planarity = s
        .records
        .iter()
        .filter_map(|r| r.planarity_residual)
        .fold(0.0, f64::max);
    ensure!(worst_planarity < 1e-6, "planarity residual {worst_planarity:e}");
    let worst_action = s
        .records
        .iter()
        .map(|r| r.action.map_or(f64::INFINITY, |a| (a - PI).abs()))
        .fold(0.0, f64::max);
    ensure!(worst_action <= 1e-6, "action error {worst_action:e}");
    let r = viterbo_report(&b, &ReportOptions::default()).map_err(err)?;
    ensure!((r.viterbo_ratio - 1.0).abs() <= 1e-9, "Viterbo ratio {}", r.viterbo_ratio);
    Ok(format!(
        "100/100 closed and planar, max |action - pi| {worst_action:.1e}, ratio {}",
        r.viterbo_ratio
    ))
}

fn diagonal_ellipsoid() -> Check {
    let e = ellipsoid(&[1.0, 2.0]);
    let vol = e.volume(VolumeMethod::ClosedForm).map_err(err)?.value;
    ensure!((vol - PI * PI / 4.0).abs() <= 1e-12, "volume {vol}");
    let (c, _) = ehz_capacity(&e, &EhzOptions::default()).map_err(err)?;
    ensure!((c - PI / 2.0).abs() <= 1e-12, "c_EHZ {c}");
    let dt = 1e-3;
    let generic = flow(&e, &e.boundary_point(&v4([1.0, 0.3, 0.8, -0.5])).map_err(err)?, 10.0, dt).map_err(err)?;
    let block = flow(&e, &e.boundary_point(&v4([0.0, 0.0, 0.6, 0.8])).map_err(err)?, 10.0, dt).map_err(err)?;
    let ga = generic.action.ok_or("generic orbit did not close")?;
    let ba = block.action.ok_or("block orbit did not close")?;
    ensure!((ga - PI).abs() <= 1e-6, "generic action {ga}");
    ensure!((ba - PI / 2.0).abs() <= 1e-6, "block action {ba}");
    // The sampled minimum agrees with the closed form.
    let sampled = EhzOptions {
        force_sampled: true,
        ..EhzOptions::default()
    };
    let (cs, _) = ehz_capacity(&e, &sampled).map_err(err)?;
    ensure!((cs - PI / 2.0).abs() <= 1e-6, "sampled c_EHZ {cs}");
    Ok(format!("volume {vol}, c_EHZ {c}, actions {ga:.9} and {ba:.9}"))
}

fn polydisc_limit() -> Check {
    let mut volumes = Vec::new();
    let mut summary = Vec::new();
    let mut ratio_32 = 0.0;
    for m in [8, 16, 32] {
        let body = ConvexBody::smoothed_polydisc(m, vec![1.0, 1.0], Vector::zeros(4)).map_err(err)?;
        let options = ReportOptions {
            ehz: EhzOptions {
                n_starts: 4,
                seed: 3,
                horizon: Some(20.0),
                ..EhzOptions::default()
            },
            ..ReportOptions::default()
        };
        let r = viterbo_report(&body, &options).map_err(err)?;
        ensure!(
            r.c_ehz >= PI - 0.05 && r.c_ehz <= PI + 1e-9,
            "m = {m}: minimal sampled action {}",
            r.c_ehz
        );
        summary.push(format!("m={m}: vol {:.4} c {:.6}", r.volume.value, r.c_ehz));
        volumes.push(r.volume);
        ratio_32 = r.viterbo_ratio;
    }
    ensure!(
        volumes.windows(2).all(|w| w[1].value > w[0].value),
        "volumes not increasing: {volumes:?}"
    );
    let v32 = volumes[2].value;
    ensure!(v32 < PI * PI && (v32 - PI * PI).abs() <= 0.02 * PI * PI, "m = 32 volume {v32}");
    ensure!((ratio_32 - 2.0).abs() <= 0.1, "m = 32 Viterbo ratio {ratio_32}");
    Ok(format!("{}, ratio at m=32 {ratio_32:.4}", summary.join(", ")))
}

fn planar_characteristics() -> Check {
    let options = SurveyOptions::default();
    for seed in 0..5 {
        let map = random_affine_symplectic(4, 100 + seed, 0.5).map_err(err)?;
        let body = ConvexBody::transformed(ball(), map).map_err(err)?;
        let s = survey(&body, 20, seed, default_horizon(&body), &options).map_err(err)?;
        ensure!(s.all_closed_sampled, "image {seed}: {} of 20 closed", s.closed_count);
        ensure!(s.all_planar_sampled, "image {seed}: {} of 20 planar", s.planar_count);
        let worst_ellipse = s
            .records
            .iter()
            .map(|r| r.ellipse_residual.unwrap_or(f64::INFINITY))
            .fold(0.0, f64::max);
        ensure!(s.all_ellipses_sampled && worst_ellipse < 1e-6, "image {seed}: ellipse residual {worst_ellipse:e}");
        let spread = s.action_spread.unwrap_or(f64::INFINITY);
        ensure!(spread < 1e-6, "image {seed}: action spread {spread:e}");
    }
    let e = ellipsoid(&[1.0, SQRT_2]);
    let s = survey(&e, 100, 7, 4.0 * PI, &options).map_err(err)?;
    let failing = s
        .records
        .iter()
        .filter(|r| r.planarity_residual.is_some_and(|x| x > 1e-3))
        .count();
    ensure!(failing >= 95, "only {failing} of 100 generic orbits are non-planar");
    Ok(format!("5 ball images all planar ellipses; {failing}/100 irrational-ellipsoid orbits non-planar"))
}

fn polar_identities() -> Check {
    let mut rng = stream_rng(5, 0);
    let bodies = [
        ConvexBody::egg(v4([1.0, 0.5, -0.3, 0.8]), 0.3, Vector::zeros(4)).map_err(err)?,
        ConvexBody::transformed(
            ConvexBody::smoothed_polydisc(4, vec![1.0, 0.7], Vector::zeros(4)).map_err(err)?,
            linear_symplectic(6),
        )
        .map_err(err)?,
        ConvexBody::transformed(ellipsoid(&[1.0, 3.0]), linear_symplectic(7)).map_err(err)?,
    ];
    let mut worst: f64 = 0.0;
    for body in &bodies {
        let kw = polar_body(body, true).map_err(err)?;
        let kww = polar_body(&kw, true).map_err(err)?;
        for _ in 0..100 {
            let u = random_unit(&mut rng, 4);
            let a = kww.support(&u).map_err(err)?.value;
            let b = body.support(&(-&u)).map_err(err)?.value;
            worst = worst.max((a - b).abs());
        }
    }
    ensure!(worst <= 1e-8, "double symplectic polar deviates by {worst:e}");
    let expected = (PI * PI / 2.0).powi(2);
    let mut worst_santalo: f64 = 0.0;
    for k in 0..10 {
        let a: Vec<f64> = (0..2).map(|_| rng.random_range(0.3..3.0)).collect();
        let body = ConvexBody::transformed(ellipsoid(&a), linear_symplectic(200 + k)).map_err(err)?;
        let p = santalo_product(&body, VolumeMethod::ClosedForm).map_err(err)?.value;
        worst_santalo = worst_santalo.max((p / expected - 1.0).abs());
    }
    ensure!(worst_santalo <= 1e-6, "Santalo relative error {worst_santalo:e}");
    Ok(format!(
        "double polar max deviation {worst:.1e}, Santalo max relative error {worst_santalo:.1e}"
    ))
}

fn minkowski_difference_identities() -> Check {
    let mut rng = stream_rng(9, 0);
    let mut worst_volume: f64 = 0.0;
    let mut worst_support: f64 = 0.0;
    for k in 0..5 {
        let a: Vec<f64> = (0..2).map(|_| rng.random_range(0.3..3.0)).collect();
        let body = ConvexBody::transformed(ellipsoid(&a), linear_symplectic(300 + k)).map_err(err)?;
        let diff = minkowski_difference(&body).map_err(err)?;
        let v = body.volume(VolumeMethod::ClosedForm).map_err(err)?.value;
        let vd = diff.volume(VolumeMethod::ClosedForm).map_err(err)?.value;
        worst_volume = worst_volume.max((vd / (16.0 * v) - 1.0).abs());
    }
    ensure!(worst_volume <= 1e-9, "vol(K - K) / 16 vol(K) off by {worst_volume:e}");
    let bodies = [
        ConvexBody::transformed(ellipsoid(&[1.0, 2.0]), random_affine_symplectic(4, 11, 0.5).map_err(err)?)
            .map_err(err)?,
        ConvexBody::egg(v4([0.2, 1.0, 0.4, -0.6]), 0.25, v4([0.5, -0.5, 1.0, 0.0])).map_err(err)?,
        ConvexBody::transformed(
            ConvexBody::smoothed_polydisc(6, vec![1.0, 0.8], Vector::zeros(4)).map_err(err)?,
            random_affine_symplectic(4, 12, 0.5).map_err(err)?,
        )
        .map_err(err)?,
    ];
    for body in &bodies {
        let diff = minkowski_difference(body).map_err(err)?;
        for _ in 0..100 {
            let u = random_unit(&mut rng, 4);
            let lhs = diff.support(&u).map_err(err)?.value;
            let rhs = body.support(&u).map_err(err)?.value + body.support(&(-&u)).map_err(err)?.value;
            worst_support = worst_support.max((lhs - rhs).abs() / rhs.abs().max(1.0));
        }
    }
    ensure!(worst_support <= 1e-9, "support additivity off by {worst_support:e}");
    Ok(format!("volume ratio error {worst_volume:.1e}, support error {worst_support:.1e}"))
}

/// Vertex `k` of the unit-ball orbit from `x`.
fn circle_vertex(x: &Vector, k: usize) -> Vector {
    let theta = 2.0 * (1.0 / x.norm()).acos() * k as f64;
    x * theta.cos() - apply_j(x) * theta.sin()
}

fn ball_outer_billiard() -> Check {
    let b = ball();
    let x = v4([1.0, -0.4, 0.7, 0.2]).normalize() * 2.0;
    let tr = trajectory(&b, &x, 100, Orientation::Forward).map_err(err)?;
    ensure!(tr.period == PeriodVerdict::Periodic { period: 3 }, "verdict {:?}", tr.period);
    let planarity = tr.planarity_residual().unwrap_or(f64::INFINITY);
    ensure!(planarity < 1e-9, "planarity residual {planarity:e}");
    let worst_vertex = tr
        .vertices
        .iter()
        .enumerate()
        .map(|(k, v)| (v - circle_vertex(&x, k)).norm())
        .fold(0.0, f64::max);
    ensure!(worst_vertex <= 1e-8, "vertex error {worst_vertex:e}");
    let r5 = 1.0 / (PI / 5.0).cos();
    let tr5 = trajectory(&b, &(v4([0.3, 0.9, -0.2, 0.4]).normalize() * r5), 100, Orientation::Forward)
        .map_err(err)?;
    ensure!(tr5.period.period() == Some(5), "verdict {:?}", tr5.period);
    let mut rng = stream_rng(13, 0);
    let mut worst_defect: f64 = 0.0;
    for _ in 0..50 {
        let x = random_unit(&mut rng, 4) * rng.random_range(1.1..4.0);
        worst_defect = worst_defect.max(symplecticity_defect(&b, &x, 1e-5).map_err(err)?);
    }
    ensure!(worst_defect < 1e-5, "symplecticity defect {worst_defect:e}");
    Ok(format!(
        "period 3 (vertex error {worst_vertex:.1e}), period 5, max defect {worst_defect:.1e}"
    ))
}

fn nonplanar_billiard() -> Check {
    let e = ellipsoid(&[1.0, SQRT_2]);
    let x = v4([1.1, 0.3, -0.7, 0.9]);
    let tr = trajectory(&e, &x, 200, Orientation::Forward).map_err(err)?;
    let r = tr.planarity_residual().unwrap_or(0.0);
    ensure!(r > 1e-3, "planarity residual {r:e} after {} steps", tr.steps());
    Ok(format!("planarity residual {r:.3} after {} steps", tr.steps()))
}

fn polygon(n: usize, radius: f64) -> Vec<[f64; 2]> {
    (0..n)
        .map(|k| {
            let t = 2.0 * PI * k as f64 / n as f64;
            [radius * t.cos(), radius * t.sin()]
        })
        .collect()
}

fn john_ellipses() -> Check {
    let square = [[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]];
    let e = john_ellipse(&square).map_err(err)?;
    ensure!((e.area - PI).abs() <= 1e-6, "square: area {}", e.area);
    // Circumradius 1 gives inradius 1/2.
    let t = john_ellipse(&polygon(3, 1.0)).map_err(err)?;
    ensure!((t.area - PI / 4.0).abs() <= 1e-6, "triangle: area {}", t.area);
    let (a, b) = (2.0, 0.7);
    let ell: Vec<[f64; 2]> = polygon(512, 1.0).iter().map(|p| [a * p[0], b * p[1]]).collect();
    let f = john_ellipse(&ell).map_err(err)?;
    ensure!((f.area - PI * a * b).abs() <= 1e-3, "512-gon: area {} vs {}", f.area, PI * a * b);

    let poly = vec![[0.0, -1.0], [2.0, -0.5], [2.5, 1.0], [1.0, 2.0], [-0.5, 1.5], [-1.0, 0.0]];
    let base = john_ellipse(&poly).map_err(err)?;
    let bm = base.shape_matrix();
    let mut rng = stream_rng(17, 1);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let mut m: Matrix2<f64> = Matrix2::from_fn(|_, _| rng.random_range(-2.0..2.0));
        if m.determinant().abs() < 0.3 {
            m += Matrix2::identity();
        }
        let shift = Vector2::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        let mapped: Vec<[f64; 2]> = poly
            .iter()
            .map(|p| {
                let q = m * Vector2::new(p[0], p[1]) + shift;
                [q[0], q[1]]
            })
            .collect();
        let g = john_ellipse(&mapped).map_err(err)?;
        let gm = g.shape_matrix();
        let shape = m * bm * bm * m.transpose();
        let center = m * Vector2::new(base.center[0], base.center[1]) + shift;
        worst = worst
            .max((gm * gm - shape).amax() / shape.amax())
            .max((Vector2::new(g.center[0], g.center[1]) - center).amax())
            .max((g.area / (base.area * m.determinant().abs()) - 1.0).abs());
    }
    ensure!(worst <= 1e-6, "equivariance error {worst:e}");
    Ok(format!("square {:.9}, triangle {:.9}, 512-gon {:.6}, equivariance {worst:.1e}", e.area, t.area, f.area))
}

fn williamson_balls() -> Check {
    let mut worst: f64 = 0.0;
    for seed in 0..20 {
        let s = random_affine_symplectic(4, 400 + seed, 0.5).map_err(err)?;
        let a = s.linear().transpose() * s.linear();
        let v = is_symplectic_ball(&a, 1e-8).map_err(err)?;
        ensure!(v.is_ball, "seed {seed}: spectrum {:?}", v.spectrum.coefficients);
        worst = worst.max(v.witness_residual.unwrap_or(f64::INFINITY));
    }
    ensure!(worst <= 1e-8, "witness residual {worst:e}");
    let d = Matrix::from_diagonal(&v4([1.0, 1.0, 2.0, 2.0]));
    let v = is_symplectic_ball(&d, 1e-8).map_err(err)?;
    ensure!(!v.is_ball, "diag(1, 1, 2, 2) classified as a ball");
    Ok(format!("20/20 balls, max witness residual {worst:.1e}; diag(1,1,2,2) rejected"))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("ball invariants", ball_invariants, Some(Duration::from_secs(10))),
        ("diagonal ellipsoid (1, 2)", diagonal_ellipsoid, None),
        ("smoothed polydisc limit", polydisc_limit, None),
        ("planar characteristics of ball images", planar_characteristics, None),
        ("polar identities", polar_identities, None),
        ("Minkowski difference identities", minkowski_difference_identities, None),
        ("outer billiard around the ball", ball_outer_billiard, Some(Duration::from_secs(20))),
        ("non-planar outer billiard", nonplanar_billiard, None),
        ("John ellipses", john_ellipses, None),
        ("Williamson ball detection", williamson_balls, None),
    ];
    let mut failures = 0;
    for (i, (name, check, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let mut outcome = check();
        let elapsed = start.elapsed();
        if let (Ok(msg), Some(limit)) = (&outcome, budget) {
            if elapsed > *limit {
                outcome = Err(format!("{msg}; took {elapsed:.1?}, budget {limit:?}"));
            }
        }
        match outcome {
            Ok(msg) => println!("PASS {:>2} {name} ({elapsed:.1?}): {msg}", i + 1),
            Err(msg) => {
                failures += 1;
                println!("FAIL {:>2} {name} ({elapsed:.1?}): {msg}", i + 1);
            }
        }
    }
    if failures > 0 {
        eprintln!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
