//! Characteristic flow `z' = J grad H(z)` on `{H = 1}`, closure detection,
//! actions, and plane and ellipse fits of sampled orbits.

use std::f64::consts::PI;

use serde::Serialize;

use crate::body::ConvexBody;
use crate::capacity::williamson;
use crate::symplectic::{apply_j, check_same_dim, hermite_curve_action, omega_raw};
use crate::{Error, Result, Vector};

mod fit;
mod survey;

pub use fit::{fit_ellipse, fit_plane, EllipseFit, PlaneFit, Planarity};
pub use survey::{survey, CharacteristicSurvey, OrbitRecord, SurveyOptions};

/// Closure tolerance in position.
pub const CLOSURE_TOL: f64 = 1e-7;
/// Largest `|H - 1|` of an unprojected RK4 step before the step is halved.
pub const LOCAL_ERROR_BOUND: f64 = 1e-8;
/// How often a single step may be halved.
pub const MAX_HALVINGS: usize = 10;
/// Starting points may be this far from the level set; they are projected.
pub const START_TOL: f64 = 1e-6;
/// Horizon in natural periods before an orbit is declared open.
pub const DEFAULT_HORIZON_PERIODS: f64 = 50.0;

/// A sampled orbit of the characteristic flow.
#[derive(Debug, Clone, PartialEq)]
pub struct Characteristic {
    pub body_id: String,
    /// Points on `{H = 1}`. For a closed orbit the last sample is the
    /// interpolated return point at time `period`.
    pub samples: Vec<Vector>,
    /// `dz/dt` at each sample.
    pub velocities: Vec<Vector>,
    /// Signed times; negative when integrating backwards.
    pub times: Vec<f64>,
    /// Nominal step.
    pub timestep: f64,
    pub closed: bool,
    pub period: Option<f64>,
    pub action: Option<f64>,
    pub start: Vector,
    /// Distance between the return point and the start, when closed.
    pub closure_distance: Option<f64>,
    /// `max |H - 1|` over the samples.
    pub energy_drift: f64,
}

impl Characteristic {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Samples without the duplicated return point of a closed orbit.
    pub fn loop_samples(&self) -> &[Vector] {
        if self.closed {
            &self.samples[..self.samples.len() - 1]
        } else {
            &self.samples
        }
    }
}

/// Result of scanning samples for a first return.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Closure {
    pub closed: bool,
    /// Return time measured from the first sample (absolute value).
    pub period: Option<f64>,
    /// Index of the first sample after the crossing.
    pub index: Option<usize>,
    pub distance: Option<f64>,
}

fn hermite_point(z0: &Vector, z1: &Vector, m0: &Vector, m1: &Vector, s: f64) -> Vector {
    let s2 = s * s;
    let s3 = s2 * s;
    z0 * (2.0 * s3 - 3.0 * s2 + 1.0)
        + m0 * (s3 - 2.0 * s2 + s)
        + z1 * (-2.0 * s3 + 3.0 * s2)
        + m1 * (s3 - s2)
}

/// Incremental first-return detector on the hyperplane through the start
/// normal to the initial velocity.
struct ClosureDetector {
    start: Vector,
    normal: Vector,
    tol: f64,
    prev_side: f64,
    count: usize,
}

struct Crossing {
    fraction: f64,
    point: Vector,
    distance: f64,
}

impl ClosureDetector {
    fn new(start: &Vector, velocity: &Vector, tol: f64) -> Self {
        Self {
            start: start.clone(),
            normal: velocity / velocity.norm(),
            tol,
            prev_side: 0.0,
            count: 1,
        }
    }

    /// Feed the segment from `(z0, v0)` to `(z1, v1)` of duration `h`; returns
    /// the crossing when the orbit has returned.
    fn push(&mut self, z0: &Vector, v0: &Vector, z1: &Vector, v1: &Vector, h: f64) -> Option<Crossing> {
        let side = (z1 - &self.start).dot(&self.normal);
        let prev = self.prev_side;
        self.prev_side = side;
        self.count += 1;
        if self.count < 3 || !(prev < 0.0 && side >= 0.0) {
            return None;
        }
        let m0 = v0 * h;
        let m1 = v1 * h;
        let f = |s: f64| (hermite_point(z0, z1, &m0, &m1, s) - &self.start).dot(&self.normal);
        let (mut lo, mut hi) = (0.0, 1.0);
        let (mut flo, mut fhi) = (prev, side);
        for _ in 0..100 {
            if hi - lo <= 1e-15 {
                break;
            }
            // Regula falsi with bisection safeguard.
            let mut s = lo - flo * (hi - lo) / (fhi - flo);
            if !(s > lo && s < hi) || (hi - lo) < 1e-3 {
                s = 0.5 * (lo + hi);
            }
            let fs = f(s);
            if fs == 0.0 {
                lo = s;
                hi = s;
                break;
            }
            if fs < 0.0 {
                lo = s;
                flo = fs;
            } else {
                hi = s;
                fhi = fs;
            }
        }
        let fraction = 0.5 * (lo + hi);
        let point = hermite_point(z0, z1, &m0, &m1, fraction);
        let distance = (&point - &self.start).norm();
        (distance <= self.tol).then_some(Crossing {
            fraction,
            point,
            distance,
        })
    }
}

/// First return of sampled orbit data to within `tol` of the first sample,
/// crossing the section through the start with positively aligned velocity.
pub fn detect_closure(samples: &[Vector], velocities: &[Vector], times: &[f64], tol: f64) -> Result<Closure> {
    if samples.len() < 10 {
        return Err(Error::InvalidArgument(
            "closure detection needs at least 10 samples".into(),
        ));
    }
    if velocities.len() != samples.len() || times.len() != samples.len() {
        return Err(Error::InvalidArgument(
            "samples, velocities and times must have equal length".into(),
        ));
    }
    let dir = if times[1] >= times[0] { 1.0 } else { -1.0 };
    let forward = |v: &Vector| v * dir;
    let mut det = ClosureDetector::new(&samples[0], &forward(&velocities[0]), tol);
    for k in 1..samples.len() {
        let h = (times[k] - times[k - 1]).abs();
        let v0 = forward(&velocities[k - 1]);
        let v1 = forward(&velocities[k]);
        if let Some(c) = det.push(&samples[k - 1], &v0, &samples[k], &v1, h) {
            let t = (times[k - 1] - times[0]).abs() + c.fraction * h;
            return Ok(Closure {
                closed: true,
                period: Some(t),
                index: Some(k),
                distance: Some(c.distance),
            });
        }
    }
    Ok(Closure {
        closed: false,
        period: None,
        index: None,
        distance: None,
    })
}

/// Rough lower and upper rates `a` of the flow, i.e. `|grad H| / (2 |z - c|)`
/// on the boundary; exact Williamson extremes for ellipsoids.
pub fn rate_bounds(body: &ConvexBody) -> (f64, f64) {
    if let Some((a, _)) = body.as_ellipsoid() {
        if let Ok(spec) = williamson(&a) {
            let c = &spec.coefficients;
            return (c[0], c[c.len() - 1]);
        }
    }
    let dim = body.dim();
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    let mut rng = crate::rng::stream_rng(0x7a7e, 0);
    let mut dirs = body.canonical_directions();
    for _ in 0..64 {
        use rand_distr::{Distribution, StandardNormal};
        dirs.push(Vector::from_fn(dim, |_, _| StandardNormal.sample(&mut rng)));
    }
    for d in dirs {
        let Ok(z) = body.boundary_point(&d) else { continue };
        let Ok((_, g)) = body.gradient_raw(&z) else { continue };
        let rate = g.norm() / (2.0 * (&z - body.center()).norm());
        if rate.is_finite() && rate > 0.0 {
            lo = lo.min(rate);
            hi = hi.max(rate);
        }
    }
    if hi == 0.0 {
        (1.0, 1.0)
    } else {
        (lo, hi)
    }
}

/// `1e-3 * pi / a_max`.
pub fn default_timestep(body: &ConvexBody) -> f64 {
    1e-3 * PI / rate_bounds(body).1
}

/// `50 * pi / a_min`.
pub fn default_horizon(body: &ConvexBody) -> f64 {
    DEFAULT_HORIZON_PERIODS * PI / rate_bounds(body).0
}

fn vector_field(body: &ConvexBody, z: &Vector) -> Result<Vector> {
    Ok(apply_j(&body.gradient_raw(z)?.1))
}

fn rk4_step(body: &ConvexBody, z: &Vector, k1: &Vector, h: f64) -> Result<Vector> {
    let k2 = vector_field(body, &(z + k1 * (0.5 * h)))?;
    let k3 = vector_field(body, &(z + &k2 * (0.5 * h)))?;
    let k4 = vector_field(body, &(z + &k3 * h))?;
    Ok(z + (k1 + &k2 * 2.0 + &k3 * 2.0 + k4) * (h / 6.0))
}

/// Integrate the characteristic flow from `z0` with classical RK4 and radial
/// projection onto `{H = 1}` after every step.
///
/// A negative `dt` integrates backwards. Integration stops at the first
/// return to within `closure_tol` of the start, or once `|t| >= t_max`.
pub fn flow(body: &ConvexBody, z0: &Vector, t_max: f64, dt: f64) -> Result<Characteristic> {
    flow_with_tolerance(body, z0, t_max, dt, CLOSURE_TOL)
}

pub fn flow_with_tolerance(
    body: &ConvexBody,
    z0: &Vector,
    t_max: f64,
    dt: f64,
    closure_tol: f64,
) -> Result<Characteristic> {
    check_same_dim(body.dim(), z0.len())?;
    if !(dt != 0.0 && dt.is_finite()) {
        return Err(Error::InvalidArgument("timestep must be finite and nonzero".into()));
    }
    if !(t_max > 0.0) {
        return Err(Error::InvalidArgument("t_max must be positive".into()));
    }
    let deviation = (body.value_raw(z0)? - 1.0).abs();
    if !(deviation <= START_TOL) {
        return Err(Error::OffBoundary { deviation });
    }
    let start = body.project_to_boundary(z0)?;
    let sign = dt.signum();
    let mut z = start.clone();
    let mut v = vector_field(body, &z)?;
    let mut t = 0.0f64;
    let mut samples = vec![z.clone()];
    let mut velocities = vec![v.clone()];
    let mut times = vec![0.0];
    let mut drift: f64 = 0.0;
    let mut detector = ClosureDetector::new(&start, &(&v * sign), closure_tol);
    let mut closure = None;
    while t.abs() < t_max {
        let mut h = dt;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let raw = rk4_step(body, &z, &v, h)?;
            let err = (body.value_raw(&raw)? - 1.0).abs();
            if err <= LOCAL_ERROR_BOUND {
                accepted = Some(body.project_to_boundary(&raw)?);
                break;
            }
            h *= 0.5;
        }
        let Some(next) = accepted else {
            return Err(Error::NotConverged {
                what: "characteristic flow step",
                iterations: MAX_HALVINGS,
                residual: h.abs(),
            });
        };
        let next_v = vector_field(body, &next)?;
        let crossing = detector.push(&z, &(&v * sign), &next, &(&next_v * sign), h.abs());
        drift = drift.max((body.value_raw(&next)? - 1.0).abs());
        if let Some(c) = crossing {
            let period = t.abs() + c.fraction * h.abs();
            let point = body.project_to_boundary(&c.point)?;
            let pv = vector_field(body, &point)?;
            samples.push(point);
            velocities.push(pv);
            times.push(sign * period);
            closure = Some((period, c.distance));
            break;
        }
        t += h;
        z = next;
        v = next_v;
        samples.push(z.clone());
        velocities.push(v.clone());
        times.push(t);
    }
    let mut ch = Characteristic {
        body_id: body.label(),
        samples,
        velocities,
        times,
        timestep: dt,
        closed: closure.is_some(),
        period: closure.map(|c| c.0),
        action: None,
        start,
        closure_distance: closure.map(|c| c.1),
        energy_drift: drift,
    };
    if ch.closed {
        ch.action = Some(action_of(&ch)?);
    }
    Ok(ch)
}

/// `oint lambda` over a closed orbit, integrating the Liouville form along the
/// cubic Hermite interpolant of the samples (exact for cubic segments).
pub fn action_of(ch: &Characteristic) -> Result<f64> {
    if !ch.closed || ch.samples.len() < 3 {
        return Err(Error::OpenOrbit);
    }
    let n = ch.samples.len() - 1;
    let pts = &ch.samples[..n];
    let tangents = &ch.velocities[..n];
    let steps: Vec<f64> = (0..n).map(|i| ch.times[i + 1] - ch.times[i]).collect();
    hermite_curve_action(pts, tangents, &steps)
}

/// Signed area `1/2 sum omega(z_i, z_{i+1})` of the closed sample polygon, a
/// cheap cross-check of `action_of`.
pub fn polygon_action(ch: &Characteristic) -> Result<f64> {
    if !ch.closed {
        return Err(Error::OpenOrbit);
    }
    let pts = ch.loop_samples();
    let n = pts.len();
    let c = &pts[0];
    Ok((0..n)
        .map(|i| 0.5 * omega_raw(&(&pts[i] - c), &(&pts[(i + 1) % n] - c)))
        .sum())
}
