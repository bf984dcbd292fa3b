//! Planar sections of bodies and maximal-area inscribed (John) ellipses of
//! convex polygons.

use std::f64::consts::PI;

use nalgebra::{Matrix2, Matrix5, Vector2, Vector3, Vector5};
use serde::Serialize;

use crate::body::ConvexBody;
use crate::characteristics::PlaneFit;
use crate::symplectic::check_same_dim;
use crate::{Error, Result, Vector};

/// Boundary points per section unless asked otherwise.
pub const DEFAULT_RESOLUTION: usize = 512;

const ROOT_TOL: f64 = 1e-14;
const MU_START: f64 = 1.0;
const MU_END: f64 = 1e-9;
const MU_FACTOR: f64 = 0.2;

/// `L ∩ ∂K` sampled at uniformly spaced angles about an interior point.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarSection {
    /// Origin and orthonormal basis of the plane; residual is zero.
    pub plane: PlaneFit,
    /// Counter-clockwise boundary points in plane coordinates.
    pub polygon: Vec<[f64; 2]>,
    /// Minimizer of `H` on the plane, in plane coordinates.
    pub interior: [f64; 2],
    pub resolution: usize,
}

impl PlanarSection {
    pub fn lift(&self, p: [f64; 2]) -> Vector {
        self.plane.lift(p[0], p[1])
    }

    pub fn area(&self) -> f64 {
        polygon_area(&self.polygon)
    }
}

/// Signed shoelace area, positive for counter-clockwise order.
pub fn polygon_area(polygon: &[[f64; 2]]) -> f64 {
    let n = polygon.len();
    0.5 * (0..n)
        .map(|i| {
            let a = polygon[i];
            let b = polygon[(i + 1) % n];
            a[0] * b[1] - a[1] * b[0]
        })
        .sum::<f64>()
}

fn plane_value(body: &ConvexBody, origin: &Vector, u: &Vector, v: &Vector, s: f64, t: f64) -> Result<f64> {
    body.value_raw(&(origin + u * s + v * t))
}

/// Minimize `H` over the plane by damped Newton from `(s, t)`.
fn minimize_on_plane(body: &ConvexBody, origin: &Vector, u: &Vector, v: &Vector, start: [f64; 2]) -> Result<([f64; 2], f64)> {
    let mut x = Vector2::new(start[0], start[1]);
    let mut f = plane_value(body, origin, u, v, x[0], x[1])?;
    for _ in 0..100 {
        if f == 0.0 {
            break;
        }
        let e = body.evaluate_raw(&(origin + u * x[0] + v * x[1]))?;
        let g = Vector2::new(e.gradient.dot(u), e.gradient.dot(v));
        let gu = &e.hessian * u;
        let gv = &e.hessian * v;
        let h = Matrix2::new(u.dot(&gu), u.dot(&gv), v.dot(&gu), v.dot(&gv));
        let step = h.cholesky().map(|c| -c.solve(&g)).unwrap_or(-g);
        if step.norm() <= 1e-15 * (1.0 + x.norm()) {
            break;
        }
        let mut alpha = 1.0;
        let mut moved = false;
        for _ in 0..50 {
            let cand = x + step * alpha;
            let fc = plane_value(body, origin, u, v, cand[0], cand[1])?;
            if fc < f {
                x = cand;
                f = fc;
                moved = true;
                break;
            }
            alpha *= 0.5;
        }
        if !moved {
            break;
        }
    }
    Ok(([x[0], x[1]], f))
}

/// Root of `H(o + r d) = 1` for `r > 0` by bracketing then safeguarded Newton.
fn ray_root(body: &ConvexBody, o: &Vector, d: &Vector) -> Result<f64> {
    let g = |r: f64| -> Result<(f64, f64)> {
        let (h, grad) = body.gradient_raw(&(o + d * r))?;
        Ok((h - 1.0, grad.dot(d)))
    };
    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut iters = 0;
    while g(hi)?.0 <= 0.0 {
        lo = hi;
        hi *= 2.0;
        iters += 1;
        if iters > 200 {
            return Err(Error::NotConverged {
                what: "section ray bracket",
                iterations: iters,
                residual: hi,
            });
        }
    }
    let mut r = 0.5 * (lo + hi);
    for _ in 0..200 {
        let (val, der) = g(r)?;
        if val.abs() <= ROOT_TOL {
            return Ok(r);
        }
        if val < 0.0 {
            lo = r;
        } else {
            hi = r;
        }
        let newton = r - val / der;
        r = if der > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= 1e-16 * hi {
            return Ok(r);
        }
    }
    let residual = g(r)?.0.abs();
    if residual <= 1e-12 {
        return Ok(r);
    }
    Err(Error::NotConverged {
        what: "section ray root",
        iterations: 200,
        residual,
    })
}

/// `K ∩ L` for the plane through `point` spanned by orthonormal `u`, `v`.
pub fn section(body: &ConvexBody, point: &Vector, u: &Vector, v: &Vector, resolution: usize) -> Result<PlanarSection> {
    let dim = body.dim();
    check_same_dim(dim, point.len())?;
    check_same_dim(dim, u.len())?;
    check_same_dim(dim, v.len())?;
    if (u.norm() - 1.0).abs() > 1e-10 || (v.norm() - 1.0).abs() > 1e-10 || u.dot(v).abs() > 1e-10 {
        return Err(Error::InvalidArgument("plane basis must be orthonormal".into()));
    }
    if resolution < 3 {
        return Err(Error::InvalidArgument("section resolution must be at least 3".into()));
    }
    let rel = body.center() - point;
    let (o, min_h) = minimize_on_plane(body, point, u, v, [rel.dot(u), rel.dot(v)])?;
    if !(min_h < 1.0) {
        return Err(Error::PlaneMissesInterior { min_h });
    }
    let origin = point + u * o[0] + v * o[1];
    let polygon = (0..resolution)
        .map(|k| {
            let th = 2.0 * PI * k as f64 / resolution as f64;
            let (s, c) = th.sin_cos();
            let r = ray_root(body, &origin, &(u * c + v * s))?;
            Ok([o[0] + r * c, o[1] + r * s])
        })
        .collect::<Result<Vec<_>>>()?;
    let lifted: Vec<Vector> = polygon.iter().map(|p| point + u * p[0] + v * p[1]).collect();
    let far = lifted
        .iter()
        .map(|z| (z - &origin).norm())
        .fold(0.0, f64::max);
    Ok(PlanarSection {
        plane: PlaneFit {
            center: point.clone(),
            basis: [u.clone(), v.clone()],
            residual: 0.0,
            diameter: 2.0 * far,
        },
        polygon,
        interior: o,
        resolution,
    })
}

/// Boundary point of a section in direction `angle` about its interior point,
/// in plane coordinates.
pub(crate) fn section_point_at(body: &ConvexBody, s: &PlanarSection, angle: f64) -> Result<[f64; 2]> {
    let [u, v] = &s.plane.basis;
    let origin = s.plane.lift(s.interior[0], s.interior[1]);
    let (sn, cs) = angle.sin_cos();
    let r = ray_root(body, &origin, &(u * cs + v * sn))?;
    Ok([s.interior[0] + r * cs, s.interior[1] + r * sn])
}

/// `{B u + center : |u| <= 1}` with `B` symmetric positive definite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JohnEllipse {
    pub center: [f64; 2],
    /// Row-major `[[b11, b12], [b12, b22]]`.
    pub shape: [[f64; 2]; 2],
    pub area: f64,
    /// Largest edge-constraint violation (non-positive slack).
    pub max_violation: f64,
    /// Barrier Newton iterations over the whole path.
    pub iterations: usize,
}

impl JohnEllipse {
    pub fn shape_matrix(&self) -> Matrix2<f64> {
        Matrix2::new(self.shape[0][0], self.shape[0][1], self.shape[1][0], self.shape[1][1])
    }

    pub fn point_at(&self, angle: f64) -> [f64; 2] {
        let b = self.shape_matrix();
        let p = b * Vector2::new(angle.cos(), angle.sin());
        [self.center[0] + p[0], self.center[1] + p[1]]
    }
}

/// Half-planes `<a_e, x> <= b_e` with unit `a_e` of a convex polygon, which is
/// reoriented counter-clockwise if needed.
pub fn polygon_halfplanes(polygon: &[[f64; 2]]) -> Result<Vec<(Vector2<f64>, f64)>> {
    if polygon.len() < 3 {
        return Err(Error::InvalidPolygon("need at least 3 vertices".into()));
    }
    let area = polygon_area(polygon);
    let scale = polygon
        .iter()
        .map(|p| p[0].abs().max(p[1].abs()))
        .fold(0.0, f64::max);
    if !(area.abs() > 1e-12 * scale * scale) {
        return Err(Error::InvalidPolygon("polygon has no area".into()));
    }
    let pts: Vec<Vector2<f64>> = if area > 0.0 {
        polygon.iter().map(|p| Vector2::new(p[0], p[1])).collect()
    } else {
        polygon.iter().rev().map(|p| Vector2::new(p[0], p[1])).collect()
    };
    let n = pts.len();
    let mut planes = Vec::with_capacity(n);
    for i in 0..n {
        let a = pts[i];
        let b = pts[(i + 1) % n];
        let c = pts[(i + 2) % n];
        let e1 = b - a;
        let e2 = c - b;
        let cross = e1[0] * e2[1] - e1[1] * e2[0];
        if cross < -1e-12 * e1.norm() * e2.norm() {
            return Err(Error::InvalidPolygon(format!("not convex at vertex {}", (i + 1) % n)));
        }
        let len = e1.norm();
        if len <= 1e-14 * scale {
            continue;
        }
        let normal = Vector2::new(e1[1], -e1[0]) / len;
        planes.push((normal, normal.dot(&a)));
    }
    // A convex polygon winds exactly once.
    let turning: f64 = (0..n)
        .map(|i| {
            let e1 = pts[(i + 1) % n] - pts[i];
            let e2 = pts[(i + 2) % n] - pts[(i + 1) % n];
            (e1[0] * e2[1] - e1[1] * e2[0]).atan2(e1.dot(&e2))
        })
        .sum();
    if (turning - 2.0 * PI).abs() > 1e-6 {
        return Err(Error::InvalidPolygon("polygon winds more than once".into()));
    }
    Ok(planes)
}

/// Variables `(b11, b12, b22, c1, c2)`.
type State = Vector5<f64>;

struct Barrier<'a> {
    planes: &'a [(Vector2<f64>, f64)],
}

fn shape_of(x: &State) -> Matrix2<f64> {
    Matrix2::new(x[0], x[1], x[1], x[2])
}

impl Barrier<'_> {
    fn slacks_ok(&self, x: &State) -> bool {
        let b = shape_of(x);
        if !(x[0] > 0.0 && x[0] * x[2] - x[1] * x[1] > 0.0) {
            return false;
        }
        let c = Vector2::new(x[3], x[4]);
        self.planes
            .iter()
            .all(|(a, rhs)| rhs - a.dot(&c) - (b * a).norm() > 0.0)
    }

    /// `-log det B - mu sum log s_e`.
    fn value(&self, x: &State, mu: f64) -> f64 {
        let b = shape_of(x);
        let c = Vector2::new(x[3], x[4]);
        let det = x[0] * x[2] - x[1] * x[1];
        let barrier: f64 = self
            .planes
            .iter()
            .map(|(a, rhs)| (rhs - a.dot(&c) - (b * a).norm()).ln())
            .sum();
        -det.ln() - mu * barrier
    }

    fn derivatives(&self, x: &State, mu: f64) -> (State, Matrix5<f64>) {
        let b = shape_of(x);
        let c = Vector2::new(x[3], x[4]);
        let det = x[0] * x[2] - x[1] * x[1];
        let dd = Vector3::new(x[2], -2.0 * x[1], x[0]);
        let mut grad = State::zeros();
        let mut hess = Matrix5::zeros();
        // -log det B.
        let g3 = -dd / det;
        let mut h3 = dd * dd.transpose() / (det * det);
        h3[(0, 2)] -= 1.0 / det;
        h3[(2, 0)] -= 1.0 / det;
        h3[(1, 1)] += 2.0 / det;
        grad.fixed_rows_mut::<3>(0).copy_from(&g3);
        hess.fixed_view_mut::<3, 3>(0, 0).copy_from(&h3);
        for (a, rhs) in self.planes {
            let w = b * a;
            let wn = w.norm();
            let s = rhs - a.dot(&c) - wn;
            // w = M theta with M = [[a1, a2, 0], [0, a1, a2]].
            let m = nalgebra::Matrix2x3::new(a[0], a[1], 0.0, 0.0, a[0], a[1]);
            let dw = m.transpose() * w / wn;
            let mut ds = State::zeros();
            ds.fixed_rows_mut::<3>(0).copy_from(&(-dw));
            ds[3] = -a[0];
            ds[4] = -a[1];
            let curv = m.transpose() * (Matrix2::identity() / wn - w * w.transpose() / (wn * wn * wn)) * m;
            grad -= ds * (mu / s);
            hess += ds * ds.transpose() * (mu / (s * s));
            let mut block = hess.fixed_view_mut::<3, 3>(0, 0);
            block += curv * (mu / s);
        }
        (grad, hess)
    }
}

/// Initial interior point: `center`, `B = r I` with `r` half the smallest
/// edge distance from `center`.
fn initial_state(planes: &[(Vector2<f64>, f64)], center: Vector2<f64>) -> Result<State> {
    let r = planes
        .iter()
        .map(|(a, rhs)| rhs - a.dot(&center))
        .fold(f64::INFINITY, f64::min);
    if !(r > 0.0) {
        return Err(Error::InvalidArgument("initial center is not interior".into()));
    }
    Ok(State::new(0.5 * r, 0.0, 0.5 * r, center[0], center[1]))
}

/// Maximal-area ellipse inside a convex polygon by a log-barrier path
/// (`mu` from 1 to 1e-9, factor 0.2) with damped Newton steps.
pub fn john_ellipse(polygon: &[[f64; 2]]) -> Result<JohnEllipse> {
    let planes = polygon_halfplanes(polygon)?;
    let n = polygon.len() as f64;
    let mean = polygon
        .iter()
        .fold(Vector2::zeros(), |acc, p| acc + Vector2::new(p[0], p[1]))
        / n;
    john_ellipse_from(&planes, initial_state(&planes, mean)?)
}

/// Same as [`john_ellipse`] from a chosen interior starting center and radius
/// fraction `shrink` in `(0, 1)` of the largest inscribed disc about it.
pub fn john_ellipse_with_start(polygon: &[[f64; 2]], center: [f64; 2], shrink: f64) -> Result<JohnEllipse> {
    let planes = polygon_halfplanes(polygon)?;
    let mut x = initial_state(&planes, Vector2::new(center[0], center[1]))?;
    let f = 2.0 * shrink.clamp(1e-3, 0.999);
    x[0] *= f;
    x[2] *= f;
    john_ellipse_from(&planes, x)
}

fn john_ellipse_from(planes: &[(Vector2<f64>, f64)], mut x: State) -> Result<JohnEllipse> {
    // Rescale to unit size so the barrier schedule is size independent.
    let scale = planes.iter().map(|p| p.1.abs()).fold(0.0, f64::max).max(
        (x[3] * x[3] + x[4] * x[4]).sqrt(),
    );
    let scale = if scale > 0.0 { scale } else { 1.0 };
    let scaled: Vec<(Vector2<f64>, f64)> = planes.iter().map(|(a, b)| (*a, b / scale)).collect();
    x /= scale;
    let barrier = Barrier { planes: &scaled };
    let mut mu = MU_START;
    let mut iterations = 0;
    loop {
        let mut converged = false;
        for _ in 0..200 {
            iterations += 1;
            let (g, h) = barrier.derivatives(&x, mu);
            let Some(chol) = h.cholesky() else {
                return Err(Error::NotConverged {
                    what: "John ellipse barrier Newton",
                    iterations,
                    residual: g.norm(),
                });
            };
            let step = -chol.solve(&g);
            let decrement = -g.dot(&step);
            if decrement <= 1e-20 {
                converged = true;
                break;
            }
            if decrement <= 1e-12 && barrier.slacks_ok(&(x + step)) {
                // Quadratic regime: one more full step is below round-off.
                x += step;
                converged = true;
                break;
            }
            let f0 = barrier.value(&x, mu);
            let mut alpha = 1.0;
            let mut moved = false;
            for _ in 0..60 {
                let cand = x + step * alpha;
                if barrier.slacks_ok(&cand) && barrier.value(&cand, mu) <= f0 - 0.25 * alpha * decrement {
                    x = cand;
                    moved = true;
                    break;
                }
                alpha *= 0.5;
            }
            if !moved {
                // Round-off floor: the decrement is as small as it gets.
                converged = decrement <= 1e-12;
                break;
            }
        }
        if !converged {
            return Err(Error::NotConverged {
                what: "John ellipse barrier Newton",
                iterations,
                residual: mu,
            });
        }
        if mu <= MU_END {
            break;
        }
        mu = (mu * MU_FACTOR).max(MU_END);
    }
    let b = shape_of(&x) * scale;
    let c = Vector2::new(x[3], x[4]) * scale;
    let max_violation = planes
        .iter()
        .map(|(a, rhs)| a.dot(&c) + (b * a).norm() - rhs)
        .fold(f64::NEG_INFINITY, f64::max)
        .max(0.0);
    Ok(JohnEllipse {
        center: [c[0], c[1]],
        shape: [[b[(0, 0)], b[(0, 1)]], [b[(1, 0)], b[(1, 1)]]],
        area: PI * b.determinant(),
        max_violation,
        iterations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JohnCheck {
    pub is_john: bool,
    pub john_area: f64,
    pub section_area: f64,
    pub ratio: f64,
}

/// Whether the section is (up to `tol` in area) its own John ellipse.
pub fn section_is_john(
    body: &ConvexBody,
    point: &Vector,
    u: &Vector,
    v: &Vector,
    resolution: usize,
    tol: f64,
) -> Result<JohnCheck> {
    let s = section(body, point, u, v, resolution)?;
    let e = john_ellipse(&s.polygon)?;
    let section_area = s.area();
    let ratio = e.area / section_area;
    Ok(JohnCheck {
        is_john: e.area >= (1.0 - tol) * section_area,
        john_area: e.area,
        section_area,
        ratio,
    })
}
