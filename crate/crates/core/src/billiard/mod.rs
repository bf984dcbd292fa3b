//! The outer billiard map `x -> 2z - x`, where `z` is the point of `∂K` whose
//! characteristic line passes through `x`, and its diagnostics.

use serde::Serialize;

use crate::body::{ConvexBody, HamiltonianEval};
use crate::characteristics::{fit_plane, PlaneFit};
use crate::symplectic::{apply_j, check_same_dim};
use crate::{Error, Matrix, Result, Vector};

mod good;
mod scan;

pub use good::{good_points, uniform_distribution_check, GoodPoint, GoodPointReport, Uniformity};
pub use scan::{period_scan, symplecticity_defect, symplecticity_defect_of, PeriodScan, PeriodScanEntry};

/// Smallest admissible `H(x) - 1`.
pub const MIN_CLEARANCE: f64 = 1e-6;
/// Tangency residual required for success.
pub const TANGENCY_TOL: f64 = 1e-10;
/// Vertex return distance counted as periodic.
pub const PERIOD_TOL: f64 = 1e-7;
/// Return distances up to this are reported as indeterminate.
pub const PERIOD_GUARD: f64 = 1e-4;
const NEWTON_ITER: usize = 60;
const RESTARTS: usize = 8;
const HOMOTOPY_STAGES: usize = 16;

/// Which tangent ray through `x` is used: `x = z + t J grad H / |grad H|`
/// with `t > 0` (forward) or `t < 0` (reverse, the inverse map).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    #[default]
    Forward,
    Reverse,
}

impl Orientation {
    fn sign(self) -> f64 {
        match self {
            Orientation::Forward => 1.0,
            Orientation::Reverse => -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tangency {
    pub point: Vector,
    /// Signed distance from `point` to `x` along the unit characteristic direction.
    pub t: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// `J g / |g|` and its derivative `J (I - g g^T / |g|^2) G / |g|`.
fn direction_and_jacobian(e: &HamiltonianEval) -> (Vector, Matrix) {
    let g = &e.gradient;
    let gn = g.norm();
    let ghat = g / gn;
    let dim = g.len();
    let proj = Matrix::identity(dim, dim) - &ghat * ghat.transpose();
    let d = proj * &e.hessian / gn;
    let mut jd = Matrix::zeros(dim, dim);
    for c in 0..dim {
        jd.set_column(c, &apply_j(&d.column(c).into_owned()));
    }
    (apply_j(&ghat), jd)
}

/// Newton on `F(z, t) = (x - z - t w(z), H(z) - 1) = 0`.
struct TangencyProblem<'a> {
    x: &'a Vector,
    /// Returns value, gradient and Hessian of the (possibly deformed) Hamiltonian.
    eval: &'a dyn Fn(&Vector) -> Result<HamiltonianEval>,
}

impl TangencyProblem<'_> {
    fn residual(&self, z: &Vector, t: f64) -> Result<(Vector, HamiltonianEval, Vector, Matrix)> {
        let e = (self.eval)(z)?;
        let (w, dw) = direction_and_jacobian(&e);
        let dim = z.len();
        let mut r = Vector::zeros(dim + 1);
        r.rows_mut(0, dim).copy_from(&(self.x - z - &w * t));
        r[dim] = e.value - 1.0;
        Ok((r, e, w, dw))
    }

    /// Newton from `(z, t)`; returns the best iterate and its residual norm.
    fn solve(&self, mut z: Vector, mut t: f64, tol: f64) -> Result<(Vector, f64, f64, usize)> {
        let dim = z.len();
        let (mut r, mut e, mut w, mut dw) = self.residual(&z, t)?;
        let mut rn = r.norm();
        let mut iters = 0;
        let mut polish = 0;
        while iters < NEWTON_ITER {
            if rn <= tol {
                // A couple of extra steps push the residual to round-off.
                polish += 1;
                if polish > 2 {
                    break;
                }
            }
            iters += 1;
            let mut jac = Matrix::zeros(dim + 1, dim + 1);
            let top = -Matrix::identity(dim, dim) - &dw * t;
            jac.view_mut((0, 0), (dim, dim)).copy_from(&top);
            for k in 0..dim {
                jac[(k, dim)] = -w[k];
                jac[(dim, k)] = e.gradient[k];
            }
            let Some(delta) = jac.lu().solve(&(-&r)) else { break };
            let mut alpha = 1.0;
            let mut improved = false;
            for _ in 0..30 {
                let cz = &z + delta.rows(0, dim) * alpha;
                let ct = t + delta[dim] * alpha;
                if let Ok((cr, ce, cw, cdw)) = self.residual(&cz, ct) {
                    let crn = cr.norm();
                    if crn < rn || (crn <= tol && crn <= rn * 1.0001) {
                        z = cz;
                        t = ct;
                        r = cr;
                        e = ce;
                        w = cw;
                        dw = cdw;
                        rn = crn;
                        improved = true;
                        break;
                    }
                }
                alpha *= 0.5;
            }
            if !improved {
                break;
            }
        }
        Ok((z, t, rn, iters))
    }
}

fn check_clearance(body: &ConvexBody, x: &Vector) -> Result<f64> {
    check_same_dim(body.dim(), x.len())?;
    let h = body.value_raw(x)?;
    if !(h - 1.0 >= MIN_CLEARANCE) {
        return Err(Error::InsufficientClearance { gap: h - 1.0 });
    }
    Ok(h)
}

/// Initial guess exact for round balls about the center:
/// `z = c + (I - t J)(x - c) / (1 + t^2)` with `t = ±sqrt(H(x) - 1)`.
fn ball_guess(center: &Vector, x: &Vector, t: f64) -> Vector {
    let y = x - center;
    center + (&y - apply_j(&y) * t) / (1.0 + t * t)
}

/// Solve for the tangency point of `x` on the chosen side.
///
/// Newton from the ball-exact guess; on failure, restarts with rescaled `t`
/// guesses, then a homotopy from a round ball `rho |z - c|^2` to `H`.
pub fn tangency(body: &ConvexBody, x: &Vector, orientation: Orientation) -> Result<Tangency> {
    let hx = check_clearance(body, x)?;
    let sign = orientation.sign();
    let c = body.center().clone();
    let tol = TANGENCY_TOL * (x - &c).norm().max(1.0);
    let eval = |z: &Vector| body.evaluate_raw(z);
    let problem = TangencyProblem { x, eval: &eval };
    // For the ball rho |z - c|^2 <= 1 through x, tau = t sqrt(rho).
    let rho = hx / (x - &c).norm_squared();
    let tau0 = sign * (hx - 1.0).sqrt();
    let mut best: Option<(Vector, f64, f64, usize)> = None;
    let accept = |cand: &(Vector, f64, f64, usize)| cand.2 <= tol && cand.1 * sign > 0.0;
    for scale in [1.0, 0.5, 2.0, 0.25, 4.0, 0.75, 1.5, 0.1, 10.0].into_iter().take(RESTARTS + 1) {
        let tau = tau0 * scale;
        let z = match body.project_to_boundary(&ball_guess(&c, x, tau)) {
            Ok(z) => z,
            Err(_) => continue,
        };
        let cand = problem.solve(z, tau / rho.sqrt(), tol)?;
        if accept(&cand) {
            return Ok(finish(cand));
        }
        if best.as_ref().is_none_or(|b| cand.2 < b.2) {
            best = Some(cand);
        }
    }
    // Homotopy from the ball with the same value at x.
    let mut z = ball_guess(&c, x, tau0);
    let mut t = tau0 / rho.sqrt();
    for stage in 1..=HOMOTOPY_STAGES {
        let s = stage as f64 / HOMOTOPY_STAGES as f64;
        let deformed = |q: &Vector| -> Result<HamiltonianEval> {
            let e = body.evaluate_raw(q)?;
            let y = q - &c;
            let dim = y.len();
            Ok(HamiltonianEval {
                value: (1.0 - s) * rho * y.norm_squared() + s * e.value,
                gradient: &y * (2.0 * (1.0 - s) * rho) + e.gradient * s,
                hessian: Matrix::identity(dim, dim) * (2.0 * (1.0 - s) * rho) + e.hessian * s,
                degenerate: e.degenerate,
            })
        };
        let p = TangencyProblem { x, eval: &deformed };
        let stage_tol = if stage == HOMOTOPY_STAGES { tol } else { tol.max(1e-8) };
        let cand = p.solve(z.clone(), t, stage_tol)?;
        if !(cand.2 <= stage_tol && cand.1 * sign > 0.0) {
            if best.as_ref().is_none_or(|b| cand.2 < b.2) {
                best = Some(cand);
            }
            break;
        }
        if stage == HOMOTOPY_STAGES {
            return Ok(finish(cand));
        }
        z = cand.0;
        t = cand.1;
    }
    let residual = best.map(|b| b.2).unwrap_or(f64::INFINITY);
    Err(Error::NotConverged {
        what: "outer billiard tangency",
        iterations: RESTARTS + 1 + HOMOTOPY_STAGES,
        residual,
    })
}

fn finish(cand: (Vector, f64, f64, usize)) -> Tangency {
    Tangency {
        point: cand.0,
        t: cand.1,
        residual: cand.2,
        iterations: cand.3,
    }
}

/// One application of the outer billiard map.
pub fn step(body: &ConvexBody, x: &Vector, orientation: Orientation) -> Result<Vector> {
    Ok(step_with_tangency(body, x, orientation)?.0)
}

fn step_with_tangency(body: &ConvexBody, x: &Vector, orientation: Orientation) -> Result<(Vector, Tangency)> {
    let tan = tangency(body, x, orientation)?;
    let y = &tan.point * 2.0 - x;
    check_clearance(body, &y)?;
    Ok((y, tan))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "verdict")]
pub enum PeriodVerdict {
    Periodic { period: usize },
    /// Closest return fell inside the guard band.
    Indeterminate { closest_step: usize, distance: f64 },
    Aperiodic,
}

impl PeriodVerdict {
    pub fn period(&self) -> Option<usize> {
        match self {
            PeriodVerdict::Periodic { period } => Some(*period),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OuterBilliardTrajectory {
    pub body_id: String,
    pub orientation: Orientation,
    /// `x_0, x_1, ...`; the last vertex is the return point for periodic orbits.
    pub vertices: Vec<Vector>,
    /// `z_i = (x_i + x_{i+1}) / 2`.
    pub tangencies: Vec<Vector>,
    /// Best-fit plane of the vertices and tangencies, when they span one.
    pub planarity: Option<PlaneFit>,
    pub period: PeriodVerdict,
    /// Closest return to `x_0` and the step it happened at.
    pub closest_return: Option<(usize, f64)>,
    /// Stopped at `n_steps` without returning.
    pub truncated: bool,
}

impl OuterBilliardTrajectory {
    pub fn steps(&self) -> usize {
        self.tangencies.len()
    }

    /// Relative residual of the plane fit, `None` if degenerate.
    pub fn planarity_residual(&self) -> Option<f64> {
        self.planarity.as_ref().map(|p| p.relative_residual())
    }
}

/// Iterate the map up to `n_steps` times, stopping at the first return to
/// within `PERIOD_TOL` of `x0`.
pub fn trajectory(body: &ConvexBody, x0: &Vector, n_steps: usize, orientation: Orientation) -> Result<OuterBilliardTrajectory> {
    check_clearance(body, x0)?;
    let mut vertices = vec![x0.clone()];
    let mut tangencies = Vec::new();
    let mut closest: Option<(usize, f64)> = None;
    let mut period = None;
    let mut x = x0.clone();
    for k in 1..=n_steps {
        let (y, tan) = step_with_tangency(body, &x, orientation)?;
        tangencies.push(tan.point);
        vertices.push(y.clone());
        let d = (&y - x0).norm();
        if closest.is_none_or(|c| d < c.1) {
            closest = Some((k, d));
        }
        if d <= PERIOD_TOL {
            period = Some(k);
            break;
        }
        x = y;
    }
    let verdict = match (period, closest) {
        (Some(k), _) => PeriodVerdict::Periodic { period: k },
        (None, Some((k, d))) if d <= PERIOD_GUARD => PeriodVerdict::Indeterminate {
            closest_step: k,
            distance: d,
        },
        _ => PeriodVerdict::Aperiodic,
    };
    let mut cloud = vertices.clone();
    cloud.extend(tangencies.iter().cloned());
    Ok(OuterBilliardTrajectory {
        body_id: body.label(),
        orientation,
        planarity: fit_plane(&cloud).ok(),
        truncated: period.is_none(),
        vertices,
        tangencies,
        period: verdict,
        closest_return: closest,
    })
}

#[cfg(test)]
mod tests;
