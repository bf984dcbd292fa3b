//! Support functions of level-set bodies and gauges of support-backed bodies.

use nalgebra::{Cholesky, LU};

use super::{ConvexBody, HamiltonianEval, SupportEval};
use crate::{Error, Matrix, Result, Vector};

const NEWTON_MAX_ITER: usize = 50;
const SUPPORT_MAX_ITER: usize = 200;
const NEWTON_TOL: f64 = 1e-13;
/// Accepted when Newton stagnates above `NEWTON_TOL` due to round-off.
const NEWTON_LOOSE_TOL: f64 = 1e-10;

fn solve_spd_or_lu(a: Matrix, b: &Vector) -> Option<Vector> {
    if let Some(ch) = Cholesky::new(a.clone()) {
        return Some(ch.solve(b));
    }
    LU::new(a).solve(b)
}

/// Maximise `<u, x>` over `{H <= 1}` by Newton's method on the boundary.
///
/// The iterate stays on `{H = 1}` through radial projection; the step solves
/// the tangential Newton system `mu P G P d = P u` where `u = mu grad H` at the
/// optimum, damped whenever a step loses objective value.
pub(crate) fn support_by_newton(body: &ConvexBody, u: &Vector) -> Result<SupportEval> {
    let dim = body.dim();
    let uhat = u / u.norm();
    let mut x = body.project_to_boundary(&(body.center() + &uhat))?;
    let mut best_residual = f64::INFINITY;
    let mut damping = 0.0f64;
    for _ in 0..SUPPORT_MAX_ITER {
        let e = body.evaluate_raw(&x)?;
        let gn2 = e.gradient.norm_squared();
        let nhat = &e.gradient / gn2.sqrt();
        let mu = uhat.dot(&e.gradient) / gn2;
        let r = &uhat - &e.gradient * mu;
        let rn = r.norm();
        best_residual = best_residual.min(rn);
        if rn <= NEWTON_TOL {
            return Ok(SupportEval {
                direction: u.clone(),
                value: u.dot(&x),
                maximizer: x,
            });
        }
        let nnt = &nhat * nhat.transpose();
        let p = Matrix::identity(dim, dim) - &nnt;
        let curvature = if mu > 0.0 {
            &p * &e.hessian * &p * mu
        } else {
            Matrix::zeros(dim, dim)
        };
        let f0 = uhat.dot(&x);
        let scale = x.norm().max(1.0);
        let mut moved = false;
        // Levenberg damping: flat stretches of the boundary make the plain
        // Newton step useless, large damping turns it into a short gradient step.
        for _ in 0..60 {
            let a = &curvature + &p * damping + &nnt;
            let step = solve_spd_or_lu(a, &r).unwrap_or_else(|| &r / damping.max(1.0));
            let cand = body.project_to_boundary(&(&x + &step))?;
            if uhat.dot(&cand) >= f0 - 1e-14 * scale {
                x = cand;
                moved = true;
                damping *= 0.1;
                break;
            }
            damping = (damping * 10.0).max(1e-8);
        }
        if !moved {
            break;
        }
    }
    let e = body.evaluate_raw(&x)?;
    let mu = uhat.dot(&e.gradient) / e.gradient.norm_squared();
    let rn = (&uhat - &e.gradient * mu).norm();
    if rn <= NEWTON_LOOSE_TOL {
        return Ok(SupportEval {
            direction: u.clone(),
            value: u.dot(&x),
            maximizer: x,
        });
    }
    Err(Error::NotConverged {
        what: "support Newton",
        iterations: SUPPORT_MAX_ITER,
        residual: best_residual.min(rn),
    })
}

/// Hessian of `h_K` at `u` from the level-set data at the maximizer.
///
/// With `u = mu grad H(x(u))` and `H(x(u)) = 1`, implicit differentiation
/// gives `D x(u) = (G^-1 - G^-1 g g^T G^-1 / g^T G^-1 g) / mu`.
pub(crate) fn support_hessian_from_level_set(u: &Vector, e: &HamiltonianEval) -> Result<Matrix> {
    let g = &e.gradient;
    let mu = u.dot(g) / g.norm_squared();
    let dim = g.len();
    let ginv = match Cholesky::new(e.hessian.clone()) {
        Some(ch) => ch.inverse(),
        None => e
            .hessian
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::InvalidBody("singular Hessian at support point".into()))?,
    };
    let gg = &ginv * g;
    let denom = g.dot(&gg);
    let d = (ginv - &gg * gg.transpose() / denom) / mu;
    debug_assert_eq!(d.nrows(), dim);
    Ok((&d + d.transpose()) * 0.5)
}

impl ConvexBody {
    /// Support evaluation and support Hessian at `u`, sharing the maximizer.
    pub(crate) fn support_and_hessian_raw(&self, u: &Vector) -> Result<(SupportEval, Matrix)> {
        match self.kind() {
            super::BodyKind::SmoothedPolydisc { .. } | super::BodyKind::Egg { .. } => {
                let s = support_by_newton(self, u)?;
                let e = self.evaluate_raw(&s.maximizer)?;
                let d = support_hessian_from_level_set(u, &e)?;
                Ok((s, d))
            }
            _ => Ok((self.support_raw(u)?, self.support_hessian_raw(u)?)),
        }
    }
}

/// Support of `K - K` from the support of `K`.
pub(crate) fn difference_support(base: &ConvexBody, u: &Vector) -> Result<SupportEval> {
    let plus = base.support_raw(u)?;
    let minus = base.support_raw(&(-u))?;
    Ok(SupportEval {
        direction: u.clone(),
        value: plus.value + minus.value,
        maximizer: plus.maximizer - minus.maximizer,
    })
}

/// Gauge of `K - K` at `x` and the unit outer normal at `x / gauge`.
///
/// Solves `b(u) = s x`, `|u| = 1` by Newton, where `b(u) = x_K(u) - x_K(-u)`
/// is the boundary point of `K - K` with outer normal `u`; the gauge is `1/s`.
pub(crate) fn gauge_of_difference(base: &ConvexBody, x: &Vector) -> Result<(f64, Vector)> {
    let dim = x.len();
    let xn2 = x.norm_squared();
    let mut u = x / xn2.sqrt();
    let eval = |u: &Vector| -> Result<(Vector, Matrix)> {
        let (sp, dp) = base.support_and_hessian_raw(u)?;
        let (sm, dm) = base.support_and_hessian_raw(&(-u))?;
        Ok((sp.maximizer - sm.maximizer, dp + dm))
    };
    let (mut b, mut d) = eval(&u)?;
    let mut s = b.dot(x) / xn2;
    let residual = |b: &Vector, s: f64| (b - x * s).norm();
    let mut res = residual(&b, s);
    for _ in 0..NEWTON_MAX_ITER {
        if res <= NEWTON_TOL * b.norm() {
            return Ok((1.0 / s, u));
        }
        let mut jac = Matrix::zeros(dim + 1, dim + 1);
        jac.view_mut((0, 0), (dim, dim)).copy_from(&d);
        for k in 0..dim {
            jac[(k, dim)] = -x[k];
            jac[(dim, k)] = u[k];
        }
        let mut rhs = Vector::zeros(dim + 1);
        rhs.rows_mut(0, dim).copy_from(&(x * s - &b));
        let delta = LU::new(jac).solve(&rhs).ok_or(Error::NotConverged {
            what: "difference-body gauge",
            iterations: 0,
            residual: res,
        })?;
        let du = delta.rows(0, dim).into_owned();
        let ds = delta[dim];
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let cand_u = (&u + &du * alpha).normalize();
            let (cb, cd) = eval(&cand_u)?;
            let cs = s + ds * alpha;
            let cres = residual(&cb, cs);
            if cres < res || cres <= NEWTON_TOL * cb.norm() {
                u = cand_u;
                b = cb;
                d = cd;
                s = cs;
                res = cres;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if res <= NEWTON_LOOSE_TOL * b.norm() && s > 0.0 {
        return Ok((1.0 / s, u));
    }
    Err(Error::NotConverged {
        what: "difference-body gauge",
        iterations: NEWTON_MAX_ITER,
        residual: res,
    })
}
