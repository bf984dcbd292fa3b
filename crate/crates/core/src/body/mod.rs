//! Smooth strongly convex bodies given by 2-homogeneous Hamiltonians.
//!
//! Every body has a homogeneity origin `center` and a defining function `H`
//! with `H(center + t y) = t^2 H(center + y)` for `t > 0`; the body is
//! `{H <= 1}`. Derived bodies (polars, `K - K`) are backed by support
//! functions and evaluate `H` through them.

mod support;
mod volume;

use std::f64::consts::PI;

use nalgebra::Cholesky;
use serde::Serialize;

use crate::symplectic::{apply_j, check_same_dim, j_matrix, validate_dim, AffineSymplecticMap};
use crate::{Error, Matrix, Result, Vector};

pub use volume::{strong_convexity_check, ConvexityReport, VolumeEstimate, VolumeMethod, DEFAULT_MC_SAMPLES};
pub(crate) use volume::{mean_and_stderr, radial_direction};

/// Default threshold on the scaled restricted Hessian.
pub const STRONG_CONVEXITY_EPS: f64 = 1e-6;
/// Tolerance for "on the boundary" preconditions.
pub const BOUNDARY_TOL: f64 = 1e-8;

/// Value, gradient and Hessian of a defining Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianEval {
    pub value: f64,
    pub gradient: Vector,
    pub hessian: Matrix,
    /// Set when the Hessian degenerates at this point (e.g. a vanishing
    /// block of a smoothed polydisc).
    pub degenerate: bool,
}

/// Point of `{H = 1}` with its unit normal and characteristic direction.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryFrame {
    pub point: Vector,
    pub normal: Vector,
    /// `J * normal`.
    pub char_dir: Vector,
}

/// Support function value `h_K(u)` and the boundary point attaining it.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportEval {
    pub direction: Vector,
    pub value: f64,
    pub maximizer: Vector,
}

#[derive(Debug, Clone, PartialEq)]
pub enum BodyKind {
    /// `H(z) = (z - c)^T A (z - c)`.
    Ellipsoid { matrix: Matrix, inverse: Matrix },
    /// `H(z) = (sum_i (|y_i|^2 / r_i^2)^m)^(1/m)` over the `(p_i, q_i)` blocks of `y = z - c`.
    SmoothedPolydisc { exponent: u32, radii: Vec<f64> },
    /// `H(z) = |y|^2 + eps <w, y>^3 / |y|`: a smooth body without central symmetry.
    Egg { axis: Vector, eps: f64 },
    /// `Phi(K)` for an affine symplectic `Phi`.
    Transformed {
        base: Box<ConvexBody>,
        map: AffineSymplecticMap,
        inverse: AffineSymplecticMap,
    },
    /// Euclidean polar `K°` of a body whose homogeneity origin is `0`.
    Polar { base: Box<ConvexBody> },
    /// `K - K`, support `h_K(u) + h_K(-u)`.
    MinkowskiDifference { base: Box<ConvexBody> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvexBody {
    kind: BodyKind,
    center: Vector,
}

/// Short description used in reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BodySummary {
    pub kind: String,
    pub dim: usize,
    pub center: Vec<f64>,
}

fn is_symmetric(a: &Matrix) -> bool {
    let scale = a.amax().max(1.0);
    (a - a.transpose()).amax() <= 1e-12 * scale
}

/// Symmetric positive definite check; returns the inverse.
pub(crate) fn spd_inverse(a: &Matrix) -> Result<Matrix> {
    if !a.is_square() || !is_symmetric(a) {
        return Err(Error::NotPositiveDefinite);
    }
    let eig = a.clone().symmetric_eigenvalues();
    let min = eig.min();
    let max = eig.max();
    if !(min > 1e-14 * max.max(f64::MIN_POSITIVE)) {
        return Err(Error::NotPositiveDefinite);
    }
    let chol = Cholesky::new(a.clone()).ok_or(Error::NotPositiveDefinite)?;
    let inv = chol.inverse();
    Ok((&inv + inv.transpose()) * 0.5)
}

impl ConvexBody {
    /// Ellipsoid `{(z - c)^T A (z - c) <= 1}`. `A` must be symmetric positive definite.
    pub fn ellipsoid(matrix: Matrix, center: Vector) -> Result<Self> {
        validate_dim(matrix.nrows())?;
        check_same_dim(matrix.nrows(), center.len())?;
        let inverse = spd_inverse(&matrix).map_err(|_| {
            Error::InvalidBody("ellipsoid matrix must be symmetric positive definite".into())
        })?;
        Ok(Self {
            kind: BodyKind::Ellipsoid { matrix, inverse },
            center,
        })
    }

    /// `sum_i a_i (p_i^2 + q_i^2) <= 1`, centered at the origin.
    pub fn ellipsoid_from_coefficients(coefficients: &[f64]) -> Result<Self> {
        let dim = 2 * coefficients.len();
        let diag = Vector::from_iterator(dim, coefficients.iter().flat_map(|&a| [a, a]));
        Self::ellipsoid(Matrix::from_diagonal(&diag), Vector::zeros(dim))
    }

    /// Unit ball in `R^{2n}`.
    pub fn ball(n: usize) -> Result<Self> {
        Self::ellipsoid_from_coefficients(&vec![1.0; n])
    }

    pub fn smoothed_polydisc(exponent: u32, radii: Vec<f64>, center: Vector) -> Result<Self> {
        if exponent < 2 {
            return Err(Error::InvalidBody(format!(
                "smoothing exponent must be at least 2, got {exponent}"
            )));
        }
        if radii.iter().any(|&r| !(r > 0.0) || !r.is_finite()) {
            return Err(Error::InvalidBody("polydisc radii must be positive".into()));
        }
        validate_dim(2 * radii.len())?;
        check_same_dim(2 * radii.len(), center.len())?;
        Ok(Self {
            kind: BodyKind::SmoothedPolydisc { exponent, radii },
            center,
        })
    }

    /// A non-symmetric perturbation of the unit ball, rejected unless the
    /// sampled strong-convexity check passes.
    pub fn egg(axis: Vector, eps: f64, center: Vector) -> Result<Self> {
        validate_dim(axis.len())?;
        check_same_dim(axis.len(), center.len())?;
        let norm = axis.norm();
        if !(norm > 0.0) {
            return Err(Error::ZeroDirection);
        }
        if !(0.0..0.5).contains(&eps) {
            return Err(Error::InvalidBody(format!("egg eps must lie in [0, 0.5), got {eps}")));
        }
        let body = Self {
            kind: BodyKind::Egg {
                axis: axis / norm,
                eps,
            },
            center,
        };
        let report = strong_convexity_check(&body, 256, 0xe66, STRONG_CONVEXITY_EPS)?;
        if !report.pass {
            return Err(Error::InvalidBody(format!(
                "egg is not strongly convex (min scaled curvature {:e})",
                report.min_tangential_eigenvalue
            )));
        }
        Ok(body)
    }

    /// `map(K)`.
    pub fn transformed(base: ConvexBody, map: AffineSymplecticMap) -> Result<Self> {
        check_same_dim(base.dim(), map.dim())?;
        let center = map.apply(&base.center);
        let inverse = map.inverse();
        Ok(Self {
            kind: BodyKind::Transformed {
                base: Box::new(base),
                map,
                inverse,
            },
            center,
        })
    }

    pub fn kind(&self) -> &BodyKind {
        &self.kind
    }

    pub fn center(&self) -> &Vector {
        &self.center
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// Number of degrees of freedom `n` (`dim = 2n`).
    pub fn n(&self) -> usize {
        self.dim() / 2
    }

    pub fn label(&self) -> String {
        match &self.kind {
            BodyKind::Ellipsoid { .. } => "ellipsoid".into(),
            BodyKind::SmoothedPolydisc { exponent, .. } => format!("smoothed_polydisc(m={exponent})"),
            BodyKind::Egg { eps, .. } => format!("egg(eps={eps})"),
            BodyKind::Transformed { base, .. } => format!("transformed({})", base.label()),
            BodyKind::Polar { base } => format!("polar({})", base.label()),
            BodyKind::MinkowskiDifference { base } => format!("difference({})", base.label()),
        }
    }

    pub fn summary(&self) -> BodySummary {
        BodySummary {
            kind: self.label(),
            dim: self.dim(),
            center: self.center.iter().copied().collect(),
        }
    }

    /// `(A, c)` when the body is an ellipsoid, possibly after resolving
    /// transforms, polars and differences of ellipsoids.
    pub fn as_ellipsoid(&self) -> Option<(Matrix, Vector)> {
        match &self.kind {
            BodyKind::Ellipsoid { matrix, .. } => Some((matrix.clone(), self.center.clone())),
            BodyKind::Transformed { base, map, inverse } => {
                let (a, c) = base.as_ellipsoid()?;
                let minv = inverse.linear();
                let a2 = minv.transpose() * a * minv;
                Some(((&a2 + a2.transpose()) * 0.5, map.apply(&c)))
            }
            BodyKind::Polar { base } => {
                let (a, c) = base.as_ellipsoid()?;
                if c.amax() > 0.0 {
                    return None;
                }
                Some((spd_inverse(&a).ok()?, c))
            }
            BodyKind::MinkowskiDifference { base } => {
                let (a, c) = base.as_ellipsoid()?;
                Some((a / 4.0, Vector::zeros(c.len())))
            }
            _ => None,
        }
    }

    /// Whether the body is symmetric about its homogeneity origin, as far as
    /// its construction shows.
    pub fn is_centrally_symmetric(&self) -> bool {
        match &self.kind {
            BodyKind::Ellipsoid { .. } | BodyKind::SmoothedPolydisc { .. } => true,
            BodyKind::Egg { eps, .. } => *eps == 0.0,
            BodyKind::Transformed { base, .. } | BodyKind::Polar { base } => {
                base.is_centrally_symmetric()
            }
            BodyKind::MinkowskiDifference { .. } => true,
        }
    }

    fn check_point(&self, z: &Vector) -> Result<()> {
        check_same_dim(self.dim(), z.len())
    }

    /// `H(z)` only.
    pub fn value(&self, z: &Vector) -> Result<f64> {
        self.check_point(z)?;
        self.value_raw(z)
    }

    pub(crate) fn value_raw(&self, z: &Vector) -> Result<f64> {
        match &self.kind {
            BodyKind::Ellipsoid { matrix, .. } => {
                let y = z - &self.center;
                Ok(y.dot(&(matrix * &y)))
            }
            BodyKind::SmoothedPolydisc { exponent, radii } => {
                Ok(polydisc_value(*exponent, radii, &(z - &self.center)))
            }
            BodyKind::Egg { axis, eps } => {
                let y = z - &self.center;
                let r = y.norm();
                if r == 0.0 {
                    return Ok(0.0);
                }
                let s = axis.dot(&y);
                Ok(r * r + eps * s * s * s / r)
            }
            BodyKind::Transformed { base, inverse, .. } => base.value_raw(&inverse.apply(z)),
            BodyKind::Polar { base } => {
                if z.amax() == 0.0 {
                    return Ok(0.0);
                }
                let h = base.support_raw(z)?.value;
                Ok(h * h)
            }
            BodyKind::MinkowskiDifference { base } => {
                if z.amax() == 0.0 {
                    return Ok(0.0);
                }
                let (gauge, _) = support::gauge_of_difference(base, z)?;
                Ok(gauge * gauge)
            }
        }
    }

    /// `H(z)` and `grad H(z)`.
    pub fn gradient(&self, z: &Vector) -> Result<(f64, Vector)> {
        self.check_point(z)?;
        self.gradient_raw(z)
    }

    pub(crate) fn gradient_raw(&self, z: &Vector) -> Result<(f64, Vector)> {
        match &self.kind {
            BodyKind::Ellipsoid { matrix, .. } => {
                let y = z - &self.center;
                let ay = matrix * &y;
                Ok((y.dot(&ay), ay * 2.0))
            }
            BodyKind::Transformed { base, inverse, .. } => {
                let (v, g) = base.gradient_raw(&inverse.apply(z))?;
                Ok((v, inverse.linear().tr_mul(&g)))
            }
            BodyKind::Polar { base } => {
                let s = base.support_raw(z)?;
                Ok((s.value * s.value, s.maximizer * (2.0 * s.value)))
            }
            BodyKind::MinkowskiDifference { base } => {
                let (gauge, normal) = support::gauge_of_difference(base, z)?;
                let h = support::difference_support(base, &normal)?.value;
                Ok((gauge * gauge, normal * (2.0 * gauge / h)))
            }
            _ => {
                let e = self.evaluate_raw(z)?;
                Ok((e.value, e.gradient))
            }
        }
    }

    /// Value, gradient and Hessian of `H` at `z`.
    pub fn evaluate(&self, z: &Vector) -> Result<HamiltonianEval> {
        self.check_point(z)?;
        self.evaluate_raw(z)
    }

    pub(crate) fn evaluate_raw(&self, z: &Vector) -> Result<HamiltonianEval> {
        match &self.kind {
            BodyKind::Ellipsoid { matrix, .. } => {
                let y = z - &self.center;
                let ay = matrix * &y;
                Ok(HamiltonianEval {
                    value: y.dot(&ay),
                    gradient: ay * 2.0,
                    hessian: matrix * 2.0,
                    degenerate: false,
                })
            }
            BodyKind::SmoothedPolydisc { exponent, radii } => {
                Ok(polydisc_eval(*exponent, radii, &(z - &self.center)))
            }
            BodyKind::Egg { axis, eps } => Ok(egg_eval(axis, *eps, &(z - &self.center))),
            BodyKind::Transformed { base, inverse, .. } => {
                let e = base.evaluate_raw(&inverse.apply(z))?;
                let minv = inverse.linear();
                Ok(HamiltonianEval {
                    value: e.value,
                    gradient: minv.tr_mul(&e.gradient),
                    hessian: minv.transpose() * e.hessian * minv,
                    degenerate: e.degenerate,
                })
            }
            BodyKind::Polar { base } => {
                let s = base.support_raw(z)?;
                let d2h = base.support_hessian_raw(z)?;
                let x = &s.maximizer;
                Ok(HamiltonianEval {
                    value: s.value * s.value,
                    gradient: x * (2.0 * s.value),
                    hessian: x * x.transpose() * 2.0 + d2h * (2.0 * s.value),
                    degenerate: false,
                })
            }
            BodyKind::MinkowskiDifference { .. } => {
                // Hessian by central differences of the envelope gradient.
                let (value, gradient) = self.gradient_raw(z)?;
                let dim = self.dim();
                let h = 1e-5 * z.norm().max(1e-3);
                let mut hessian = Matrix::zeros(dim, dim);
                for k in 0..dim {
                    let mut zp = z.clone();
                    let mut zm = z.clone();
                    zp[k] += h;
                    zm[k] -= h;
                    let col = (self.gradient_raw(&zp)?.1 - self.gradient_raw(&zm)?.1) / (2.0 * h);
                    hessian.set_column(k, &col);
                }
                let hessian = (&hessian + hessian.transpose()) * 0.5;
                Ok(HamiltonianEval {
                    value,
                    gradient,
                    hessian,
                    degenerate: false,
                })
            }
        }
    }

    /// `center + d / sqrt(H(center + d))`: the boundary point on the ray from
    /// the center in direction `d`.
    pub fn boundary_point(&self, direction: &Vector) -> Result<Vector> {
        self.check_point(direction)?;
        if direction.amax() == 0.0 {
            return Err(Error::ZeroDirection);
        }
        let probe = &self.center + direction;
        let h = self.value_raw(&probe)?;
        Ok(&self.center + direction / h.sqrt())
    }

    /// Radially rescale `z` about the center onto `{H = 1}`.
    pub(crate) fn project_to_boundary(&self, z: &Vector) -> Result<Vector> {
        let d = z - &self.center;
        if d.amax() == 0.0 {
            return Err(Error::ZeroDirection);
        }
        let h = self.value_raw(z)?;
        Ok(&self.center + d / h.sqrt())
    }

    /// Normal and characteristic direction at a boundary point.
    pub fn frame_at(&self, z: &Vector) -> Result<BoundaryFrame> {
        self.check_point(z)?;
        let (value, gradient) = self.gradient_raw(z)?;
        let deviation = (value - 1.0).abs();
        if !(deviation <= BOUNDARY_TOL) {
            return Err(Error::OffBoundary { deviation });
        }
        let normal = gradient.normalize();
        let char_dir = apply_j(&normal);
        Ok(BoundaryFrame {
            point: z.clone(),
            normal,
            char_dir,
        })
    }

    /// Support function `h_K(u) = max_{x in K} <u, x>` and its maximizer.
    pub fn support(&self, direction: &Vector) -> Result<SupportEval> {
        self.check_point(direction)?;
        if direction.amax() == 0.0 {
            return Err(Error::ZeroDirection);
        }
        self.support_raw(direction)
    }

    pub(crate) fn support_raw(&self, u: &Vector) -> Result<SupportEval> {
        match &self.kind {
            BodyKind::Ellipsoid { inverse, .. } => {
                let au = inverse * u;
                let s = u.dot(&au).sqrt();
                Ok(SupportEval {
                    direction: u.clone(),
                    value: u.dot(&self.center) + s,
                    maximizer: &self.center + au / s,
                })
            }
            BodyKind::SmoothedPolydisc { .. } | BodyKind::Egg { .. } => {
                support::support_by_newton(self, u)
            }
            BodyKind::Transformed { base, map, .. } => {
                let s = base.support_raw(&map.linear().tr_mul(u))?;
                Ok(SupportEval {
                    direction: u.clone(),
                    value: s.value + map.translation().dot(u),
                    maximizer: map.apply(&s.maximizer),
                })
            }
            BodyKind::Polar { base } => {
                let (v, g) = base.gradient_raw(u)?;
                let gauge = v.sqrt();
                Ok(SupportEval {
                    direction: u.clone(),
                    value: gauge,
                    maximizer: g / (2.0 * gauge),
                })
            }
            BodyKind::MinkowskiDifference { base } => support::difference_support(base, u),
        }
    }

    /// Hessian of the support function at `u` (it annihilates `u`).
    pub fn support_hessian(&self, direction: &Vector) -> Result<Matrix> {
        self.check_point(direction)?;
        if direction.amax() == 0.0 {
            return Err(Error::ZeroDirection);
        }
        self.support_hessian_raw(direction)
    }

    pub(crate) fn support_hessian_raw(&self, u: &Vector) -> Result<Matrix> {
        match &self.kind {
            BodyKind::Ellipsoid { inverse, .. } => {
                let bu = inverse * u;
                let s = u.dot(&bu).sqrt();
                Ok(inverse / s - &bu * bu.transpose() / (s * s * s))
            }
            BodyKind::SmoothedPolydisc { .. } | BodyKind::Egg { .. } => {
                let s = support::support_by_newton(self, u)?;
                let e = self.evaluate_raw(&s.maximizer)?;
                support::support_hessian_from_level_set(u, &e)
            }
            BodyKind::Transformed { base, map, .. } => {
                let m = map.linear();
                let inner = base.support_hessian_raw(&m.tr_mul(u))?;
                Ok(m * inner * m.transpose())
            }
            BodyKind::Polar { base } => {
                let e = base.evaluate_raw(u)?;
                let g = e.value.sqrt();
                Ok(&e.hessian / (2.0 * g)
                    - &e.gradient * e.gradient.transpose() / (4.0 * e.value * g))
            }
            BodyKind::MinkowskiDifference { base } => {
                Ok(base.support_hessian_raw(u)? + base.support_hessian_raw(&(-u))?)
            }
        }
    }

    /// Directions used as deterministic starts in addition to random ones:
    /// the images of the coordinate block axes.
    pub fn canonical_directions(&self) -> Vec<Vector> {
        let dim = self.dim();
        match &self.kind {
            BodyKind::Transformed { base, map, .. } => base
                .canonical_directions()
                .into_iter()
                .map(|d| map.apply_linear(&d))
                .collect(),
            _ => (0..dim)
                .step_by(2)
                .map(|k| crate::symplectic::basis(dim, k))
                .collect(),
        }
    }
}

/// `K°`, or `K^omega = J K°` when `symplectic` is set.
///
/// Ellipsoids map to ellipsoids with the inverse matrix; other bodies get a
/// support-backed polar with `H° = h_K^2`.
pub fn polar_body(body: &ConvexBody, symplectic: bool) -> Result<ConvexBody> {
    if body.center().amax() > 1e-12 {
        return Err(Error::NotCentered);
    }
    let polar = match body.as_ellipsoid() {
        Some((a, _)) => ConvexBody::ellipsoid(spd_inverse(&a)?, Vector::zeros(body.dim()))?,
        None => ConvexBody {
            kind: BodyKind::Polar {
                base: Box::new(body.clone()),
            },
            center: Vector::zeros(body.dim()),
        },
    };
    if !symplectic {
        return Ok(polar);
    }
    let j = AffineSymplecticMap::linear_only(j_matrix(body.dim()))?;
    match polar.as_ellipsoid() {
        Some(_) => {
            let rotated = ConvexBody::transformed(polar, j)?;
            let (a, c) = rotated.as_ellipsoid().expect("ellipsoid image");
            ConvexBody::ellipsoid(a, c)
        }
        None => ConvexBody::transformed(polar, j),
    }
}

/// `K - K`. Ellipsoids give the centered ellipsoid `2(K - c)`.
pub fn minkowski_difference(body: &ConvexBody) -> Result<ConvexBody> {
    if let Some((a, _)) = body.as_ellipsoid() {
        return ConvexBody::ellipsoid(a / 4.0, Vector::zeros(body.dim()));
    }
    if let BodyKind::Transformed { base, map, .. } = body.kind() {
        // Phi(K) - Phi(K) = M (K - K): translations cancel.
        let diff = minkowski_difference(base)?;
        return ConvexBody::transformed(diff, AffineSymplecticMap::linear_only(map.linear().clone())?);
    }
    Ok(ConvexBody {
        kind: BodyKind::MinkowskiDifference {
            base: Box::new(body.clone()),
        },
        center: Vector::zeros(body.dim()),
    })
}

/// `(pi^n / n!) / sqrt(det A)`.
pub fn ellipsoid_volume(a: &Matrix) -> f64 {
    let n = a.nrows() / 2;
    unit_ball_volume(n) / a.determinant().sqrt()
}

/// `pi^n / n!`, the volume of the unit ball in `R^{2n}`.
pub fn unit_ball_volume(n: usize) -> f64 {
    let fact: f64 = (1..=n).map(|k| k as f64).product();
    PI.powi(n as i32) / fact
}

fn polydisc_value(m: u32, radii: &[f64], y: &Vector) -> f64 {
    let s: Vec<f64> = radii
        .iter()
        .enumerate()
        .map(|(i, r)| (y[2 * i] * y[2 * i] + y[2 * i + 1] * y[2 * i + 1]) / (r * r))
        .collect();
    let smax = s.iter().copied().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0.0;
    }
    let t: f64 = s.iter().map(|si| (si / smax).powi(m as i32)).sum();
    smax * t.powf(1.0 / m as f64)
}

// Written in terms of t_i = s_i / max s so large exponents cannot overflow.
fn polydisc_eval(m: u32, radii: &[f64], y: &Vector) -> HamiltonianEval {
    let dim = y.len();
    let mf = m as f64;
    let s: Vec<f64> = radii
        .iter()
        .enumerate()
        .map(|(i, r)| (y[2 * i] * y[2 * i] + y[2 * i + 1] * y[2 * i + 1]) / (r * r))
        .collect();
    let smax = s.iter().copied().fold(0.0, f64::max);
    if smax == 0.0 {
        return HamiltonianEval {
            value: 0.0,
            gradient: Vector::zeros(dim),
            hessian: Matrix::zeros(dim, dim),
            degenerate: true,
        };
    }
    let t: Vec<f64> = s.iter().map(|si| si / smax).collect();
    let tsum: f64 = t.iter().map(|ti| ti.powi(m as i32)).sum();
    let value = smax * tsum.powf(1.0 / mf);

    // ds_i/dy on block i.
    let mut ds = vec![Vector::zeros(dim); radii.len()];
    for (i, r) in radii.iter().enumerate() {
        ds[i][2 * i] = 2.0 * y[2 * i] / (r * r);
        ds[i][2 * i + 1] = 2.0 * y[2 * i + 1] / (r * r);
    }
    let k = tsum.powf(1.0 / mf - 1.0);
    let mut g = Vector::zeros(dim);
    for i in 0..radii.len() {
        g += &ds[i] * t[i].powi(m as i32 - 1);
    }
    let gradient = &g * k;

    let mut hessian = &g * g.transpose() * ((1.0 - mf) / smax * tsum.powf(1.0 / mf - 2.0));
    let mut degenerate = false;
    for (i, r) in radii.iter().enumerate() {
        let curv = t[i].powi(m as i32 - 1);
        if curv < 1e-14 {
            degenerate = true;
        }
        hessian += &ds[i] * ds[i].transpose() * (k * (mf - 1.0) * t[i].powi(m as i32 - 2) / smax);
        for off in 0..2 {
            hessian[(2 * i + off, 2 * i + off)] += k * curv * 2.0 / (r * r);
        }
    }
    HamiltonianEval {
        value,
        gradient,
        hessian,
        degenerate,
    }
}

fn egg_eval(w: &Vector, eps: f64, y: &Vector) -> HamiltonianEval {
    let dim = y.len();
    let r = y.norm();
    if r == 0.0 {
        return HamiltonianEval {
            value: 0.0,
            gradient: Vector::zeros(dim),
            hessian: Matrix::identity(dim, dim) * 2.0,
            degenerate: true,
        };
    }
    let s = w.dot(y);
    let (r2, r3) = (r * r, r * r * r);
    let r5 = r3 * r2;
    let value = r2 + eps * s * s * s / r;
    let gradient = y * 2.0 + (w * (3.0 * s * s / r) - y * (s * s * s / r3)) * eps;
    let wy = w * y.transpose();
    let hessian = Matrix::identity(dim, dim) * 2.0
        + (w * w.transpose() * (6.0 * s / r) - (&wy + wy.transpose()) * (3.0 * s * s / r3)
            - Matrix::identity(dim, dim) * (s * s * s / r3)
            + y * y.transpose() * (3.0 * s * s * s / r5))
            * eps;
    HamiltonianEval {
        value,
        gradient,
        hessian,
        degenerate: false,
    }
}
