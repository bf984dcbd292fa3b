use std::f64::consts::PI;

use nalgebra::SVD;
use serde::Serialize;

use crate::symplectic::omega_raw;
use crate::{Error, Matrix, Result, Vector};

/// Relative residual at or below which a curve counts as planar.
pub const PLANAR_TOL: f64 = 1e-6;
/// Relative residual at or above which a curve counts as non-planar.
pub const NON_PLANAR_TOL: f64 = 1e-3;
/// Relative ellipse residual at or below which a conic fit is accepted.
pub const ELLIPSE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Planarity {
    Planar,
    NonPlanar,
    Indeterminate,
}

/// Best-fit affine 2-plane of a point cloud.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneFit {
    pub center: Vector,
    pub basis: [Vector; 2],
    /// RMS distance of the points to the plane.
    pub residual: f64,
    /// Approximate diameter of the point cloud.
    pub diameter: f64,
}

impl PlaneFit {
    pub fn relative_residual(&self) -> f64 {
        self.residual / self.diameter
    }

    pub fn verdict(&self) -> Planarity {
        let r = self.relative_residual();
        if r <= PLANAR_TOL {
            Planarity::Planar
        } else if r >= NON_PLANAR_TOL {
            Planarity::NonPlanar
        } else {
            Planarity::Indeterminate
        }
    }

    /// Coordinates of `z` in the plane basis.
    pub fn coordinates(&self, z: &Vector) -> (f64, f64) {
        let y = z - &self.center;
        (y.dot(&self.basis[0]), y.dot(&self.basis[1]))
    }

    pub fn lift(&self, x: f64, y: f64) -> Vector {
        &self.center + &self.basis[0] * x + &self.basis[1] * y
    }

    /// `omega(b_1, b_2)`; zero for Lagrangian planes.
    pub fn omega(&self) -> f64 {
        omega_raw(&self.basis[0], &self.basis[1])
    }
}

fn cloud_diameter(points: &[Vector], center: &Vector) -> f64 {
    let far = points
        .iter()
        .max_by(|a, b| (*a - center).norm().total_cmp(&(*b - center).norm()))
        .expect("non-empty");
    points.iter().map(|p| (p - far).norm()).fold(0.0, f64::max)
}

/// Mean and top two right singular directions of the centered samples.
pub fn fit_plane(samples: &[Vector]) -> Result<PlaneFit> {
    if samples.len() < 4 {
        return Err(Error::DegenerateCurve("plane fit needs at least 4 samples".into()));
    }
    let dim = samples[0].len();
    let n = samples.len();
    let center = samples.iter().fold(Vector::zeros(dim), |acc, s| acc + s) / n as f64;
    let mut m = Matrix::zeros(n, dim);
    for (i, s) in samples.iter().enumerate() {
        m.row_mut(i).copy_from(&(s - &center).transpose());
    }
    let svd = SVD::new(m, false, true);
    let vt = svd.v_t.expect("requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let s0 = svd.singular_values[order[0]];
    let s1 = svd.singular_values[order[1]];
    if !(s1 > 1e-12 * s0) || s0 == 0.0 {
        return Err(Error::DegenerateCurve("samples do not span a plane".into()));
    }
    let b0 = vt.row(order[0]).transpose().normalize();
    let mut b1 = vt.row(order[1]).transpose();
    b1 -= &b0 * b0.dot(&b1);
    let b1 = b1.normalize();
    let sq: f64 = samples
        .iter()
        .map(|s| {
            let y = s - &center;
            let inplane = &b0 * y.dot(&b0) + &b1 * y.dot(&b1);
            (y - inplane).norm_squared()
        })
        .sum();
    Ok(PlaneFit {
        diameter: cloud_diameter(samples, &center),
        center,
        basis: [b0, b1],
        residual: (sq / n as f64).sqrt(),
    })
}

/// Least-squares conic through planar samples.
#[derive(Debug, Clone, PartialEq)]
pub struct EllipseFit {
    pub plane: PlaneFit,
    /// `a x^2 + b xy + c y^2 + d x + e y + f`, unit norm, in plane coordinates.
    pub conic: [f64; 6],
    /// Ellipse center in plane coordinates.
    pub center: (f64, f64),
    /// RMS radial deviation from the fitted ellipse, in length units.
    pub residual: f64,
    /// Semi-axes, major first.
    pub semi_axes: (f64, f64),
    pub area: f64,
    /// `omega(b_1, b_2)` times the signed area traversed by the samples;
    /// equals the action of a closed orbit lying on the ellipse.
    pub omega_area: f64,
}

impl EllipseFit {
    pub fn relative_residual(&self) -> f64 {
        self.residual / self.plane.diameter
    }

    pub fn accepted(&self) -> bool {
        self.relative_residual() <= ELLIPSE_TOL
    }
}

/// Algebraic conic fit in plane coordinates (smallest right singular vector
/// of the design matrix on normalized coordinates).
pub fn fit_ellipse(samples: &[Vector], plane: &PlaneFit) -> Result<EllipseFit> {
    if samples.len() < 6 {
        return Err(Error::DegenerateCurve("ellipse fit needs at least 6 samples".into()));
    }
    if plane.verdict() == Planarity::NonPlanar {
        return Err(Error::InvalidArgument("curve is not planar".into()));
    }
    let pts: Vec<(f64, f64)> = samples.iter().map(|s| plane.coordinates(s)).collect();
    let n = pts.len();
    let scale = (pts.iter().map(|&(x, y)| x * x + y * y).sum::<f64>() / n as f64).sqrt();
    if scale == 0.0 {
        return Err(Error::DegenerateCurve("all samples coincide".into()));
    }
    let mut design = Matrix::zeros(n, 6);
    for (i, &(x, y)) in pts.iter().enumerate() {
        let (x, y) = (x / scale, y / scale);
        design
            .row_mut(i)
            .copy_from_slice(&[x * x, x * y, y * y, x, y, 1.0]);
    }
    let svd = SVD::new(design.transpose() * &design, false, true);
    let vt = svd.v_t.expect("requested");
    let imin = svd.singular_values.imin();
    let mut k: Vec<f64> = vt.row(imin).iter().copied().collect();
    if k[0] + k[2] < 0.0 {
        k.iter_mut().for_each(|c| *c = -*c);
    }
    let (a, b, c, d, e, f) = (k[0], k[1], k[2], k[3], k[4], k[5]);
    let det = a * c - 0.25 * b * b;
    if !(det > 0.0) {
        return Err(Error::NotElliptic);
    }
    // Center solves Q x0 = -(d, e)/2.
    let x0 = (-0.5 * d * c + 0.25 * b * e) / det;
    let y0 = (-0.5 * e * a + 0.25 * b * d) / det;
    let level = a * x0 * x0 + b * x0 * y0 + c * y0 * y0 - f;
    if !(level > 0.0) {
        return Err(Error::NotElliptic);
    }
    let tr = a + c;
    let disc = ((a - c) * (a - c) + b * b).sqrt();
    let (lmin, lmax) = (0.5 * (tr - disc), 0.5 * (tr + disc));
    let major = (level / lmin).sqrt() * scale;
    let minor = (level / lmax).sqrt() * scale;
    let mean_radius = (major * minor).sqrt();
    let sq: f64 = pts
        .iter()
        .map(|&(x, y)| {
            let (dx, dy) = (x / scale - x0, y / scale - y0);
            let rho = ((a * dx * dx + b * dx * dy + c * dy * dy) / level).sqrt();
            (rho - 1.0).powi(2)
        })
        .sum();
    let shoelace: f64 = (0..n)
        .map(|i| {
            let (x1, y1) = pts[i];
            let (x2, y2) = pts[(i + 1) % n];
            x1 * y2 - x2 * y1
        })
        .sum();
    let area = PI * major * minor;
    let scale2 = scale * scale;
    Ok(EllipseFit {
        plane: plane.clone(),
        conic: [a / scale2, b / scale2, c / scale2, d / scale, e / scale, f],
        center: (x0 * scale, y0 * scale),
        residual: (sq / n as f64).sqrt() * mean_radius,
        semi_axes: (major, minor),
        area,
        omega_area: plane.omega() * area * shoelace.signum(),
    })
}
