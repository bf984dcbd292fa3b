//! The standard symplectic structure on `R^{2n}` in interleaved coordinates.
//!
//! `J` acts block-wise: `J e_{p_i} = e_{q_i}`, `J e_{q_i} = -e_{p_i}`, and
//! `omega(u, v) = <J u, v> = sum_i (u_{p_i} v_{q_i} - u_{q_i} v_{p_i})`.

use rand::Rng;

use crate::rng::stream_rng;
use crate::{Error, Matrix, Result, Vector};

/// Tolerance on `|M^T J M - J|_max` accepted by [`AffineSymplecticMap::new`].
pub const SYMPLECTIC_TOL: f64 = 1e-10;

/// Check that `dim` is a valid phase-space dimension (even, at least 4).
pub fn validate_dim(dim: usize) -> Result<()> {
    if dim < 4 || !dim.is_multiple_of(2) {
        return Err(Error::InvalidDimension(dim));
    }
    Ok(())
}

pub(crate) fn check_same_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// Apply the complex structure `J`.
pub fn apply_j(v: &Vector) -> Vector {
    debug_assert!(v.len().is_multiple_of(2));
    let mut out = Vector::zeros(v.len());
    for i in (0..v.len()).step_by(2) {
        out[i] = -v[i + 1];
        out[i + 1] = v[i];
    }
    out
}

/// The matrix of `J` in dimension `dim`.
pub fn j_matrix(dim: usize) -> Matrix {
    let mut j = Matrix::zeros(dim, dim);
    for i in (0..dim).step_by(2) {
        j[(i + 1, i)] = 1.0;
        j[(i, i + 1)] = -1.0;
    }
    j
}

#[inline]
pub(crate) fn omega_raw(u: &Vector, v: &Vector) -> f64 {
    let mut acc = 0.0;
    for i in (0..u.len()).step_by(2) {
        acc += u[i] * v[i + 1] - u[i + 1] * v[i];
    }
    acc
}

/// The symplectic form `omega(u, v)`.
pub fn omega(u: &Vector, v: &Vector) -> Result<f64> {
    check_same_dim(u.len(), v.len())?;
    Ok(omega_raw(u, v))
}

/// The Liouville form `lambda_z(v) = omega(z, v) / 2`, so that `d lambda = omega`.
pub fn liouville(z: &Vector, v: &Vector) -> Result<f64> {
    Ok(0.5 * omega(z, v)?)
}

/// A closed polygonal curve, vertices taken cyclically.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedPolyline {
    vertices: Vec<Vector>,
}

impl ClosedPolyline {
    pub fn new(vertices: Vec<Vector>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::DegenerateCurve(format!(
                "closed polyline needs at least 3 vertices, got {}",
                vertices.len()
            )));
        }
        let dim = vertices[0].len();
        for (i, v) in vertices.iter().enumerate() {
            check_same_dim(dim, v.len())?;
            let next = &vertices[(i + 1) % vertices.len()];
            if v == next {
                return Err(Error::DegenerateCurve(format!(
                    "consecutive vertices {i} and {} coincide",
                    (i + 1) % vertices.len()
                )));
            }
        }
        Ok(Self { vertices })
    }

    pub fn vertices(&self) -> &[Vector] {
        &self.vertices
    }

    pub fn reversed(&self) -> Self {
        let mut vertices = self.vertices.clone();
        vertices.reverse();
        Self { vertices }
    }

    pub fn mapped(&self, map: &AffineSymplecticMap) -> Self {
        Self {
            vertices: self.vertices.iter().map(|v| map.apply(v)).collect(),
        }
    }
}

/// Trapezoidal quadrature of the Liouville form around a closed polyline.
///
/// On a straight segment from `a` to `b` the rule is exact and contributes
/// `omega(a, b) / 2`.
pub fn curve_action(curve: &ClosedPolyline) -> f64 {
    let v = curve.vertices();
    let n = v.len();
    (0..n)
        .map(|i| 0.5 * omega_raw(&v[i], &v[(i + 1) % n]))
        .sum()
}

/// Action of a closed curve sampled with tangents, integrating the Liouville
/// form exactly along the cubic Hermite interpolant of each segment.
///
/// `steps[i]` is the parameter increment from `points[i]` to
/// `points[(i + 1) % len]`, and `tangents` are derivatives with respect to
/// that parameter.
pub fn hermite_curve_action(points: &[Vector], tangents: &[Vector], steps: &[f64]) -> Result<f64> {
    let n = points.len();
    if n < 2 || tangents.len() != n || steps.len() != n {
        return Err(Error::InvalidArgument(
            "hermite action needs matching points, tangents and steps".into(),
        ));
    }
    // Three-point Gauss-Legendre on [0, 1]; the integrand is a degree-5 polynomial.
    let r = (0.6f64).sqrt();
    let nodes = [0.5 * (1.0 - r), 0.5, 0.5 * (1.0 + r)];
    let weights = [5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0];
    let mut total = 0.0;
    for i in 0..n {
        let p0 = &points[i];
        let p1 = &points[(i + 1) % n];
        let h = steps[i];
        let m0 = &tangents[i] * h;
        let m1 = &tangents[(i + 1) % n] * h;
        for (&s, &w) in nodes.iter().zip(weights.iter()) {
            let s2 = s * s;
            let s3 = s2 * s;
            let z = p0 * (2.0 * s3 - 3.0 * s2 + 1.0)
                + &m0 * (s3 - 2.0 * s2 + s)
                + p1 * (-2.0 * s3 + 3.0 * s2)
                + &m1 * (s3 - s2);
            let dz = p0 * (6.0 * s2 - 6.0 * s)
                + &m0 * (3.0 * s2 - 4.0 * s + 1.0)
                + p1 * (-6.0 * s2 + 6.0 * s)
                + &m1 * (3.0 * s2 - 2.0 * s);
            total += w * 0.5 * omega_raw(&z, &dz);
        }
    }
    Ok(total)
}

/// `z -> M z + t` with `M^T J M = J`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineSymplecticMap {
    linear: Matrix,
    translation: Vector,
}

/// `|M^T J M - J|_max`.
pub fn symplectic_defect(m: &Matrix) -> f64 {
    let j = j_matrix(m.nrows());
    (m.transpose() * &j * m - j).amax()
}

impl AffineSymplecticMap {
    pub fn new(linear: Matrix, translation: Vector) -> Result<Self> {
        let dim = linear.nrows();
        validate_dim(dim)?;
        check_same_dim(dim, linear.ncols())?;
        check_same_dim(dim, translation.len())?;
        let defect = symplectic_defect(&linear);
        if !(defect <= SYMPLECTIC_TOL) {
            return Err(Error::NotSymplectic { defect });
        }
        Ok(Self {
            linear,
            translation,
        })
    }

    pub fn linear_only(linear: Matrix) -> Result<Self> {
        let dim = linear.nrows();
        Self::new(linear, Vector::zeros(dim))
    }

    pub fn identity(dim: usize) -> Result<Self> {
        validate_dim(dim)?;
        Ok(Self {
            linear: Matrix::identity(dim, dim),
            translation: Vector::zeros(dim),
        })
    }

    pub fn dim(&self) -> usize {
        self.linear.nrows()
    }

    pub fn linear(&self) -> &Matrix {
        &self.linear
    }

    pub fn translation(&self) -> &Vector {
        &self.translation
    }

    pub fn apply(&self, z: &Vector) -> Vector {
        &self.linear * z + &self.translation
    }

    pub fn apply_linear(&self, v: &Vector) -> Vector {
        &self.linear * v
    }

    /// Inverse map. For symplectic `M`, `M^{-1} = -J M^T J`.
    pub fn inverse(&self) -> Self {
        let j = j_matrix(self.dim());
        let inv = -(&j * self.linear.transpose() * &j);
        let translation = -(&inv * &self.translation);
        Self {
            linear: inv,
            translation,
        }
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Self {
        Self {
            linear: &self.linear * &other.linear,
            translation: &self.linear * &other.translation + &self.translation,
        }
    }

    pub fn defect(&self) -> f64 {
        symplectic_defect(&self.linear)
    }
}

/// A reproducible random affine symplectic map of `R^{dim}`.
///
/// Built as a product of exactly symplectic factors: block rotations,
/// unitary mixing of block pairs, symplectic shears `p += S q` and
/// `q += S p` with symmetric `S`, and rescalings `(p, q) -> (c p, q / c)`.
/// Every generator is proportional to `spread`, so `spread = 0` gives the
/// identity.
pub fn random_affine_symplectic(dim: usize, seed: u64, spread: f64) -> Result<AffineSymplecticMap> {
    validate_dim(dim)?;
    if !(spread >= 0.0) || !spread.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "spread must be finite and non-negative, got {spread}"
        )));
    }
    let n = dim / 2;
    let mut rng = stream_rng(seed, 0x5ea1);
    let mut unit = move || rng.random_range(-1.0..1.0);
    let mut m = Matrix::identity(dim, dim);

    let rotate_blocks = |m: &mut Matrix, unit: &mut dyn FnMut() -> f64| {
        let mut r = Matrix::identity(dim, dim);
        for b in 0..n {
            let a = spread * std::f64::consts::PI * unit();
            let (s, c) = a.sin_cos();
            let (p, q) = (2 * b, 2 * b + 1);
            r[(p, p)] = c;
            r[(p, q)] = -s;
            r[(q, p)] = s;
            r[(q, q)] = c;
        }
        *m = &r * &*m;
    };
    let mix_blocks = |m: &mut Matrix, unit: &mut dyn FnMut() -> f64| {
        for i in 0..n {
            for k in (i + 1)..n {
                let a = spread * std::f64::consts::PI * unit();
                let (s, c) = a.sin_cos();
                let mut r = Matrix::identity(dim, dim);
                for off in 0..2 {
                    let (x, y) = (2 * i + off, 2 * k + off);
                    r[(x, x)] = c;
                    r[(x, y)] = -s;
                    r[(y, x)] = s;
                    r[(y, y)] = c;
                }
                *m = &r * &*m;
            }
        }
    };
    let shear = |m: &mut Matrix, unit: &mut dyn FnMut() -> f64, p_from_q: bool| {
        let mut s = Matrix::zeros(n, n);
        for i in 0..n {
            for k in i..n {
                let v = spread * unit();
                s[(i, k)] = v;
                s[(k, i)] = v;
            }
        }
        let mut e = Matrix::identity(dim, dim);
        for i in 0..n {
            for k in 0..n {
                if p_from_q {
                    e[(2 * i, 2 * k + 1)] = s[(i, k)];
                } else {
                    e[(2 * i + 1, 2 * k)] = s[(i, k)];
                }
            }
        }
        *m = &e * &*m;
    };
    let rescale = |m: &mut Matrix, unit: &mut dyn FnMut() -> f64| {
        let mut d = Matrix::identity(dim, dim);
        for b in 0..n {
            let c = (spread * unit()).exp();
            d[(2 * b, 2 * b)] = c;
            d[(2 * b + 1, 2 * b + 1)] = 1.0 / c;
        }
        *m = &d * &*m;
    };

    rotate_blocks(&mut m, &mut unit);
    shear(&mut m, &mut unit, true);
    mix_blocks(&mut m, &mut unit);
    rescale(&mut m, &mut unit);
    shear(&mut m, &mut unit, false);
    rotate_blocks(&mut m, &mut unit);

    let translation = Vector::from_fn(dim, |_, _| spread * unit());
    AffineSymplecticMap::new(m, translation)
}

/// Unit basis vector `e_k` in dimension `dim`.
pub fn basis(dim: usize, k: usize) -> Vector {
    let mut e = Vector::zeros(dim);
    e[k] = 1.0;
    e
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn random_vec(rng: &mut impl Rng, dim: usize) -> Vector {
        Vector::from_fn(dim, |_, _| rng.random_range(-2.0..2.0))
    }

    fn circle(n: usize, a: f64, b: f64) -> ClosedPolyline {
        let pts = (0..n)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / n as f64;
                Vector::from_vec(vec![a * t.cos(), b * t.sin(), 0.0, 0.0])
            })
            .collect();
        ClosedPolyline::new(pts).unwrap()
    }

    #[test]
    fn omega_on_basis_and_antisymmetry() {
        assert_eq!(omega(&basis(4, 0), &basis(4, 1)).unwrap(), 1.0);
        assert_eq!(omega(&basis(4, 1), &basis(4, 0)).unwrap(), -1.0);
        assert_eq!(omega(&basis(4, 2), &basis(4, 3)).unwrap(), 1.0);
        let mut rng = stream_rng(3, 0);
        let u = random_vec(&mut rng, 6);
        assert_eq!(omega(&u, &u).unwrap(), 0.0);
    }

    #[test]
    fn omega_dimension_mismatch() {
        let err = omega(&basis(4, 0), &basis(6, 0)).unwrap_err();
        assert_eq!(err, Error::DimensionMismatch { expected: 4, got: 6 });
    }

    #[test]
    fn j_conventions() {
        assert_eq!(apply_j(&basis(4, 0)), basis(4, 1));
        assert_eq!(apply_j(&basis(4, 3)), -basis(4, 2));
        let mut rng = stream_rng(5, 0);
        for _ in 0..20 {
            let u = random_vec(&mut rng, 4);
            let v = random_vec(&mut rng, 4);
            assert_abs_diff_eq!(apply_j(&apply_j(&u)), -&u, epsilon = 0.0);
            let ju = apply_j(&u);
            assert_abs_diff_eq!(omega(&u, &v).unwrap(), ju.dot(&v), epsilon = 1e-14);
            let w = omega(&ju, &apply_j(&v)).unwrap();
            assert!((w - omega(&u, &v).unwrap()).abs() < 1e-12);
            assert_abs_diff_eq!(&j_matrix(4) * &u, ju, epsilon = 0.0);
        }
        assert_eq!(apply_j(&basis(4, 2)).dot(&basis(4, 3)), 1.0);
    }

    #[test]
    fn liouville_values() {
        assert_eq!(liouville(&basis(4, 0), &basis(4, 1)).unwrap(), 0.5);
        let mut rng = stream_rng(9, 0);
        let v = random_vec(&mut rng, 4);
        assert_eq!(liouville(&Vector::zeros(4), &v).unwrap(), 0.0);
    }

    #[test]
    fn liouville_line_integral_over_flow_circle() {
        // z' = 2 J z from e_p1: z(t) = (cos 2t, sin 2t), t in [0, pi).
        let n = 20_000;
        let h = PI / n as f64;
        let integral: f64 = (0..n)
            .map(|k| {
                let t = (k as f64 + 0.5) * h;
                let z = Vector::from_vec(vec![(2.0 * t).cos(), (2.0 * t).sin(), 0.0, 0.0]);
                let dz = 2.0 * apply_j(&z);
                liouville(&z, &dz).unwrap() * h
            })
            .sum();
        assert!((integral - PI).abs() < 1e-6);
    }

    #[test]
    fn discrete_action_of_polygons() {
        let c = circle(256, 1.0, 1.0);
        assert!((curve_action(&c) - PI).abs() < 1e-3);
        assert!((curve_action(&c.reversed()) + PI).abs() < 1e-3);
        let e = circle(256, 1.0, 2.0);
        assert!((curve_action(&e) - 2.0 * PI).abs() < 1e-3);
    }

    #[test]
    fn hermite_action_is_high_order() {
        let n = 64;
        let h = 2.0 * PI / n as f64;
        let pts: Vec<Vector> = (0..n)
            .map(|k| {
                let t = k as f64 * h;
                Vector::from_vec(vec![t.cos(), 2.0 * t.sin(), 0.0, 0.0])
            })
            .collect();
        let tang: Vec<Vector> = (0..n)
            .map(|k| {
                let t = k as f64 * h;
                Vector::from_vec(vec![-t.sin(), 2.0 * t.cos(), 0.0, 0.0])
            })
            .collect();
        let a = hermite_curve_action(&pts, &tang, &vec![h; n]).unwrap();
        assert!((a - 2.0 * PI).abs() < 1e-5, "{a}");
    }

    #[test]
    fn polyline_validation() {
        assert!(ClosedPolyline::new(vec![basis(4, 0), basis(4, 1)]).is_err());
        assert!(ClosedPolyline::new(vec![basis(4, 0), basis(4, 0), basis(4, 1)]).is_err());
    }

    #[test]
    fn random_maps() {
        let id = random_affine_symplectic(4, 11, 0.0).unwrap();
        assert_eq!(id.linear(), &Matrix::identity(4, 4));
        assert_eq!(id.translation(), &Vector::zeros(4));
        for seed in 0..20 {
            let m = random_affine_symplectic(6, seed, 0.7).unwrap();
            assert!(m.defect() <= SYMPLECTIC_TOL);
        }
        let m = random_affine_symplectic(4, 42, 0.5).unwrap();
        assert!((m.linear().determinant() - 1.0).abs() < 1e-9);
        let a = random_affine_symplectic(4, 42, 0.5).unwrap();
        assert_eq!(m, a);
    }

    #[test]
    fn inverse_and_compose() {
        let m = random_affine_symplectic(4, 1, 0.6).unwrap();
        let id = m.compose(&m.inverse());
        assert!((id.linear() - Matrix::identity(4, 4)).amax() < 1e-12);
        assert!(id.translation().amax() < 1e-12);
    }

    #[test]
    fn rejects_non_symplectic() {
        let mut m = Matrix::identity(4, 4);
        m[(0, 0)] = 2.0;
        assert!(matches!(
            AffineSymplecticMap::linear_only(m),
            Err(Error::NotSymplectic { .. })
        ));
        assert!(matches!(
            AffineSymplecticMap::identity(3),
            Err(Error::InvalidDimension(3))
        ));
    }

    #[test]
    fn action_invariant_under_affine_symplectic_maps() {
        let c = circle(97, 1.3, 0.7);
        for seed in 0..10 {
            let m = random_affine_symplectic(4, seed, 0.5).unwrap();
            assert!((curve_action(&c.mapped(&m)) - curve_action(&c)).abs() < 1e-9);
        }
    }

    #[test]
    fn exterior_derivative_of_liouville_is_omega() {
        // d lambda(u, v) at z = u.lambda(v) - v.lambda(u), by central differences.
        let mut rng = stream_rng(21, 0);
        for _ in 0..10 {
            let z = random_vec(&mut rng, 4);
            let u = random_vec(&mut rng, 4);
            let v = random_vec(&mut rng, 4);
            let h = 1e-4;
            let dl = |dir: &Vector, arg: &Vector| {
                (liouville(&(&z + dir * h), arg).unwrap() - liouville(&(&z - dir * h), arg).unwrap())
                    / (2.0 * h)
            };
            let d = dl(&u, &v) - dl(&v, &u);
            assert!((d - omega(&u, &v).unwrap()).abs() < 1e-8);
        }
    }

    proptest::proptest! {
        #[test]
        fn omega_antisymmetric_and_j_compatible(
            a in proptest::collection::vec(-10.0f64..10.0, 6),
            b in proptest::collection::vec(-10.0f64..10.0, 6),
        ) {
            let u = Vector::from_vec(a);
            let v = Vector::from_vec(b);
            let w = omega(&u, &v).unwrap();
            proptest::prop_assert_eq!(w, -omega(&v, &u).unwrap());
            proptest::prop_assert!((w - apply_j(&u).dot(&v)).abs() <= 1e-12 * (1.0 + w.abs()));
        }
    }
}
