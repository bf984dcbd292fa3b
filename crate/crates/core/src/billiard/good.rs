use std::f64::consts::PI;

use serde::Serialize;

use super::{OuterBilliardTrajectory, PeriodVerdict};
use crate::body::ConvexBody;
use crate::john::{section, section_point_at, PlanarSection};
use crate::{Result, Vector};

/// A point of `L ∩ ∂K` whose characteristic direction lies in `L`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GoodPoint {
    /// Angle about the section's interior point.
    pub angle: f64,
    /// Plane coordinates.
    pub point: [f64; 2],
    /// Angle between the characteristic direction and `L`.
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GoodPointReport {
    pub section: PlanarSection,
    pub angular_tol: f64,
    /// Deviation angle at every section sample.
    pub deviations: Vec<f64>,
    pub good_points: Vec<GoodPoint>,
    pub all_good: bool,
    /// Good points strictly between consecutive tangencies of an attached
    /// trajectory.
    pub counts_between_tangencies: Option<Vec<usize>>,
}

fn deviation_at(body: &ConvexBody, s: &PlanarSection, p: [f64; 2]) -> Result<f64> {
    let z = s.lift(p);
    let (_, g) = body.gradient_raw(&z)?;
    let w = crate::symplectic::apply_j(&g).normalize();
    let [u, v] = &s.plane.basis;
    let inplane = u * w.dot(u) + v * w.dot(v);
    let normal = (&w - &inplane).norm();
    Ok(normal.atan2(inplane.norm()))
}

/// Golden-section minimum of the deviation on `[a, b]`.
fn refine_minimum(body: &ConvexBody, s: &PlanarSection, mut a: f64, mut b: f64) -> Result<GoodPoint> {
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let eval = |th: f64| -> Result<(f64, [f64; 2])> {
        let p = section_point_at(body, s, th)?;
        Ok((deviation_at(body, s, p)?, p))
    };
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let mut fc = eval(c)?;
    let mut fd = eval(d)?;
    for _ in 0..80 {
        if b - a <= 1e-13 {
            break;
        }
        if fc.0 < fd.0 {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = eval(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = eval(d)?;
        }
    }
    let (angle, (dev, p)) = if fc.0 < fd.0 { (c, fc) } else { (d, fd) };
    Ok(GoodPoint {
        angle,
        point: p,
        deviation: dev,
    })
}

/// Scan `L ∩ ∂K` for good points: samples within `angular_tol`, plus isolated
/// good points found by refining local minima of the deviation angle.
pub fn good_points(
    body: &ConvexBody,
    point: &Vector,
    u: &Vector,
    v: &Vector,
    resolution: usize,
    angular_tol: f64,
) -> Result<GoodPointReport> {
    let s = section(body, point, u, v, resolution)?;
    let deviations = s
        .polygon
        .iter()
        .map(|&p| deviation_at(body, &s, p))
        .collect::<Result<Vec<f64>>>()?;
    let n = deviations.len();
    let step = 2.0 * PI / n as f64;
    let mut good = Vec::new();
    for k in 0..n {
        let d = deviations[k];
        let angle = k as f64 * step;
        if d <= angular_tol {
            good.push(GoodPoint {
                angle,
                point: s.polygon[k],
                deviation: d,
            });
            continue;
        }
        let prev = deviations[(k + n - 1) % n];
        let next = deviations[(k + 1) % n];
        if d <= prev && d < next {
            let g = refine_minimum(body, &s, angle - step, angle + step)?;
            if g.deviation <= angular_tol {
                good.push(GoodPoint {
                    angle: g.angle.rem_euclid(2.0 * PI),
                    ..g
                });
            }
        }
    }
    Ok(GoodPointReport {
        all_good: deviations.iter().all(|&d| d <= angular_tol),
        section: s,
        angular_tol,
        deviations,
        good_points: good,
        counts_between_tangencies: None,
    })
}

fn wrap(a: f64) -> f64 {
    a.rem_euclid(2.0 * PI)
}

impl GoodPointReport {
    /// Angle of a point of the plane about the section's interior point.
    pub fn angle_of(&self, z: &Vector) -> f64 {
        let (x, y) = self.section.plane.coordinates(z);
        wrap((y - self.section.interior[1]).atan2(x - self.section.interior[0]))
    }

    /// Largest distance of the trajectory's tangencies from the plane, relative
    /// to the section diameter.
    pub fn plane_distance(&self, tangencies: &[Vector]) -> f64 {
        let plane = &self.section.plane;
        tangencies
            .iter()
            .map(|z| {
                let (x, y) = plane.coordinates(z);
                (z - plane.lift(x, y)).norm()
            })
            .fold(0.0, f64::max)
            / plane.diameter
    }

    /// Good points strictly between consecutive tangencies, in the direction
    /// the tangencies travel; cyclic when `cyclic` is set.
    pub fn counts_between(&self, tangencies: &[Vector], cyclic: bool) -> Vec<usize> {
        let angles: Vec<f64> = tangencies.iter().map(|z| self.angle_of(z)).collect();
        let m = angles.len();
        if m < 2 {
            return Vec::new();
        }
        let gaps = if cyclic { m } else { m - 1 };
        let turning: f64 = (0..gaps)
            .map(|i| {
                let d = wrap(angles[(i + 1) % m] - angles[i]);
                if d > PI {
                    d - 2.0 * PI
                } else {
                    d
                }
            })
            .sum();
        let dir = if turning >= 0.0 { 1.0 } else { -1.0 };
        let eps = 1e-12;
        (0..gaps)
            .map(|i| {
                let a = angles[i];
                let span = wrap(dir * (angles[(i + 1) % m] - a));
                self.good_points
                    .iter()
                    .filter(|g| {
                        let off = wrap(dir * (g.angle - a));
                        off > eps && off < span - eps
                    })
                    .count()
            })
            .collect()
    }

    pub fn attach_trajectory(&mut self, trajectory: &OuterBilliardTrajectory) {
        let cyclic = matches!(trajectory.period, PeriodVerdict::Periodic { .. });
        self.counts_between_tangencies = Some(self.counts_between(&trajectory.tangencies, cyclic));
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "verdict")]
pub enum Uniformity {
    Equal { counts: Vec<usize> },
    Unequal { counts: Vec<usize> },
    NotApplicable { reason: String },
}

/// Whether every tangency gap of a planar periodic trajectory in `L` holds
/// the same number of good points.
pub fn uniform_distribution_check(report: &GoodPointReport, trajectory: &OuterBilliardTrajectory) -> Uniformity {
    let na = |reason: &str| Uniformity::NotApplicable {
        reason: reason.to_string(),
    };
    if report.all_good {
        return na("every point of the section is good");
    }
    if !matches!(trajectory.period, PeriodVerdict::Periodic { .. }) {
        return na("trajectory is not periodic");
    }
    if report.plane_distance(&trajectory.tangencies) > 1e-6 {
        return na("trajectory does not lie in the section plane");
    }
    let counts = report.counts_between(&trajectory.tangencies, true);
    if counts.windows(2).all(|w| w[0] == w[1]) {
        Uniformity::Equal { counts }
    } else {
        Uniformity::Unequal { counts }
    }
}
