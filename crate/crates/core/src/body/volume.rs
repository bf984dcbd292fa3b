use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use super::{ellipsoid_volume, ConvexBody};
use crate::rng::stream_rng;
use crate::symplectic::basis;
use crate::{Error, Matrix, Result, Vector};

/// Samples per independent Monte Carlo stream.
const CHUNK: u64 = 1 << 14;

/// Default Monte Carlo sample count.
pub const DEFAULT_MC_SAMPLES: u64 = 2_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "method")]
pub enum VolumeMethod {
    ClosedForm,
    MonteCarlo { samples: u64, seed: u64 },
    /// `vol(B) * E[r(theta)^(2n)]` over uniform directions, where `r` is the
    /// radial function about the center.
    RadialMonteCarlo { samples: u64, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VolumeEstimate {
    pub value: f64,
    /// Zero for closed forms.
    pub stderr: f64,
}

impl ConvexBody {
    /// Volume, exactly for ellipsoids or by rejection sampling in the
    /// bounding box spanned by the coordinate support values.
    ///
    /// Sampling is split into fixed-size seeded streams, so the estimate does
    /// not depend on the number of worker threads.
    pub fn volume(&self, method: VolumeMethod) -> Result<VolumeEstimate> {
        match method {
            VolumeMethod::ClosedForm => {
                let (a, _) = self.as_ellipsoid().ok_or_else(|| {
                    Error::Unsupported(format!("closed-form volume for {}", self.label()))
                })?;
                Ok(VolumeEstimate {
                    value: ellipsoid_volume(&a),
                    stderr: 0.0,
                })
            }
            VolumeMethod::MonteCarlo { samples, seed } => self.monte_carlo_volume(samples, seed),
            VolumeMethod::RadialMonteCarlo { samples, seed } => {
                let weights = radial_weights(self, samples, seed)?;
                Ok(mean_and_stderr(&weights))
            }
        }
    }

    fn bounding_box(&self) -> Result<(Vector, Vector)> {
        let dim = self.dim();
        let mut lo = Vector::zeros(dim);
        let mut hi = Vector::zeros(dim);
        for k in 0..dim {
            let e = basis(dim, k);
            hi[k] = self.support_raw(&e)?.value;
            lo[k] = -self.support_raw(&(-e))?.value;
        }
        Ok((lo, hi))
    }

    fn monte_carlo_volume(&self, samples: u64, seed: u64) -> Result<VolumeEstimate> {
        if samples == 0 {
            return Err(Error::InvalidArgument("Monte Carlo needs at least one sample".into()));
        }
        let dim = self.dim();
        let (lo, hi) = self.bounding_box()?;
        let width = &hi - &lo;
        let box_volume: f64 = width.iter().product();
        let chunks = samples.div_ceil(CHUNK);
        let hits: Result<u64> = (0..chunks)
            .into_par_iter()
            .map(|chunk| {
                let count = CHUNK.min(samples - chunk * CHUNK);
                let mut rng = stream_rng(seed, chunk);
                let mut z = Vector::zeros(dim);
                let mut inside = 0u64;
                for _ in 0..count {
                    for k in 0..dim {
                        z[k] = lo[k] + width[k] * rng.random::<f64>();
                    }
                    if self.value_raw(&z)? <= 1.0 {
                        inside += 1;
                    }
                }
                Ok(inside)
            })
            .collect::<Result<Vec<u64>>>()
            .map(|v| v.into_iter().sum());
        let frac = hits? as f64 / samples as f64;
        Ok(VolumeEstimate {
            value: box_volume * frac,
            stderr: box_volume * (frac * (1.0 - frac) / samples as f64).sqrt(),
        })
    }
}

/// Unit direction number `i` of a radial sample stream.
pub(crate) fn radial_direction(dim: usize, seed: u64, i: u64) -> Vector {
    let mut rng = stream_rng(seed, i);
    loop {
        let d = Vector::from_fn(dim, |_, _| rng.sample(StandardNormal));
        let n = d.norm();
        if n > 0.0 {
            return d / n;
        }
    }
}

/// Per-direction unbiased volume estimates `vol(B) r(theta)^(2n)`.
pub(crate) fn radial_weights(body: &ConvexBody, samples: u64, seed: u64) -> Result<Vec<f64>> {
    if samples < 2 {
        return Err(Error::InvalidArgument("radial Monte Carlo needs at least two samples".into()));
    }
    let dim = body.dim();
    let ball = super::unit_ball_volume(body.n());
    (0..samples)
        .into_par_iter()
        .map(|i| {
            let d = radial_direction(dim, seed, i);
            let h = body.value_raw(&(body.center() + d))?;
            Ok(ball * h.powf(-(body.n() as f64)))
        })
        .collect()
}

pub(crate) fn mean_and_stderr(w: &[f64]) -> VolumeEstimate {
    let n = w.len() as f64;
    let mean = w.iter().sum::<f64>() / n;
    let var = w.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    VolumeEstimate {
        value: mean,
        stderr: (var / n).sqrt(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvexityReport {
    /// Minimum over samples of the smallest eigenvalue of the Hessian of `H`
    /// restricted to the tangent hyperplane, divided by `|grad H|`.
    pub min_tangential_eigenvalue: f64,
    pub pass: bool,
    /// Samples where the Hamiltonian reported a degenerate Hessian.
    pub degenerate_samples: usize,
}

/// Sampled strong-convexity test: the tangentially restricted Hessian of `H`
/// scaled by `1/|grad H|` is proportional to the second fundamental form.
pub fn strong_convexity_check(
    body: &ConvexBody,
    n_samples: usize,
    seed: u64,
    eps: f64,
) -> Result<ConvexityReport> {
    if n_samples == 0 {
        return Err(Error::InvalidArgument("n_samples must be at least 1".into()));
    }
    let dim = body.dim();
    let mut rng = stream_rng(seed, 0xc0e7);
    let mut min_eig = f64::INFINITY;
    let mut degenerate_samples = 0;
    for _ in 0..n_samples {
        let d = Vector::from_fn(dim, |_, _| rng.sample(StandardNormal));
        let z = body.boundary_point(&d)?;
        let e = body.evaluate_raw(&z)?;
        if e.degenerate {
            degenerate_samples += 1;
        }
        let gn = e.gradient.norm();
        let nhat = &e.gradient / gn;
        let nnt = &nhat * nhat.transpose();
        let p = Matrix::identity(dim, dim) - &nnt;
        let restricted = &p * &e.hessian * &p / gn;
        // Lift the normal direction out of the way of the minimum.
        let lift = restricted.trace().abs() + 1.0;
        let m = restricted + nnt * lift;
        let m = (&m + m.transpose()) * 0.5;
        min_eig = min_eig.min(m.symmetric_eigenvalues().min());
    }
    Ok(ConvexityReport {
        min_tangential_eigenvalue: min_eig,
        pass: min_eig > eps,
        degenerate_samples,
    })
}
