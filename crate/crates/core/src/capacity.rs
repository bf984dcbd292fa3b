//! Williamson spectra, EHZ capacity, Viterbo ratio, Santalo product and the
//! Brunn-Minkowski gap.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::body::{
    mean_and_stderr, minkowski_difference, polar_body, radial_direction, spd_inverse, unit_ball_volume,
    ConvexBody, VolumeEstimate, VolumeMethod, DEFAULT_MC_SAMPLES,
};
use crate::characteristics::{default_horizon, survey, SurveyOptions};
use crate::symplectic::{j_matrix, validate_dim, AffineSymplecticMap};
use crate::{Error, Matrix, Result};

/// Symplectic coefficients `a_i` of `z^T A z = sum a_i (p_i^2 + q_i^2)` in
/// canonical coordinates, ascending.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WilliamsonSpectrum {
    pub coefficients: Vec<f64>,
}

impl WilliamsonSpectrum {
    pub fn max(&self) -> f64 {
        *self.coefficients.last().expect("non-empty")
    }

    pub fn min(&self) -> f64 {
        self.coefficients[0]
    }
}

/// Spectrum and a symplectic `S` with `S^T A S = diag(a_1, a_1, ..., a_n, a_n)`.
///
/// With `K = A^(1/2) J A^(1/2)` antisymmetric, orthonormal pairs `(e, f)` with
/// `K e = a f`, `K f = -a e` give `S = A^(-1/2) [e_1 f_1 ...] diag(sqrt a)`.
pub fn williamson_decomposition(a: &Matrix) -> Result<(WilliamsonSpectrum, Matrix)> {
    validate_dim(a.nrows())?;
    spd_inverse(a)?;
    let dim = a.nrows();
    let n = dim / 2;
    let eig = a.clone().symmetric_eigen();
    let sqrt_d = eig.eigenvalues.map(f64::sqrt);
    let root = &eig.eigenvectors * Matrix::from_diagonal(&sqrt_d) * eig.eigenvectors.transpose();
    let inv_root =
        &eig.eigenvectors * Matrix::from_diagonal(&sqrt_d.map(|x| 1.0 / x)) * eig.eigenvectors.transpose();
    let k = &root * j_matrix(dim) * &root;
    let k = (&k - k.transpose()) * 0.5;
    let sq = k.transpose() * &k;
    let sq_eig = ((&sq + sq.transpose()) * 0.5).symmetric_eigen();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&i, &j| sq_eig.eigenvalues[i].total_cmp(&sq_eig.eigenvalues[j]));
    let mut frame: Vec<(f64, crate::Vector, crate::Vector)> = Vec::with_capacity(n);
    for &i in &order {
        if frame.len() == n {
            break;
        }
        let mut e = sq_eig.eigenvectors.column(i).into_owned();
        for (_, fe, ff) in &frame {
            e -= fe * fe.dot(&e);
            e -= ff * ff.dot(&e);
        }
        let norm = e.norm();
        if norm < 1e-3 {
            continue;
        }
        e /= norm;
        let ke = &k * &e;
        let coef = ke.norm();
        let f = ke / coef;
        frame.push((coef, e, f));
    }
    if frame.len() != n {
        return Err(Error::NotConverged {
            what: "Williamson frame",
            iterations: dim,
            residual: (n - frame.len()) as f64,
        });
    }
    let mut o = Matrix::zeros(dim, dim);
    let mut scale = crate::Vector::zeros(dim);
    for (i, (coef, e, f)) in frame.iter().enumerate() {
        o.set_column(2 * i, e);
        o.set_column(2 * i + 1, f);
        scale[2 * i] = coef.sqrt();
        scale[2 * i + 1] = coef.sqrt();
    }
    let s = inv_root * o * Matrix::from_diagonal(&scale);
    let spectrum = WilliamsonSpectrum {
        coefficients: frame.iter().map(|f| f.0).collect(),
    };
    Ok((spectrum, s))
}

/// Williamson coefficients of a symmetric positive definite matrix.
pub fn williamson(a: &Matrix) -> Result<WilliamsonSpectrum> {
    Ok(williamson_decomposition(a)?.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BallVerdict {
    pub is_ball: bool,
    pub spectrum: WilliamsonSpectrum,
    /// `S` with `S^T A S = a I` when the verdict is positive.
    pub witness: Option<AffineSymplecticMap>,
    /// `max |S^T A S - a I|` for the witness.
    pub witness_residual: Option<f64>,
}

/// Whether `{z^T A z <= 1}` is a symplectic image of a round ball: all
/// Williamson coefficients agree to relative tolerance `tol`.
pub fn is_symplectic_ball(a: &Matrix, tol: f64) -> Result<BallVerdict> {
    let (spectrum, s) = williamson_decomposition(a)?;
    let is_ball = spectrum.max() / spectrum.min() - 1.0 <= tol;
    if !is_ball {
        return Ok(BallVerdict {
            is_ball,
            spectrum,
            witness: None,
            witness_residual: None,
        });
    }
    let mean = spectrum.coefficients.iter().sum::<f64>() / spectrum.coefficients.len() as f64;
    let residual = (s.transpose() * a * &s - Matrix::identity(a.nrows(), a.nrows()) * mean).amax();
    let witness = AffineSymplecticMap::linear_only(s)?;
    Ok(BallVerdict {
        is_ball,
        spectrum,
        witness: Some(witness),
        witness_residual: Some(residual),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "method")]
pub enum CapacityMethod {
    WilliamsonClosedForm,
    /// Minimum action over the closed orbits a survey found: an upper bound
    /// on the capacity over those orbits only.
    MinActionSampled {
        closed_orbits: usize,
        orbits: usize,
        upper_bound: bool,
    },
}

#[derive(Debug, Clone)]
pub struct EhzOptions {
    pub n_starts: usize,
    pub seed: u64,
    /// Defaults to `default_horizon(body)`.
    pub horizon: Option<f64>,
    /// Sample even when a closed form exists.
    pub force_sampled: bool,
    pub survey: SurveyOptions,
}

impl Default for EhzOptions {
    fn default() -> Self {
        Self {
            n_starts: 8,
            seed: 0,
            horizon: None,
            force_sampled: false,
            survey: SurveyOptions {
                canonical_starts: true,
                ..SurveyOptions::default()
            },
        }
    }
}

/// `pi / max a_i` for ellipsoids, otherwise the minimum sampled action.
pub fn ehz_capacity(body: &ConvexBody, options: &EhzOptions) -> Result<(f64, CapacityMethod)> {
    if !options.force_sampled {
        if let Some((a, _)) = body.as_ellipsoid() {
            return Ok((PI / williamson(&a)?.max(), CapacityMethod::WilliamsonClosedForm));
        }
    }
    let horizon = options.horizon.unwrap_or_else(|| default_horizon(body));
    let s = survey(body, options.n_starts, options.seed, horizon, &options.survey)?;
    let c = s
        .records
        .iter()
        .filter_map(|r| r.action)
        .filter(|a| *a > 0.0)
        .reduce(f64::min)
        .ok_or(Error::NoClosedCharacteristic)?;
    Ok((
        c,
        CapacityMethod::MinActionSampled {
            closed_orbits: s.closed_count,
            orbits: s.records.len(),
            upper_bound: true,
        },
    ))
}

#[derive(Debug, Clone)]
pub struct ReportOptions {
    /// Used when no closed form exists.
    pub volume: VolumeMethod,
    pub ehz: EhzOptions,
    pub santalo: bool,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self {
            volume: VolumeMethod::MonteCarlo {
                samples: DEFAULT_MC_SAMPLES,
                seed: 0,
            },
            ehz: EhzOptions::default(),
            santalo: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapacityReport {
    pub body_id: String,
    pub volume: VolumeEstimate,
    pub volume_method: VolumeMethod,
    pub c_ehz: f64,
    pub method: CapacityMethod,
    /// `volume * n! / c_ehz^n`.
    pub viterbo_ratio: f64,
    pub viterbo_ratio_stderr: f64,
    pub santalo_product: Option<VolumeEstimate>,
    pub spectrum: Option<WilliamsonSpectrum>,
    /// Set when the ratio falls below 1 by more than three combined tolerances.
    pub viterbo_violation: Option<String>,
}

/// Closed form for ellipsoids, otherwise the requested volume method.
fn volume_of(body: &ConvexBody, fallback: VolumeMethod) -> Result<(VolumeEstimate, VolumeMethod)> {
    if body.as_ellipsoid().is_some() {
        Ok((body.volume(VolumeMethod::ClosedForm)?, VolumeMethod::ClosedForm))
    } else {
        Ok((body.volume(fallback)?, fallback))
    }
}

pub fn viterbo_report(body: &ConvexBody, options: &ReportOptions) -> Result<CapacityReport> {
    let (volume, volume_method) = volume_of(body, options.volume)?;
    let (c, method) = ehz_capacity(body, &options.ehz)?;
    let n = body.n();
    let norm = unit_ball_volume(n) / PI.powi(n as i32);
    let ratio = volume.value / (norm * c.powi(n as i32));
    let ratio_stderr = ratio * volume.stderr / volume.value;
    let spectrum = match body.as_ellipsoid() {
        Some((a, _)) => Some(williamson(&a)?),
        None => None,
    };
    let santalo_product = if options.santalo {
        Some(santalo_product(body, options.volume)?)
    } else {
        None
    };
    let tolerance = 3.0 * (ratio_stderr + 1e-6 * ratio);
    let viterbo_violation = (ratio < 1.0 - tolerance).then(|| {
        format!(
            "Viterbo ratio {ratio:.6} is below 1 by more than {tolerance:.2e} for {}",
            body.label()
        )
    });
    Ok(CapacityReport {
        body_id: body.label(),
        volume,
        volume_method,
        c_ehz: c,
        method,
        viterbo_ratio: ratio,
        viterbo_ratio_stderr: ratio_stderr,
        santalo_product,
        spectrum,
        viterbo_violation,
    })
}

/// `vol(K) vol(K°)` for a body centered at the origin.
pub fn santalo_product(body: &ConvexBody, method: VolumeMethod) -> Result<VolumeEstimate> {
    let polar = polar_body(body, false)?;
    let (v, _) = volume_of(body, method)?;
    let (w, _) = volume_of(&polar, method)?;
    let value = v.value * w.value;
    let rel = ((v.stderr / v.value).powi(2) + (w.stderr / w.value).powi(2)).sqrt();
    Ok(VolumeEstimate {
        value,
        stderr: value * rel,
    })
}

/// `vol(K - K)^(1/2n) - 2 vol(K)^(1/2n)`, non-negative with equality exactly
/// for centrally symmetric bodies.
///
/// Without closed forms both volumes come from the radial estimator on common
/// antithetic directions `(d, -d)`, and the standard error is propagated
/// through the paired per-direction samples.
pub fn brunn_minkowski_gap(body: &ConvexBody, samples: u64, seed: u64) -> Result<VolumeEstimate> {
    let diff = minkowski_difference(body)?;
    let inv = 1.0 / body.dim() as f64;
    if let (Some(_), Some(_)) = (body.as_ellipsoid(), diff.as_ellipsoid()) {
        let v = body.volume(VolumeMethod::ClosedForm)?.value;
        let w = diff.volume(VolumeMethod::ClosedForm)?.value;
        return Ok(VolumeEstimate {
            value: w.powf(inv) - 2.0 * v.powf(inv),
            stderr: 0.0,
        });
    }
    if samples < 2 {
        return Err(Error::InvalidArgument("gap estimate needs at least two samples".into()));
    }
    let n = body.n() as f64;
    let ball = unit_ball_volume(body.n());
    let dim = body.dim();
    let pairs: Vec<(f64, f64)> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let d = radial_direction(dim, seed, i);
            let hk = body.value_raw(&(body.center() + &d))?;
            let hk_opposite = body.value_raw(&(body.center() - &d))?;
            let hd = diff.value_raw(&(diff.center() + &d))?;
            let wk = 0.5 * ball * (hk.powf(-n) + hk_opposite.powf(-n));
            Ok((wk, ball * hd.powf(-n)))
        })
        .collect::<Result<_>>()?;
    let vk = mean_and_stderr(&pairs.iter().map(|p| p.0).collect::<Vec<_>>()).value;
    let vd = mean_and_stderr(&pairs.iter().map(|p| p.1).collect::<Vec<_>>()).value;
    let gap = vd.powf(inv) - 2.0 * vk.powf(inv);
    // Delta method on the paired samples.
    let dk = 2.0 * inv * vk.powf(inv - 1.0);
    let dd = inv * vd.powf(inv - 1.0);
    let lin: Vec<f64> = pairs.iter().map(|(k, d)| dd * d - dk * k).collect();
    Ok(VolumeEstimate {
        value: gap,
        stderr: mean_and_stderr(&lin).stderr,
    })
}
