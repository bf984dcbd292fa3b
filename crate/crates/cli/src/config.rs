//! Run configuration.
//!
//! A run is described by one JSON document. Unknown fields are rejected at
//! every level.
//!
//! ```json
//! {
//!   "scenario": "characteristic-survey",
//!   "body": { "kind": "ellipsoid", "coefficients": [1.0, 2.0] },
//!   "seed": 1,
//!   "threads": 2,
//!   "output_dir": "out/survey",
//!   "params": { "n_starts": 10 }
//! }
//! ```
//!
//! Bodies (`kind` tag, coordinates interleaved as `p1, q1, ..., pn, qn`):
//!
//! * `ball`: `n`, optional `center`.
//! * `ellipsoid`: either `coefficients` (`sum a_i (p_i^2 + q_i^2) <= 1`) or a
//!   full symmetric `matrix` (rows), optional `center`.
//! * `smoothed_polydisc`: exponent `m`, block `radii`, optional `center`.
//! * `egg`: `axis`, `eps` in `[0, 0.5)`, optional `center`.
//!
//! Every body takes an optional `transform`, applied after construction:
//!
//! * `{"type": "matrix", "linear": [[...]], "translation": [...]}` with a
//!   symplectic `linear` part (checked).
//! * `{"type": "generators", "generators": [...], "translation": [...]}`
//!   where generators are applied in order and each is one of
//!   `{"op": "rotation", "block": i, "angle": a}`,
//!   `{"op": "scale", "block": i, "factor": c}` (`p -> c p`, `q -> q / c`),
//!   `{"op": "shear_p", "s": [[...]]}` (`p += S q`, `S` symmetric) and
//!   `{"op": "shear_q", "s": [[...]]}` (`q += S p`).
//! * `{"type": "random", "seed": s, "spread": r}`.
//!
//! Numeric parameters live under `params`; all are optional and documented on
//! [`Params`].

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use symplanar::symplectic::{random_affine_symplectic, AffineSymplecticMap};
use symplanar::{ConvexBody, Matrix, Vector};

use crate::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    CharacteristicSurvey,
    ViterboReport,
    PolarCheck,
    JohnCheck,
    OuterBilliard,
    PeriodScan,
    SymplecticityCheck,
    #[serde(rename = "paper-examples")]
    ReferenceExamples,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::CharacteristicSurvey => "characteristic-survey",
            Scenario::ViterboReport => "viterbo-report",
            Scenario::PolarCheck => "polar-check",
            Scenario::JohnCheck => "john-check",
            Scenario::OuterBilliard => "outer-billiard",
            Scenario::PeriodScan => "period-scan",
            Scenario::SymplecticityCheck => "symplecticity-check",
            Scenario::ReferenceExamples => "paper-examples",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum BodySpec {
    Ball {
        n: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        transform: Option<TransformSpec>,
    },
    Ellipsoid {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        coefficients: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        matrix: Option<Vec<Vec<f64>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        transform: Option<TransformSpec>,
    },
    SmoothedPolydisc {
        m: u32,
        radii: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        transform: Option<TransformSpec>,
    },
    Egg {
        axis: Vec<f64>,
        eps: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        transform: Option<TransformSpec>,
    },
}

impl Default for BodySpec {
    fn default() -> Self {
        BodySpec::Ball {
            n: 2,
            center: None,
            transform: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type", deny_unknown_fields)]
pub enum TransformSpec {
    Matrix {
        linear: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        translation: Option<Vec<f64>>,
    },
    Generators {
        generators: Vec<Generator>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        translation: Option<Vec<f64>>,
    },
    Random {
        seed: u64,
        spread: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "op", deny_unknown_fields)]
pub enum Generator {
    Rotation { block: usize, angle: f64 },
    Scale { block: usize, factor: f64 },
    ShearP { s: Vec<Vec<f64>> },
    ShearQ { s: Vec<Vec<f64>> },
}

fn invalid(msg: impl Into<String>) -> HarnessError {
    HarnessError::Validation(msg.into())
}

fn matrix_from_rows(rows: &[Vec<f64>], what: &str) -> Result<Matrix, HarnessError> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(invalid(format!("{what} must be a non-empty square matrix")));
    }
    Ok(Matrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn vector_of_dim(v: &Option<Vec<f64>>, dim: usize, what: &str) -> Result<Vector, HarnessError> {
    match v {
        None => Ok(Vector::zeros(dim)),
        Some(v) if v.len() == dim => Ok(Vector::from_vec(v.clone())),
        Some(v) => Err(invalid(format!("{what} has length {}, expected {dim}", v.len()))),
    }
}

impl Generator {
    fn matrix(&self, dim: usize) -> Result<Matrix, HarnessError> {
        let n = dim / 2;
        let mut m = Matrix::identity(dim, dim);
        match self {
            Generator::Rotation { block, angle } => {
                if *block >= n {
                    return Err(invalid(format!("rotation block {block} out of range")));
                }
                let (s, c) = angle.sin_cos();
                let (p, q) = (2 * block, 2 * block + 1);
                m[(p, p)] = c;
                m[(p, q)] = -s;
                m[(q, p)] = s;
                m[(q, q)] = c;
            }
            Generator::Scale { block, factor } => {
                if *block >= n {
                    return Err(invalid(format!("scale block {block} out of range")));
                }
                if !(*factor > 0.0) || !factor.is_finite() {
                    return Err(invalid("scale factor must be positive"));
                }
                m[(2 * block, 2 * block)] = *factor;
                m[(2 * block + 1, 2 * block + 1)] = 1.0 / factor;
            }
            Generator::ShearP { s } | Generator::ShearQ { s } => {
                let s = matrix_from_rows(s, "shear matrix")?;
                if s.nrows() != n {
                    return Err(invalid(format!("shear matrix must be {n}x{n}")));
                }
                if (&s - s.transpose()).amax() > 1e-12 * s.amax().max(1.0) {
                    return Err(invalid("shear matrix must be symmetric"));
                }
                let shear_p = matches!(self, Generator::ShearP { .. });
                for i in 0..n {
                    for j in 0..n {
                        if shear_p {
                            m[(2 * i, 2 * j + 1)] += s[(i, j)];
                        } else {
                            m[(2 * i + 1, 2 * j)] += s[(i, j)];
                        }
                    }
                }
            }
        }
        Ok(m)
    }
}

impl TransformSpec {
    pub fn build(&self, dim: usize) -> Result<AffineSymplecticMap, HarnessError> {
        let map = match self {
            TransformSpec::Matrix { linear, translation } => {
                let m = matrix_from_rows(linear, "transform matrix")?;
                if m.nrows() != dim {
                    return Err(invalid(format!("transform matrix must be {dim}x{dim}")));
                }
                AffineSymplecticMap::new(m, vector_of_dim(translation, dim, "translation")?)
            }
            TransformSpec::Generators { generators, translation } => {
                let mut m = Matrix::identity(dim, dim);
                for g in generators {
                    m = g.matrix(dim)? * m;
                }
                AffineSymplecticMap::new(m, vector_of_dim(translation, dim, "translation")?)
            }
            TransformSpec::Random { seed, spread } => {
                if !(*spread >= 0.0) || !spread.is_finite() {
                    return Err(invalid("random transform spread must be non-negative"));
                }
                random_affine_symplectic(dim, *seed, *spread)
            }
        };
        map.map_err(|e| invalid(format!("transform: {e}")))
    }
}

impl BodySpec {
    pub fn build(&self) -> Result<ConvexBody, HarnessError> {
        let body_err = |e: symplanar::Error| invalid(format!("body: {e}"));
        let (body, transform) = match self {
            BodySpec::Ball { n, center, transform } => {
                let dim = 2 * n;
                let c = vector_of_dim(center, dim, "center")?;
                let a = Matrix::identity(dim, dim);
                (ConvexBody::ellipsoid(a, c).map_err(body_err)?, transform)
            }
            BodySpec::Ellipsoid {
                coefficients,
                matrix,
                center,
                transform,
            } => {
                let a = match (coefficients, matrix) {
                    (Some(c), None) => Matrix::from_diagonal(&Vector::from_iterator(
                        2 * c.len(),
                        c.iter().flat_map(|&a| [a, a]),
                    )),
                    (None, Some(rows)) => matrix_from_rows(rows, "ellipsoid matrix")?,
                    _ => return Err(invalid("ellipsoid needs exactly one of coefficients or matrix")),
                };
                let c = vector_of_dim(center, a.nrows(), "center")?;
                (ConvexBody::ellipsoid(a, c).map_err(body_err)?, transform)
            }
            BodySpec::SmoothedPolydisc {
                m,
                radii,
                center,
                transform,
            } => {
                let c = vector_of_dim(center, 2 * radii.len(), "center")?;
                (
                    ConvexBody::smoothed_polydisc(*m, radii.clone(), c).map_err(body_err)?,
                    transform,
                )
            }
            BodySpec::Egg {
                axis,
                eps,
                center,
                transform,
            } => {
                let c = vector_of_dim(center, axis.len(), "center")?;
                (
                    ConvexBody::egg(Vector::from_vec(axis.clone()), *eps, c).map_err(body_err)?,
                    transform,
                )
            }
        };
        match transform {
            None => Ok(body),
            Some(t) => {
                let map = t.build(body.dim())?;
                ConvexBody::transformed(body, map).map_err(body_err)
            }
        }
    }
}

/// Grid of `t` values for `period-scan`: an explicit list or `count` evenly
/// spaced values on `[start, stop]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TGrid {
    List(Vec<f64>),
    Range { start: f64, stop: f64, count: usize },
}

impl TGrid {
    pub fn values(&self) -> Vec<f64> {
        match self {
            TGrid::List(v) => v.clone(),
            TGrid::Range { start, stop, count } => match count {
                0 => Vec::new(),
                1 => vec![*start],
                _ => (0..*count)
                    .map(|i| start + (stop - start) * i as f64 / (*count - 1) as f64)
                    .collect(),
            },
        }
    }
}

/// Plane through `point` spanned by orthonormal `u`, `v`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlaneSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point: Option<Vec<f64>>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrientationSpec {
    #[default]
    Forward,
    Reverse,
}

/// Numeric parameters. Each scenario reads the ones it needs; defaults are
/// listed per field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    /// Random starts for surveys and sampled capacities. Default 10.
    pub n_starts: usize,
    /// Flow horizon; defaults to 50 slowest rotation periods.
    pub horizon: Option<f64>,
    /// Flow timestep; defaults to a thousandth of the fastest half period.
    pub dt: Option<f64>,
    /// Closure tolerance. Default 1e-7.
    pub closure_tol: f64,
    /// Add canonical starts to surveys. Default false.
    pub canonical_starts: bool,
    /// Orbits written as CSV by a survey. Default 10.
    pub orbit_dumps: usize,
    /// Histogram bins for survey CSV series. Default 20.
    pub histogram_bins: usize,
    /// Monte Carlo volume samples. Default 2e6.
    pub mc_samples: u64,
    /// Include the Santalo product in the Viterbo report. Default false.
    pub santalo: bool,
    /// Random directions for polar checks. Default 100.
    pub directions: usize,
    /// Section plane; defaults to the `(p1, q1)` plane through the center.
    pub plane: Option<PlaneSpec>,
    /// Section samples. Default 512.
    pub resolution: usize,
    /// Relative area tolerance for the John check. Default 1e-3.
    pub john_tol: f64,
    /// Billiard start; defaults to `center + 2 (b - center)` for the boundary
    /// point `b` in direction `p1`.
    pub x0: Option<Vec<f64>>,
    /// Billiard steps. Default 200.
    pub n_steps: usize,
    pub orientation: OrientationSpec,
    /// Also report good points of `plane` for the billiard. Default false.
    pub good_points: bool,
    /// Angular tolerance for good points. Default 1e-6.
    pub angular_tol: f64,
    /// Boundary point for period scans; defaults to the boundary point in
    /// direction `p1`.
    pub base_point: Option<Vec<f64>>,
    /// Default 64 points on `[0.5, 4]`.
    pub t_grid: TGrid,
    /// Steps per period-scan trajectory. Default 1000.
    pub scan_horizon: usize,
    /// Exterior points for the symplecticity check. Default 50.
    pub points: usize,
    /// Finite-difference step. Default 1e-5.
    pub fd_step: f64,
    /// Exterior points are `center + s (b - center)`, `s` uniform in this range.
    /// Default `[1.2, 3]`.
    pub scale_range: [f64; 2],
}

impl Default for Params {
    fn default() -> Self {
        Self {
            n_starts: 10,
            horizon: None,
            dt: None,
            closure_tol: 1e-7,
            canonical_starts: false,
            orbit_dumps: 10,
            histogram_bins: 20,
            mc_samples: 2_000_000,
            santalo: false,
            directions: 100,
            plane: None,
            resolution: 512,
            john_tol: 1e-3,
            x0: None,
            n_steps: 200,
            orientation: OrientationSpec::Forward,
            good_points: false,
            angular_tol: 1e-6,
            base_point: None,
            t_grid: TGrid::Range {
                start: 0.5,
                stop: 4.0,
                count: 64,
            },
            scan_horizon: 1000,
            points: 50,
            fd_step: 1e-5,
            scale_range: [1.2, 3.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    /// Defaults to the unit ball in `R^4`; ignored by `paper-examples`.
    #[serde(default)]
    pub body: BodySpec,
    /// Master seed, split per consumer.
    #[serde(default)]
    pub seed: u64,
    /// Worker threads; defaults to the global pool.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub params: Params,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("symplanar-out")
}

impl ScenarioConfig {
    pub fn new(scenario: Scenario) -> Self {
        Self {
            scenario,
            body: BodySpec::default(),
            seed: 0,
            threads: None,
            output_dir: default_output_dir(),
            params: Params::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let config: Self =
            serde_json::from_str(text).map_err(|e| invalid(format!("config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    /// Checks that do not need the body built.
    pub fn validate(&self) -> Result<(), HarnessError> {
        let p = &self.params;
        let positive = |x: f64, what: &str| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(invalid(format!("{what} must be positive and finite")))
            }
        };
        if self.threads == Some(0) {
            return Err(invalid("threads must be at least 1"));
        }
        if p.n_starts == 0 && !p.canonical_starts {
            return Err(invalid("n_starts must be at least 1"));
        }
        if let Some(h) = p.horizon {
            positive(h, "horizon")?;
        }
        if let Some(dt) = p.dt {
            positive(dt, "dt")?;
        }
        positive(p.closure_tol, "closure_tol")?;
        positive(p.john_tol, "john_tol")?;
        positive(p.angular_tol, "angular_tol")?;
        positive(p.fd_step, "fd_step")?;
        if p.histogram_bins == 0 {
            return Err(invalid("histogram_bins must be at least 1"));
        }
        if p.mc_samples < 2 {
            return Err(invalid("mc_samples must be at least 2"));
        }
        if p.directions == 0 || p.points == 0 || p.n_steps == 0 || p.scan_horizon == 0 {
            return Err(invalid("directions, points, n_steps and scan_horizon must be at least 1"));
        }
        if p.resolution < 16 {
            return Err(invalid("resolution must be at least 16"));
        }
        let [lo, hi] = p.scale_range;
        if !(lo > 1.0 && hi >= lo && hi.is_finite()) {
            return Err(invalid("scale_range must satisfy 1 < lo <= hi"));
        }
        let grid = p.t_grid.values();
        if grid.iter().any(|t| !(*t > 0.0) || !t.is_finite()) || grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("t_grid must be positive and strictly increasing"));
        }
        Ok(())
    }
}
