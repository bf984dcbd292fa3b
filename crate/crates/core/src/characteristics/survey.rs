use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use super::{default_timestep, fit_ellipse, fit_plane, flow_with_tolerance, Characteristic, Planarity, CLOSURE_TOL};
use crate::body::ConvexBody;
use crate::rng::stream_rng;
use crate::{Result, Vector};

#[derive(Debug, Clone)]
pub struct SurveyOptions {
    /// Defaults to `default_timestep(body)`.
    pub dt: Option<f64>,
    pub closure_tol: f64,
    /// Also start from the body's canonical directions (after the random ones).
    pub canonical_starts: bool,
    /// Keep the sampled orbits in the survey.
    pub keep_orbits: bool,
}

impl Default for SurveyOptions {
    fn default() -> Self {
        Self {
            dt: None,
            closure_tol: CLOSURE_TOL,
            canonical_starts: false,
            keep_orbits: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitRecord {
    pub index: usize,
    pub start: Vec<f64>,
    pub closed: bool,
    pub period: Option<f64>,
    pub action: Option<f64>,
    /// Plane-fit residual divided by the orbit diameter.
    pub planarity_residual: Option<f64>,
    pub planarity: Option<Planarity>,
    /// Ellipse-fit residual divided by the orbit diameter, for planar orbits.
    pub ellipse_residual: Option<f64>,
    pub ellipse: bool,
    pub samples: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct CharacteristicSurvey {
    pub body_id: String,
    pub records: Vec<OrbitRecord>,
    pub all_closed_sampled: bool,
    pub all_planar_sampled: bool,
    pub all_ellipses_sampled: bool,
    pub closed_count: usize,
    pub planar_count: usize,
    /// `max - min` action over closed orbits.
    pub action_spread: Option<f64>,
    pub min_action: Option<f64>,
    pub max_action: Option<f64>,
    #[serde(skip)]
    pub orbits: Vec<Characteristic>,
}

impl CharacteristicSurvey {
    /// Aggregates from records alone.
    pub fn from_records(body_id: String, records: Vec<OrbitRecord>, orbits: Vec<Characteristic>) -> Self {
        let actions: Vec<f64> = records.iter().filter_map(|r| r.action).collect();
        let min_action = actions.iter().copied().reduce(f64::min);
        let max_action = actions.iter().copied().reduce(f64::max);
        Self {
            body_id,
            all_closed_sampled: records.iter().all(|r| r.closed),
            all_planar_sampled: records.iter().all(|r| r.planarity == Some(Planarity::Planar)),
            all_ellipses_sampled: records.iter().all(|r| r.ellipse),
            closed_count: records.iter().filter(|r| r.closed).count(),
            planar_count: records
                .iter()
                .filter(|r| r.planarity == Some(Planarity::Planar))
                .count(),
            action_spread: min_action.zip(max_action).map(|(lo, hi)| hi - lo),
            min_action,
            max_action,
            records,
            orbits,
        }
    }

    pub fn planar_fraction(&self) -> f64 {
        self.planar_count as f64 / self.records.len() as f64
    }
}

fn record(index: usize, ch: &Characteristic) -> OrbitRecord {
    let plane = fit_plane(ch.loop_samples()).ok();
    let planarity = plane.as_ref().map(|p| p.verdict());
    let ellipse = match (&plane, planarity) {
        (Some(p), Some(Planarity::Planar)) => fit_ellipse(ch.loop_samples(), p).ok(),
        _ => None,
    };
    OrbitRecord {
        index,
        start: ch.start.iter().copied().collect(),
        closed: ch.closed,
        period: ch.period,
        action: ch.action,
        planarity_residual: plane.as_ref().map(|p| p.relative_residual()),
        planarity,
        ellipse_residual: ellipse.as_ref().map(|e| e.relative_residual()),
        ellipse: ellipse.as_ref().is_some_and(|e| e.accepted()),
        samples: ch.len(),
    }
}

/// Flow from `n_starts` uniformly random boundary directions (plus the
/// canonical ones if requested) up to time `horizon` and aggregate.
///
/// Start `i` draws its direction from stream `i` of `seed`, so results do not
/// depend on scheduling.
pub fn survey(
    body: &ConvexBody,
    n_starts: usize,
    seed: u64,
    horizon: f64,
    options: &SurveyOptions,
) -> Result<CharacteristicSurvey> {
    if n_starts == 0 && !options.canonical_starts {
        return Err(crate::Error::InvalidArgument("survey needs at least one start".into()));
    }
    let dim = body.dim();
    let dt = options.dt.unwrap_or_else(|| default_timestep(body));
    let mut starts: Vec<Vector> = (0..n_starts)
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            Vector::from_fn(dim, |_, _| StandardNormal.sample(&mut rng))
        })
        .collect();
    if options.canonical_starts {
        starts.extend(body.canonical_directions());
    }
    let results: Vec<(OrbitRecord, Option<Characteristic>)> = starts
        .par_iter()
        .enumerate()
        .map(|(i, d)| {
            let z0 = body.boundary_point(d)?;
            let ch = flow_with_tolerance(body, &z0, horizon, dt, options.closure_tol)?;
            let rec = record(i, &ch);
            Ok((rec, options.keep_orbits.then_some(ch)))
        })
        .collect::<Result<_>>()?;
    let (records, orbits): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let orbits = orbits.into_iter().flatten().collect();
    Ok(CharacteristicSurvey::from_records(body.label(), records, orbits))
}
