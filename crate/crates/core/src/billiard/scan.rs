use rayon::prelude::*;
use serde::Serialize;

use super::{step, trajectory, Orientation, PeriodVerdict};
use crate::body::ConvexBody;
use crate::symplectic::symplectic_defect;
use crate::{Error, Matrix, Result, Vector};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeriodScanEntry {
    pub t: f64,
    pub start: Vec<f64>,
    pub verdict: Option<PeriodVerdict>,
    pub period: Option<usize>,
    pub closest_return: Option<f64>,
    /// Failure at this grid point, if any.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeriodScan {
    pub base_point: Vec<f64>,
    pub direction: Vec<f64>,
    pub horizon: usize,
    pub entries: Vec<PeriodScanEntry>,
}

/// Periods of trajectories started on the tangent line `z - t v` through a
/// boundary point `z`, `v` the unit characteristic direction at `z`.
pub fn period_scan(body: &ConvexBody, z: &Vector, t_grid: &[f64], horizon: usize) -> Result<PeriodScan> {
    let frame = body.frame_at(z)?;
    if t_grid.is_empty() || t_grid[0] <= 0.0 || t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(
            "t grid must be positive and strictly increasing".into(),
        ));
    }
    let v = frame.char_dir;
    let entries = t_grid
        .par_iter()
        .map(|&t| {
            let x0 = z - &v * t;
            let start = x0.iter().copied().collect();
            match trajectory(body, &x0, horizon, Orientation::Forward) {
                Ok(tr) => PeriodScanEntry {
                    t,
                    start,
                    verdict: Some(tr.period),
                    period: tr.period.period(),
                    closest_return: tr.closest_return.map(|c| c.1),
                    error: None,
                },
                Err(e) => PeriodScanEntry {
                    t,
                    start,
                    verdict: None,
                    period: None,
                    closest_return: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    Ok(PeriodScan {
        base_point: z.iter().copied().collect(),
        direction: v.iter().copied().collect(),
        horizon,
        entries,
    })
}

/// `max |D^T J D - J|` for the central-difference Jacobian `D` of `f` at `x`.
pub fn symplecticity_defect_of<F>(f: F, x: &Vector, h: f64) -> Result<f64>
where
    F: Fn(&Vector) -> Result<Vector>,
{
    if !(h > 0.0) {
        return Err(Error::InvalidArgument("finite-difference step must be positive".into()));
    }
    let dim = x.len();
    let mut d = Matrix::zeros(dim, dim);
    for k in 0..dim {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[k] += h;
        xm[k] -= h;
        let col = (f(&xp)? - f(&xm)?) / (2.0 * h);
        d.set_column(k, &col);
    }
    Ok(symplectic_defect(&d))
}

/// Symplecticity defect of the forward outer billiard map at `x`.
pub fn symplecticity_defect(body: &ConvexBody, x: &Vector, h: f64) -> Result<f64> {
    symplecticity_defect_of(|y| step(body, y, Orientation::Forward), x, h)
}
