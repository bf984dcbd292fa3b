use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use serde_json::{json, Value};
use symplanar::billiard::{
    good_points, period_scan, symplecticity_defect, trajectory, uniform_distribution_check, Orientation,
};
use symplanar::body::{polar_body, unit_ball_volume};
use symplanar::capacity::{
    ehz_capacity, santalo_product, viterbo_report, EhzOptions, ReportOptions,
};
use symplanar::characteristics::{default_horizon, flow, survey, SurveyOptions};
use symplanar::john::{john_ellipse, section};
use symplanar::rng::{child_seed, stream_rng};
use symplanar::symplectic::basis;
use symplanar::{ConvexBody, PeriodScan, Vector, VolumeMethod};

use crate::config::{OrientationSpec, Scenario, ScenarioConfig};
use crate::output::{histogram, num, opt_num, orbit_table, point_row, point_table, Table};
use crate::report::Outcome;
use crate::HarnessError;

/// Inputs resolved against the body before any output is written.
pub(crate) struct Prepared {
    body: ConvexBody,
    plane: (Vector, Vector, Vector),
    x0: Vector,
    base_point: Vector,
}

fn to_vector(v: &[f64], dim: usize, what: &str) -> Result<Vector, HarnessError> {
    if v.len() != dim {
        return Err(HarnessError::Validation(format!(
            "{what} has length {}, expected {dim}",
            v.len()
        )));
    }
    Ok(Vector::from_vec(v.to_vec()))
}

pub(crate) fn prepare(config: &ScenarioConfig) -> Result<Prepared, HarnessError> {
    let body = config.body.build()?;
    let dim = body.dim();
    let p = &config.params;
    if config.scenario == Scenario::PolarCheck && body.center().amax() > 1e-12 {
        return Err(HarnessError::Validation("polar check needs a body centered at the origin".into()));
    }
    let plane = match &p.plane {
        Some(pl) => (
            match &pl.point {
                Some(x) => to_vector(x, dim, "plane point")?,
                None => body.center().clone(),
            },
            to_vector(&pl.u, dim, "plane u")?,
            to_vector(&pl.v, dim, "plane v")?,
        ),
        None => (body.center().clone(), basis(dim, 0), basis(dim, 1)),
    };
    let (u, v) = (&plane.1, &plane.2);
    if (u.norm() - 1.0).abs() > 1e-10 || (v.norm() - 1.0).abs() > 1e-10 || u.dot(v).abs() > 1e-10 {
        return Err(HarnessError::Validation("plane basis must be orthonormal".into()));
    }
    let b = body.boundary_point(&basis(dim, 0))?;
    let x0 = match &p.x0 {
        Some(x) => to_vector(x, dim, "x0")?,
        None => body.center() + (&b - body.center()) * 2.0,
    };
    let base_point = match &p.base_point {
        Some(z) => to_vector(z, dim, "base_point")?,
        None => b,
    };
    Ok(Prepared {
        body,
        plane,
        x0,
        base_point,
    })
}

/// Child seeds by consumer, for the scenario's report.
pub(crate) fn seeds(config: &ScenarioConfig) -> BTreeMap<String, u64> {
    let labels: &[&str] = match config.scenario {
        Scenario::CharacteristicSurvey => &["survey"],
        Scenario::ViterboReport => &["survey", "volume"],
        Scenario::PolarCheck => &["directions", "volume"],
        Scenario::SymplecticityCheck => &["points"],
        _ => &[],
    };
    labels
        .iter()
        .map(|l| (l.to_string(), child_seed(config.seed, l)))
        .collect()
}

fn to_json(v: impl Serialize) -> Result<Value, HarnessError> {
    serde_json::to_value(v).map_err(|e| HarnessError::Io(format!("serializing results: {e}")))
}

fn vec_of(v: &Vector) -> Vec<f64> {
    v.iter().copied().collect()
}

pub(crate) fn execute(config: &ScenarioConfig, prep: &Prepared) -> Result<Outcome, HarnessError> {
    log::info!("running {} on {}", config.scenario.name(), prep.body.label());
    match config.scenario {
        Scenario::CharacteristicSurvey => characteristic_survey(config, prep),
        Scenario::ViterboReport => viterbo(config, prep),
        Scenario::PolarCheck => polar_check(config, prep),
        Scenario::JohnCheck => john_check(config, prep),
        Scenario::OuterBilliard => outer_billiard(config, prep),
        Scenario::PeriodScan => scan(config, prep),
        Scenario::SymplecticityCheck => symplecticity(config, prep),
        Scenario::ReferenceExamples => reference_examples(),
    }
}

fn survey_options(config: &ScenarioConfig, canonical: bool, keep: bool) -> SurveyOptions {
    SurveyOptions {
        dt: config.params.dt,
        closure_tol: config.params.closure_tol,
        canonical_starts: canonical,
        keep_orbits: keep,
    }
}

fn characteristic_survey(config: &ScenarioConfig, prep: &Prepared) -> Result<Outcome, HarnessError> {
    let p = &config.params;
    let body = &prep.body;
    let horizon = p.horizon.unwrap_or_else(|| default_horizon(body));
    let options = survey_options(config, p.canonical_starts, p.orbit_dumps > 0);
    let s = survey(body, p.n_starts, child_seed(config.seed, "survey"), horizon, &options)?;

    let mut records = Table::new(
        "survey.csv",
        &["index", "closed", "period", "action", "planarity_residual", "planarity", "ellipse_residual", "ellipse"],
    );
    for r in &s.records {
        records.push(vec![
            r.index.to_string(),
            r.closed.to_string(),
            opt_num(r.period),
            opt_num(r.action),
            opt_num(r.planarity_residual),
            r.planarity
                .map(|v| to_json(v).map(|j| j.as_str().unwrap_or_default().to_string()))
                .transpose()?
                .unwrap_or_default(),
            opt_num(r.ellipse_residual),
            r.ellipse.to_string(),
        ]);
    }
    let actions: Vec<f64> = s.records.iter().filter_map(|r| r.action).collect();
    let residuals: Vec<f64> = s.records.iter().filter_map(|r| r.planarity_residual).collect();
    let mut planarity = Table::new("planarity_residuals.csv", &["index", "residual"]);
    for r in &s.records {
        if let Some(res) = r.planarity_residual {
            planarity.push(vec![r.index.to_string(), num(res)]);
        }
    }
    let mut tables = vec![
        records,
        histogram("action_histogram.csv", &actions, p.histogram_bins),
        planarity,
        histogram(
            "planarity_histogram.csv",
            &residuals.iter().map(|r| r.max(1e-300).log10()).collect::<Vec<_>>(),
            p.histogram_bins,
        ),
    ];
    for (i, ch) in s.orbits.iter().take(p.orbit_dumps).enumerate() {
        tables.push(orbit_table(format!("orbits/orbit_{i:03}.csv"), ch));
    }
    let mut results = to_json(&s)?;
    results["planar_fraction"] = json!(s.planar_fraction());
    results["horizon"] = json!(horizon);
    Ok(Outcome { results, tables })
}

fn viterbo(config: &ScenarioConfig, prep: &Prepared) -> Result<Outcome, HarnessError> {
    let p = &config.params;
    let options = ReportOptions {
        volume: VolumeMethod::MonteCarlo {
            samples: p.mc_samples,
            seed: child_seed(config.seed, "volume"),
        },
        ehz: EhzOptions {
            n_starts: p.n_starts,
            seed: child_seed(config.seed, "survey"),
            horizon: p.horizon,
            force_sampled: false,
            survey: survey_options(config, true, false),
        },
        santalo: p.santalo,
    };
    let report = viterbo_report(&prep.body, &options)?;
    if let Some(v) = &report.viterbo_violation {
        log::warn!("{v}");
    }
    Ok(Outcome {
        results: to_json(&report)?,
        tables: Vec::new(),
    })
}

fn random_direction(dim: usize, seed: u64, i: u64) -> Vector {
    let mut rng = stream_rng(seed, i);
    loop {
        let d = Vector::from_fn(dim, |_, _| rng.sample(StandardNormal));
        if d.norm() > 0.0 {
            return d.normalize();
        }
    }
}

fn polar_check(config: &ScenarioConfig, prep: &Prepared) -> Result<Outcome, HarnessError> {
    let p = &config.params;
    let body = &prep.body;
    let dim = body.dim();
    let kw = polar_body(body, true)?;
    let kww = polar_body(&kw, true)?;
    let kpp = polar_body(&polar_body(body, false)?, false)?;
    let seed = child_seed(config.seed, "directions");
    let mut table = Table::new(
        "polar_support.csv",
        &["index", "h_double_symplectic_polar", "h_minus_body", "h_double_polar", "h_body"],
    );
    let mut worst_symplectic: f64 = 0.0;
    let mut worst_euclidean: f64 = 0.0;
    for i in 0..p.directions {
        let u = random_direction(dim, seed, i as u64);
        let a = kww.support(&u)?.value;
        let b = body.support(&(-&u))?.value;
        let c = kpp.support(&u)?.value;
        let d = body.support(&u)?.value;
        worst_symplectic = worst_symplectic.max((a - b).abs());
        worst_euclidean = worst_euclidean.max((c - d).abs());
        table.push(vec![i.to_string(), num(a), num(b), num(c), num(d)]);
    }
    let method = VolumeMethod::MonteCarlo {
        samples: p.mc_samples,
        seed: child_seed(config.seed, "volume"),
    };
    let santalo = santalo_product(body, method)?;
    let ball_product = unit_ball_volume(body.n()).powi(2);
    let results = json!({
        "directions": p.directions,
        "max_double_symplectic_polar_deviation": worst_symplectic,
        "max_double_polar_deviation": worst_euclidean,
        "santalo_product": santalo,
        "ball_santalo_product": ball_product,
        "santalo_relative_to_ball": santalo.value / ball_product,
        "closed_form": body.as_ellipsoid().is_some(),
    });
    Ok(Outcome {
        results,
        tables: vec![table],
    })
}

fn john_check(config: &ScenarioConfig, prep: &Prepared) -> Result<Outcome, HarnessError> {
    let p = &config.params;
    let (point, u, v) = &prep.plane;
    let s = section(&prep.body, point, u, v, p.resolution)?;
    let e = john_ellipse(&s.polygon)?;
    let section_area = s.area();
    let ratio = e.area / section_area;
    let mut sec = Table::new("section.csv", &["x", "y"]);
    for q in &s.polygon {
        sec.push(vec![num(q[0]), num(q[1])]);
    }
    let mut ell = Table::new("john_ellipse.csv", &["x", "y"]);
    for k in 0..p.resolution {
        let q = e.point_at(2.0 * PI * k as f64 / p.resolution as f64);
        ell.push(vec![num(q[0]), num(q[1])]);
    }
    let results = json!({
        "plane": { "point": vec_of(point), "u": vec_of(u), "v": vec_of(v) },
        "resolution": p.resolution,
        "section_area": section_area,
        "john_ellipse": to_json(e)?,
        "area_ratio": ratio,
        "is_john": e.area >= (1.0 - p.john_tol) * section_area,
    });
    Ok(Outcome {
        results,
        tables: vec![sec, ell],
    })
}

fn outer_billiard(config: &ScenarioConfig, prep: &Prepared) -> Result<Outcome, HarnessError> {
    let p = &config.params;
    let body = &prep.body;
    let orientation = match p.orientation {
        OrientationSpec::Forward => Orientation::Forward,
        OrientationSpec::Reverse => Orientation::Reverse,
    };
    let tr = trajectory(body, &prep.x0, p.n_steps, orientation)?;
    let dim = body.dim();
    let mut vertices = point_table("trajectory.csv", "step", dim);
    for (k, x) in tr.vertices.iter().enumerate() {
        vertices.push(point_row(k.to_string(), x));
    }
    let mut tangencies = point_table("tangencies.csv", "step", dim);
    for (k, z) in tr.tangencies.iter().enumerate() {
        tangencies.push(point_row(k.to_string(), z));
    }
    let mut results = json!({
        "x0": vec_of(&prep.x0),
        "orientation": to_json(orientation)?,
        "steps": tr.steps(),
        "period": to_json(tr.period)?,
        "closest_return": tr.closest_return.map(|(k, d)| json!({ "step": k, "distance": d })),
        "truncated": tr.truncated,
        "planarity_residual": tr.planarity_residual(),
        "planarity": tr.planarity.as_ref().map(|pl| pl.verdict()).map(to_json).transpose()?,
    });
    let mut tables = vec![vertices, tangencies];
    if p.good_points {
        let (point, u, v) = &prep.plane;
        let mut report = good_points(body, point, u, v, p.resolution, p.angular_tol)?;
        report.attach_trajectory(&tr);
        let uniformity = uniform_distribution_check(&report, &tr);
        let mut dev = Table::new("good_point_deviations.csv", &["angle", "deviation"]);
        for (k, d) in report.deviations.iter().enumerate() {
            dev.push(vec![num(2.0 * PI * k as f64 / report.deviations.len() as f64), num(*d)]);
        }
        tables.push(dev);
        results["good_points"] = json!({
            "angular_tol": report.angular_tol,
            "all_good": report.all_good,
            "count": report.good_points.len(),
            "points": to_json(&report.good_points)?,
            "counts_between_tangencies": report.counts_between_tangencies,
            "uniformity": to_json(uniformity)?,
        });
    }
    Ok(Outcome { results, tables })
}

fn scan(config: &ScenarioConfig, prep: &Prepared) -> Result<Outcome, HarnessError> {
    let p = &config.params;
    let grid = p.t_grid.values();
    let result = if grid.is_empty() {
        PeriodScan {
            base_point: vec_of(&prep.base_point),
            direction: vec_of(&prep.body.frame_at(&prep.base_point)?.char_dir),
            horizon: p.scan_horizon,
            entries: Vec::new(),
        }
    } else {
        period_scan(&prep.body, &prep.base_point, &grid, p.scan_horizon)?
    };
    let mut table = Table::new("period_scan.csv", &["t", "period"]);
    for e in &result.entries {
        table.push(vec![num(e.t), e.period.map(|k| k.to_string()).unwrap_or_default()]);
    }
    Ok(Outcome {
        results: to_json(&result)?,
        tables: vec![table],
    })
}

fn symplecticity(config: &ScenarioConfig, prep: &Prepared) -> Result<Outcome, HarnessError> {
    let p = &config.params;
    let body = &prep.body;
    let dim = body.dim();
    let seed = child_seed(config.seed, "points");
    let [lo, hi] = p.scale_range;
    let mut table = point_table("symplecticity.csv", "index", dim);
    table.header.push("defect".into());
    let mut defects = Vec::with_capacity(p.points);
    for i in 0..p.points {
        let mut rng = stream_rng(seed, i as u64);
        let d = Vector::from_fn(dim, |_, _| rng.sample(StandardNormal));
        let b = body.boundary_point(&d)?;
        let s = if hi > lo { rng.random_range(lo..hi) } else { lo };
        let x = body.center() + (&b - body.center()) * s;
        let defect = symplecticity_defect(body, &x, p.fd_step)?;
        let mut row = point_row(i.to_string(), &x);
        row.push(num(defect));
        table.push(row);
        defects.push(defect);
    }
    let max = defects.iter().copied().fold(0.0, f64::max);
    let mean = defects.iter().sum::<f64>() / defects.len() as f64;
    let results = json!({
        "points": p.points,
        "fd_step": p.fd_step,
        "max_defect": max,
        "mean_defect": mean,
        "defects": defects,
    });
    Ok(Outcome {
        results,
        tables: vec![table],
    })
}

#[derive(Debug, Serialize)]
struct ExampleRow {
    name: &'static str,
    expected: f64,
    observed: f64,
    tolerance: f64,
    relative: bool,
    pass: bool,
}

fn row(name: &'static str, expected: f64, observed: f64, tolerance: f64, relative: bool) -> ExampleRow {
    let err = (observed - expected).abs();
    let scale = if relative { expected.abs() } else { 1.0 };
    ExampleRow {
        name,
        expected,
        observed,
        tolerance,
        relative,
        pass: err <= tolerance * scale,
    }
}

/// Closed-form reference values for the ball and the ellipsoid
/// `(p1^2 + q1^2) + 2 (p2^2 + q2^2) <= 1`.
fn reference_examples() -> Result<Outcome, HarnessError> {
    let ball = ConvexBody::ball(2)?;
    let e = ConvexBody::ellipsoid_from_coefficients(&[1.0, 2.0])?;
    let closed = VolumeMethod::ClosedForm;
    let dt = 1e-3;
    let generic = flow(&e, &e.boundary_point(&Vector::from_vec(vec![1.0, 0.0, 1.0, 0.0]))?, 10.0, dt)?;
    let block = flow(&e, &e.boundary_point(&basis(4, 2))?, 10.0, dt)?;
    let (c_e, _) = ehz_capacity(&e, &EhzOptions::default())?;
    let report_options = ReportOptions {
        volume: closed,
        ..ReportOptions::default()
    };
    let ball_report = viterbo_report(&ball, &report_options)?;
    let e_report = viterbo_report(&e, &report_options)?;
    let santalo_ball = santalo_product(&ball, closed)?;
    let santalo_e = santalo_product(&e, closed)?;
    let santalo = (PI * PI / 2.0).powi(2);
    let rows = vec![
        row("ellipsoid_volume", PI * PI / 4.0, e.volume(closed)?.value, 1e-12, false),
        row("ellipsoid_generic_action", PI, generic.action.unwrap_or(f64::NAN), 1e-6, false),
        row("ellipsoid_block_action", PI / 2.0, block.action.unwrap_or(f64::NAN), 1e-6, false),
        row("ellipsoid_c_ehz", PI / 2.0, c_e, 1e-12, false),
        row("ellipsoid_viterbo_ratio", 2.0, e_report.viterbo_ratio, 1e-12, true),
        row("ball_santalo_product", santalo, santalo_ball.value, 1e-12, true),
        row("ellipsoid_santalo_product", santalo, santalo_e.value, 1e-12, true),
        row("ball_viterbo_ratio", 1.0, ball_report.viterbo_ratio, 1e-9, false),
    ];
    let all_pass = rows.iter().all(|r| r.pass);
    for r in rows.iter().filter(|r| !r.pass) {
        log::warn!("{}: expected {}, observed {}", r.name, r.expected, r.observed);
    }
    let mut table = Table::new("examples.csv", &["name", "expected", "observed", "tolerance", "pass"]);
    for r in &rows {
        table.push(vec![
            r.name.to_string(),
            num(r.expected),
            num(r.observed),
            num(r.tolerance),
            r.pass.to_string(),
        ]);
    }
    Ok(Outcome {
        results: json!({ "rows": to_json(&rows)?, "all_pass": all_pass }),
        tables: vec![table],
    })
}
