//! Command dispatch. Each command maps onto one library operation and
//! fills a [`Report`].

use std::time::{Duration, Instant};

use natmap_core::barycenter::{solve_barycenter, BarycenterKind, Measure};
use natmap_core::groups::{
    cusp_fixed_point, enumerate_cusp_orbit, enumerate_orbit, last_shell_fraction, poincare_series,
};
use natmap_core::hypgeo::{dist, to_ball, FIX_TOL};
use natmap_core::natural_map::{
    build_lambda, epsilon_sweep, eval_natural_map, jacobian, ray_trace, LIMIT_TOL,
};
use natmap_core::volume::{
    ideal_tetra_angles, ideal_tetra_shape, ideal_tetra_volume, vol_dev_with,
    vol_form_integral_with, VolumeOptions, ABS_TOL, DEFAULT_REL_TOL,
};
use natmap_core::{DevelopingMapSpec, Endpoint, Point, WeightedOrbit};

use crate::report::{float, floats, word, Cell, Report, RowContext};
use crate::sampling::{sample_points, Sample};
use crate::scenario::Scenario;
use crate::{properties, CliError};

/// Allowed excess of `|Jac F|` over `1 + ε` (finite differences and
/// orbit truncation).
pub const JAC_SLACK: f64 = 0.02;
/// Domain volume against the Lobachevsky oracle.
pub const VOLUME_ORACLE_TOL: f64 = 5e-3;
/// Residual of a developing map against the face pairings.
pub const DEVELOPING_EQUIVARIANCE_TOL: f64 = 1e-8;
/// Round-off allowance when checking that Newton steps never increase the
/// functional.
pub const DESCENT_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Validate,
    Orbit,
    Barycenter,
    NatmapEval,
    NatmapJac,
    NatmapRay,
    NatmapSweep,
    VolDev,
    VolNatmap,
    Properties,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Orbit => "orbit",
            Command::Barycenter => "barycenter",
            Command::NatmapEval => "natmap-eval",
            Command::NatmapJac => "natmap-jac",
            Command::NatmapRay => "natmap-ray",
            Command::NatmapSweep => "natmap-sweep",
            Command::VolDev => "vol-dev",
            Command::VolNatmap => "vol-natmap",
            Command::Properties => "properties",
        }
    }
}

/// Command-line overrides of scenario defaults.
#[derive(Clone, Debug, Default)]
pub struct Flags {
    pub epsilon: Option<f64>,
    pub word_length: Option<usize>,
    /// Highest quadrature order; the ladder is `[q - 2, q]`.
    pub quad_order: Option<usize>,
    pub seed: Option<u64>,
}

/// Scenario defaults with the flags applied.
#[derive(Clone, Debug, PartialEq)]
pub struct Settings {
    pub epsilon: f64,
    pub word_length: usize,
    pub volume_word_length: usize,
    pub orders: Vec<usize>,
    pub seed: u64,
}

impl Settings {
    pub fn resolve(scenario: &Scenario, flags: &Flags) -> Result<Settings, CliError> {
        let d = &scenario.natmap;
        let epsilon = flags.epsilon.unwrap_or(d.epsilon);
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(CliError::Input(format!(
                "--epsilon {epsilon} must be positive"
            )));
        }
        let orders = match flags.quad_order {
            Some(q) if q >= 3 => vec![q - 2, q],
            Some(q) => {
                return Err(CliError::Input(format!(
                    "--quad-order {q} must be at least 3"
                )))
            }
            None => d.quad_orders.clone(),
        };
        Ok(Settings {
            epsilon,
            word_length: flags.word_length.unwrap_or(d.word_length),
            volume_word_length: flags.word_length.unwrap_or(d.volume_word_length),
            orders,
            seed: flags.seed.unwrap_or(scenario.seed),
        })
    }

    pub fn ctx(&self) -> RowContext {
        RowContext {
            word_length: self.word_length,
            epsilon: self.epsilon,
            quad_order: *self.orders.last().expect("nonempty orders"),
        }
    }

    fn volume_options(&self, truncation: Option<f64>, residual_shells: bool) -> VolumeOptions {
        VolumeOptions {
            orders: self.orders.clone(),
            rel_tol: DEFAULT_REL_TOL,
            truncation,
            residual_shells,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Success,
    NumericalFailure,
    InputError,
    PropertyFailure,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Success => 0,
            Status::NumericalFailure => 1,
            Status::InputError => 2,
            Status::PropertyFailure => 3,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub report: Report,
    pub status: Status,
    pub wall_time: Duration,
}

pub fn run(command: Command, scenario: &Scenario, flags: &Flags) -> Result<Outcome, CliError> {
    let start = Instant::now();
    let settings = Settings::resolve(scenario, flags)?;
    let (report, status) = match command {
        Command::Validate => validate(scenario, &settings)?,
        Command::Orbit => (orbit(scenario, &settings)?, Status::Success),
        Command::Barycenter => (barycenter(scenario, &settings)?, Status::Success),
        Command::NatmapEval => (natmap_eval(scenario, &settings)?, Status::Success),
        Command::NatmapJac => (natmap_jac(scenario, &settings)?, Status::Success),
        Command::NatmapRay => (natmap_ray(scenario, &settings)?, Status::Success),
        Command::NatmapSweep => (natmap_sweep(scenario, &settings)?, Status::Success),
        Command::VolDev => (vol_dev(scenario, &settings)?, Status::Success),
        Command::VolNatmap => (vol_natmap(scenario, &settings)?, Status::Success),
        Command::Properties => {
            let report = properties::run_suite(scenario, &settings)?;
            let ok = matches!(report.summary_value("all_pass"), Some(Cell::Bool(true)));
            let status = if ok {
                Status::Success
            } else {
                Status::PropertyFailure
            };
            (report, status)
        }
    };
    Ok(Outcome {
        report,
        status,
        wall_time: start.elapsed(),
    })
}

/// A report with the scenario and settings echoed.
pub fn new_report(
    command: Command,
    scenario: &Scenario,
    settings: &Settings,
    columns: &[&str],
) -> Report {
    let mut r = Report::new(command.name(), columns);
    r.input("scenario", scenario.name.as_str());
    r.input("source", scenario.source.as_str());
    r.input("k", scenario.k());
    r.input("n", scenario.n());
    r.input("seed", settings.seed as i64);
    r.input("epsilon", settings.epsilon);
    r.input("word_length", settings.word_length);
    r.input("volume_word_length", settings.volume_word_length);
    r.input(
        "quad_orders",
        settings
            .orders
            .iter()
            .map(|o| o.to_string())
            .collect::<Vec<_>>()
            .join(" "),
    );
    r.input("truncation", scenario.natmap.truncation);
    r.input("samples", scenario.natmap.samples);
    r.input("fd_step", scenario.natmap.fd_step);
    r
}

fn point_text(p: &Point) -> String {
    floats(p.coords().iter().copied())
}

fn ball_text(p: &Point) -> String {
    floats(to_ball(p).iter().copied())
}

fn simplex_cell(s: &Sample) -> Cell {
    match s.simplex {
        Some(i) => Cell::from(i),
        None => Cell::from(-1i64),
    }
}

fn samples(scenario: &Scenario, settings: &Settings) -> Result<Vec<Sample>, CliError> {
    sample_points(
        scenario,
        scenario.natmap.samples,
        scenario.natmap.truncation,
        settings.seed,
    )
}

/// Sum of the Lobachevsky volumes of the simplices, when every simplex is
/// an ideal tetrahedron of `H^3`.
pub fn domain_volume_oracle(scenario: &Scenario) -> Option<Vec<f64>> {
    let domain = scenario.domain.as_ref()?;
    if domain.dim != 3 {
        return None;
    }
    domain
        .simplices
        .iter()
        .map(|simplex| {
            let mut pts = Vec::with_capacity(4);
            for &v in simplex {
                match &domain.vertices[v] {
                    Endpoint::Ideal(p) => pts.push(p),
                    Endpoint::Interior(_) => return None,
                }
            }
            let z = ideal_tetra_shape([pts[0], pts[1], pts[2], pts[3]])?;
            let [a, b, c] = ideal_tetra_angles(z);
            ideal_tetra_volume(a, b, c).ok()
        })
        .collect()
}

/// The identity developing map of the scenario domain.
pub fn identity_spec(scenario: &Scenario) -> Result<Option<DevelopingMapSpec>, CliError> {
    match &scenario.domain {
        Some(d) => Ok(Some(DevelopingMapSpec::identity(d.clone(), scenario.n())?)),
        None => Ok(None),
    }
}

fn validate(scenario: &Scenario, settings: &Settings) -> Result<(Report, Status), CliError> {
    let mut r = new_report(
        Command::Validate,
        scenario,
        settings,
        &["check", "value", "tolerance", "pass"],
    );
    let ctx = settings.ctx();
    let v = &scenario.validation;
    let tol = natmap_core::groups::RELATOR_TOL;
    r.tolerance("relator", tol);
    r.tolerance("fixed_set", FIX_TOL);
    r.tolerance("developing_equivariance", DEVELOPING_EQUIVARIANCE_TOL);
    r.tolerance("volume_oracle", VOLUME_ORACLE_TOL);
    let mut ok = v.passes;
    r.push(
        ctx,
        vec![
            "relator_residual_domain".into(),
            v.domain_residual.into(),
            tol.into(),
            (v.domain_residual <= tol).into(),
        ],
    );
    r.push(
        ctx,
        vec![
            "relator_residual_target".into(),
            v.target_residual.into(),
            tol.into(),
            (v.target_residual <= tol).into(),
        ],
    );
    for (i, (a, b)) in v.generator_types.iter().enumerate() {
        r.push(
            ctx,
            vec![
                format!("generator_{}_type", i + 1).into(),
                format!("{a}->{b}").into(),
                Cell::Float(f64::NAN),
                true.into(),
            ],
        );
    }
    let data = &scenario.representation;
    for (i, cusp) in data.cusps.iter().enumerate() {
        let (value, pass) = match cusp_fixed_point(data, cusp) {
            Ok((_, fix)) => {
                let images = cusp
                    .parabolic_gens
                    .iter()
                    .map(|w| data.eval_target(w))
                    .collect::<natmap_core::Result<Vec<_>>>()?;
                let res = fix.max_residual(&images);
                (Cell::from(res), res <= FIX_TOL)
            }
            Err(e) => (Cell::from(e.to_string()), false),
        };
        ok &= pass;
        r.push(
            ctx,
            vec![
                format!("cusp_{i}_target_fixed_set").into(),
                value,
                FIX_TOL.into(),
                pass.into(),
            ],
        );
    }
    if let Some(spec) = scenario.developing_spec()? {
        let res = spec.equivariance_residual(data)?;
        let pass = res <= DEVELOPING_EQUIVARIANCE_TOL;
        ok &= pass;
        r.push(
            ctx,
            vec![
                "developing_equivariance".into(),
                res.into(),
                DEVELOPING_EQUIVARIANCE_TOL.into(),
                pass.into(),
            ],
        );
    }
    if let (Some(oracle), Some(spec)) = (domain_volume_oracle(scenario), identity_spec(scenario)?) {
        let exact: f64 = oracle.iter().sum();
        let vol = vol_dev_with(&spec, &settings.volume_options(None, true))?;
        let residual = if vol.truncation_residual_estimate.is_finite() {
            vol.truncation_residual_estimate
        } else {
            0.0
        };
        let err = (vol.value + residual - exact).abs();
        let pass = err <= VOLUME_ORACLE_TOL;
        ok &= pass;
        r.push(
            ctx,
            vec![
                "domain_volume_oracle".into(),
                exact.into(),
                Cell::Float(f64::NAN),
                true.into(),
            ],
        );
        r.push(
            ctx,
            vec![
                "domain_volume_quadrature".into(),
                (vol.value + residual).into(),
                VOLUME_ORACLE_TOL.into(),
                pass.into(),
            ],
        );
    }
    r.summarize("all_pass", ok);
    let status = if ok {
        Status::Success
    } else {
        Status::InputError
    };
    Ok((r, status))
}

fn orbit(scenario: &Scenario, settings: &Settings) -> Result<Report, CliError> {
    let mut r = new_report(
        Command::Orbit,
        scenario,
        settings,
        &[
            "index",
            "word",
            "letters",
            "domain_distance",
            "target_distance",
            "weight",
        ],
    );
    let orbit = enumerate_orbit(&scenario.representation, settings.word_length)?;
    let cfg = scenario.natmap_config(settings.epsilon, settings.word_length)?;
    let base = Point::origin(scenario.k());
    let target_base = Point::origin(scenario.n());
    for (i, e) in orbit.entries.iter().enumerate() {
        r.push(
            settings.ctx(),
            vec![
                i.into(),
                word(&e.word).into(),
                e.word.len().into(),
                e.length.into(),
                dist(&target_base, &e.target_point).into(),
                (-cfg.s * e.length).exp().into(),
            ],
        );
    }
    let (value, tail) = poincare_series(&orbit, cfg.s, &base)?;
    r.summarize("entries", orbit.len());
    r.summarize("s", cfg.s);
    r.summarize("poincare_series", value);
    r.summarize("tail_estimate", tail);
    r.summarize(
        "last_shell_fraction",
        last_shell_fraction(&orbit, cfg.s, &base)?,
    );
    Ok(r)
}

fn barycenter(scenario: &Scenario, settings: &Settings) -> Result<Report, CliError> {
    let mut r = new_report(
        Command::Barycenter,
        scenario,
        settings,
        &[
            "sample",
            "simplex",
            "kind",
            "iterations",
            "gradient_norm",
            "functional_value",
            "monotone_descent",
            "point",
        ],
    );
    let orbit = enumerate_orbit(&scenario.representation, settings.word_length)?;
    let cfg = scenario.natmap_config(settings.epsilon, settings.word_length)?;
    let mut monotone = true;
    for (i, s) in samples(scenario, settings)?.iter().enumerate() {
        let lambda = build_lambda(&s.point, &orbit, &cfg)?;
        let res = solve_barycenter(&Measure::from(lambda))?;
        let descent = res
            .stats
            .values
            .windows(2)
            .all(|w| w[1] <= w[0] + DESCENT_SLACK);
        monotone &= descent;
        let (kind, point) = match &res.kind {
            BarycenterKind::Interior(p) => ("interior", point_text(p)),
            BarycenterKind::Boundary(p) => ("boundary", floats(p.coords().iter().copied())),
            BarycenterKind::Geodesic(p, q) => (
                "geodesic",
                format!(
                    "{} | {}",
                    floats(p.coords().iter().copied()),
                    floats(q.coords().iter().copied())
                ),
            ),
        };
        r.push(
            settings.ctx(),
            vec![
                i.into(),
                simplex_cell(s),
                kind.into(),
                res.stats.iterations.into(),
                res.stats.gradient_norm.into(),
                res.functional_value.into(),
                descent.into(),
                point.into(),
            ],
        );
    }
    r.tolerance("descent_slack", DESCENT_SLACK);
    r.summarize("monotone_descent", monotone);
    Ok(r)
}

fn natmap_eval(scenario: &Scenario, settings: &Settings) -> Result<Report, CliError> {
    let mut r = new_report(
        Command::NatmapEval,
        scenario,
        settings,
        &[
            "sample",
            "simplex",
            "x",
            "value",
            "value_ball",
            "dist_to_target_base",
            "lambda_mass",
            "iterations",
        ],
    );
    let orbit = enumerate_orbit(&scenario.representation, settings.word_length)?;
    let cfg = scenario.natmap_config(settings.epsilon, settings.word_length)?;
    r.input("orbit_entries", orbit.len());
    for (i, s) in samples(scenario, settings)?.iter().enumerate() {
        let ev = eval_natural_map(&s.point, &orbit, &cfg)?;
        r.push(
            settings.ctx(),
            vec![
                i.into(),
                simplex_cell(s),
                point_text(&s.point).into(),
                point_text(&ev.value).into(),
                ball_text(&ev.value).into(),
                dist(&ev.value, &cfg.target_base).into(),
                ev.lambda_mass.into(),
                ev.stats.iterations.into(),
            ],
        );
    }
    Ok(r)
}

/// `|Jac F^ε|` at the scenario samples over one orbit.
pub fn jacobians(
    scenario: &Scenario,
    settings: &Settings,
    orbit: &WeightedOrbit,
    epsilon: f64,
) -> Result<Vec<f64>, CliError> {
    let cfg = scenario.natmap_config(epsilon, orbit.cutoff)?;
    samples(scenario, settings)?
        .iter()
        .map(|s| Ok(jacobian(&s.point, orbit, &cfg)?.jac))
        .collect()
}

fn natmap_jac(scenario: &Scenario, settings: &Settings) -> Result<Report, CliError> {
    let mut r = new_report(
        Command::NatmapJac,
        scenario,
        settings,
        &["sample", "simplex", "jac", "bound", "within_bound"],
    );
    r.tolerance("jac_slack", JAC_SLACK);
    let orbit = enumerate_orbit(&scenario.representation, settings.word_length)?;
    let cfg = scenario.natmap_config(settings.epsilon, settings.word_length)?;
    let bound = 1.0 + settings.epsilon + JAC_SLACK;
    let mut worst: f64 = 0.0;
    for (i, s) in samples(scenario, settings)?.iter().enumerate() {
        let j = jacobian(&s.point, &orbit, &cfg)?.jac;
        worst = worst.max(j);
        r.push(
            settings.ctx(),
            vec![
                i.into(),
                simplex_cell(s),
                j.into(),
                bound.into(),
                (j <= bound).into(),
            ],
        );
    }
    r.summarize("max_jac", worst);
    r.summarize("bound", bound);
    r.summarize("within_bound", worst <= bound);
    Ok(r)
}

/// The orbit used along the ray into cusp `id`.
pub fn cusp_orbit(
    scenario: &Scenario,
    settings: &Settings,
    id: usize,
) -> Result<(WeightedOrbit, usize), CliError> {
    let data = &scenario.representation;
    Ok(match scenario.cusp_orbits.get(id).copied().flatten() {
        Some(spec) => (
            enumerate_cusp_orbit(data, &data.cusps[id], spec.patch, spec.ball)?,
            spec.ball,
        ),
        None => (
            enumerate_orbit(data, settings.word_length)?,
            settings.word_length,
        ),
    })
}

fn natmap_ray(scenario: &Scenario, settings: &Settings) -> Result<Report, CliError> {
    let mut r = new_report(
        Command::NatmapRay,
        scenario,
        settings,
        &[
            "cusp",
            "patch",
            "t",
            "dist_to_fixset",
            "defect_ratio",
            "nearest",
            "value_ball",
            "failure",
        ],
    );
    r.tolerance("limit", LIMIT_TOL);
    let data = &scenario.representation;
    let ts = &scenario.natmap.ray_times;
    for id in 0..data.cusps.len() {
        let (orbit, ball) = cusp_orbit(scenario, settings, id)?;
        let cfg = scenario.natmap_config(settings.epsilon, ball)?;
        let diag = ray_trace(data, id, &orbit, &cfg, ts)?;
        let patch = match scenario.cusp_orbits[id] {
            Some(p) => format!("{}x{}", p.patch.0, p.patch.1),
            None => "none".into(),
        };
        let ctx = RowContext {
            word_length: ball,
            ..settings.ctx()
        };
        for s in &diag.samples {
            r.push(
                ctx,
                vec![
                    id.into(),
                    patch.clone().into(),
                    s.t.into(),
                    s.dist_to_fixset.into(),
                    s.defect_ratio.into(),
                    format!("{:?}", s.nearest).into(),
                    s.value.as_ref().map(ball_text).unwrap_or_default().into(),
                    s.failure.clone().unwrap_or_default().into(),
                ],
            );
        }
        let d: Vec<f64> = diag.samples.iter().map(|s| s.dist_to_fixset).collect();
        let e: Vec<f64> = diag.samples.iter().map(|s| s.defect_ratio).collect();
        r.summarize(&format!("cusp_{id}_orbit_entries"), orbit.len());
        r.summarize(
            &format!("cusp_{id}_distance_strictly_decreasing"),
            strictly_decreasing(&d),
        );
        r.summarize(
            &format!("cusp_{id}_final_distance"),
            d.last().copied().unwrap_or(f64::NAN),
        );
        r.summarize(
            &format!("cusp_{id}_defect_nonincreasing"),
            nonincreasing(&e),
        );
    }
    Ok(r)
}

/// True for a sequence that strictly decreases, or is identically zero
/// (a fixed set containing everything).
pub fn strictly_decreasing(xs: &[f64]) -> bool {
    xs.iter().all(|&x| x == 0.0) || xs.windows(2).all(|w| w[1] < w[0])
}

pub fn nonincreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] <= w[0])
}

fn natmap_sweep(scenario: &Scenario, settings: &Settings) -> Result<Report, CliError> {
    let mut r = new_report(
        Command::NatmapSweep,
        scenario,
        settings,
        &[
            "sample",
            "simplex",
            "jac",
            "within_bound",
            "step_distance",
            "value",
            "failure",
        ],
    );
    r.tolerance("jac_slack", JAC_SLACK);
    let orbit = enumerate_orbit(&scenario.representation, settings.word_length)?;
    let cfg = scenario.natmap_config(settings.epsilon, settings.word_length)?;
    let eps = &scenario.natmap.sweep_epsilons;
    r.input("sweep_epsilons", floats(eps.iter().copied()));
    let mut decreasing = 0usize;
    let all = samples(scenario, settings)?;
    for (i, s) in all.iter().enumerate() {
        let sweep = epsilon_sweep(&s.point, &orbit, &cfg, eps)?;
        let mut prev: Option<Point> = None;
        let mut steps = Vec::new();
        for entry in &sweep {
            let step = match (&prev, &entry.value) {
                (Some(a), Some(b)) => dist(a, b),
                _ => f64::NAN,
            };
            if step.is_finite() {
                steps.push(step);
            }
            let jac = entry.jac.unwrap_or(f64::NAN);
            let ctx = RowContext {
                epsilon: entry.epsilon,
                ..settings.ctx()
            };
            r.push(
                ctx,
                vec![
                    i.into(),
                    simplex_cell(s),
                    jac.into(),
                    (jac <= 1.0 + entry.epsilon + JAC_SLACK).into(),
                    step.into(),
                    entry
                        .value
                        .as_ref()
                        .map(point_text)
                        .unwrap_or_default()
                        .into(),
                    entry.failure.clone().unwrap_or_default().into(),
                ],
            );
            prev = entry.value.clone();
        }
        if nonincreasing(&steps) {
            decreasing += 1;
        }
    }
    r.summarize("samples", all.len());
    r.summarize("samples_with_nonincreasing_steps", decreasing);
    Ok(r)
}

fn require_domain(scenario: &Scenario) -> Result<(), CliError> {
    if scenario.domain.is_none() {
        return Err(CliError::Input(format!(
            "scenario {} has no fundamental domain",
            scenario.name
        )));
    }
    Ok(())
}

fn vol_dev(scenario: &Scenario, settings: &Settings) -> Result<Report, CliError> {
    require_domain(scenario)?;
    let spec = scenario
        .developing_spec()?
        .expect("domain implies developing map");
    let mut r = new_report(Command::VolDev, scenario, settings, &["simplex", "volume"]);
    r.input(
        "developing_map",
        format!("{:?}", scenario.developing.expect("domain")).to_lowercase(),
    );
    r.tolerance("rel_tol", DEFAULT_REL_TOL);
    r.tolerance("abs_tol", ABS_TOL);
    let vol = vol_dev_with(&spec, &settings.volume_options(None, true))?;
    let ctx = RowContext {
        quad_order: vol.quadrature_order,
        ..settings.ctx()
    };
    for (s, v) in vol.per_simplex.iter().enumerate() {
        r.push(ctx, vec![s.into(), (*v).into()]);
    }
    summarize_volume(&mut r, &vol);
    Ok(r)
}

fn summarize_volume(r: &mut Report, vol: &natmap_core::VolumeReport) {
    r.summarize("value", vol.value);
    r.summarize("quadrature_order", vol.quadrature_order);
    r.summarize("truncation", vol.truncation);
    r.summarize(
        "truncation_residual_estimate",
        vol.truncation_residual_estimate,
    );
    r.summarize(
        "history",
        vol.history
            .iter()
            .map(|(o, v)| format!("{o}:{}", float(*v)))
            .collect::<Vec<_>>()
            .join(" "),
    );
}

/// `vol(F^ε)` over the domain truncated at the natural-map height.
pub fn natmap_volume(
    scenario: &Scenario,
    settings: &Settings,
    orbit: &WeightedOrbit,
    epsilon: f64,
) -> Result<natmap_core::VolumeReport, CliError> {
    require_domain(scenario)?;
    let domain = scenario.domain.as_ref().expect("checked");
    let cfg = scenario.natmap_config(epsilon, orbit.cutoff)?;
    let opts = settings.volume_options(Some(scenario.natmap.truncation), false);
    Ok(vol_form_integral_with(domain, &opts, |x| {
        Ok(jacobian(x, orbit, &cfg)?.jac)
    })?)
}

/// Volume of the domain truncated at the natural-map height.
pub fn truncated_domain_volume(
    scenario: &Scenario,
    settings: &Settings,
) -> Result<natmap_core::VolumeReport, CliError> {
    require_domain(scenario)?;
    let spec = identity_spec(scenario)?.expect("checked");
    let opts = settings.volume_options(Some(scenario.natmap.truncation), false);
    Ok(vol_dev_with(&spec, &opts)?)
}

/// Allowance for quadrature error in a volume comparison.
pub fn quadrature_tolerance(a: f64, b: f64) -> f64 {
    DEFAULT_REL_TOL * a.abs().max(b.abs()) + ABS_TOL
}

fn vol_natmap(scenario: &Scenario, settings: &Settings) -> Result<Report, CliError> {
    require_domain(scenario)?;
    let mut r = new_report(
        Command::VolNatmap,
        scenario,
        settings,
        &["simplex", "natmap_volume", "domain_volume"],
    );
    r.tolerance("rel_tol", DEFAULT_REL_TOL);
    r.tolerance("abs_tol", ABS_TOL);
    let orbit = enumerate_orbit(&scenario.representation, settings.volume_word_length)?;
    let vol = natmap_volume(scenario, settings, &orbit, settings.epsilon)?;
    let dom = truncated_domain_volume(scenario, settings)?;
    let ctx = RowContext {
        word_length: settings.volume_word_length,
        epsilon: settings.epsilon,
        quad_order: vol.quadrature_order,
    };
    for (s, (a, b)) in vol.per_simplex.iter().zip(&dom.per_simplex).enumerate() {
        r.push(ctx, vec![s.into(), (*a).into(), (*b).into()]);
    }
    summarize_volume(&mut r, &vol);
    let k = scenario.k() as i32;
    let bound = (1.0 + settings.epsilon).powi(k) * dom.value;
    let tol = quadrature_tolerance(vol.value, bound);
    r.summarize("domain_volume", dom.value);
    r.summarize("bound", bound);
    r.summarize("quadrature_tolerance", tol);
    r.summarize("within_bound", vol.value <= bound + tol);
    r.summarize("gap", (vol.value - dom.value).abs());
    Ok(r)
}
