//! The invariant suite behind the `properties` command. Every check
//! produces one row; a check that errors is recorded as a failure.

use natmap_core::barycenter::{
    functional_eval, pushforward, radial_profile, radial_profile_full, radial_profile_quadrature,
    solve_barycenter, tv_distance, AtomicBoundaryMeasure, BarycenterKind, Measure, VisualMixture,
};
use natmap_core::groups::{cusp_fixed_point, enumerate_orbit, poincare_series, DEDUP_TOL};
use natmap_core::hypgeo::{
    busemann, classify_isometry, dist, distance_to_subspace, embed_endpoint, exp_map,
    minkowski_form, tangent_frame, Vector, FIX_TOL,
};
use natmap_core::natural_map::{
    build_lambda, build_lambda_raw, epsilon_sweep, equivariance_defect, eval_natural_map,
    invariance_defect, jacobian, ray_trace_along, LIMIT_TOL,
};
use natmap_core::volume::{vol_dev_with, vol_form_integral_with, VolumeOptions, DEFAULT_REL_TOL};
use natmap_core::{BoundaryPoint, DevelopingMapSpec, Endpoint, GeodesicRay, Isometry, Point};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::commands::{
    cusp_orbit, domain_volume_oracle, identity_spec, new_report, nonincreasing,
    quadrature_tolerance, strictly_decreasing, Command, Settings, DESCENT_SLACK,
    DEVELOPING_EQUIVARIANCE_TOL, JAC_SLACK, VOLUME_ORACLE_TOL,
};
use crate::report::{Cell, Report, RowContext};
use crate::sampling::{gaussian_vector, rng, sample_points};
use crate::scenario::{Scenario, TargetMode};
use crate::CliError;

/// Outcome of one check.
struct Check {
    value: f64,
    tolerance: f64,
    pass: bool,
    note: String,
}

impl Check {
    /// `value <= tolerance`.
    fn at_most(value: f64, tolerance: f64) -> Check {
        Check {
            value,
            tolerance,
            pass: value <= tolerance,
            note: String::new(),
        }
    }

    /// `value >= tolerance`.
    fn at_least(value: f64, tolerance: f64) -> Check {
        Check {
            value,
            tolerance,
            pass: value >= tolerance,
            note: String::new(),
        }
    }

    fn flag(pass: bool, value: f64, note: impl Into<String>) -> Check {
        Check {
            value,
            tolerance: f64::NAN,
            pass,
            note: note.into(),
        }
    }

    fn note(mut self, note: impl Into<String>) -> Check {
        self.note = note.into();
        self
    }
}

type CheckResult = Result<Check, CliError>;

struct Suite {
    report: Report,
    ctx: RowContext,
    failures: usize,
}

impl Suite {
    fn record(&mut self, name: &str, result: CheckResult) {
        let check = result.unwrap_or_else(|e| Check {
            value: f64::NAN,
            tolerance: f64::NAN,
            pass: false,
            note: format!("error: {e}"),
        });
        if !check.pass {
            self.failures += 1;
        }
        self.report.push(
            self.ctx,
            vec![
                name.into(),
                check.value.into(),
                check.tolerance.into(),
                check.pass.into(),
                Cell::Text(check.note),
            ],
        );
    }
}

fn random_point(rng: &mut ChaCha8Rng, m: usize, rmax: f64) -> Point {
    let r = rmax * rng.random::<f64>();
    Point::from_polar(r, &gaussian_vector(rng, m)).expect("nonzero gaussian direction")
}

fn random_boundary(rng: &mut ChaCha8Rng, m: usize) -> BoundaryPoint {
    BoundaryPoint::from_direction(&gaussian_vector(rng, m)).expect("nonzero gaussian direction")
}

/// Rotation, translation by at most `reach`, rotation.
fn random_isometry(rng: &mut ChaCha8Rng, m: usize, reach: f64) -> Isometry {
    let mut g = Isometry::identity(m);
    let rotate = |rng: &mut ChaCha8Rng, g: Isometry| {
        let mut g = g;
        for _ in 0..m {
            let i = rng.random_range(1..=m);
            let j = (i % m) + 1;
            let angle = std::f64::consts::TAU * rng.random::<f64>();
            g = g.compose(&Isometry::rotation(m, i, j, angle));
        }
        g
    };
    g = rotate(rng, g);
    let axis = rng.random_range(1..=m);
    g = g.compose(&Isometry::translation(
        m,
        axis,
        reach * (2.0 * rng.random::<f64>() - 1.0),
    ));
    rotate(rng, g)
}

/// Five boundary atoms with weights in `[1, 2]`, so that none carries half
/// the mass, plus `visual` visual terms.
fn random_measure(rng: &mut ChaCha8Rng, m: usize, visual: usize) -> Measure {
    let atoms = (0..5)
        .map(|_| (1.0 + rng.random::<f64>(), random_boundary(rng, m)))
        .collect();
    let terms: Vec<(f64, Point)> = (0..visual)
        .map(|_| (1.0 + rng.random::<f64>(), random_point(rng, m, 1.5)))
        .collect();
    let visual = if terms.is_empty() {
        VisualMixture::default()
    } else {
        VisualMixture::new(terms).expect("positive weights")
    };
    Measure::new(
        AtomicBoundaryMeasure::new(atoms).expect("positive weights"),
        visual,
    )
    .expect("valid measure")
}

fn interior(measure: &Measure) -> Result<Point, CliError> {
    let res = solve_barycenter(measure)?;
    match res.kind {
        BarycenterKind::Interior(p) => Ok(p),
        other => Err(CliError::Numerical(natmap_core::Error::InvalidMeasure(
            format!("expected an interior barycenter, found {other:?}"),
        ))),
    }
}

pub fn run_suite(scenario: &Scenario, settings: &Settings) -> Result<Report, CliError> {
    let report = new_report(
        Command::Properties,
        scenario,
        settings,
        &["property", "value", "tolerance", "pass", "note"],
    );
    let mut suite = Suite {
        report,
        ctx: settings.ctx(),
        failures: 0,
    };
    let mut rng = rng(settings.seed);
    geometry(&mut suite, scenario, &mut rng);
    groups(&mut suite, scenario, settings);
    barycenter(&mut suite, scenario, &mut rng);
    natural_map(&mut suite, scenario, settings)?;
    if scenario.domain.is_some() {
        volume(&mut suite, scenario, settings, &mut rng)?;
    }
    let mut report = suite.report;
    let checks = report.rows.len();
    report.summarize("checks", checks);
    report.summarize("failures", suite.failures);
    report.summarize("all_pass", suite.failures == 0);
    Ok(report)
}

fn geometry(suite: &mut Suite, scenario: &Scenario, rng: &mut ChaCha8Rng) {
    let n = scenario.n();
    let o = Point::origin(n);

    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let g = random_isometry(rng, n, 2.0);
        let (x, y) = (random_point(rng, n, 3.0), random_point(rng, n, 3.0));
        worst = worst.max((dist(&g.apply(&x), &g.apply(&y)) - dist(&x, &y)).abs());
    }
    suite.record(
        "isometry_preserves_distance",
        Ok(Check::at_most(worst, 1e-10)),
    );

    // B(gy, gθ) = B(y, θ) - ln λ when gθ is renormalized from g·θ = λ (1, u')
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let g = random_isometry(rng, n, 1.5);
        let y = random_point(rng, n, 2.0);
        let theta = random_boundary(rng, n);
        let lambda = (g.matrix() * theta.coords())[0];
        let moved = busemann(&g.apply(&y), &g.apply_boundary(&theta)).0 + lambda.ln();
        worst = worst.max((moved - busemann(&y, &theta).0).abs());
    }
    suite.record(
        "busemann_pairing_invariance",
        Ok(Check::at_most(worst, 1e-12)),
    );

    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let y = random_point(rng, n, 3.0);
        let theta = random_boundary(rng, n);
        let grad = busemann(&y, &theta).1;
        let norm = minkowski_form(&grad, &grad).unwrap_or(f64::NAN).sqrt();
        worst = worst.max((norm - 1.0).abs());
    }
    suite.record("busemann_gradient_unit", Ok(Check::at_most(worst, 1e-10)));

    suite.record("busemann_ray_calibration", ray_calibration(rng, n, &o));

    let data = &scenario.representation;
    let mut mismatches = 0usize;
    for g in data.domain_gens.iter().chain(&data.target_images) {
        let m = g.dim();
        let kind = classify_isometry(g).kind;
        for _ in 0..20 {
            let h = random_isometry(rng, m, 1.0);
            let conj = h.compose(g).compose(&h.inverse());
            if classify_isometry(&conj).kind != kind {
                mismatches += 1;
            }
        }
    }
    suite.record(
        "classification_conjugation_invariant",
        Ok(Check::at_most(mismatches as f64, 0.0)),
    );

    for (i, cusp) in data.cusps.iter().enumerate() {
        let result = (|| -> CheckResult {
            let (_, fix) = cusp_fixed_point(data, cusp)?;
            let images = cusp
                .parabolic_gens
                .iter()
                .map(|w| data.eval_target(w))
                .collect::<natmap_core::Result<Vec<_>>>()?;
            Ok(Check::at_most(fix.max_residual(&images), FIX_TOL)
                .note(format!("{:?}", fix.description)))
        })();
        suite.record(&format!("cusp_{i}_fixed_set_residual"), result);
    }
}

/// `|B(α(t), θ) + t|` for the ray from the basepoint toward `θ`.
fn ray_calibration(rng: &mut ChaCha8Rng, n: usize, o: &Point) -> CheckResult {
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let theta = random_boundary(rng, n);
        let ray = GeodesicRay::new(o.clone(), theta.clone())?;
        for i in 0..=20 {
            let t = 0.5 * i as f64;
            worst = worst.max((busemann(&ray.point_at(t), &theta).0 + t).abs());
        }
    }
    Ok(Check::at_most(worst, 1e-9))
}

fn groups(suite: &mut Suite, scenario: &Scenario, settings: &Settings) {
    let data = &scenario.representation;
    let v = &scenario.validation;
    suite.record("relator_residual", Ok(Check::at_most(v.residual, 1e-12)));
    if scenario.is_fuchsian() {
        suite.record(
            "domain_target_residual_agreement",
            Ok(Check::at_most(
                (v.domain_residual - v.target_residual).abs(),
                1e-12,
            )),
        );
    }
    let l = settings.word_length;

    let result = (|| -> CheckResult {
        let a = enumerate_orbit(data, l)?;
        let b = enumerate_orbit(data, l)?;
        let same = a.len() == b.len()
            && a.entries.iter().zip(&b.entries).all(|(x, y)| {
                x.word == y.word
                    && x.domain_point == y.domain_point
                    && x.target_point == y.target_point
            });
        Ok(Check::flag(
            same,
            a.len() as f64,
            "entries compared bitwise",
        ))
    })();
    suite.record("orbit_deterministic", result);

    let result = (|| -> CheckResult {
        let mut len = l;
        let mut orbit = enumerate_orbit(data, len)?;
        while orbit.len() > 500 && len > 0 {
            len -= 1;
            orbit = enumerate_orbit(data, len)?;
        }
        let mut closest = f64::INFINITY;
        for (i, a) in orbit.entries.iter().enumerate() {
            for b in &orbit.entries[i + 1..] {
                let d = dist(&a.domain_point, &b.domain_point)
                    .max(dist(&a.target_point, &b.target_point));
                closest = closest.min(d);
            }
        }
        Ok(Check::at_least(closest, DEDUP_TOL)
            .note(format!("{} entries at word length {len}", orbit.len())))
    })();
    suite.record("orbit_dedup_bruteforce", result);

    let result = (|| -> CheckResult {
        let cfg = scenario.natmap_config(settings.epsilon, l)?;
        let o = Point::origin(scenario.k());
        let outer = enumerate_orbit(data, l)?;
        let inner = enumerate_orbit(data, l.saturating_sub(1))?;
        let positive = outer
            .entries
            .iter()
            .all(|e| (-cfg.s * dist(&o, &e.domain_point)).exp() > 0.0);
        let grow = poincare_series(&outer, cfg.s, &o)?.0 - poincare_series(&inner, cfg.s, &o)?.0;
        Ok(Check::flag(
            positive && grow >= 0.0,
            grow,
            "series(L) - series(L-1)",
        ))
    })();
    suite.record("poincare_weights_positive_monotone", result);
}

fn barycenter(suite: &mut Suite, scenario: &Scenario, rng: &mut ChaCha8Rng) {
    let n = scenario.n();

    let g0 = radial_profile(2, 0.0).0;
    let worst = (0..100)
        .map(|i| {
            let r = 20.0 * i as f64 / 99.0;
            (radial_profile(2, r).0 - g0 - 2.0 * (0.5 * r).cosh().ln()).abs()
        })
        .fold(0.0, f64::max);
    suite.record(
        "radial_profile_closed_form_n2",
        Ok(Check::at_most(worst, 1e-8)),
    );
    let worst = (1..=100)
        .map(|i| {
            let r = 0.15 * i as f64;
            (radial_profile(3, r).0 - (r / r.tanh() - 1.0)).abs()
        })
        .fold(0.0, f64::max);
    suite.record(
        "radial_profile_closed_form_n3",
        Ok(Check::at_most(worst, 1e-8)),
    );
    let worst = (0..40)
        .map(|i| {
            let r = 0.4137 * i as f64 + 0.01;
            let (c, q) = (radial_profile_full(n, r), radial_profile_quadrature(n, r));
            (c.g - q.g).abs().max((c.dg - q.dg).abs())
        })
        .fold(0.0, f64::max);
    suite.record("radial_profile_cache", Ok(Check::at_most(worst, 1e-9)));

    let result = (|| -> CheckResult {
        let mut worst: f64 = 0.0;
        for _ in 0..10 {
            let y = random_point(rng, n, 3.0);
            let nu = Measure::from(VisualMixture::new(vec![(1.0, y.clone())])?);
            worst = worst.max(dist(&interior(&nu)?, &y));
        }
        Ok(Check::at_most(worst, 1e-8))
    })();
    suite.record("barycenter_of_visual_measure", result);

    let result = (|| -> CheckResult {
        let mut bad = 0usize;
        for _ in 0..10 {
            let (a, b) = (random_boundary(rng, n), random_boundary(rng, n));
            let m = Measure::from(AtomicBoundaryMeasure::new(vec![
                (0.5, a.clone()),
                (0.5, b.clone()),
            ])?);
            let ok = match solve_barycenter(&m)?.kind {
                BarycenterKind::Geodesic(p, q) => {
                    let direct = p.chordal_distance(&a).max(q.chordal_distance(&b));
                    let swapped = p.chordal_distance(&b).max(q.chordal_distance(&a));
                    direct.min(swapped) <= 1e-12
                }
                _ => false,
            };
            bad += usize::from(!ok);
        }
        Ok(Check::at_most(bad as f64, 0.0).note("failures out of 10"))
    })();
    suite.record("two_equal_atoms_give_geodesic", result);

    let result = (|| -> CheckResult {
        let mut bad = 0usize;
        for _ in 0..10 {
            let theta = random_boundary(rng, n);
            let m = Measure::new(
                AtomicBoundaryMeasure::new(vec![(0.6, theta.clone())])?,
                VisualMixture::new(vec![(0.4, Point::origin(n))])?,
            )?;
            let at_theta = matches!(
                solve_barycenter(&m)?.kind,
                BarycenterKind::Boundary(p) if p.chordal_distance(&theta) <= 1e-12
            );
            // the functional decreases without bound along the ray to θ
            let ray = GeodesicRay::new(Point::origin(n), theta)?;
            let vals: Vec<f64> = [1.0, 3.0, 6.0, 10.0]
                .iter()
                .map(|&t| functional_eval(&m, &ray.point_at(t)).map(|f| f.value))
                .collect::<natmap_core::Result<_>>()?;
            let falling = vals.windows(2).all(|w| w[1] < w[0]);
            bad += usize::from(!(at_theta && falling));
        }
        Ok(Check::at_most(bad as f64, 0.0).note("failures out of 10"))
    })();
    suite.record("heavy_atom_gives_boundary", result);

    let result = (|| -> CheckResult {
        let beta = random_measure(rng, n, 2);
        let base = interior(&beta)?;
        let mut worst: f64 = 0.0;
        for e in -3..=3 {
            let c = 10f64.powi(e);
            worst = worst.max(dist(&interior(&beta.scaled(c))?, &base));
        }
        Ok(Check::at_most(worst, 1e-10).note("c = 1e-3 .. 1e3"))
    })();
    suite.record("barycenter_scaling_invariance", result);

    let result = (|| -> CheckResult {
        let mut worst: f64 = 0.0;
        for _ in 0..10 {
            let beta = random_measure(rng, n, 0);
            let g = random_isometry(rng, n, 1.5);
            let moved = interior(&pushforward(&g, &beta))?;
            worst = worst.max(dist(&moved, &g.apply(&interior(&beta)?)));
        }
        Ok(Check::at_most(worst, 1e-8))
    })();
    suite.record("barycenter_equivariance", result);

    let result = (|| -> CheckResult {
        let mut worst = f64::NEG_INFINITY;
        for _ in 0..20 {
            let beta = random_measure(rng, n, 1);
            let y = random_point(rng, n, 2.0);
            let v = tangent_frame(&y) * Vector::from_vec(gaussian_vector(rng, n));
            let f = |t: f64| functional_eval(&beta, &exp_map(&y, &(&v * t))).map(|e| e.value);
            let gap = f(0.0)? - 0.5 * (f(-1.0)? + f(1.0)?);
            worst = worst.max(gap);
        }
        Ok(Check::flag(
            worst < 0.0,
            worst,
            "max of f(mid) - mean(f(ends)); must be negative",
        ))
    })();
    suite.record("strict_convexity_midpoint", result);

    let result = (|| -> CheckResult {
        let mut worst = f64::NEG_INFINITY;
        for _ in 0..20 {
            let beta = random_measure(rng, n, 2);
            let stats = solve_barycenter(&beta)?.stats;
            for w in stats.values.windows(2) {
                worst = worst.max(w[1] - w[0]);
            }
        }
        let worst = worst.max(-1.0);
        Ok(Check::at_most(worst, DESCENT_SLACK)
            .note("largest step-to-step change of the functional"))
    })();
    suite.record("newton_descent", result);

    let result = (|| -> CheckResult {
        let h = 1e-5;
        let mut worst: f64 = 0.0;
        for _ in 0..100 {
            let beta = random_measure(rng, n, 2);
            let y = random_point(rng, n, 2.0);
            let eval = functional_eval(&beta, &y)?;
            let frame = tangent_frame(&y);
            for i in 0..n {
                let e = frame.column(i).into_owned();
                let plus = functional_eval(&beta, &exp_map(&y, &(&e * h)))?.value;
                let minus = functional_eval(&beta, &exp_map(&y, &(&e * -h)))?.value;
                let fd = (plus - minus) / (2.0 * h);
                let analytic = minkowski_form(&eval.gradient, &e)?;
                worst = worst.max((fd - analytic).abs());
            }
        }
        Ok(Check::at_most(worst, 1e-6))
    })();
    suite.record("gradient_finite_difference", result);

    let result = (|| -> CheckResult {
        let beta = random_measure(rng, n, 2);
        let limit = interior(&beta)?;
        let mut dists = Vec::new();
        for i in 1..=10 {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            let f = 1.0 + sign * 0.5f64.powi(i);
            let mut b = beta.clone();
            for a in &mut b.atoms.atoms {
                a.0 *= f;
            }
            dists.push(dist(&interior(&b)?, &limit));
        }
        let steps = dists.windows(2).filter(|w| !(w[1] < w[0])).count();
        Ok(Check::at_most(steps as f64, 0.0).note(format!(
            "last distance {:e}",
            dists.last().copied().unwrap_or(f64::NAN)
        )))
    })();
    suite.record("weak_star_continuity", result);

    let result = (|| -> CheckResult {
        let beta = random_measure(rng, n, 2);
        let g = random_isometry(rng, n, 1.0);
        let a = tv_distance(&pushforward(&g, &beta), &beta);
        let b = tv_distance(&beta, &pushforward(&g.inverse(), &beta));
        let zero = tv_distance(&beta, &beta);
        Ok(Check::at_most((a - b).abs().max(zero), 1e-12))
    })();
    suite.record("tv_distance_symmetry", result);
}

fn natural_map(
    suite: &mut Suite,
    scenario: &Scenario,
    settings: &Settings,
) -> Result<(), CliError> {
    let data = &scenario.representation;
    let l = settings.word_length;
    let eps = settings.epsilon;
    let orbit = enumerate_orbit(data, l)?;
    let cfg = scenario.natmap_config(eps, l)?;
    let samples = sample_points(
        scenario,
        scenario.natmap.samples,
        scenario.natmap.truncation,
        settings.seed,
    )?;
    let o = Point::origin(scenario.k());

    let result = (|| -> CheckResult {
        let mut worst: f64 = 0.0;
        for s in samples.iter().take(5) {
            let a = interior(&Measure::from(build_lambda(&s.point, &orbit, &cfg)?))?;
            let b = interior(&Measure::from(build_lambda_raw(&s.point, &orbit, &cfg)?))?;
            worst = worst.max(dist(&a, &b));
        }
        Ok(Check::at_most(worst, 1e-10))
    })();
    suite.record("weight_renormalization", result);

    let result = (|| -> CheckResult {
        let mut worst: f64 = 0.0;
        for s in &samples {
            worst = worst.max(jacobian(&s.point, &orbit, &cfg)?.jac);
        }
        Ok(Check::at_most(worst, 1.0 + eps + JAC_SLACK)
            .note(format!("max over {} samples", samples.len())))
    })();
    suite.record("jacobian_bound", result);

    if scenario.is_fuchsian() && scenario.domain.is_some() {
        let result = (|| -> CheckResult {
            let v = eval_natural_map(&o, &orbit, &cfg)?.value;
            Ok(Check::at_most(dist(&v, &cfg.target_base), 0.05))
        })();
        suite.record("natmap_fixes_basepoint", result);
    }

    let result = (|| -> CheckResult {
        let mut worst: f64 = 0.0;
        let points =
            std::iter::once(o.clone()).chain(samples.iter().take(1).map(|s| s.point.clone()));
        for x in points {
            for g in 1..=data.rank() as i32 {
                worst = worst.max(equivariance_defect(&x, &[g], data, &orbit, &cfg)?.0);
            }
        }
        Ok(Check::at_most(worst, 1e-3).note("orbit re-centered"))
    })();
    suite.record("equivariance_recentered", result);

    let result = (|| -> CheckResult {
        let coarse = enumerate_orbit(data, l.saturating_sub(1))?;
        let coarse_cfg = scenario.natmap_config(eps, l.saturating_sub(1))?;
        let (mut fine_d, mut coarse_d): (f64, f64) = (0.0, 0.0);
        for g in 1..=data.rank() as i32 {
            fine_d = fine_d.max(equivariance_defect(&o, &[g], data, &orbit, &cfg)?.1);
            coarse_d = coarse_d.max(equivariance_defect(&o, &[g], data, &coarse, &coarse_cfg)?.1);
        }
        Ok(Check::flag(
            fine_d <= coarse_d,
            fine_d,
            format!("plain defect at L-1: {coarse_d:e}"),
        ))
    })();
    suite.record("equivariance_improves_with_length", result);

    if scenario.target_mode == TargetMode::Trivial {
        let result = (|| -> CheckResult {
            let mut worst: f64 = 0.0;
            for s in samples.iter().take(10) {
                let j = jacobian(&s.point, &orbit, &cfg)?;
                worst = worst.max(dist(&j.value, &cfg.target_base)).max(j.jac);
            }
            Ok(Check::at_most(worst, 1e-10).note("distance to O' and jacobian"))
        })();
        suite.record("trivial_rep_constant_map", result);
    }

    if scenario.n() > scenario.k() {
        let result = (|| -> CheckResult {
            let mut worst: f64 = 0.0;
            for s in &samples {
                let v = eval_natural_map(&s.point, &orbit, &cfg)?.value;
                worst = worst.max(distance_to_subspace(&v, scenario.k()));
            }
            Ok(Check::at_most(worst, 0.05))
        })();
        suite.record("image_near_totally_geodesic_subspace", result);
    }

    let result = (|| -> CheckResult {
        let mut worst: f64 = 0.0;
        for s in samples.iter().take(3) {
            let id = Isometry::identity(scenario.n());
            let zero = invariance_defect(&s.point, &id, &orbit, &cfg)?;
            worst = worst.max(zero);
            for w in data.cusps.iter().flat_map(|c| &c.parabolic_gens) {
                let d = invariance_defect(&s.point, &data.eval_target(w)?, &orbit, &cfg)?;
                if d > 2.0 {
                    worst = worst.max(d);
                }
            }
        }
        Ok(Check::at_most(worst, 1e-15).note("identity defect, and excess over 2"))
    })();
    suite.record("invariance_defect_bounds", result);

    for id in 0..data.cusps.len() {
        ray_checks(suite, scenario, settings, id);
    }

    let result = (|| -> CheckResult {
        let eps_list = &scenario.natmap.sweep_epsilons;
        let mut trend_ok = 0usize;
        let mut worst_excess = f64::NEG_INFINITY;
        let used: Vec<_> = samples.iter().take(3).collect();
        for s in &used {
            let sweep = epsilon_sweep(&s.point, &orbit, &cfg, eps_list)?;
            let mut steps = Vec::new();
            for w in sweep.windows(2) {
                if let (Some(a), Some(b)) = (&w[0].value, &w[1].value) {
                    steps.push(dist(a, b));
                }
            }
            if steps.len() + 1 == sweep.len() && nonincreasing(&steps) {
                trend_ok += 1;
            }
            for e in &sweep {
                let j = e.jac.unwrap_or(f64::INFINITY);
                worst_excess = worst_excess.max(j - 1.0 - e.epsilon);
            }
        }
        Ok(Check::flag(
            trend_ok == used.len() && worst_excess <= JAC_SLACK,
            worst_excess,
            format!(
                "{trend_ok}/{} samples with shrinking steps; value is max jac - (1 + eps)",
                used.len()
            ),
        ))
    })();
    suite.record("epsilon_sweep_trend", result);
    Ok(())
}

fn ray_checks(suite: &mut Suite, scenario: &Scenario, settings: &Settings, id: usize) {
    let data = &scenario.representation;
    let ts = &scenario.natmap.ray_times;
    let traced = (|| -> Result<_, CliError> {
        let (orbit, ball) = cusp_orbit(scenario, settings, id)?;
        let cfg = scenario.natmap_config(settings.epsilon, ball)?;
        let (xi, fix) = cusp_fixed_point(data, &data.cusps[id])?;
        let ray = GeodesicRay::new(cfg.base.clone(), xi.clone())?;
        let diag = ray_trace_along(data, id, &ray, &fix, &orbit, &cfg, ts)?;
        // the same geodesic started one unit further in
        let shifted = GeodesicRay::new(ray.point_at(1.0), xi)?;
        let ts1: Vec<f64> = ts.iter().map(|t| t - 1.0).collect();
        let again = ray_trace_along(data, id, &shifted, &fix, &orbit, &cfg, &ts1)?;
        Ok((diag, again, orbit.len()))
    })();
    let prefix = format!("cusp_{id}");
    let (diag, again, size) = match traced {
        Ok(v) => v,
        Err(e) => {
            suite.record(&format!("{prefix}_ray_trace"), Err(e));
            return;
        }
    };
    let d: Vec<f64> = diag.samples.iter().map(|s| s.dist_to_fixset).collect();
    let e: Vec<f64> = diag.samples.iter().map(|s| s.defect_ratio).collect();
    let failures: Vec<&str> = diag
        .samples
        .iter()
        .filter_map(|s| s.failure.as_deref())
        .collect();
    let last = d.last().copied().unwrap_or(f64::NAN);
    suite.record(
        &format!("{prefix}_ray_distance_decreasing"),
        Ok(Check::flag(
            failures.is_empty() && strictly_decreasing(&d),
            last,
            format!(
                "{size} orbit entries; distances {}",
                crate::report::floats(d.iter().copied())
            ),
        )),
    );
    suite.record(
        &format!("{prefix}_ray_limit_in_fixed_set"),
        Ok(Check::at_most(last, LIMIT_TOL)),
    );
    suite.record(
        &format!("{prefix}_ray_defect_nonincreasing"),
        Ok(Check::flag(
            nonincreasing(&e),
            e.last().copied().unwrap_or(f64::NAN),
            format!("defects {}", crate::report::floats(e.iter().copied())),
        )),
    );
    let mut worst: f64 = 0.0;
    for (a, b) in diag.samples.iter().zip(&again.samples) {
        worst = match (&a.value, &b.value) {
            (Some(p), Some(q)) => worst.max(dist(p, q)),
            _ => f64::INFINITY,
        };
    }
    suite.record(
        &format!("{prefix}_ray_reparametrization"),
        Ok(Check::at_most(worst, 1e-8)),
    );
}

fn volume(
    suite: &mut Suite,
    scenario: &Scenario,
    settings: &Settings,
    rng: &mut ChaCha8Rng,
) -> Result<(), CliError> {
    let data = &scenario.representation;
    let spec = scenario.developing_spec()?.expect("domain present");
    let identity = identity_spec(scenario)?.expect("domain present");
    let opts = VolumeOptions {
        orders: settings.orders.clone(),
        ..VolumeOptions::default()
    };
    let quad_tol = |a: f64, b: f64| 2.0 * quadrature_tolerance(a, b);

    suite.record(
        "developing_equivariance",
        spec.equivariance_residual(data)
            .map(|r| Check::at_most(r, DEVELOPING_EQUIVARIANCE_TOL))
            .map_err(CliError::from),
    );

    let base = vol_dev_with(&spec, &opts);
    let id_vol = vol_dev_with(&identity, &opts);

    if let Some(oracle) = domain_volume_oracle(scenario) {
        let result = (|| -> CheckResult {
            let vol = id_vol.clone()?;
            let residual = if vol.truncation_residual_estimate.is_finite() {
                vol.truncation_residual_estimate
            } else {
                0.0
            };
            let exact: f64 = oracle.iter().sum();
            Ok(
                Check::at_most((vol.value + residual - exact).abs(), VOLUME_ORACLE_TOL)
                    .note(format!("oracle {exact:.9}")),
            )
        })();
        suite.record("domain_volume_vs_lobachevsky", result);
    }

    if scenario.developing == Some(crate::scenario::DevelopingKind::Collapse) {
        let result = base
            .clone()
            .map(|v| Check::flag(v.value == 0.0, v.value, "exact zero"))
            .map_err(CliError::from);
        suite.record("collapse_volume_zero", result);
    }

    let result = (|| -> CheckResult {
        let a = id_vol.clone()?;
        let domain = scenario.domain.as_ref().expect("domain present");
        let opts = VolumeOptions {
            residual_shells: false,
            ..opts.clone()
        };
        let b = vol_form_integral_with(domain, &opts, |_| Ok(1.0))?;
        Ok(Check::at_most(
            (a.value - b.value).abs(),
            quad_tol(a.value, b.value),
        ))
    })();
    suite.record("vol_dev_matches_volume_form", result);

    let result = (|| -> CheckResult {
        let v = base.clone()?;
        let mut worst: f64 = 0.0;
        for _ in 0..2 {
            let g = random_isometry(rng, scenario.n(), 1.0);
            let moved = vol_dev_with(&spec.moved_by(&g), &opts)?;
            worst = worst.max((moved.value - v.value).abs());
        }
        Ok(Check::at_most(worst, quad_tol(v.value, v.value)))
    })();
    suite.record("volume_isometry_invariance", result);

    let result = (|| -> CheckResult {
        let v = base.clone()?;
        let h = &v.history;
        let change = match h.len() {
            0 | 1 => 0.0,
            len => (h[len - 1].1 - h[len - 2].1).abs(),
        };
        Ok(Check::at_most(
            change,
            DEFAULT_REL_TOL * v.value.abs() + natmap_core::volume::ABS_TOL,
        ))
    })();
    suite.record("quadrature_refinement", result);

    let result = (|| -> CheckResult {
        let mut residuals = Vec::new();
        for t in [3.0, 4.0, 5.0] {
            let o = VolumeOptions {
                truncation: Some(t),
                ..opts.clone()
            };
            residuals.push(vol_dev_with(&identity, &o)?.truncation_residual_estimate);
        }
        let ok =
            residuals.iter().all(|r| r.is_finite()) && residuals.windows(2).all(|w| w[1] < w[0]);
        Ok(Check::flag(
            ok,
            residuals[2],
            format!(
                "residuals {}",
                crate::report::floats(residuals.iter().copied())
            ),
        ))
    })();
    suite.record("truncation_residual_decreasing", result);

    let result = (|| -> CheckResult {
        let k = scenario.k();
        let flat: Vec<Endpoint> = identity
            .domain
            .vertices
            .iter()
            .map(|v| flatten(v, k, scenario.n()))
            .collect::<Result<_, _>>()?;
        let flat_spec = DevelopingMapSpec::new(identity.domain.clone(), flat)?;
        let v = vol_dev_with(&flat_spec, &opts)?;
        Ok(Check::at_most(v.value, 1e-6).note("images in a codimension-one subspace"))
    })();
    suite.record("degenerate_image_volume", result);

    if scenario.is_fuchsian() {
        let result = (|| -> CheckResult {
            let (sub, centers) = identity.domain.stellar_subdivision()?;
            let sub_id = DevelopingMapSpec::identity(sub.clone(), scenario.n())?;
            let reference = vol_dev_with(&sub_id, &opts)?.value;
            let mut lowest = f64::INFINITY;
            for _ in 0..5 {
                let mut images = sub_id.vertex_images.clone();
                for &c in &centers {
                    if let Endpoint::Interior(p) = &images[c] {
                        let v =
                            tangent_frame(p) * Vector::from_vec(gaussian_vector(rng, scenario.n()));
                        let len = 0.5 * rng.random::<f64>() / v.norm().max(1e-12);
                        images[c] = Endpoint::Interior(exp_map(p, &(v * len)));
                    }
                }
                let perturbed = DevelopingMapSpec::new(sub.clone(), images)?;
                lowest = lowest.min(vol_dev_with(&perturbed, &opts)?.value);
            }
            let tol = quad_tol(reference, lowest);
            Ok(Check::flag(
                lowest >= reference - tol,
                lowest - reference,
                format!("min perturbed - identity over 5 perturbations; tolerance {tol:e}"),
            ))
        })();
        suite.record("converse_perturbations", result);
    }
    Ok(())
}

/// The vertex pushed into the subspace spanned by the first `k - 1`
/// spatial directions, then embedded in `H^n`.
fn flatten(v: &Endpoint, k: usize, n: usize) -> Result<Endpoint, CliError> {
    let c = v.coords();
    let mut dir: Vec<f64> = c.iter().skip(1).take(k).copied().collect();
    dir[k - 1] = 0.0;
    let flat = match v {
        Endpoint::Ideal(_) => {
            if dir.iter().map(|x| x * x).sum::<f64>() < 1e-24 {
                dir[0] = 1.0;
            }
            Endpoint::Ideal(BoundaryPoint::from_direction(&dir)?)
        }
        Endpoint::Interior(p) => {
            let r = dist(p, &Point::origin(k));
            let dir = if dir.iter().all(|x| *x == 0.0) {
                let mut d = vec![0.0; k];
                d[0] = 1.0;
                d
            } else {
                dir
            };
            Endpoint::Interior(Point::from_polar(r, &dir)?)
        }
    };
    Ok(embed_endpoint(&flat, n)?)
}
