//! The natural map `F(x) = bar(λ_x)` of a representation, where
//! `λ_x = Σ_γ exp(-s d(x, γO)) ν_{ρ(γ)O'}` over a finite piece of the orbit.

use crate::barycenter::{
    pushforward, solve_barycenter_with, tv_distance, BarycenterKind, Measure, SolverOptions,
    SolverStats, VisualMixture,
};
use crate::error::{Error, Result};
use crate::groups::{cusp_fixed_point, CuspData, RepresentationData, WeightedOrbit};
use crate::hypgeo::{
    ball_distance_to_geodesic, boundary_to_ball, dist, to_ball, FixedSet, FixedSetKind,
    GeodesicRay, Isometry, Matrix, Point, Vector,
};

/// Terms lighter than this fraction of the heaviest are dropped.
pub const WEIGHT_FLOOR: f64 = 1e-16;

#[derive(Clone, Debug)]
pub struct NaturalMapConfig {
    pub epsilon: f64,
    /// `(k - 1)(1 + epsilon)`.
    pub s: f64,
    pub word_length: usize,
    pub base: Point,
    pub target_base: Point,
    pub fd_step: f64,
}

impl NaturalMapConfig {
    pub fn new(k: usize, n: usize, epsilon: f64, word_length: usize) -> Result<Self> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "epsilon {epsilon} must be positive"
            )));
        }
        if k < 2 || n < k {
            return Err(Error::InvalidConfig(format!("dimensions k = {k}, n = {n}")));
        }
        Ok(NaturalMapConfig {
            epsilon,
            s: (k as f64 - 1.0) * (1.0 + epsilon),
            word_length,
            base: Point::origin(k),
            target_base: Point::origin(n),
            fd_step: 1e-4,
        })
    }

    /// Same configuration at another epsilon.
    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        let k = self.base.dim();
        let mut cfg = Self::new(k, self.target_base.dim(), epsilon, self.word_length)?;
        cfg.base = self.base.clone();
        cfg.target_base = self.target_base.clone();
        cfg.fd_step = self.fd_step;
        Ok(cfg)
    }
}

/// `λ_x` with the weights `exp(-s (d(x, γO) - d(x, O)))`.
pub fn build_lambda(
    x: &Point,
    orbit: &WeightedOrbit,
    cfg: &NaturalMapConfig,
) -> Result<VisualMixture> {
    let shift = dist(x, &orbit.base);
    build_weighted(x, orbit, cfg, shift)
}

/// `λ_x` with the raw Poincaré weights `exp(-s d(x, γO))`.
pub fn build_lambda_raw(
    x: &Point,
    orbit: &WeightedOrbit,
    cfg: &NaturalMapConfig,
) -> Result<VisualMixture> {
    build_weighted(x, orbit, cfg, 0.0)
}

fn build_weighted(
    x: &Point,
    orbit: &WeightedOrbit,
    cfg: &NaturalMapConfig,
    shift: f64,
) -> Result<VisualMixture> {
    if orbit.is_empty() {
        return Err(Error::EmptyOrbit);
    }
    if x.dim() != orbit.base.dim() {
        return Err(Error::DimensionMismatch {
            expected: orbit.base.dim(),
            found: x.dim(),
        });
    }
    let exponents: Vec<f64> = orbit
        .entries
        .iter()
        .map(|e| -cfg.s * (dist(x, &e.domain_point) - shift))
        .collect();
    let top = exponents.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let cut = top + WEIGHT_FLOOR.ln();
    let terms: Vec<(f64, Point)> = orbit
        .entries
        .iter()
        .zip(&exponents)
        .filter(|(_, &a)| a >= cut)
        .map(|(e, &a)| (a.exp(), e.target_point.clone()))
        .filter(|(w, _)| *w > 0.0 && w.is_finite())
        .collect();
    if terms.is_empty() {
        return Err(Error::WeightUnderflow);
    }
    Ok(VisualMixture::from_positive_terms(terms))
}

#[derive(Clone, Debug)]
pub struct NaturalMapEvaluation {
    pub x: Point,
    pub value: Point,
    pub lambda_mass: f64,
    pub stats: SolverStats,
}

pub fn eval_natural_map(
    x: &Point,
    orbit: &WeightedOrbit,
    cfg: &NaturalMapConfig,
) -> Result<NaturalMapEvaluation> {
    eval_natural_map_from(x, orbit, cfg, None)
}

/// As [`eval_natural_map`], with the solver started at `start`.
pub fn eval_natural_map_from(
    x: &Point,
    orbit: &WeightedOrbit,
    cfg: &NaturalMapConfig,
    start: Option<&Point>,
) -> Result<NaturalMapEvaluation> {
    let lambda = build_lambda(x, orbit, cfg)?;
    let mass = lambda.mass;
    let opts = SolverOptions {
        start: start.cloned(),
        ..SolverOptions::default()
    };
    let res = solve_barycenter_with(&Measure::from(lambda), &opts)?;
    match res.kind {
        BarycenterKind::Interior(value) => Ok(NaturalMapEvaluation {
            x: x.clone(),
            value,
            lambda_mass: mass,
            stats: res.stats,
        }),
        other => Err(Error::InvalidMeasure(format!(
            "visual mixture has a non-interior barycenter {other:?}"
        ))),
    }
}

/// Central-difference differential of `f` at `x` between the orthonormal
/// frames of the boosts taking the basepoints to `x` and `f(x)`; returns
/// the `n x k` matrix and `f(x)`.
pub fn fd_jacobian<F>(f: F, x: &Point, step: f64) -> Result<(Matrix, Point)>
where
    F: Fn(&Point, Option<&Point>) -> Result<Point>,
{
    let k = x.dim();
    let center = f(x, None)?;
    let n = center.dim();
    let to_x = Isometry::boost_to(x);
    let from_fx = Isometry::boost_to(&center).inverse();
    let mut d = Matrix::zeros(n, k);
    for i in 0..k {
        let mut col = [Vector::zeros(n), Vector::zeros(n)];
        for (slot, sign) in [(0, 1.0), (1, -1.0)] {
            let mut v = Vector::zeros(k + 1);
            v[0] = step.cosh();
            v[i + 1] = sign * step.sinh();
            let xi = to_x.apply(&Point::normalize_unchecked(v));
            let yi = from_fx.apply(&f(&xi, Some(&center))?);
            col[slot] = local_log(&yi);
        }
        d.set_column(i, &((&col[0] - &col[1]) / (2.0 * step)));
    }
    Ok((d, center))
}

/// `log_O(p)` in spatial coordinates.
fn local_log(p: &Point) -> Vector {
    let c = p.coords();
    let spatial = c.rows(1, c.len() - 1).into_owned();
    let sn = spatial.norm();
    if sn == 0.0 {
        return spatial;
    }
    spatial * (sn.asinh() / sn)
}

/// `sqrt(det(D^T D))`, the k-volume scaling of an `n x k` differential.
pub fn jacobian_from_differential(d: &Matrix) -> f64 {
    let gram = d.transpose() * d;
    gram.determinant().max(0.0).sqrt()
}

#[derive(Clone, Debug)]
pub struct JacobianResult {
    pub jac: f64,
    pub differential: Matrix,
    pub value: Point,
}

pub fn jacobian(
    x: &Point,
    orbit: &WeightedOrbit,
    cfg: &NaturalMapConfig,
) -> Result<JacobianResult> {
    let (d, value) = fd_jacobian(
        |p, start| Ok(eval_natural_map_from(p, orbit, cfg, start)?.value),
        x,
        cfg.fd_step,
    )?;
    Ok(JacobianResult {
        jac: jacobian_from_differential(&d),
        differential: d,
        value,
    })
}

/// `|ρ(ψ)_* λ_x - λ_x| / |λ_x|` for `λ_x` built over one truncated orbit.
pub fn invariance_defect(
    x: &Point,
    rho_psi: &Isometry,
    orbit: &WeightedOrbit,
    cfg: &NaturalMapConfig,
) -> Result<f64> {
    let lambda = Measure::from(build_lambda(x, orbit, cfg)?);
    let moved = pushforward(rho_psi, &lambda);
    Ok(tv_distance(&moved, &lambda) / lambda.mass())
}

/// Equivariance errors at `x` for the element `γ` given by a word:
/// `(recentered, plain)` where `recentered` compares `F(γx)` computed over
/// the translated orbit `γ·orbit` and `plain` uses the same orbit.
pub fn equivariance_defect(
    x: &Point,
    word: &[i32],
    data: &RepresentationData,
    orbit: &WeightedOrbit,
    cfg: &NaturalMapConfig,
) -> Result<(f64, f64)> {
    let g = data.eval_domain(word)?;
    let rho_g = data.eval_target(word)?;
    let fx = eval_natural_map(x, orbit, cfg)?.value;
    let expected = rho_g.apply(&fx);
    let gx = g.apply(x);
    let moved = orbit.translate(&g, &rho_g);
    let recentered = eval_natural_map_from(&gx, &moved, cfg, Some(&expected))?.value;
    let plain = eval_natural_map_from(&gx, orbit, cfg, Some(&expected))?.value;
    Ok((dist(&recentered, &expected), dist(&plain, &expected)))
}

/// What the nearest piece of the target fixed set is.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LimitClass {
    /// The whole space is fixed.
    Everywhere,
    FixedPoint,
    InvariantGeodesic,
    /// No fixed element is within the tolerance.
    Unclassified,
}

#[derive(Clone, Debug)]
pub struct RaySample {
    pub t: f64,
    pub value: Option<Point>,
    /// Ball-model distance from `F(α(t))` to the fixed set and invariant geodesics.
    pub dist_to_fixset: f64,
    pub defect_ratio: f64,
    pub nearest: LimitClass,
    pub failure: Option<String>,
}

#[derive(Clone, Debug)]
pub struct RayDiagnostics {
    pub cusp_id: usize,
    pub epsilon: f64,
    pub samples: Vec<RaySample>,
}

/// A sample is attributed to the fixed set when it lies this close (ball model).
pub const LIMIT_TOL: f64 = 0.05;

/// Ball-model distance from `y` to the fixed set of the image cusp group.
pub fn distance_to_fixed_set(y: &Point, fix: &FixedSet) -> (f64, LimitClass) {
    if fix.description == FixedSetKind::Pointwise {
        return (0.0, LimitClass::Everywhere);
    }
    let b = to_ball(y);
    let mut best = (f64::INFINITY, LimitClass::Unclassified);
    for p in &fix.interior_points {
        let d = (to_ball(p) - &b).norm();
        if d < best.0 {
            best = (d, LimitClass::FixedPoint);
        }
    }
    for p in &fix.boundary_points {
        let d = (boundary_to_ball(p) - &b).norm();
        if d < best.0 {
            best = (d, LimitClass::FixedPoint);
        }
    }
    for (p, q) in &fix.invariant_geodesics {
        let d = ball_distance_to_geodesic(y, p, q);
        if d < best.0 {
            best = (d, LimitClass::InvariantGeodesic);
        }
    }
    if best.0 > LIMIT_TOL {
        best.1 = LimitClass::Unclassified;
    }
    best
}

/// Follows `F` along the ray from the basepoint to the cusp point.
pub fn ray_trace(
    data: &RepresentationData,
    cusp_id: usize,
    orbit: &WeightedOrbit,
    cfg: &NaturalMapConfig,
    ts: &[f64],
) -> Result<RayDiagnostics> {
    let cusp: &CuspData = data
        .cusps
        .get(cusp_id)
        .ok_or_else(|| Error::BadCusp(format!("no cusp {cusp_id}")))?;
    if ts.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidConfig("ray times must increase".into()));
    }
    let (xi, fix) = cusp_fixed_point(data, cusp)?;
    let ray = GeodesicRay::new(cfg.base.clone(), xi)?;
    ray_trace_along(data, cusp_id, &ray, &fix, orbit, cfg, ts)
}

pub fn ray_trace_along(
    data: &RepresentationData,
    cusp_id: usize,
    ray: &GeodesicRay,
    fix: &FixedSet,
    orbit: &WeightedOrbit,
    cfg: &NaturalMapConfig,
    ts: &[f64],
) -> Result<RayDiagnostics> {
    let cusp = &data.cusps[cusp_id];
    let images: Vec<Isometry> = cusp
        .parabolic_gens
        .iter()
        .map(|w| data.eval_target(w))
        .collect::<Result<_>>()?;
    let mut samples = Vec::with_capacity(ts.len());
    let mut start: Option<Point> = None;
    for &t in ts {
        let x = ray.point_at(t);
        let defect = images
            .iter()
            .map(|g| invariance_defect(&x, g, orbit, cfg))
            .collect::<Result<Vec<f64>>>()
            .map(|v| v.into_iter().fold(0.0, f64::max));
        match (
            eval_natural_map_from(&x, orbit, cfg, start.as_ref()),
            defect,
        ) {
            (Ok(ev), Ok(defect_ratio)) => {
                let (d, nearest) = distance_to_fixed_set(&ev.value, fix);
                start = Some(ev.value.clone());
                samples.push(RaySample {
                    t,
                    value: Some(ev.value),
                    dist_to_fixset: d,
                    defect_ratio,
                    nearest,
                    failure: None,
                });
            }
            (Err(e), _) | (_, Err(e)) => samples.push(RaySample {
                t,
                value: None,
                dist_to_fixset: f64::NAN,
                defect_ratio: f64::NAN,
                nearest: LimitClass::Unclassified,
                failure: Some(e.to_string()),
            }),
        }
    }
    Ok(RayDiagnostics {
        cusp_id,
        epsilon: cfg.epsilon,
        samples,
    })
}

#[derive(Clone, Debug)]
pub struct SweepEntry {
    pub epsilon: f64,
    pub value: Option<Point>,
    pub jac: Option<f64>,
    pub failure: Option<String>,
}

/// `F^ε(x)` and `|Jac F^ε(x)|` for a decreasing list of ε.
pub fn epsilon_sweep(
    x: &Point,
    orbit: &WeightedOrbit,
    cfg: &NaturalMapConfig,
    epsilons: &[f64],
) -> Result<Vec<SweepEntry>> {
    if epsilons.windows(2).any(|w| !(w[0] > w[1])) {
        return Err(Error::InvalidConfig("epsilons must decrease".into()));
    }
    let mut out = Vec::with_capacity(epsilons.len());
    for &eps in epsilons {
        let c = cfg.with_epsilon(eps)?;
        match jacobian(x, orbit, &c) {
            Ok(j) => out.push(SweepEntry {
                epsilon: eps,
                value: Some(j.value),
                jac: Some(j.jac),
                failure: None,
            }),
            Err(e) => out.push(SweepEntry {
                epsilon: eps,
                value: None,
                jac: None,
                failure: Some(e.to_string()),
            }),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::enumerate_orbit;
    use crate::hypgeo::{embed_subspace, include_isometry};
    use approx::assert_abs_diff_eq;

    fn trivial() -> (RepresentationData, WeightedOrbit) {
        let data = RepresentationData::new(3, 3, vec![], vec![], vec![], vec![]).unwrap();
        let orbit = enumerate_orbit(&data, 3).unwrap();
        (data, orbit)
    }

    #[test]
    fn trivial_group_is_constant() {
        let (_, orbit) = trivial();
        let cfg = NaturalMapConfig::new(3, 3, 0.1, 3).unwrap();
        let x = Point::from_polar(0.8, &[1.0, 2.0, 3.0]).unwrap();
        let lambda = build_lambda(&Point::origin(3), &orbit, &cfg).unwrap();
        assert_eq!(lambda.terms.len(), 1);
        assert_eq!(lambda.terms[0].0, 1.0);
        let ev = eval_natural_map(&x, &orbit, &cfg).unwrap();
        assert!(dist(&ev.value, &Point::origin(3)) < 1e-12);
        let j = jacobian(&x, &orbit, &cfg).unwrap();
        assert_eq!(j.jac, 0.0);
    }

    #[test]
    fn weights_decrease_with_distance() {
        let a = Isometry::translation(3, 1, 1.5);
        let b = Isometry::translation(3, 2, 1.5);
        let data =
            RepresentationData::new(3, 3, vec![a.clone(), b.clone()], vec![a, b], vec![], vec![])
                .unwrap();
        let orbit = enumerate_orbit(&data, 2).unwrap();
        let cfg = NaturalMapConfig::new(3, 3, 0.1, 2).unwrap();
        let x = Point::from_polar(0.3, &[0.1, 0.2, 0.3]).unwrap();
        let lambda = build_lambda(&x, &orbit, &cfg).unwrap();
        let mut pairs: Vec<(f64, f64)> = orbit
            .entries
            .iter()
            .zip(&lambda.terms)
            .map(|(e, t)| (dist(&x, &e.domain_point), t.0))
            .collect();
        pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
        assert!(pairs.windows(2).all(|w| w[1].1 <= w[0].1));
        // renormalization does not move the barycenter
        let raw = build_lambda_raw(&x, &orbit, &cfg).unwrap();
        let y1 = solve_barycenter_with(&lambda.into(), &SolverOptions::default()).unwrap();
        let y2 = solve_barycenter_with(&raw.into(), &SolverOptions::default()).unwrap();
        assert!(dist(y1.interior().unwrap(), y2.interior().unwrap()) < 1e-10);
    }

    #[test]
    fn isometric_embedding_has_unit_jacobian() {
        let x = Point::from_polar(0.6, &[1.0, -1.0, 0.5]).unwrap();
        let g = include_isometry(&Isometry::rotation(3, 1, 2, 0.3), 4).unwrap();
        let (d, _) = fd_jacobian(|p, _| Ok(g.apply(&embed_subspace(p, 4)?)), &x, 1e-4).unwrap();
        assert_abs_diff_eq!(jacobian_from_differential(&d), 1.0, epsilon = 1e-8);
    }

    #[test]
    fn defect_of_identity_is_zero() {
        let a = Isometry::translation(3, 1, 1.5);
        let data = RepresentationData::new(3, 3, vec![a.clone()], vec![a], vec![], vec![]).unwrap();
        let orbit = enumerate_orbit(&data, 4).unwrap();
        let cfg = NaturalMapConfig::new(3, 3, 0.1, 4).unwrap();
        let x = Point::from_polar(0.5, &[0.0, 1.0, 0.0]).unwrap();
        assert_eq!(
            invariance_defect(&x, &Isometry::identity(3), &orbit, &cfg).unwrap(),
            0.0
        );
        let d = invariance_defect(&x, &data.target_images[0], &orbit, &cfg).unwrap();
        assert!(d > 0.0 && d <= 2.0);
    }

    #[test]
    fn recentered_orbit_is_equivariant() {
        let a = Isometry::translation(3, 1, 1.5);
        let b = Isometry::translation(3, 2, 1.5);
        let data =
            RepresentationData::new(3, 3, vec![a.clone(), b.clone()], vec![a, b], vec![], vec![])
                .unwrap();
        let orbit = enumerate_orbit(&data, 3).unwrap();
        let cfg = NaturalMapConfig::new(3, 3, 0.3, 3).unwrap();
        let x = Point::from_polar(0.4, &[0.3, 0.2, 0.1]).unwrap();
        let (rec, _) = equivariance_defect(&x, &[1], &data, &orbit, &cfg).unwrap();
        assert!(rec < 1e-8);
    }

    #[test]
    fn config_validation() {
        assert!(NaturalMapConfig::new(3, 3, 0.0, 2).is_err());
        assert!(NaturalMapConfig::new(3, 2, 0.1, 2).is_err());
        let cfg = NaturalMapConfig::new(3, 4, 0.1, 2).unwrap();
        assert_abs_diff_eq!(cfg.s, 2.2, epsilon = 1e-15);
    }
}
