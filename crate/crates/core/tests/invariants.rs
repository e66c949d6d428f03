//! Randomized invariants of the geometry, group and volume layers.

use approx::assert_abs_diff_eq;
use natmap_core::barycenter::{solve_barycenter, tv_distance};
use natmap_core::groups::isometry_power;
use natmap_core::hypgeo::{
    busemann, dist, exp_map, geodesic, log_map, minkowski_form, tangent_frame, Vector,
};
use natmap_core::volume::{ideal_tetra_volume, lobachevsky_oracle};
use natmap_core::{
    AtomicBoundaryMeasure, BarycenterKind, BoundaryPoint, Endpoint, Isometry, Measure, Point,
    VisualMixture,
};
use proptest::prelude::*;

const M: usize = 3;

fn form(u: &Vector, v: &Vector) -> f64 {
    minkowski_form(u, v).unwrap()
}

fn point() -> impl Strategy<Value = Point> {
    (0.0..3.0f64, prop::array::uniform3(-1.0..1.0f64))
        .prop_filter("nonzero direction", |(_, d)| {
            d.iter().any(|x| x.abs() > 1e-3)
        })
        .prop_map(|(r, d)| Point::from_polar(r, &d).unwrap())
}

fn ideal() -> impl Strategy<Value = BoundaryPoint> {
    prop::array::uniform3(-1.0..1.0f64)
        .prop_filter("nonzero direction", |d| d.iter().any(|x| x.abs() > 1e-3))
        .prop_map(|d| BoundaryPoint::from_direction(&d).unwrap())
}

fn isometry() -> impl Strategy<Value = Isometry> {
    (
        prop::array::uniform3(-1.5..1.5f64),
        prop::array::uniform3(-3.2..3.2f64),
    )
        .prop_map(|(lengths, angles)| {
            let mut g = Isometry::identity(M);
            for axis in 1..=M {
                g = g
                    .compose(&Isometry::translation(M, axis, lengths[axis - 1]))
                    .compose(&Isometry::rotation(M, axis, axis % M + 1, angles[axis - 1]));
            }
            g
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn distance_is_invariant(x in point(), y in point(), g in isometry()) {
        let d = dist(&x, &y);
        prop_assert!((dist(&g.apply(&x), &g.apply(&y)) - d).abs() <= 1e-10 * (1.0 + d));
    }

    #[test]
    fn triangle_inequality(x in point(), y in point(), z in point()) {
        prop_assert!(dist(&x, &z) <= dist(&x, &y) + dist(&y, &z) + 1e-12);
    }

    #[test]
    fn exp_inverts_log(x in point(), y in point()) {
        let back = exp_map(&x, &log_map(&x, &y));
        prop_assert!(dist(&back, &y) <= 1e-9);
    }

    #[test]
    fn busemann_cocycle(x in point(), y in point(), theta in ideal(), g in isometry()) {
        // moving both arguments shifts B by a constant depending only on g and theta
        let gt = g.apply_boundary(&theta);
        let shift_x = busemann(&g.apply(&x), &gt).0 - busemann(&x, &theta).0;
        let shift_y = busemann(&g.apply(&y), &gt).0 - busemann(&y, &theta).0;
        prop_assert!((shift_x - shift_y).abs() <= 1e-9);
    }

    #[test]
    fn busemann_is_one_lipschitz(x in point(), y in point(), theta in ideal()) {
        let diff = (busemann(&x, &theta).0 - busemann(&y, &theta).0).abs();
        prop_assert!(diff <= dist(&x, &y) + 1e-10);
    }

    #[test]
    fn busemann_gradient_is_a_unit_tangent(x in point(), theta in ideal()) {
        let (_, grad) = busemann(&x, &theta);
        prop_assert!((form(&grad, &grad) - 1.0).abs() <= 1e-10);
        prop_assert!(form(&grad, x.coords()).abs() <= 1e-10);
    }

    #[test]
    fn geodesics_have_unit_speed(x in point(), theta in ideal(), t in 0.0..8.0f64) {
        let y = geodesic(&x, &Endpoint::Ideal(theta), t).unwrap();
        prop_assert!((dist(&x, &y) - t).abs() <= 1e-9 * (1.0 + t));
    }

    #[test]
    fn tangent_frame_is_orthonormal(x in point()) {
        let f = tangent_frame(&x);
        for i in 0..M {
            prop_assert!(form(&f.column(i).into_owned(), x.coords()).abs() <= 1e-10);
            for j in 0..M {
                let want = if i == j { 1.0 } else { 0.0 };
                let got = form(&f.column(i).into_owned(), &f.column(j).into_owned());
                prop_assert!((got - want).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn powers_add(g in isometry(), a in -4i64..5, b in -4i64..5) {
        let (ga, gb) = (isometry_power(&g, a), isometry_power(&g, b));
        let lhs = isometry_power(&g, a + b);
        let rhs = ga.compose(&gb);
        // g^a g^b can cancel, so round-off follows the factors, not the result
        let scale = (ga.matrix().amax() * gb.matrix().amax()).max(1.0);
        prop_assert!(lhs.frobenius_distance(&rhs) <= 1e-9 * scale);
    }

    #[test]
    fn single_visual_term_has_its_center_as_barycenter(x in point(), w in 0.01..100.0f64) {
        let beta: Measure = VisualMixture::new(vec![(w, x.clone())]).unwrap().into();
        match solve_barycenter(&beta).unwrap().kind {
            BarycenterKind::Interior(y) => prop_assert!(dist(&x, &y) <= 1e-9),
            other => prop_assert!(false, "unexpected {:?}", other),
        }
    }

    #[test]
    fn tv_distance_is_a_metric(
        x in point(), y in point(), theta in ideal(), a in 0.1..2.0f64, b in 0.1..2.0f64,
    ) {
        let p = Measure::new(
            AtomicBoundaryMeasure::new(vec![(a, theta.clone())]).unwrap(),
            VisualMixture::new(vec![(b, x.clone())]).unwrap(),
        ).unwrap();
        let q: Measure = VisualMixture::new(vec![(a + b, y.clone())]).unwrap().into();
        prop_assert_eq!(tv_distance(&p, &p), 0.0);
        prop_assert!((tv_distance(&p, &q) - tv_distance(&q, &p)).abs() <= 1e-12);
        prop_assert!(tv_distance(&p, &q) <= p.mass() + q.mass() + 1e-12);
    }

    #[test]
    fn lobachevsky_is_odd_and_periodic(t in -3.0..3.0f64) {
        let pi = std::f64::consts::PI;
        prop_assert!((lobachevsky_oracle(-t) + lobachevsky_oracle(t)).abs() <= 1e-12);
        prop_assert!((lobachevsky_oracle(t + pi) - lobachevsky_oracle(t)).abs() <= 1e-10);
    }

    #[test]
    fn tetrahedron_volume_is_symmetric(a in 0.05..1.5f64, b in 0.05..1.5f64) {
        let c = std::f64::consts::PI - a - b;
        prop_assume!(c > 0.05);
        let v = ideal_tetra_volume(a, b, c).unwrap();
        prop_assert!((ideal_tetra_volume(c, a, b).unwrap() - v).abs() <= 1e-12);
        prop_assert!(v > 0.0 && v <= 1.0149416064 + 1e-9);
    }
}

#[test]
fn unipotent_powers_stay_exact() {
    // z -> z + 1 in upper half-space, conjugated away from the basepoint
    let c = Isometry::translation(M, 1, 0.7);
    let p = natmap_core::hypgeo::sl2c_to_lorentz(&[
        [
            num_complex::Complex64::new(1.0, 0.0),
            num_complex::Complex64::new(1.0, 0.0),
        ],
        [
            num_complex::Complex64::new(0.0, 0.0),
            num_complex::Complex64::new(1.0, 0.0),
        ],
    ])
    .unwrap();
    let g = c.compose(&p).compose(&c.inverse());
    let mut step = Isometry::identity(M);
    for _ in 0..200 {
        step = step.compose(&g);
    }
    let direct = isometry_power(&g, 200);
    let scale = direct.matrix().amax();
    assert!(direct.frobenius_distance(&step) <= 1e-9 * scale);
    let inverse = isometry_power(&g, -200);
    assert!(inverse.frobenius_distance(&direct.inverse()) <= 1e-9 * scale);
    let origin = Point::origin(M);
    let moved = direct.apply(&origin);
    let v: Vector = moved.coords().clone();
    assert_abs_diff_eq!(
        form(&v, &v) / (v[0] * v[0]),
        -1.0 / (v[0] * v[0]),
        epsilon = 1e-12
    );
}
