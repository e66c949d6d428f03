mod common;

use approx::assert_abs_diff_eq;
use natmap_core::groups::validate_representation;
use natmap_core::volume::{ideal_tetra_volume, vol_dev, vol_form_integral, DevelopingMapSpec};

#[test]
fn relator_and_volume_oracles() {
    let data = common::figure_eight();
    let report = validate_representation(&data).unwrap();
    assert!(report.residual <= 1e-12, "residual {}", report.residual);
    let domain = common::figure_eight_domain(&data, 6.0);
    let third = std::f64::consts::FRAC_PI_3;
    let expected = 2.0 * ideal_tetra_volume(third, third, third).unwrap();
    let spec = DevelopingMapSpec::identity(domain.clone(), 3).unwrap();
    assert!(spec.equivariance_residual(&data).unwrap() <= 1e-8);
    assert_abs_diff_eq!(vol_dev(&spec).unwrap().value, expected, epsilon = 5e-3);
    assert_abs_diff_eq!(
        vol_form_integral(&domain, |_| Ok(1.0)).unwrap().value,
        expected,
        epsilon = 5e-3
    );
}
