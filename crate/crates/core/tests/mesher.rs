use udfcloth::mesher::tables::TRIANGLE_CONNECTION;
use udfcloth::mesher::*;

#[test]
fn interpolation_cases() {
    assert_eq!(vertex_interpolate(0.1, 0.1), 0.5);
    assert_eq!(vertex_interpolate(0.0, 0.2), 0.0);
    assert!((vertex_interpolate(0.03, 0.01) - 0.75).abs() < 1e-15);
    assert_eq!(vertex_interpolate(0.0, 0.0), 0.5);
}

#[test]
fn auto_config_defaults() {
    let c = MeshingConfig::auto(0.1);
    assert_eq!(c.surface_band, 0.2);
    assert_eq!(c.grad_opposition_threshold, 0.0);
    assert_eq!(c.min_corner_value, 1e-6);
}

#[test]
fn table_rows_are_well_formed() {
    for row in TRIANGLE_CONNECTION.iter() {
        let n = row.iter().take_while(|e| **e >= 0).count();
        assert_eq!(n % 3, 0);
        assert!(row[n..].iter().all(|e| *e == -1));
    }
    assert!(TRIANGLE_CONNECTION[0][0] == -1 && TRIANGLE_CONNECTION[255][0] == -1);
}
