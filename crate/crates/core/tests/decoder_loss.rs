use udfcloth::decoder::*;

#[test]
fn clamped_l1_cases() {
    assert!((loss_clamped_l1(0.05, 0.02, 0.1) - 0.03).abs() < 1e-15);
    assert_eq!(loss_clamped_l1(0.5, 0.3, 0.1), 0.0);
    assert!((loss_clamped_l1(0.05, 0.3, 0.1) - 0.05).abs() < 1e-15);
}

#[test]
fn geo_cases() {
    assert_eq!(loss_geo_reg(&[0.0, 0.0], 60.0), 1.0);
    assert!(loss_geo_reg(&[1e6], 60.0) < 1e-300);
    let g = 60.0;
    assert!((loss_geo_reg(&[0.0, 2f64.ln() / g], g) - 0.75).abs() < 1e-15);
}

#[test]
fn latent_cases() {
    assert_eq!(loss_latent_reg(&[0.0; 4], 1e-4), 0.0);
    assert!((loss_latent_reg(&[3.0, 4.0, 0.0], 1e-4) - 5e-4).abs() < 1e-18);
}

#[test]
fn schedule_cases() {
    let c = TrainConfig::full();
    assert!((lr_at_epoch(0, &c, 1.0) - 0.5e-3).abs() < 1e-18);
    assert!((lr_at_epoch(500, &c, 1.0) - 0.25e-3).abs() < 1e-18);
    assert!((lr_at_epoch(999, &c, 0.1) - 0.025e-3).abs() < 1e-18);
    assert_eq!(lr_at_epoch(499, &c, 1.0), lr_at_epoch(0, &c, 1.0));
}
