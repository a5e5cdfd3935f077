use udfcloth::geom::*;

#[test]
fn closest_point_regions() {
    let a = Vec3::new(0.0, 0.0, 0.0);
    let b = Vec3::new(1.0, 0.0, 0.0);
    let c = Vec3::new(0.0, 1.0, 0.0);
    let (q, _) = closest_point_on_triangle(&Vec3::new(0.2, 0.2, 0.5), &a, &b, &c);
    assert!((q - Vec3::new(0.2, 0.2, 0.0)).norm() < 1e-15);
    let (q, w) = closest_point_on_triangle(&Vec3::new(-1.0, -1.0, 0.0), &a, &b, &c);
    assert_eq!(q, a);
    assert_eq!(w, [1.0, 0.0, 0.0]);
    let (q, _) = closest_point_on_triangle(&Vec3::new(1.0, 1.0, 0.0), &a, &b, &c);
    assert!((q - Vec3::new(0.5, 0.5, 0.0)).norm() < 1e-15);
    let (q, _) = closest_point_on_triangle(&Vec3::new(0.5, -2.0, 1.0), &a, &b, &c);
    assert!((q - Vec3::new(0.5, 0.0, 0.0)).norm() < 1e-15);
}

#[test]
fn box_distance() {
    let b = Aabb::from_points(&[Vec3::zeros(), Vec3::new(1.0, 1.0, 1.0)]);
    assert_eq!(b.distance_squared(&Vec3::new(0.5, 0.5, 0.5)), 0.0);
    assert!((b.distance_squared(&Vec3::new(2.0, 0.5, 0.5)) - 1.0).abs() < 1e-15);
    assert_eq!(b.longest_axis(), 0);
}
