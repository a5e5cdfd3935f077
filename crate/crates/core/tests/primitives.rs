use udfcloth::primitives::*;

#[test]
fn topology_of_bundled_meshes() {
    let meshes = bundled();
    let sphere = &meshes[0];
    assert_eq!(sphere.boundary_edge_count(), 0);
    let skirt = &meshes[1];
    assert_eq!(skirt.boundary_edge_count(), 2 * RADIAL_SEGMENTS);
    assert!(meshes[3].boundary_edge_count() > 0);
    assert!(meshes[4].boundary_edge_count() > 0);
    for m in &meshes {
        let max = m.vertices.iter().map(|v| v.amax()).fold(0.0, f64::max);
        assert!((max - NORMALIZED_SCALE).abs() < 1e-12, "{}", m.name);
    }
}
