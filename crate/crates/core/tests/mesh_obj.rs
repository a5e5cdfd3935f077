use std::path::Path;
use udfcloth::{Error, Result};
use udfcloth::mesh::*;

fn parse(src: &str) -> Result<TriMesh> {
    parse_obj(src.as_bytes(), "test", Path::new("test.obj"))
}

#[test]
fn quad_is_fan_triangulated() {
    let m = parse("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n").unwrap();
    assert_eq!(m.triangles, vec![[0, 1, 2], [0, 2, 3]]);
}

#[test]
fn slashes_normals_and_negative_indices() {
    let m = parse("v 0 0 0\nv 1 0 0\nv 0 1 0\nvn 0 0 1\nvt 0 0\nf -3/1/1 -2/1/1 -1/1/1\n").unwrap();
    assert_eq!(m.triangles, vec![[0, 1, 2]]);
}

#[test]
fn unreferenced_vertices_are_kept() {
    let m = parse("v 0 0 0\nv 1 0 0\nv 0 1 0\nv 5 5 5\nf 1 2 3\n").unwrap();
    assert_eq!(m.vertices.len(), 4);
}

#[test]
fn reports_line_numbers() {
    let err = parse("v 0 0 0\nv 1 0 0\nv 0 x 0\nf 1 2 3\n").unwrap_err();
    match err {
        Error::Malformed { line, .. } => assert_eq!(line, 3),
        e => panic!("unexpected {e}"),
    }
    let err = parse("v 0 0 0\nf 1 2 9\n").unwrap_err();
    assert!(matches!(err, Error::Malformed { line: 2, .. }));
}

#[test]
fn faceless_file_is_empty_mesh() {
    assert!(matches!(parse("v 0 0 0\n"), Err(Error::EmptyMesh(_))));
}

#[test]
fn writes_six_decimals() {
    let m = parse("v 0.1234567 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n").unwrap();
    let mut buf = Vec::new();
    write_obj(&m, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.contains("v 0.123457 0.000000 0.000000"));
    assert!(text.contains("f 1 2 3"));
}
