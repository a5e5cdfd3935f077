use udfcloth::decoder::LatentLibrary;
use udfcloth::sketch::{CameraPose, SketchImage, SketchPair};
use udfcloth::Error;
use udfcloth::encoder::*;

fn square(pose: CameraPose, x0: usize, side: usize) -> SketchImage {
    let mut s = SketchImage::blank(pose);
    for t in 0..side {
        s.set_ink(x0 + t, x0, true);
        s.set_ink(x0 + t, x0 + side - 1, true);
        s.set_ink(x0, x0 + t, true);
        s.set_ink(x0 + side - 1, x0 + t, true);
    }
    s
}

#[test]
fn blank_descriptor_is_flagged() {
    let d = Descriptor::of(&SketchImage::blank(CameraPose::frontal(64).unwrap()));
    assert!(d.degenerate);
    assert!(d.values.iter().all(|v| *v == 1.0));
}

#[test]
fn chamfer_of_single_pixels() {
    let pose = CameraPose::frontal(32).unwrap();
    let mut a = SketchImage::blank(pose);
    let mut b = SketchImage::blank(pose);
    a.set_ink(5, 5, true);
    b.set_ink(8, 9, true);
    assert_eq!(sketch_chamfer(&a, &b).unwrap(), 50.0);
}

#[test]
fn empty_library_and_blank_query() {
    let pose = CameraPose::frontal(32).unwrap();
    let lib = SketchLibrary::default();
    assert!(matches!(lib.encode(&square(pose, 4, 10), 8), Err(Error::EmptyLibrary)));
    assert!(matches!(lib.encode(&SketchImage::blank(pose), 8), Err(Error::EmptySketch)));
}

#[test]
fn file_round_trip_and_self_retrieval() {
    let pose = CameraPose::frontal(64).unwrap();
    let pairs = vec![
        SketchPair {
            sketch: square(pose, 4, 20),
            mesh_name: "a".into(),
        },
        SketchPair {
            sketch: square(pose, 20, 30),
            mesh_name: "b".into(),
        },
        SketchPair {
            sketch: square(pose, 10, 5),
            mesh_name: "c".into(),
        },
    ];
    let latents = LatentLibrary {
        entries: vec![("a".into(), vec![1.0, 2.0]), ("b".into(), vec![3.0, 4.0])],
    };
    let (lib, missing) = SketchLibrary::build(&pairs, &latents);
    assert_eq!(lib.len(), 2);
    assert_eq!(missing, vec!["c".to_string()]);
    let mut buf = Vec::new();
    lib.write_to(&mut buf).unwrap();
    let back = SketchLibrary::read_from(buf.as_slice()).unwrap();
    assert_eq!(back, lib);
    for (i, e) in lib.entries.iter().enumerate() {
        let enc = back.encode(&e.sketch, DEFAULT_TOP_K).unwrap();
        assert_eq!(enc.entry, i);
        assert_eq!(enc.score, 0.0);
        assert_eq!(enc.latent, e.latent);
    }
}
