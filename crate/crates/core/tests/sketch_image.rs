use udfcloth::sketch::*;

#[test]
fn png_round_trip_is_binary_and_exact() {
    let pose = CameraPose::frontal(32).unwrap();
    let mut s = SketchImage::blank(pose);
    s.set_ink(3, 4, true);
    s.set_ink(31, 0, true);
    let bytes = s.to_png_bytes().unwrap();
    let gray = image::load_from_memory(&bytes).unwrap().to_luma8();
    assert!(gray.pixels().all(|p| p.0[0] == 0 || p.0[0] == 255));
    assert_eq!(gray.get_pixel(3, 4).0[0], 0);
    let back = SketchImage::from_png_bytes(&bytes, Some(pose)).unwrap();
    assert_eq!(back, s);
    assert_eq!(back.value(3, 4), 0);
    assert_eq!(back.value(0, 0), 1);
}

#[test]
fn pose_size_mismatch_is_rejected() {
    let s = SketchImage::blank(CameraPose::frontal(32).unwrap());
    let bytes = s.to_png_bytes().unwrap();
    assert!(SketchImage::from_png_bytes(&bytes, Some(CameraPose::frontal(64).unwrap())).is_err());
}
