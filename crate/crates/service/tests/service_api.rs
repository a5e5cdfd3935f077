mod common;

use std::sync::OnceLock;

use clap::Parser;
use common::*;
use udfcloth::decoder::{Checkpoint, DecoderConfig};
use udfcloth_service::cli::{run, Cli};

fn api() -> Api {
    static BASE: OnceLock<String> = OnceLock::new();
    Api::new(BASE.get_or_init(|| spawn_server(Some(toy_model()), quick_engine())).clone())
}

fn sketch(name: &str) -> Vec<u8> {
    toy_sketches().into_iter().find(|(n, _)| n == name).expect("toy garment").1
}

#[test]
fn generate_needs_a_model() {
    let api = Api::new(spawn_server(None, quick_engine()));
    unavailable_without_model(&api, &sketch("skirt")).unwrap();
}

#[test]
fn malformed_requests_and_unknown_sessions() {
    bad_requests_are_rejected(&api()).unwrap();
}

#[test]
fn generation_is_deterministic() {
    generate_is_deterministic(&api(), &sketch("cape")).unwrap();
}

#[test]
fn garment_sketches_reconstruct_their_garment() {
    sketches_reconstruct_their_shape(&api(), &toy_sketches()).unwrap();
}

#[test]
fn editing_toward_a_capture_keeps_the_latent() {
    capture_is_a_fixed_point(&api(), &sketch("dress")).unwrap();
}

#[test]
fn edit_reset_edit_is_reproducible() {
    edit_and_reset_cycle(&api(), &sketch("dress"), &sketch("skirt")).unwrap();
}

#[test]
fn training_writes_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("toy.udfd");
    let cli = Cli::parse_from(["udfcloth", "--seed", "3", "train", "--toy", "--epochs", "2", "--out", out.to_str().unwrap()]);
    run(cli).unwrap();
    let manifest = read_json(&out.with_extension("manifest.json"));
    assert_eq!(manifest["train"]["epochs"], 2);
    assert_eq!(manifest["train"]["seed"], 3);
    assert_eq!(manifest["decoder"], serde_json::to_value(DecoderConfig::desk()).unwrap());
    assert_eq!(manifest["shapes"], serde_json::json!(["skirt", "dress", "cape"]));
    assert_eq!(manifest["history"].as_array().unwrap().len(), 2);
    let ck = Checkpoint::load(&out).unwrap();
    assert_eq!(ck.latents.len(), 3);
}
