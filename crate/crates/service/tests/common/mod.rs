#![allow(dead_code)]

use std::path::Path;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use reqwest::blocking::Client;
use reqwest::StatusCode;
use serde_json::{json, Value};
use udfcloth::decoder::Checkpoint;
use udfcloth::mesh::{load_mesh, sample_surface, TriMesh};
use udfcloth::metrics::chamfer_3d;
use udfcloth::primitives::toy_garments;
use udfcloth::sketch::{build_pair_dataset, CameraPose, PairConfig, SketchImage};
use udfcloth::toy::cached_toy;
use udfcloth_service::api::DEFAULT_TTL;
use udfcloth_service::{serve_on, AppState, EngineConfig, Model};

pub type Check = Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

pub fn toy_checkpoint() -> Checkpoint {
    cached_toy(env!("CARGO_TARGET_TMPDIR"), 0).expect("toy checkpoint").0
}

pub fn toy_model() -> Model {
    Model::with_bundled_library(toy_checkpoint(), &PairConfig::default()).expect("toy model")
}

/// Engine with short refinement budgets.
pub fn quick_engine() -> EngineConfig {
    EngineConfig { generate_steps: 2, edit_steps: 4, ..EngineConfig::default() }
}

/// Serves `model` on an ephemeral port from a background thread and returns the base URL.
pub fn spawn_server(model: Option<Model>, cfg: EngineConfig) -> String {
    let (tx, rx) = std::sync::mpsc::channel();
    std::thread::spawn(move || {
        let rt = tokio::runtime::Runtime::new().expect("runtime");
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.expect("bind");
            tx.send(listener.local_addr().expect("addr")).expect("send addr");
            let app = Arc::new(AppState::new(model, cfg, None, DEFAULT_TTL));
            serve_on(app, listener, None).await.expect("serve");
        });
    });
    format!("http://{}", rx.recv().expect("server address"))
}

/// Frontal contour sketch of each toy garment as PNG bytes, keyed by name.
pub fn toy_sketches() -> Vec<(String, Vec<u8>)> {
    let pairs = build_pair_dataset(&toy_garments(), &PairConfig { n_views: 1, ..PairConfig::default() }).expect("pairs");
    pairs
        .into_iter()
        .map(|p| (p.mesh_name, p.sketch.to_png_bytes().expect("png")))
        .collect()
}

pub fn blank_png() -> Vec<u8> {
    SketchImage::blank(CameraPose::frontal(256).expect("pose")).to_png_bytes().expect("png")
}

pub struct Api {
    pub base: String,
    http: Client,
}

impl Api {
    pub fn new(base: String) -> Self {
        let http = Client::builder().timeout(None).build().expect("client");
        Self { base, http }
    }

    fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    pub fn post_png(&self, path: &str, png: &[u8]) -> Result<(StatusCode, Value), String> {
        let r = self
            .http
            .post(self.url(path))
            .header("content-type", "image/png")
            .body(png.to_vec())
            .send()
            .map_err(|e| e.to_string())?;
        let status = r.status();
        Ok((status, r.json().unwrap_or(Value::Null)))
    }

    pub fn post_json(&self, path: &str, body: &Value) -> Result<(StatusCode, Vec<u8>), String> {
        let r = self.http.post(self.url(path)).json(body).send().map_err(|e| e.to_string())?;
        let status = r.status();
        Ok((status, r.bytes().map_err(|e| e.to_string())?.to_vec()))
    }

    pub fn get(&self, path: &str) -> Result<(StatusCode, Vec<u8>), String> {
        let r = self.http.get(self.url(path)).send().map_err(|e| e.to_string())?;
        let status = r.status();
        Ok((status, r.bytes().map_err(|e| e.to_string())?.to_vec()))
    }

    pub fn generate(&self, png: &[u8]) -> Result<Value, String> {
        let (status, body) = self.post_png("/api/generate", png)?;
        ensure!(status == StatusCode::OK, "generate returned {status}: {body}");
        Ok(body)
    }

    pub fn edit(&self, id: &str, png: &[u8]) -> Result<Value, String> {
        let (status, body) = self.post_png(&format!("/api/session/{id}/edit"), png)?;
        ensure!(status == StatusCode::OK, "edit returned {status}: {body}");
        Ok(body)
    }

    pub fn capture(&self, id: &str, azimuth: f64, elevation: f64) -> Result<Vec<u8>, String> {
        let (status, png) = self.post_json(&format!("/api/session/{id}/capture"), &json!({ "azimuth": azimuth, "elevation": elevation }))?;
        ensure!(status == StatusCode::OK, "capture returned {status}");
        Ok(png)
    }

    pub fn reset(&self, id: &str) -> Check {
        let (status, _) = self.post_json(&format!("/api/session/{id}/reset"), &json!({}))?;
        ensure!(status == StatusCode::OK, "reset returned {status}");
        Ok(())
    }

    pub fn obj(&self, id: &str) -> Result<Vec<u8>, String> {
        let (status, bytes) = self.get(&format!("/api/session/{id}/model.obj"))?;
        ensure!(status == StatusCode::OK, "model.obj returned {status}");
        Ok(bytes)
    }

    pub fn info(&self, id: &str) -> Result<Value, String> {
        let (status, bytes) = self.get(&format!("/api/session/{id}"))?;
        ensure!(status == StatusCode::OK, "session info returned {status}");
        serde_json::from_slice(&bytes).map_err(|e| e.to_string())
    }
}

fn session_id(v: &Value) -> Result<String, String> {
    v["session_id"].as_str().map(String::from).ok_or_else(|| format!("no session_id in {v}"))
}

fn latent(v: &Value, key: &str) -> Result<Vec<f64>, String> {
    serde_json::from_value(v[key].clone()).map_err(|e| format!("{key}: {e}"))
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn parse_obj_bytes(bytes: &[u8]) -> Result<TriMesh, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("model.obj");
    std::fs::write(&path, bytes).map_err(|e| e.to_string())?;
    load_mesh(&path).map_err(|e| e.to_string())
}

pub fn unavailable_without_model(api: &Api, png: &[u8]) -> Check {
    let (status, body) = api.get("/api/health")?;
    ensure!(status == StatusCode::OK, "health returned {status}");
    let health: Value = serde_json::from_slice(&body).map_err(|e| e.to_string())?;
    ensure!(health["model_loaded"] == json!(false), "health says {health}");
    let (status, body) = api.post_png("/api/generate", png)?;
    ensure!(status == StatusCode::SERVICE_UNAVAILABLE, "generate without a model returned {status}");
    ensure!(body["error"].is_string(), "error body {body}");
    Ok(())
}

pub fn bad_requests_are_rejected(api: &Api) -> Check {
    let (status, _) = api.post_png("/api/generate", &blank_png())?;
    ensure!(status == StatusCode::UNPROCESSABLE_ENTITY, "blank sketch returned {status}");
    let (status, _) = api.post_png("/api/generate", b"not a png")?;
    ensure!(status == StatusCode::BAD_REQUEST, "garbage upload returned {status}");
    let id = "0123456789abcdef";
    for (status, what) in [
        (api.get(&format!("/api/session/{id}"))?.0, "info"),
        (api.get(&format!("/api/session/{id}/model.obj"))?.0, "model.obj"),
        (api.post_json(&format!("/api/session/{id}/reset"), &json!({}))?.0, "reset"),
        (api.post_json(&format!("/api/session/{id}/capture"), &json!({ "azimuth": 0.0, "elevation": 0.0 }))?.0, "capture"),
        (api.post_png(&format!("/api/session/{id}/edit"), &blank_png())?.0, "edit"),
    ] {
        ensure!(status == StatusCode::NOT_FOUND, "unknown session {what} returned {status}");
    }
    Ok(())
}

pub fn generate_is_deterministic(api: &Api, png: &[u8]) -> Check {
    let a = api.generate(png)?;
    let b = api.generate(png)?;
    ensure!(session_id(&a)? != session_id(&b)?, "sessions share an id");
    ensure!(a["shape_name"] == b["shape_name"] && a["chamfer_score"] == b["chamfer_score"], "responses differ: {a} vs {b}");
    let (oa, ob) = (api.obj(&session_id(&a)?)?, api.obj(&session_id(&b)?)?);
    ensure!(oa == ob, "OBJ exports differ");
    let mesh = parse_obj_bytes(&oa)?;
    ensure!(!mesh.is_empty(), "exported mesh is empty");
    let info = api.info(&session_id(&a)?)?;
    ensure!(info["vertex_count"] == json!(mesh.vertices.len()), "vertex count {} vs {}", info["vertex_count"], mesh.vertices.len());
    Ok(())
}

/// Each frontal garment sketch reconstructs a mesh closer to that garment than to the others.
pub fn sketches_reconstruct_their_shape(api: &Api, sketches: &[(String, Vec<u8>)]) -> Check {
    let garments = toy_garments();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let clouds: Vec<_> = garments.iter().map(|m| sample_surface(m, 4000, &mut rng).expect("samples")).collect();
    for (name, png) in sketches {
        let g = api.generate(png)?;
        ensure!(g["shape_name"] == json!(name), "{name} sketch retrieved {}", g["shape_name"]);
        let mesh = parse_obj_bytes(&api.obj(&session_id(&g)?)?)?;
        let pts = sample_surface(&mesh, 4000, &mut rng).map_err(|e| e.to_string())?;
        let cds: Vec<f64> = clouds.iter().map(|c| chamfer_3d(&pts, c).expect("chamfer")).collect();
        let own = garments.iter().position(|m| &m.name == name).ok_or("unknown garment")?;
        let nearest = (0..cds.len()).min_by(|a, b| cds[*a].total_cmp(&cds[*b])).unwrap_or(0);
        ensure!(nearest == own, "{name} reconstruction is nearest to {}: {cds:?}", garments[nearest].name);
    }
    Ok(())
}

/// Editing toward a capture of the session's own mesh leaves the latent in place.
pub fn capture_is_a_fixed_point(api: &Api, png: &[u8]) -> Check {
    let id = session_id(&api.generate(png)?)?;
    let side = api.capture(&id, 90.0, 0.0)?;
    let front = api.capture(&id, 30.0, 0.0)?;
    ensure!(side != front, "captures at 30 and 90 degrees are identical");
    let info = api.info(&id)?;
    ensure!(info["pose"]["azimuth"].as_f64().map(|a| (a - 30.0).abs() < 1e-9) == Some(true), "pose is {}", info["pose"]);
    let z0 = latent(&info, "z")?;
    let e = api.edit(&id, &front)?;
    let z1 = latent(&api.info(&id)?, "z")?;
    ensure!(e["converged"] == json!(true), "self-edit did not converge: {e}");
    ensure!(distance(&z0, &z1) < 1e-3, "self-edit moved z by {}", distance(&z0, &z1));
    Ok(())
}

/// Edit, reset and repeat: resets restore the generated mesh and edits are reproducible.
pub fn edit_and_reset_cycle(api: &Api, start: &[u8], target: &[u8]) -> Check {
    let id = session_id(&api.generate(start)?)?;
    let generated = api.obj(&id)?;
    let info0 = api.info(&id)?;

    let first = api.edit(&id, target)?;
    let before = first["chamfer_before"].as_f64().ok_or("chamfer_before")?;
    let after = first["chamfer_after"].as_f64().ok_or("chamfer_after")?;
    ensure!(after <= before, "chamfer_after {after} > chamfer_before {before}");
    let history: Vec<(usize, f64)> = serde_json::from_value(first["history"].clone()).map_err(|e| e.to_string())?;
    ensure!(history.first().map(|h| h.1) == Some(before), "history does not start at chamfer_before");
    let best = history.iter().map(|h| h.1).fold(f64::INFINITY, f64::min);
    ensure!(best == after, "chamfer_after {after} is not the best of the history {best}");
    let edited = api.obj(&id)?;
    let info1 = api.info(&id)?;
    ensure!(latent(&info1, "z_init")? == latent(&info0, "z_init")?, "edit changed z_init");

    api.reset(&id)?;
    let info2 = api.info(&id)?;
    ensure!(latent(&info2, "z")? == latent(&info0, "z")?, "reset did not restore z");
    ensure!(api.obj(&id)? == generated, "reset mesh differs from the generated mesh");
    api.reset(&id)?;
    ensure!(api.obj(&id)? == generated && latent(&api.info(&id)?, "z")? == latent(&info0, "z")?, "second reset changed the session");

    let again = api.edit(&id, target)?;
    ensure!(again == first, "repeated edit differs: {again} vs {first}");
    ensure!(api.obj(&id)? == edited, "repeated edit mesh differs");
    parse_obj_bytes(&edited)?;
    Ok(())
}

pub fn read_json(path: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(path).expect("read")).expect("json")
}
