//! The `udfcloth` command line.

use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};
use udfcloth::decoder::{train_auto_decoder, Checkpoint, DecoderConfig, TrainConfig};
use udfcloth::editor::{optimize_latent, EditConfig, EditSession};
use udfcloth::encoder::{SketchLibrary, DEFAULT_TOP_K};
use udfcloth::field::{MeshField, UdfGrid};
use udfcloth::mesh::{load_mesh, normalize_mesh, save_mesh, SurfaceIndex};
use udfcloth::mesher::{extract_mesh, MeshingConfig};
use udfcloth::metrics::{evaluate_meshes, DEFAULT_SURFACE_SAMPLES, EXACT_EMD_LIMIT};
use udfcloth::primitives::bundled;
use udfcloth::sampling::{sample_udf_training_set, EvalGrid, SamplingSpec, UdfSampleSet};
use udfcloth::sketch::{build_pair_dataset, load_pair_dataset, write_pair_dataset, CameraPose, PairConfig, SketchImage};

use crate::api::{self, AppState, SessionStore};
use crate::engine::{EngineConfig, Model};

#[derive(Debug, Parser)]
#[command(name = "udfcloth", version, about = "Garment reconstruction from sketches with unsigned distance fields")]
pub struct Cli {
    /// Seed for every random choice the command makes.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// JSON file whose sections (sampling, pairs, decoder, train, edit, engine) override defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, default_value = "info")]
    pub log_level: String,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    Full,
    Desk,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a UDF training sample set from a mesh.
    Sample {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "desk")]
        spec: Preset,
        /// Center and scale the mesh into the unit cube first.
        #[arg(long)]
        normalize: bool,
    },
    /// Evaluate a mesh's exact UDF on a regular grid.
    Gridify {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 64)]
        res: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        normalize: bool,
    },
    /// Extract an open surface from a UDF grid.
    Mesh {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Surface band, or `auto` for two grid cells.
        #[arg(long, default_value = "auto")]
        band: String,
    },
    /// Render contour sketches of every OBJ in a directory.
    Pairs {
        #[arg(long)]
        meshes: PathBuf,
        #[arg(long, default_value_t = 36)]
        views: usize,
        #[arg(long, default_value_t = 256)]
        size: usize,
        #[arg(long, default_value_t = 0.0)]
        elevation: f64,
        #[arg(long)]
        silhouette_only: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the auto-decoder on sample sets.
    Train(TrainArgs),
    /// Build a retrieval library from a sketch dataset and a checkpoint.
    Library {
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Retrieve the latent and pose of the library sketch nearest to a sketch.
    Encode {
        #[arg(long)]
        sketch: PathBuf,
        #[arg(long)]
        lib: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TOP_K)]
        k: usize,
    },
    /// Fit a latent to a sketch.
    Optimize(OptimizeArgs),
    /// Chamfer and earth mover's distance between two meshes.
    Eval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        #[arg(long, default_value_t = DEFAULT_SURFACE_SAMPLES)]
        n: usize,
        #[arg(long, default_value_t = EXACT_EMD_LIMIT)]
        emd_n: usize,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Run the HTTP editing service.
    Serve(ServeArgs),
    /// Write the bundled meshes as OBJ files.
    Assets {
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Sample sets; the file stem names the shape.
    #[arg(long, num_args = 1..)]
    pub samples: Vec<PathBuf>,
    /// Train on the bundled toy garments instead of `--samples`.
    #[arg(long)]
    pub toy: bool,
    #[arg(long, value_enum, default_value = "desk")]
    pub preset: Preset,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Write an intermediate checkpoint every this many epochs.
    #[arg(long)]
    pub checkpoint_every: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[arg(long)]
    pub ckpt: PathBuf,
    #[arg(long)]
    pub sketch: PathBuf,
    /// `from-encode` or a JSON file holding `{"z": [...]}`.
    #[arg(long, default_value = "from-encode")]
    pub z0: String,
    /// Library used by `--z0 from-encode`.
    #[arg(long)]
    pub lib: Option<PathBuf>,
    /// Camera azimuth in degrees when `--z0` is a file.
    #[arg(long, default_value_t = 0.0)]
    pub azimuth: f64,
    #[arg(long, default_value_t = 0.0)]
    pub elevation: f64,
    #[arg(long, default_value_t = 50)]
    pub steps: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Also write the extracted mesh.
    #[arg(long)]
    pub mesh: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub ckpt: Option<PathBuf>,
    /// Retrieval library; rendered from the bundled meshes when omitted.
    #[arg(long)]
    pub lib: Option<PathBuf>,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long)]
    pub ui_dir: Option<PathBuf>,
    /// Persist sessions in this directory.
    #[arg(long)]
    pub state_dir: Option<PathBuf>,
    #[arg(long, default_value_t = api::DEFAULT_TTL.as_secs())]
    pub ttl_secs: u64,
}

/// Applies a section of the config file on top of `base`.
fn configured<T: Serialize + DeserializeOwned>(base: T, config: &Value, section: &str) -> anyhow::Result<T> {
    let Some(overrides) = config.get(section) else {
        return Ok(base);
    };
    let Value::Object(overrides) = overrides else {
        bail!("config section `{section}` must be an object");
    };
    let mut merged = serde_json::to_value(base)?;
    let target = merged.as_object_mut().context("config target is not an object")?;
    for (k, v) in overrides {
        if !target.contains_key(k) {
            bail!("unknown key `{k}` in config section `{section}`");
        }
        target.insert(k.clone(), v.clone());
    }
    serde_json::from_value(merged).with_context(|| format!("invalid config section `{section}`"))
}

fn load_input_mesh(path: &Path, normalize: bool) -> anyhow::Result<udfcloth::mesh::TriMesh> {
    let mesh = load_mesh(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(if normalize { normalize_mesh(&mesh, 0.9)?.0 } else { mesh })
}

fn write_json(path: &Path, value: &impl Serialize) -> anyhow::Result<()> {
    std::fs::write(path, serde_json::to_vec_pretty(value)?).with_context(|| format!("writing {}", path.display()))
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    let config: Value = match &cli.config {
        Some(p) => serde_json::from_slice(&std::fs::read(p).with_context(|| format!("reading {}", p.display()))?)?,
        None => json!({}),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
    match cli.command {
        Command::Sample { input, out, spec, normalize } => {
            let mesh = load_input_mesh(&input, normalize)?;
            let base = match spec {
                Preset::Full => SamplingSpec::full(),
                Preset::Desk => SamplingSpec::desk(),
            };
            let spec = configured(base, &config, "sampling")?;
            let index = SurfaceIndex::build(&mesh)?;
            let set = sample_udf_training_set(&mesh, &index, &spec, &mut rng)?;
            set.save(&out)?;
            println!("{} samples -> {}", set.len(), out.display());
        }
        Command::Gridify { input, res, out, normalize } => {
            let mesh = load_input_mesh(&input, normalize)?;
            let index = SurfaceIndex::build(&mesh)?;
            let grid = UdfGrid::from_field(&MeshField { index: &index }, EvalGrid::new(res)?);
            grid.save(&out)?;
            println!("{res}^3 grid -> {}", out.display());
        }
        Command::Mesh { input, out, band } => {
            let grid = UdfGrid::load(&input)?;
            let mut cfg = configured(MeshingConfig::for_grid(&grid), &config, "meshing")?;
            if band != "auto" {
                cfg.surface_band = band.parse().context("--band must be a number or `auto`")?;
            }
            let mesh = extract_mesh(&grid, &cfg)?;
            save_mesh(&mesh, &out)?;
            println!(
                "{} vertices, {} triangles, {} boundary edges -> {}",
                mesh.vertices.len(),
                mesh.triangles.len(),
                mesh.boundary_edge_count(),
                out.display()
            );
        }
        Command::Pairs { meshes, views, size, elevation, silhouette_only, out } => {
            let mut paths: Vec<PathBuf> = std::fs::read_dir(&meshes)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().and_then(|e| e.to_str()) == Some("obj"))
                .collect();
            paths.sort();
            let meshes = paths.iter().map(|p| load_mesh(p)).collect::<udfcloth::Result<Vec<_>>>()?;
            let base = PairConfig {
                n_views: views,
                image_size: size,
                elevation: elevation.to_radians(),
                depth_edge_threshold: if silhouette_only { None } else { PairConfig::default().depth_edge_threshold },
            };
            let cfg = configured(base, &config, "pairs")?;
            let pairs = build_pair_dataset(&meshes, &cfg)?;
            let entries = write_pair_dataset(&pairs, &cfg, &out)?;
            println!("{} sketches of {} meshes -> {}", entries.len(), meshes.len(), out.display());
        }
        Command::Train(args) => train(args, &config, cli.seed)?,
        Command::Library { pairs, ckpt, out } => {
            let ck = Checkpoint::load(&ckpt)?;
            let pairs = load_pair_dataset(&pairs)?;
            let (lib, missing) = SketchLibrary::build(&pairs, &ck.latents);
            if !missing.is_empty() {
                eprintln!("skipped shapes without a latent: {}", missing.join(", "));
            }
            lib.save(&out)?;
            println!("{} entries -> {}", lib.len(), out.display());
        }
        Command::Encode { sketch, lib, k } => {
            let lib = SketchLibrary::load(&lib)?;
            let size = lib.image_size().ok_or(udfcloth::Error::EmptyLibrary)?;
            let pose = CameraPose::new(0.0, 0.0, size.0, size.1)?;
            let sketch = SketchImage::load_png(&sketch, None)?.resampled(pose);
            let enc = lib.encode(&sketch, k)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&json!({
                    "shape_name": enc.shape_name,
                    "entry": enc.entry,
                    "score": enc.score,
                    "azimuth_deg": enc.pose.azimuth_deg(),
                    "elevation_deg": enc.pose.elevation_deg(),
                    "z": enc.latent,
                }))?
            );
        }
        Command::Optimize(args) => optimize(args, &config)?,
        Command::Eval { pred, gt, n, emd_n, json } => {
            let report = evaluate_meshes(&load_mesh(&pred)?, &load_mesh(&gt)?, n, emd_n, cli.seed, &mut rng)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                println!("cd {:.6e} ({}), emd {:.6e} ({:?}, n={})", report.cd, report.cd_convention, report.emd, report.emd_mode, report.emd_n);
            }
        }
        Command::Serve(args) => serve(args, &config)?,
        Command::Assets { out } => {
            std::fs::create_dir_all(&out)?;
            for mesh in bundled() {
                let path = out.join(format!("{}.obj", mesh.name));
                save_mesh(&mesh, &path)?;
                println!("{}", path.display());
            }
        }
    }
    Ok(())
}

fn train(args: TrainArgs, config: &Value, seed: u64) -> anyhow::Result<()> {
    let (dec_base, train_base) = match args.preset {
        Preset::Full => (DecoderConfig::full(), TrainConfig::full()),
        Preset::Desk => (DecoderConfig::desk(), TrainConfig::desk()),
    };
    let decoder_cfg = configured(dec_base, config, "decoder")?;
    let mut cfg = configured(TrainConfig { seed, ..train_base }, config, "train")?;
    if let Some(e) = args.epochs {
        cfg.epochs = e;
    }
    let sets = if args.toy {
        udfcloth::toy::training_sets(seed)?
    } else {
        if args.samples.is_empty() {
            bail!("pass --samples or --toy");
        }
        args.samples
            .iter()
            .map(UdfSampleSet::load)
            .collect::<udfcloth::Result<Vec<_>>>()?
    };
    let out = args.out.clone();
    let every = args.checkpoint_every;
    let mut on_epoch = |s: &udfcloth::decoder::EpochStats, d: &udfcloth::decoder::Decoder, l: &udfcloth::decoder::LatentLibrary| {
        log::info!("epoch {} loss {:.6} (udf {:.6})", s.epoch, s.loss.total, s.loss.udf);
        if let Some(e) = every {
            if e > 0 && (s.epoch + 1) % e == 0 {
                let path = out.with_extension(format!("epoch{}.udfd", s.epoch + 1));
                Checkpoint { decoder: d.clone(), latents: l.clone() }.save(path)?;
            }
        }
        Ok(())
    };
    let result = train_auto_decoder(&sets, decoder_cfg, &cfg, &mut on_epoch)?;
    let ck = Checkpoint {
        decoder: result.decoder,
        latents: result.latents,
    };
    ck.save(&args.out)?;
    let manifest = json!({
        "decoder": decoder_cfg,
        "train": cfg,
        "shapes": ck.latents.names().collect::<Vec<_>>(),
        "samples_per_shape": sets.iter().map(|s| s.len()).collect::<Vec<_>>(),
        "history": result.history,
    });
    let manifest_path = args.out.with_extension("manifest.json");
    write_json(&manifest_path, &manifest)?;
    println!("checkpoint -> {}, manifest -> {}", args.out.display(), manifest_path.display());
    Ok(())
}

fn optimize(args: OptimizeArgs, config: &Value) -> anyhow::Result<()> {
    let ck = Checkpoint::load(&args.ckpt)?;
    let edit_cfg = configured(EditConfig::default(), config, "edit")?.with_steps(args.steps);
    let raw = SketchImage::load_png(&args.sketch, None)?;
    let (z0, sketch) = if args.z0 == "from-encode" {
        let lib_path = args.lib.as_ref().context("--z0 from-encode needs --lib")?;
        let lib = SketchLibrary::load(lib_path)?;
        let (w, h) = lib.image_size().ok_or(udfcloth::Error::EmptyLibrary)?;
        let sketch = raw.resampled(CameraPose::new(0.0, 0.0, w, h)?);
        let enc = lib.encode(&sketch, DEFAULT_TOP_K)?;
        (enc.latent, sketch.resampled(enc.pose))
    } else {
        let v: Value = serde_json::from_slice(&std::fs::read(&args.z0)?)?;
        let z: Vec<f64> = serde_json::from_value(v.get("z").cloned().context("z0 file needs a `z` array")?)?;
        let pose = CameraPose::new(args.azimuth.to_radians(), args.elevation.to_radians(), raw.width, raw.height)?;
        (z, raw.resampled(pose))
    };
    let session = EditSession::new(z0, sketch, edit_cfg)?;
    let out = optimize_latent(session, &ck.decoder)?;
    write_json(
        &args.out,
        &json!({
            "z": out.z,
            "z_init": out.z_init,
            "azimuth_deg": out.pose.azimuth_deg(),
            "elevation_deg": out.pose.elevation_deg(),
            "chamfer_before": out.initial_chamfer(),
            "chamfer_after": out.best_chamfer(),
            "diverged": out.diverged,
            "converged": out.converged,
        }),
    )?;
    if let Some(trace) = &args.trace {
        let mut f = std::io::BufWriter::new(std::fs::File::create(trace)?);
        writeln!(f, "step,chamfer")?;
        for (s, c) in &out.history {
            writeln!(f, "{s},{c}")?;
        }
    }
    if let Some(mesh_path) = &args.mesh {
        let mesh = udfcloth::editor::coarse_mesh(&ck.decoder, &out.z, out.config.grid_resolution, out.config.max_surface_value)?;
        save_mesh(&mesh, mesh_path)?;
    }
    println!(
        "chamfer {:.3} -> {:.3}{}",
        out.initial_chamfer().unwrap_or(f64::NAN),
        out.best_chamfer().unwrap_or(f64::NAN),
        if out.diverged { " (diverged)" } else { "" }
    );
    Ok(())
}

fn serve(args: ServeArgs, config: &Value) -> anyhow::Result<()> {
    let engine_cfg = configured(EngineConfig::default(), config, "engine")?;
    let model = match &args.ckpt {
        Some(path) => {
            let ck = Checkpoint::load(path).with_context(|| format!("loading {}", path.display()))?;
            Some(match &args.lib {
                Some(lib) => Model::new(ck, SketchLibrary::load(lib)?)?,
                None => Model::with_bundled_library(ck, &configured(PairConfig::default(), config, "pairs")?)?,
            })
        }
        None => {
            log::warn!("no checkpoint given; generation requests will fail with 503");
            None
        }
    };
    let store = args.state_dir.as_ref().map(SessionStore::open).transpose()?;
    let state = Arc::new(AppState::new(model, engine_cfg, store, Duration::from_secs(args.ttl_secs)));
    let addr: SocketAddr = format!("{}:{}", args.host, args.port).parse().context("invalid --host/--port")?;
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async move {
        tokio::select! {
            r = api::serve(state, addr, args.ui_dir) => r,
            _ = tokio::signal::ctrl_c() => Ok(()),
        }
    })?;
    Ok(())
}
