//! Command implementations behind the `tilesplat` binary.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tilesplat::bundled::{bundled_scenes, BundledScene};
use tilesplat::io::cameras::{load_cameras, write_cameras};
use tilesplat::io::mask::{load_mask, oval_mask, save_mask};
use tilesplat::io::{load_scene, save_scene};
use tilesplat::metrics::{max_channel_diff_u8, psnr_u8, ssim};
use tilesplat::oracle::reference_render;
use tilesplat::path::{interpolate_path, stereo_pair, DEFAULT_SAMPLES_PER_PAIR};
use tilesplat::protocol::large_fov_protocol;
use tilesplat::raster::{render_foveated, render_foveated_two_pass, render_full, FoveaConfig, StageTimes};
use tilesplat::tiles::TileGrid;
use tilesplat::visibility::{build_visibility_index, VisibilityMask};
use tilesplat::{CameraModel, DepthMode, FrameStats, Gaussian3D, Image, ProjectionMode, RenderOutput, RenderSettings, Vec2, Vec3};

/// Stable process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const INGEST: i32 = 2;
    pub const CONFIG: i32 = 3;
    pub const INTERNAL: i32 = 4;
}

#[derive(Debug)]
pub enum CliError {
    /// A scene, camera, mask or output file could not be read or written.
    Ingest(String),
    /// Flags are missing, malformed or contradict each other.
    Config(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Ingest(_) => exit::INGEST,
            CliError::Config(_) => exit::CONFIG,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Ingest(m) => write!(f, "input error: {m}"),
            CliError::Config(m) => write!(f, "configuration error: {m}"),
        }
    }
}

fn config(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn ingest(msg: impl Into<String>) -> CliError {
    CliError::Ingest(msg.into())
}

#[derive(Debug, Parser)]
#[command(name = "tilesplat", version, about = "Tile-based Gaussian splat renderer")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render one view to an image file.
    Render(RenderArgs),
    /// Render a view two ways and report image differences.
    Compare(CompareArgs),
    /// Render an interpolated camera path and report stage timings.
    Bench(BenchArgs),
    /// Report frame counters without writing an image.
    Stats(StatsArgs),
    /// Write a bundled synthetic scene, cameras and a headset-style mask.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProjectionArg {
    Affine,
    Optimal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SortArg {
    Viewz,
    Dist,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Switch {
    On,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FoveaArg {
    Off,
    Single,
    Two,
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// PLY scene file, or `bundled:NAME` for a built-in scene.
    #[arg(long)]
    pub scene: String,
    /// Camera file (TOML, or a 3DGS cameras.json).
    #[arg(long, conflicts_with = "inline_camera")]
    pub cameras: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub camera_index: usize,
    /// Camera at the origin looking down +z: `W,H,FX,FY`.
    #[arg(long)]
    pub inline_camera: Option<String>,
    /// 8-bit grayscale visibility mask at render resolution.
    #[arg(long)]
    pub mask: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct PipelineArgs {
    #[arg(long, value_enum, default_value_t = ProjectionArg::Optimal)]
    pub projection: ProjectionArg,
    /// Depth used for sorting when per-ray resorting is off.
    #[arg(long, value_enum, default_value_t = SortArg::Viewz)]
    pub sort: SortArg,
    #[arg(long, value_enum, default_value_t = Switch::On)]
    pub resort: Switch,
    #[arg(long, default_value_t = 16)]
    pub resort_k: usize,
    #[arg(long, value_enum, default_value_t = FoveaArg::Off)]
    pub fovea: FoveaArg,
    #[arg(long, default_value_t = 0.5)]
    pub center_frac: f64,
    #[arg(long, default_value_t = 0.1)]
    pub padding_frac: f64,
    /// Gaze point in pixels, `X,Y`; defaults to the image center.
    #[arg(long)]
    pub gaze: Option<String>,
    /// Background color, `R,G,B` in [0, 1].
    #[arg(long)]
    pub bg: Option<String>,
    /// Worker threads; 0 picks one per core.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
}

#[derive(Debug, Clone, Args)]
pub struct RenderArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    /// Output image (PNG or PPM).
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the frame counters as JSON.
    #[arg(long)]
    pub stats_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CompareMode {
    /// The configuration against itself.
    #[value(name = "self")]
    SelfCheck,
    /// Against the brute-force per-pixel reference renderer.
    Oracle,
    /// Against a full-resolution render with the same settings.
    Full,
    /// Center crop of a 3×-wide render against the normal render, for both
    /// projections.
    LargeFov,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    #[arg(long, value_enum, default_value_t = CompareMode::Oracle)]
    pub mode: CompareMode,
    /// Also write the report to this file.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    /// Interpolated poses per consecutive camera pair.
    #[arg(long, default_value_t = DEFAULT_SAMPLES_PER_PAIR)]
    pub samples: usize,
    #[arg(long, default_value_t = 1)]
    pub repeat: usize,
    /// Render every pose once per eye.
    #[arg(long)]
    pub stereo: bool,
    #[arg(long, default_value_t = 0.064)]
    pub eye_distance: f64,
    /// Write the summed frame counters of one path traversal as JSON.
    #[arg(long)]
    pub stats_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct StatsArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    /// Write the counters here; JSON when the extension is `.json`, text otherwise.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    /// Bundled scene name, or `all`.
    #[arg(long, default_value = "all")]
    pub name: String,
    #[arg(long)]
    pub out_dir: PathBuf,
}

/// Everything a render needs, resolved from flags and files.
#[derive(Debug, Clone)]
pub struct Job {
    pub scene: Vec<Gaussian3D>,
    pub cameras: Vec<CameraModel>,
    pub camera: CameraModel,
    pub mask: Option<VisibilityMask>,
    pub settings: RenderSettings,
    pub fovea_mode: FoveaArg,
    pub fovea: FoveaConfig,
}

impl Job {
    pub fn render(&self, cam: &CameraModel) -> Result<RenderOutput, CliError> {
        self.render_mode(cam, self.fovea_mode)
    }

    pub fn render_mode(&self, cam: &CameraModel, mode: FoveaArg) -> Result<RenderOutput, CliError> {
        let mask = self.mask.as_ref().filter(|m| m.width == cam.width && m.height == cam.height);
        let out = match mode {
            FoveaArg::Off => render_full(&self.scene, cam, &self.settings, mask),
            FoveaArg::Single => render_foveated(&self.scene, cam, &self.settings, &self.fovea, mask),
            FoveaArg::Two => render_foveated_two_pass(&self.scene, cam, &self.settings, &self.fovea, mask),
        };
        out.map_err(|e| config(e.to_string()))
    }
}

fn parse_list<T: FromStr>(text: &str, n: usize, flag: &str) -> Result<Vec<T>, CliError> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != n {
        return Err(config(format!("--{flag} expects {n} comma-separated values, got `{text}`")));
    }
    parts
        .iter()
        .map(|p| p.parse().map_err(|_| config(format!("--{flag}: cannot parse `{p}`"))))
        .collect()
}

fn find_bundled(name: &str) -> Result<BundledScene, CliError> {
    let scenes = bundled_scenes();
    let names: Vec<&str> = scenes.iter().map(|s| s.name).collect();
    let joined = names.join(", ");
    scenes
        .into_iter()
        .find(|s| s.name == name)
        .ok_or_else(|| config(format!("unknown bundled scene `{name}` (available: {joined})")))
}

pub fn parse_settings(p: &PipelineArgs) -> Result<(RenderSettings, FoveaConfig), CliError> {
    if p.resort_k == 0 {
        return Err(config("--resort-k must be at least 1"));
    }
    let background = match &p.bg {
        Some(text) => {
            let v: Vec<f64> = parse_list(text, 3, "bg")?;
            if v.iter().any(|c| !(0.0..=1.0).contains(c)) {
                return Err(config("--bg components must lie in [0, 1]"));
            }
            [v[0], v[1], v[2]]
        }
        None => [0.0; 3],
    };
    let settings = RenderSettings {
        projection: match p.projection {
            ProjectionArg::Affine => ProjectionMode::Affine,
            ProjectionArg::Optimal => ProjectionMode::Optimal,
        },
        depth_mode: match p.sort {
            SortArg::Viewz => DepthMode::ViewZ,
            SortArg::Dist => DepthMode::EuclideanDist,
        },
        resort: p.resort == Switch::On,
        window: p.resort_k,
        background,
        ..Default::default()
    };
    let gaze = match &p.gaze {
        Some(text) => {
            let v: Vec<f64> = parse_list(text, 2, "gaze")?;
            Some(Vec2::new(v[0], v[1]))
        }
        None => None,
    };
    let fovea = FoveaConfig { center_fraction: p.center_frac, padding_fraction: p.padding_frac, gaze, ..Default::default() };
    fovea.validate().map_err(|e| config(e.to_string()))?;
    Ok((settings, fovea))
}

pub fn load_job(input: &InputArgs, pipeline: &PipelineArgs) -> Result<Job, CliError> {
    let (settings, fovea) = parse_settings(pipeline)?;
    let (scene, default_cam) = match input.scene.strip_prefix("bundled:") {
        Some(name) => {
            let b = find_bundled(name)?;
            (b.gaussians, Some(b.camera))
        }
        None => {
            let path = Path::new(&input.scene);
            let (scene, _) = load_scene(path).map_err(|e| ingest(format!("{}: {e}", path.display())))?;
            (scene, None)
        }
    };
    let cameras = if let Some(path) = &input.cameras {
        let cams = load_cameras(path).map_err(|e| ingest(format!("{}: {e}", path.display())))?;
        if cams.is_empty() {
            return Err(ingest(format!("{}: no cameras", path.display())));
        }
        cams
    } else if let Some(text) = &input.inline_camera {
        let v: Vec<f64> = parse_list(text, 4, "inline-camera")?;
        let (w, h) = (v[0], v[1]);
        if w < 1.0 || h < 1.0 || w.fract() != 0.0 || h.fract() != 0.0 {
            return Err(config("--inline-camera width and height must be positive integers"));
        }
        let (w, h) = (w as u32, h as u32);
        let cam = CameraModel::new(
            Vec3::zeros(),
            tilesplat::Mat3::identity(),
            Vec2::new(v[2], v[3]),
            Vec2::new(w as f64 * 0.5, h as f64 * 0.5),
            w,
            h,
            CameraModel::DEFAULT_NEAR,
        )
        .map_err(|e| config(format!("--inline-camera: {e}")))?;
        vec![cam]
    } else if let Some(cam) = default_cam {
        vec![cam]
    } else {
        return Err(config("a camera is required: pass --cameras or --inline-camera"));
    };
    let camera = cameras
        .get(input.camera_index)
        .cloned()
        .ok_or_else(|| config(format!("--camera-index {} out of range ({} cameras)", input.camera_index, cameras.len())))?;
    let mask = match &input.mask {
        Some(path) => Some(load_mask(path, camera.width, camera.height).map_err(|e| ingest(format!("{}: {e}", path.display())))?),
        None => None,
    };
    if let Some(m) = &mask {
        if cameras.iter().any(|c| c.width != m.width || c.height != m.height) {
            return Err(config("all cameras must match the mask resolution"));
        }
    }
    Ok(Job { scene, cameras, camera, mask, settings, fovea_mode: pipeline.fovea, fovea })
}

fn save_image(image: &Image, path: &Path) -> Result<(), CliError> {
    image.save(path).map_err(|e| ingest(format!("cannot write {}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| ingest(format!("cannot write {}: {e}", path.display())))
}

fn json_text(value: &serde_json::Value) -> String {
    serde_json::to_string_pretty(value).expect("JSON values serialize") + "\n"
}

fn fmt_db(v: f64) -> String {
    if v.is_infinite() {
        "inf".into()
    } else {
        format!("{v:.4}")
    }
}

fn db_json(v: f64) -> serde_json::Value {
    if v.is_finite() {
        serde_json::json!(v)
    } else {
        serde_json::json!("inf")
    }
}

/// Runs `f` on a pool with the requested number of threads (0 = one per core).
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| config(format!("cannot start {threads} threads: {e}")))?;
    Ok(pool.install(f))
}

pub fn cmd_render(args: &RenderArgs) -> Result<String, CliError> {
    let job = load_job(&args.input, &args.pipeline)?;
    let out = with_threads(args.pipeline.threads, || job.render(&job.camera))??;
    save_image(&out.image, &args.out)?;
    if let Some(path) = &args.stats_out {
        write_file(path, &json_text(&out.stats.to_json()))?;
    }
    Ok(format!("wrote {}\n{}", args.out.display(), out.stats.to_text()))
}

/// Image comparison with optional region breakdown and counter deltas.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub psnr: f64,
    pub ssim: f64,
    pub max_diff: u8,
    pub center_max_diff: Option<u8>,
    pub periphery_psnr: Option<f64>,
}

fn compare_images(a: &Image, b: &Image) -> Comparison {
    Comparison {
        psnr: psnr_u8(a, b).expect("same size"),
        ssim: ssim(&a.quantized(), &b.quantized()).expect("same size"),
        max_diff: max_channel_diff_u8(a, b).expect("same size"),
        center_max_diff: None,
        periphery_psnr: None,
    }
}

/// Max channel difference over pixels with blend weight 1 and PSNR over the
/// rest.
pub fn region_metrics(a: &Image, b: &Image, fovea: &FoveaConfig) -> (u8, f64) {
    let ramp = fovea.ramp(a.width, a.height);
    let (qa, qb) = (a.quantized(), b.quantized());
    let (mut center, mut se, mut n) = (0.0f64, 0.0f64, 0usize);
    for y in 0..a.height {
        for x in 0..a.width {
            let d = qa.get(x, y) - qb.get(x, y);
            if ramp.weight(x, y) >= 1.0 {
                center = center.max(d.abs().max());
            } else {
                se += d.norm_squared();
                n += 3;
            }
        }
    }
    let psnr = if se == 0.0 { f64::INFINITY } else { 10.0 * (n as f64 / se).log10() };
    ((center * 255.0).round() as u8, psnr)
}

fn stats_delta(a: &FrameStats, b: &FrameStats) -> String {
    let mut s = String::new();
    for ((k, va), (_, vb)) in a.entries().iter().zip(b.entries()) {
        let _ = writeln!(s, "delta.{k}: {}", *va as i128 - vb as i128);
    }
    s
}

pub fn cmd_compare(args: &CompareArgs) -> Result<String, CliError> {
    let job = load_job(&args.input, &args.pipeline)?;
    let cam = job.camera.clone();
    let (text, json) = with_threads(args.pipeline.threads, || -> Result<(String, serde_json::Value), CliError> {
        let mut text = String::new();
        let json = match args.mode {
            CompareMode::SelfCheck | CompareMode::Oracle | CompareMode::Full => {
                let a = job.render(&cam)?;
                let (b_image, b_stats, label) = match args.mode {
                    CompareMode::SelfCheck => {
                        let b = job.render(&cam)?;
                        (b.image, Some(b.stats), "self")
                    }
                    CompareMode::Oracle => (reference_render(&job.scene, &cam, &job.settings), None, "oracle"),
                    _ => {
                        let b = job.render_mode(&cam, FoveaArg::Off)?;
                        (b.image, Some(b.stats), "full")
                    }
                };
                let mut c = compare_images(&a.image, &b_image);
                if args.mode == CompareMode::Full {
                    let (center, periphery) = region_metrics(&a.image, &b_image, &job.fovea);
                    c.center_max_diff = Some(center);
                    c.periphery_psnr = Some(periphery);
                }
                let _ = writeln!(text, "mode: {label}");
                let _ = writeln!(text, "psnr_db: {}", fmt_db(c.psnr));
                let _ = writeln!(text, "ssim: {:.6}", c.ssim);
                let _ = writeln!(text, "max_channel_diff: {}", c.max_diff);
                if let (Some(center), Some(periphery)) = (c.center_max_diff, c.periphery_psnr) {
                    let _ = writeln!(text, "center_max_channel_diff: {center}");
                    let _ = writeln!(text, "periphery_psnr_db: {}", fmt_db(periphery));
                }
                text.push_str(&a.stats.to_text());
                if let Some(bs) = &b_stats {
                    text.push_str(&stats_delta(&a.stats, bs));
                }
                serde_json::json!({
                    "mode": label,
                    "psnr_db": db_json(c.psnr),
                    "ssim": c.ssim,
                    "max_channel_diff": c.max_diff,
                    "center_max_channel_diff": c.center_max_diff,
                    "periphery_psnr_db": c.periphery_psnr.map(db_json),
                    "stats": a.stats.to_json(),
                    "reference_stats": b_stats.map(|s| s.to_json()),
                })
            }
            CompareMode::LargeFov => {
                let mut results = serde_json::Map::new();
                let _ = writeln!(text, "mode: large-fov");
                for projection in [ProjectionMode::Optimal, ProjectionMode::Affine] {
                    let settings = RenderSettings { projection, ..job.settings };
                    let r = large_fov_protocol(&cam, |c| {
                        render_full(&job.scene, c, &settings, None).map(|o| o.image)
                    })
                    .map_err(|e| config(e.to_string()))?;
                    let name = match projection {
                        ProjectionMode::Optimal => "optimal",
                        ProjectionMode::Affine => "affine",
                    };
                    let _ = writeln!(text, "{name}.crop_psnr_db: {}", fmt_db(r.psnr));
                    let _ = writeln!(text, "{name}.crop_max_channel_diff: {}", r.max_diff);
                    results.insert(
                        name.into(),
                        serde_json::json!({ "crop_psnr_db": db_json(r.psnr), "crop_max_channel_diff": r.max_diff }),
                    );
                }
                let mut obj = serde_json::Map::new();
                obj.insert("mode".into(), "large-fov".into());
                obj.extend(results);
                serde_json::Value::Object(obj)
            }
        };
        Ok((text, json))
    })??;
    if let Some(path) = &args.report {
        write_file(path, &json_text(&json))?;
    }
    Ok(text)
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

pub fn cmd_bench(args: &BenchArgs) -> Result<String, CliError> {
    let job = load_job(&args.input, &args.pipeline)?;
    if args.repeat == 0 {
        return Err(config("--repeat must be at least 1"));
    }
    if !(args.eye_distance.is_finite() && args.eye_distance >= 0.0) {
        return Err(config("--eye-distance must be finite and non-negative"));
    }
    let path = interpolate_path(&job.cameras, args.samples).map_err(|e| config(e.to_string()))?;
    let views: Vec<Vec<CameraModel>> = path
        .iter()
        .map(|c| if args.stereo { stereo_pair(c, args.eye_distance).to_vec() } else { vec![c.clone()] })
        .collect();
    let (frames, totals) = with_threads(args.pipeline.threads, || -> Result<_, CliError> {
        let mut frames: Vec<StageTimes> = Vec::new();
        let mut totals = FrameStats::default();
        for rep in 0..args.repeat {
            for eyes in &views {
                let mut t = StageTimes::default();
                for cam in eyes {
                    let out = job.render(cam)?;
                    t.add(&out.timings);
                    if rep == 0 {
                        totals.add(&out.stats);
                    }
                }
                frames.push(t);
            }
        }
        Ok((frames, totals))
    })??;
    let mut text = String::new();
    let _ = writeln!(text, "poses: {}", path.len());
    let _ = writeln!(text, "views_per_pose: {}", if args.stereo { 2 } else { 1 });
    let _ = writeln!(text, "repeat: {}", args.repeat);
    let stages: [(&str, fn(&StageTimes) -> Duration); 5] = [
        ("preprocess", |t| t.preprocess),
        ("pairs", |t| t.pairs),
        ("shade", |t| t.shade),
        ("post", |t| t.post),
        ("frame", |t| t.total()),
    ];
    for (name, get) in stages {
        let values: Vec<f64> = frames.iter().map(|t| secs(get(t))).collect();
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let _ = writeln!(text, "{name}_ms: mean {mean:.3} min {min:.3}");
    }
    text.push_str(&totals.to_text());
    if let Some(path) = &args.stats_out {
        write_file(path, &json_text(&totals.to_json()))?;
    }
    Ok(text)
}

pub fn cmd_stats(args: &StatsArgs) -> Result<String, CliError> {
    let job = load_job(&args.input, &args.pipeline)?;
    let (out, unmasked) = with_threads(args.pipeline.threads, || -> Result<_, CliError> {
        let out = job.render(&job.camera)?;
        let unmasked = match &job.mask {
            Some(_) => Some(Job { mask: None, ..job.clone() }.render(&job.camera)?),
            None => None,
        };
        Ok((out, unmasked))
    })??;
    let mut text = out.stats.to_text();
    let mut json = out.stats.to_json();
    if let (Some(mask), Some(full)) = (&job.mask, &unmasked) {
        let grid = TileGrid::for_camera(&job.camera);
        let vi = build_visibility_index(mask, &grid).map_err(|e| config(e.to_string()))?;
        let visible = vi.visible_tiles() as u64;
        let total = grid.tile_count() as u64;
        let pairs = out.stats.pairs_after_exact_cull;
        let pairs_full = full.stats.pairs_after_exact_cull;
        let _ = writeln!(text, "mask.visible_tiles: {visible}");
        let _ = writeln!(text, "mask.total_tiles: {total}");
        let _ = writeln!(text, "mask.pairs_without_mask: {pairs_full}");
        let _ = writeln!(text, "mask.pairs_with_mask: {pairs}");
        json["mask"] = serde_json::json!({
            "visible_tiles": visible,
            "total_tiles": total,
            "pairs_without_mask": pairs_full,
            "pairs_with_mask": pairs,
        });
    }
    if let Some(path) = &args.out {
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        write_file(path, &if is_json { json_text(&json) } else { text.clone() })?;
    }
    Ok(text)
}

/// Orbit of three views around the scene, used as a default bench path.
fn synth_cameras(base: &CameraModel) -> Vec<CameraModel> {
    let target = Vec3::new(0.0, 0.0, 4.0);
    [-0.4, 0.0, 0.4]
        .iter()
        .map(|&x| CameraModel::look_at(Vec3::new(x, 0.1 * x, 0.0), target, -Vec3::y(), base.width, base.height, base.focal.x))
        .collect()
}

pub fn cmd_synth(args: &SynthArgs) -> Result<String, CliError> {
    let scenes = if args.name == "all" { bundled_scenes() } else { vec![find_bundled(&args.name)?] };
    std::fs::create_dir_all(&args.out_dir)
        .map_err(|e| ingest(format!("cannot create {}: {e}", args.out_dir.display())))?;
    let mut text = String::new();
    for s in &scenes {
        let ply = args.out_dir.join(format!("{}.ply", s.name));
        save_scene(&ply, &s.gaussians).map_err(|e| ingest(format!("cannot write {}: {e}", ply.display())))?;
        let cams = args.out_dir.join(format!("{}.cameras.toml", s.name));
        write_file(&cams, &write_cameras(&synth_cameras(&s.camera)))?;
        let _ = writeln!(text, "wrote {} ({} gaussians) and {}", ply.display(), s.gaussians.len(), cams.display());
    }
    if let Some(s) = scenes.first() {
        let mask = args.out_dir.join("mask.png");
        save_mask(&mask, &oval_mask(s.camera.width, s.camera.height))
            .map_err(|e| ingest(format!("cannot write {}: {e}", mask.display())))?;
        let _ = writeln!(text, "wrote {}", mask.display());
    }
    Ok(text)
}

pub fn run(cli: &Cli) -> Result<String, CliError> {
    match &cli.command {
        Command::Render(a) => cmd_render(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Stats(a) => cmd_stats(a),
        Command::Synth(a) => cmd_synth(a),
    }
}
