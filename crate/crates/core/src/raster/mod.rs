//! Tile rendering: full resolution, single-pass foveated and the two-pass
//! foveated baseline.

pub mod fovea;
pub mod post;
pub mod two_pass;

use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::camera::CameraModel;
use crate::gaussian::Gaussian3D;
use crate::image::Image;
use crate::pairs::{instantiate_pairs, sort_pairs, KeyDepth, PairList};
use crate::projection::{project, DepthMode, ProjectionMode, Splat2D, DEFAULT_DILATION};
use crate::resort::{shade_sample, subtile_recull, SampleCounters, DEFAULT_WINDOW};
use crate::stats::FrameStats;
use crate::tiles::{PixelRect, TileGrid};
use crate::visibility::{build_visibility_index, ResolutionMismatch, VisibilityIndex, VisibilityMask};
use crate::{Vec2, Vec3};

pub use fovea::{build_partition, ClassCounts, FoveaConfig, Ramp, TileClass, TilePartition};
pub use post::periphery_postprocess;
pub use two_pass::{crop_frustum, render_foveated_two_pass};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct RenderSettings {
    pub projection: ProjectionMode,
    /// Depth used in sort keys when per-ray resorting is off.
    pub depth_mode: DepthMode,
    pub resort: bool,
    /// Resort window capacity.
    pub window: usize,
    pub background: [f64; 3],
    pub dilation: f64,
}

impl Default for RenderSettings {
    fn default() -> Self {
        Self {
            projection: ProjectionMode::Optimal,
            depth_mode: DepthMode::ViewZ,
            resort: true,
            window: DEFAULT_WINDOW,
            background: [0.0; 3],
            dilation: DEFAULT_DILATION,
        }
    }
}

impl RenderSettings {
    pub fn background(&self) -> Vec3 {
        Vec3::from(self.background)
    }

    fn key_depth(&self) -> KeyDepth {
        if self.resort {
            KeyDepth::TileRay
        } else {
            KeyDepth::Hint(self.depth_mode)
        }
    }

    fn window(&self) -> Option<usize> {
        self.resort.then_some(self.window)
    }
}

/// Wall-clock time spent in each pipeline stage.
#[derive(Debug, Clone, Copy, Default)]
pub struct StageTimes {
    pub preprocess: Duration,
    pub pairs: Duration,
    pub shade: Duration,
    pub post: Duration,
}

impl StageTimes {
    pub fn add(&mut self, other: &StageTimes) {
        self.preprocess += other.preprocess;
        self.pairs += other.pairs;
        self.shade += other.shade;
        self.post += other.post;
    }

    pub fn total(&self) -> Duration {
        self.preprocess + self.pairs + self.shade + self.post
    }
}

#[derive(Debug, Clone)]
pub struct RenderOutput {
    pub image: Image,
    pub stats: FrameStats,
    pub timings: StageTimes,
}

/// Timings are machine dependent and take no part in equality.
impl PartialEq for RenderOutput {
    fn eq(&self, other: &Self) -> bool {
        self.image == other.image && self.stats == other.stats
    }
}

/// Projects every Gaussian, keeping scene order. Rejected Gaussians are
/// dropped.
pub fn project_scene(scene: &[Gaussian3D], cam: &CameraModel, settings: &RenderSettings) -> Vec<Splat2D> {
    scene
        .par_iter()
        .enumerate()
        .filter_map(|(i, g)| project(g, i as u32, cam, settings.projection, settings.dilation).ok())
        .collect()
}

fn visibility(mask: Option<&VisibilityMask>, grid: &TileGrid) -> Result<VisibilityIndex, ResolutionMismatch> {
    match mask {
        Some(m) => build_visibility_index(m, grid),
        None => Ok(VisibilityIndex::all_visible(grid)),
    }
}

/// Full-resolution render of every tile with visible pixels.
pub fn render_full(
    scene: &[Gaussian3D],
    cam: &CameraModel,
    settings: &RenderSettings,
    mask: Option<&VisibilityMask>,
) -> Result<RenderOutput, ResolutionMismatch> {
    let grid = TileGrid::for_camera(cam);
    let vi = visibility(mask, &grid)?;
    let partition = TilePartition::full(grid, mask.map(|_| &vi));
    Ok(render_partitioned(scene, cam, settings, &vi, &partition))
}

/// Single-pass foveated render: one pair list at 32-px granularity, tiles
/// shaded according to their class, then the periphery blur.
pub fn render_foveated(
    scene: &[Gaussian3D],
    cam: &CameraModel,
    settings: &RenderSettings,
    fovea: &FoveaConfig,
    mask: Option<&VisibilityMask>,
) -> Result<RenderOutput, ResolutionMismatch> {
    let grid = TileGrid::for_camera(cam);
    let vi = visibility(mask, &grid)?;
    let partition = build_partition(fovea, &vi, &grid);
    Ok(render_partitioned(scene, cam, settings, &vi, &partition))
}

/// Builds and sorts the pair list for one frame.
pub fn build_pairs(
    splats: &[Splat2D],
    cam: &CameraModel,
    settings: &RenderSettings,
    vi: &VisibilityIndex,
    stats: &mut FrameStats,
) -> PairList {
    let grid = TileGrid::for_camera(cam);
    let (pairs, counts) = instantiate_pairs(splats, &grid, vi, cam, settings.key_depth());
    stats.pairs_instantiated += counts.reserved;
    stats.pairs_after_exact_cull += counts.emitted;
    sort_pairs(pairs, grid.tile_count())
}

struct TileOutput {
    rect: PixelRect,
    pixels: Vec<Vec3>,
    counters: SampleCounters,
    subtile_pairs: u64,
}

pub fn render_partitioned(
    scene: &[Gaussian3D],
    cam: &CameraModel,
    settings: &RenderSettings,
    vi: &VisibilityIndex,
    partition: &TilePartition,
) -> RenderOutput {
    let mut stats = FrameStats { gaussians_preprocessed: scene.len() as u64, ..Default::default() };
    let mut timings = StageTimes::default();
    let start = Instant::now();
    let splats = project_scene(scene, cam, settings);
    timings.preprocess = start.elapsed();
    stats.splats_visible = splats.len() as u64;
    let start = Instant::now();
    let pairs = build_pairs(&splats, cam, settings, vi, &mut stats);
    timings.pairs = start.elapsed();
    let grid = partition.grid;

    let start = Instant::now();
    let tiles: Vec<TileOutput> = (0..grid.tile_count() as u32)
        .into_par_iter()
        .map(|id| {
            let (tx, ty) = grid.tile_coords(id);
            shade_tile(tx, ty, pairs.tile_values(id), &splats, cam, settings, partition)
        })
        .collect();

    let bg = settings.background();
    let mut image = Image::new(cam.width, cam.height, bg);
    let mut written = vec![false; cam.pixel_count()];
    for t in &tiles {
        let mut it = t.pixels.iter();
        for y in t.rect.y0..t.rect.y1 {
            for x in t.rect.x0..t.rect.x1 {
                let idx = y as usize * cam.width as usize + x as usize;
                assert!(!written[idx], "pixel ({x}, {y}) written twice");
                written[idx] = true;
                image.pixels[idx] = *it.next().expect("tile buffer covers its rect");
            }
        }
        stats.per_pixel_samples += t.counters.samples;
        stats.resort_overflows += t.counters.overflows;
        stats.pairs_subtile += t.subtile_pairs;
    }
    assert!(written.iter().all(|&w| w), "every pixel is written once");
    stats.tiles = partition.counts();
    timings.shade = start.elapsed();
    let start = Instant::now();
    if stats.tiles.low_res > 0 {
        image = periphery_postprocess(&image, partition);
    }
    timings.post = start.elapsed();
    RenderOutput { image, stats, timings }
}

fn shade_tile(
    tx: u32,
    ty: u32,
    entries: &[u32],
    splats: &[Splat2D],
    cam: &CameraModel,
    settings: &RenderSettings,
    partition: &TilePartition,
) -> TileOutput {
    let grid = partition.grid;
    let rect = grid.tile_pixels(tx, ty);
    let bg = settings.background();
    let (w, h) = (rect.width() as usize, rect.height() as usize);
    let mut pixels = vec![bg; w * h];
    let mut counters = SampleCounters::default();
    let mut subtile_pairs = 0;
    let class = partition.class(tx, ty);
    match class {
        TileClass::Invisible => {}
        TileClass::HighRes | TileClass::Hybrid => {
            for sub in grid.subtiles(tx, ty) {
                let list = subtile_recull(entries, &sub.region(), splats, cam, settings.resort);
                subtile_pairs += list.len() as u64;
                for y in sub.y0..sub.y1 {
                    for x in sub.x0..sub.x1 {
                        let p = CameraModel::pixel_center(x, y);
                        let c = shade_sample(&list, splats, cam, &p, &bg, settings.window(), &mut counters);
                        pixels[(y - rect.y0) as usize * w + (x - rect.x0) as usize] = c;
                    }
                }
            }
            if class == TileClass::Hybrid {
                blend_with_group_average(&mut pixels, &rect, partition);
            }
        }
        TileClass::LowRes => {
            subtile_pairs += entries.len() as u64;
            for gy in (0..h).step_by(2) {
                for gx in (0..w).step_by(2) {
                    let p = Vec2::new((rect.x0 as usize + gx + 1) as f64, (rect.y0 as usize + gy + 1) as f64);
                    let c = shade_sample(entries, splats, cam, &p, &bg, settings.window(), &mut counters);
                    for y in gy..(gy + 2).min(h) {
                        for x in gx..(gx + 2).min(w) {
                            pixels[y * w + x] = c;
                        }
                    }
                }
            }
        }
    }
    TileOutput { rect, pixels, counters, subtile_pairs }
}

/// Mixes each full-resolution pixel with its 2×2 group average by the blend
/// weight.
fn blend_with_group_average(pixels: &mut [Vec3], rect: &PixelRect, partition: &TilePartition) {
    let (w, h) = (rect.width() as usize, rect.height() as usize);
    let full = pixels.to_vec();
    let full = &full;
    for gy in (0..h).step_by(2) {
        for gx in (0..w).step_by(2) {
            let ys = gy..(gy + 2).min(h);
            let xs = gx..(gx + 2).min(w);
            let n = (ys.len() * xs.len()) as f64;
            let avg = ys.clone().flat_map(|y| xs.clone().map(move |x| full[y * w + x])).sum::<Vec3>() / n;
            for y in ys.clone() {
                for x in xs.clone() {
                    let wgt = partition.weight(rect.x0 + x as u32, rect.y0 + y as u32);
                    pixels[y * w + x] = full[y * w + x] * wgt + avg * (1.0 - wgt);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::reference_render;
    use nalgebra::UnitQuaternion;

    fn splat(mean: Vec3, scale: f64, opacity: f64, color: Vec3) -> Gaussian3D {
        Gaussian3D::with_color(mean, UnitQuaternion::identity(), Vec3::repeat(scale), opacity, color).unwrap()
    }

    #[test]
    fn empty_scene_is_background() {
        let cam = CameraModel::simple(70, 50, 60.0);
        let settings = RenderSettings { background: [0.1, 0.2, 0.3], ..Default::default() };
        let out = render_full(&[], &cam, &settings, None).unwrap();
        assert!(out.image.pixels.iter().all(|p| *p == Vec3::new(0.1, 0.2, 0.3)));
        assert_eq!(out.stats.pairs_instantiated, 0);
        assert_eq!(out.stats.per_pixel_samples, 0);
        assert_eq!(out.stats.tiles.total(), 6);
    }

    #[test]
    fn single_splat_center_pixel() {
        let cam = CameraModel::simple(64, 64, 80.0);
        let color = Vec3::new(0.9, 0.4, 0.1);
        let scene = [splat(Vec3::new(0.0, 0.0, 4.0), 0.2, 0.995, color)];
        let bg = Vec3::new(0.0, 0.0, 1.0);
        for projection in [ProjectionMode::Affine, ProjectionMode::Optimal] {
            let settings = RenderSettings { projection, background: bg.into(), ..Default::default() };
            let out = render_full(&scene, &cam, &settings, None).unwrap();
            // the principal point is a pixel corner; its four neighbors share
            // the peak value by symmetry
            let c = out.image.get(31, 31);
            for (x, y) in [(32, 31), (31, 32), (32, 32)] {
                assert!((out.image.get(x, y) - c).norm() < 1e-12);
            }
            let s = project(&scene[0], 0, &cam, projection, DEFAULT_DILATION).unwrap();
            let a = s.alpha_at(&Vec2::new(31.5, 31.5), &cam);
            let expected = s.color * a + bg * (1.0 - a);
            assert!((c - expected).norm() < 1e-12);
            assert_eq!(out.image.get(0, 0), bg);
            assert_eq!(out.stats.pairs_instantiated, 4);
        }
        // at the exact mean the alpha is the clamped opacity
        let cam = CameraModel { principal_point: Vec2::new(31.5, 31.5), ..cam };
        let out = render_full(&scene, &cam, &RenderSettings { background: bg.into(), ..Default::default() }, None).unwrap();
        let expected = color * 0.99 + bg * 0.01;
        assert!((out.image.get(31, 31) - expected).norm() < 1e-9);
    }

    #[test]
    fn full_window_matches_reference_exactly() {
        let scene = crate::bundled::random_scene(7, 120);
        let cam = CameraModel::simple(96, 80, 90.0);
        let settings = RenderSettings { window: scene.len(), ..Default::default() };
        let out = render_full(&scene, &cam, &settings, None).unwrap();
        let reference = reference_render(&scene, &cam, &settings);
        assert_eq!(out.stats.resort_overflows, 0);
        for (a, b) in out.image.pixels.iter().zip(&reference.pixels) {
            assert!((a - b).abs().max() <= 1e-6);
        }
    }

    #[test]
    fn whole_center_fovea_equals_full() {
        let scene = crate::bundled::random_scene(3, 80);
        let cam = CameraModel::simple(100, 70, 90.0);
        let settings = RenderSettings::default();
        let full = render_full(&scene, &cam, &settings, None).unwrap();
        let fov = FoveaConfig { center_fraction: 1.0, ..Default::default() };
        let single = render_foveated(&scene, &cam, &settings, &fov, None).unwrap();
        assert_eq!(full.image, single.image);
        assert_eq!(full.stats, single.stats);
    }

    #[test]
    fn huge_constant_splat_is_resolution_invariant() {
        let cam = CameraModel::simple(96, 96, 60.0);
        // opaque and far larger than the frustum, so every pixel saturates
        let scene = [splat(Vec3::new(0.0, 0.0, 3.0), 50.0, 0.999, Vec3::new(0.3, 0.6, 0.2))];
        let settings = RenderSettings::default();
        let full = render_full(&scene, &cam, &settings, None).unwrap();
        let fov = render_foveated(&scene, &cam, &settings, &FoveaConfig::default(), None).unwrap();
        for (a, b) in full.image.pixels.iter().zip(&fov.image.pixels) {
            assert!((a - b).abs().max() < 1e-9);
        }
    }

    #[test]
    fn invisible_tiles_render_background() {
        let scene = crate::bundled::random_scene(5, 60);
        let cam = CameraModel::simple(96, 64, 90.0);
        let mask = VisibilityMask::from_fn(96, 64, |x, _| x < 40);
        let out = render_full(&scene, &cam, &RenderSettings::default(), Some(&mask)).unwrap();
        for y in 0..64 {
            for x in 64..96 {
                assert_eq!(out.image.get(x, y), Vec3::zeros());
            }
        }
        assert_eq!(out.stats.tiles.invisible, 2);
        assert!(render_full(&scene, &cam, &RenderSettings::default(), Some(&VisibilityMask::all_visible(10, 10))).is_err());
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let scene = crate::bundled::random_scene(11, 300);
        let cam = CameraModel::simple(128, 96, 100.0);
        let run = |threads| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| render_foveated(&scene, &cam, &RenderSettings::default(), &FoveaConfig::default(), None).unwrap())
        };
        let (a, b) = (run(1), run(3));
        assert_eq!(a.image.to_rgb8(), b.image.to_rgb8());
        assert_eq!(a, b);
    }
}
