//! Per-ray depth, bounded resort window and front-to-back blending.
//!
//! Splats arrive per tile in key order (depth at the tile's maximum
//! contribution point). Each pixel re-ranks them by the depth of maximum
//! density along its own ray using a window of at most K fragments: a fragment
//! is blended only once the window would otherwise exceed K. Whenever a
//! fragment arrives that should have preceded one already blended, an
//! overflow is counted; with zero overflows the blend order equals a full
//! per-ray sort.

use std::cmp::Ordering;

use crate::camera::CameraModel;
use crate::projection::Splat2D;
use crate::tiles::{max_contrib, Region};
use crate::{Mat3, Vec2, Vec3, ALPHA_MIN, TRANSMITTANCE_MIN};

pub const DEFAULT_WINDOW: usize = 16;

/// Ray parameter of maximum density of `N(mean, cov)` along `origin + t·dir`
/// (`dir` unit length), clamped below at `near`.
pub fn ray_depth(origin: &Vec3, dir: &Vec3, mean: &Vec3, cov_inv: &Mat3, near: f64) -> f64 {
    let ad = cov_inv * dir;
    let t = ad.dot(&(mean - origin)) / ad.dot(dir);
    t.max(near)
}

/// Depth of a splat along the ray through a pixel position.
pub fn per_pixel_ray_depth(splat: &Splat2D, pixel: &Vec2, cam: &CameraModel) -> f64 {
    splat.ray_depth_at(pixel, cam)
}

/// One splat's contribution to one ray.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fragment {
    pub depth: f64,
    /// Source Gaussian index; breaks depth ties.
    pub index: u32,
    pub alpha: f64,
    pub color: Vec3,
}

impl Fragment {
    pub fn order(&self, other: &Self) -> Ordering {
        self.depth.total_cmp(&other.depth).then(self.index.cmp(&other.index))
    }
}

/// Front-to-back compositing state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Blender {
    pub color: Vec3,
    pub transmittance: f64,
    pub done: bool,
}

impl Default for Blender {
    fn default() -> Self {
        Self { color: Vec3::zeros(), transmittance: 1.0, done: false }
    }
}

impl Blender {
    /// Blends one fragment. Stops (without blending) once the transmittance
    /// would fall below [`TRANSMITTANCE_MIN`].
    pub fn blend(&mut self, alpha: f64, color: &Vec3) {
        if self.done {
            return;
        }
        let next = self.transmittance * (1.0 - alpha);
        if next < TRANSMITTANCE_MIN {
            self.done = true;
            return;
        }
        self.color += color * (alpha * self.transmittance);
        self.transmittance = next;
    }

    pub fn finish(&self, background: &Vec3) -> Vec3 {
        self.color + background * self.transmittance
    }
}

/// At most `capacity` pending fragments, kept sorted by (depth, index).
#[derive(Debug, Clone)]
pub struct ResortWindow {
    capacity: usize,
    // descending, so the nearest fragment is at the end
    entries: Vec<Fragment>,
    last_popped: Option<Fragment>,
    overflows: u64,
}

impl ResortWindow {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "window capacity must be positive");
        Self { capacity, entries: Vec::with_capacity(capacity + 1), last_popped: None, overflows: 0 }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn overflows(&self) -> u64 {
        self.overflows
    }

    /// Inserts a fragment; returns the nearest one if the window overflows
    /// its capacity.
    pub fn push(&mut self, frag: Fragment) -> Option<Fragment> {
        if self.last_popped.is_some_and(|p| frag.order(&p) == Ordering::Less) {
            self.overflows += 1;
        }
        let pos = self.entries.partition_point(|e| e.order(&frag) == Ordering::Greater);
        self.entries.insert(pos, frag);
        if self.entries.len() > self.capacity {
            self.pop()
        } else {
            None
        }
    }

    pub fn pop(&mut self) -> Option<Fragment> {
        let f = self.entries.pop()?;
        self.last_popped = Some(f);
        Some(f)
    }

    /// Records a fragment that arrives after blending has terminated, only to
    /// detect order violations.
    pub fn audit(&mut self, frag: &Fragment) {
        let blended_later = self.last_popped.is_some_and(|p| frag.order(&p) == Ordering::Less);
        if blended_later {
            self.overflows += 1;
        }
    }
}

/// Result of blending one fragment stream.
#[derive(Debug, Clone, PartialEq)]
pub struct BlendTrace {
    pub color: Vec3,
    pub transmittance: f64,
    pub overflows: u64,
    /// Source indices in blend order.
    pub order: Vec<u32>,
}

/// Blends a stream of fragments through a window of capacity `k`.
pub fn resorted_blend(stream: &[Fragment], k: usize, background: &Vec3) -> BlendTrace {
    let mut window = ResortWindow::new(k);
    let mut blender = Blender::default();
    let mut order = Vec::new();
    let emit = |f: Fragment, blender: &mut Blender, order: &mut Vec<u32>| {
        blender.blend(f.alpha, &f.color);
        if !blender.done {
            order.push(f.index);
        }
    };
    for frag in stream {
        if blender.done {
            window.audit(frag);
            continue;
        }
        if let Some(f) = window.push(*frag) {
            emit(f, &mut blender, &mut order);
        }
    }
    while !blender.done {
        match window.pop() {
            Some(f) => emit(f, &mut blender, &mut order),
            None => break,
        }
    }
    BlendTrace {
        color: blender.finish(background),
        transmittance: blender.transmittance,
        overflows: window.overflows(),
        order,
    }
}

/// Blends fragments after a full sort by (depth, index).
pub fn full_sort_blend(stream: &[Fragment], background: &Vec3) -> Vec3 {
    let mut sorted = stream.to_vec();
    sorted.sort_by(|a, b| a.order(b));
    let mut blender = Blender::default();
    for f in &sorted {
        blender.blend(f.alpha, &f.color);
    }
    blender.finish(background)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SampleCounters {
    /// Splat alpha evaluations used for blending.
    pub samples: u64,
    pub overflows: u64,
}

/// Shades one sample position from a tile-ordered list of splat indices.
/// `window` is `Some(K)` to resort per ray, `None` to blend in list order.
pub fn shade_sample(
    entries: &[u32],
    splats: &[Splat2D],
    cam: &CameraModel,
    pixel: &Vec2,
    background: &Vec3,
    window: Option<usize>,
    counters: &mut SampleCounters,
) -> Vec3 {
    let mut blender = Blender::default();
    match window {
        None => {
            for &e in entries {
                let s = &splats[e as usize];
                counters.samples += 1;
                let alpha = s.alpha_at(pixel, cam);
                if alpha < ALPHA_MIN {
                    continue;
                }
                blender.blend(alpha, &s.color);
                if blender.done {
                    break;
                }
            }
        }
        Some(k) => {
            let mut win = ResortWindow::new(k);
            let fragment = |s: &Splat2D, alpha: f64| Fragment {
                depth: s.ray_depth_at(pixel, cam),
                index: s.source,
                alpha,
                color: s.color,
            };
            for &e in entries {
                let s = &splats[e as usize];
                if blender.done {
                    // order audit only; not counted as work
                    let alpha = s.alpha_at(pixel, cam);
                    if alpha >= ALPHA_MIN {
                        win.audit(&fragment(s, alpha));
                    }
                    continue;
                }
                counters.samples += 1;
                let alpha = s.alpha_at(pixel, cam);
                if alpha < ALPHA_MIN {
                    continue;
                }
                if let Some(f) = win.push(fragment(s, alpha)) {
                    blender.blend(f.alpha, &f.color);
                }
            }
            while !blender.done {
                match win.pop() {
                    Some(f) => blender.blend(f.alpha, &f.color),
                    None => break,
                }
            }
            counters.overflows += win.overflows();
        }
    }
    blender.finish(background)
}

/// Keeps the entries of a parent tile that can reach [`ALPHA_MIN`] inside a
/// subregion. With `reorder`, survivors are re-sorted by their depth at the
/// subregion's maximum-contribution point (ties by splat index).
pub fn subtile_recull(entries: &[u32], region: &Region, splats: &[Splat2D], cam: &CameraModel, reorder: bool) -> Vec<u32> {
    if !reorder {
        return entries.iter().copied().filter(|&e| max_contrib(&splats[e as usize], region, cam).is_some()).collect();
    }
    let mut kept: Vec<(f32, u32)> = entries
        .iter()
        .filter_map(|&e| {
            let s = &splats[e as usize];
            max_contrib(s, region, cam).map(|m| (s.ray_depth_at(&m.point, cam) as f32, e))
        })
        .collect();
    kept.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    kept.into_iter().map(|(_, e)| e).collect()
}
