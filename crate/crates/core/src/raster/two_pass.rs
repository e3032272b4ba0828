//! Two-pass foveated baseline: a tight full-resolution render of the center
//! plus a half-resolution render of the whole frame, bilinearly upsampled and
//! blended with the same ramp.

use std::time::Instant;

use crate::camera::CameraModel;
use crate::gaussian::Gaussian3D;
use crate::image::Image;
use crate::raster::{build_partition, render_full, FoveaConfig, RenderOutput, RenderSettings};
use crate::tiles::{PixelRect, TileGrid};
use crate::visibility::{build_visibility_index, ResolutionMismatch, VisibilityIndex, VisibilityMask};
use crate::Vec3;

/// Camera for a pixel rectangle of `cam` that casts the same rays.
pub fn crop_frustum(cam: &CameraModel, rect: &PixelRect) -> CameraModel {
    cam.crop(rect.x0, rect.y0, rect.width(), rect.height())
}

/// Reach of the bilinear upsampling footprint in full-resolution pixels,
/// with some slack.
const UPSAMPLE_REACH: i64 = 4;

pub fn render_foveated_two_pass(
    scene: &[Gaussian3D],
    cam: &CameraModel,
    settings: &RenderSettings,
    fovea: &FoveaConfig,
    mask: Option<&VisibilityMask>,
) -> Result<RenderOutput, ResolutionMismatch> {
    let (w, h) = (cam.width, cam.height);
    let grid = TileGrid::for_camera(cam);
    let vi = match mask {
        Some(m) => build_visibility_index(m, &grid)?,
        None => VisibilityIndex::all_visible(&grid),
    };
    let ramp = fovea.ramp(w, h);
    let visible = |x: u32, y: u32| !fovea.visibility_cull || mask.is_none_or(|m| m.get(x, y));

    // pass 1: center plus blend band at full resolution
    let rect = ramp.padded_pixels(w, h);
    let center = if rect.is_empty() {
        None
    } else {
        let sub = crop_frustum(cam, &rect);
        let sub_mask = VisibilityMask::from_fn(rect.width(), rect.height(), |i, j| visible(rect.x0 + i, rect.y0 + j));
        Some(render_full(scene, &sub, settings, Some(&sub_mask))?)
    };

    // pass 2: whole frame at half resolution, skipping groups that only feed
    // pixels of weight 1
    let half = cam.downscaled(2);
    let half_mask = VisibilityMask::from_fn(half.width, half.height, |i, j| {
        let (x0, y0) = (2 * i as i64, 2 * j as i64);
        let any_visible = (y0..(y0 + 2).min(h as i64))
            .any(|y| (x0..(x0 + 2).min(w as i64)).any(|x| visible(x as u32, y as u32)));
        let needed = ((y0 - UPSAMPLE_REACH).max(0)..(y0 + 2 + UPSAMPLE_REACH).min(h as i64)).any(|y| {
            ((x0 - UPSAMPLE_REACH).max(0)..(x0 + 2 + UPSAMPLE_REACH).min(w as i64))
                .any(|x| ramp.weight(x as u32, y as u32) < 1.0)
        });
        any_visible && needed
    });
    let periphery = render_full(scene, &half, settings, Some(&half_mask))?;

    let start = Instant::now();
    let bg = settings.background();
    let image = Image::from_fn(w, h, |x, y| {
        if fovea.visibility_cull && !vi.bit(x / crate::tiles::COARSE_TILE, y / crate::tiles::COARSE_TILE) {
            return bg;
        }
        let wgt = ramp.weight(x, y);
        let inner = |img: &Image| img.get(x - rect.x0, y - rect.y0);
        match (&center, wgt) {
            (Some(c), wgt) if wgt >= 1.0 => inner(&c.image),
            (Some(c), wgt) if wgt > 0.0 => inner(&c.image) * wgt + bilinear_upsample(&periphery.image, x, y) * (1.0 - wgt),
            _ => bilinear_upsample(&periphery.image, x, y),
        }
    });

    let mut timings = periphery.timings;
    timings.post += start.elapsed();
    let mut stats = periphery.stats.clone();
    if let Some(c) = &center {
        stats.add(&c.stats);
        timings.add(&c.timings);
    }
    stats.tiles = build_partition(fovea, &vi, &grid).counts();
    Ok(RenderOutput { image, stats, timings })
}

/// Value of the half-resolution image at full-resolution pixel `(x, y)`.
pub fn bilinear_upsample(half: &Image, x: u32, y: u32) -> Vec3 {
    let coord = |v: u32, n: u32| ((v as f64 + 0.5) * 0.5 - 0.5).clamp(0.0, (n - 1) as f64);
    let (u, v) = (coord(x, half.width), coord(y, half.height));
    let (x0, y0) = (u.floor() as u32, v.floor() as u32);
    let (x1, y1) = ((x0 + 1).min(half.width - 1), (y0 + 1).min(half.height - 1));
    let (fx, fy) = (u - x0 as f64, v - y0 as f64);
    let top = half.get(x0, y0) * (1.0 - fx) + half.get(x1, y0) * fx;
    let bottom = half.get(x0, y1) * (1.0 - fx) + half.get(x1, y1) * fx;
    top * (1.0 - fy) + bottom * fy
}
