//! Tile grid, conservative splat extents and exact per-tile culling.

use thiserror::Error;

use crate::camera::CameraModel;
use crate::projection::{optimal_plane_to_screen, PlaneFrame, Splat2D, SplatFrame};
use crate::{Mat2, Mat3, Vec2, Vec3, ALPHA_MAX, ALPHA_MIN};

pub const COARSE_TILE: u32 = 32;
pub const FINE_TILE: u32 = 16;

/// Row-major grid of 32-px tiles covering an image.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TileGrid {
    pub width: u32,
    pub height: u32,
}

/// Half-open pixel rectangle `[x0, x1) × [y0, y1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PixelRect {
    pub x0: u32,
    pub y0: u32,
    pub x1: u32,
    pub y1: u32,
}

impl PixelRect {
    pub fn width(&self) -> u32 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> u32 {
        self.y1 - self.y0
    }

    pub fn is_empty(&self) -> bool {
        self.x1 <= self.x0 || self.y1 <= self.y0
    }

    pub fn area(&self) -> usize {
        if self.is_empty() {
            0
        } else {
            self.width() as usize * self.height() as usize
        }
    }

    /// The continuous region covered by the rectangle's pixels.
    pub fn region(&self) -> Region {
        Region {
            min: Vec2::new(self.x0 as f64, self.y0 as f64),
            max: Vec2::new(self.x1 as f64, self.y1 as f64),
        }
    }

    pub fn contains(&self, x: u32, y: u32) -> bool {
        x >= self.x0 && x < self.x1 && y >= self.y0 && y < self.y1
    }
}

/// Closed axis-aligned region in continuous pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub min: Vec2,
    pub max: Vec2,
}

impl Region {
    pub fn contains(&self, p: &Vec2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn corners(&self) -> [Vec2; 4] {
        [
            self.min,
            Vec2::new(self.max.x, self.min.y),
            self.max,
            Vec2::new(self.min.x, self.max.y),
        ]
    }

    pub fn clamp(&self, p: &Vec2) -> Vec2 {
        Vec2::new(p.x.clamp(self.min.x, self.max.x), p.y.clamp(self.min.y, self.max.y))
    }
}

/// Half-open rectangle of tile coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TileRect {
    pub x0: u32,
    pub y0: u32,
    pub x1: u32,
    pub y1: u32,
}

impl TileRect {
    pub fn is_empty(&self) -> bool {
        self.x1 <= self.x0 || self.y1 <= self.y0
    }

    pub fn area(&self) -> usize {
        if self.is_empty() {
            0
        } else {
            (self.x1 - self.x0) as usize * (self.y1 - self.y0) as usize
        }
    }

    pub fn tiles(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (self.y0..self.y1).flat_map(move |y| (self.x0..self.x1).map(move |x| (x, y)))
    }
}

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
#[error("splat covers no tile")]
pub struct EmptyRect;

impl TileGrid {
    pub fn new(width: u32, height: u32) -> Self {
        Self { width, height }
    }

    pub fn for_camera(cam: &CameraModel) -> Self {
        Self::new(cam.width, cam.height)
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width.div_ceil(COARSE_TILE), self.height.div_ceil(COARSE_TILE))
    }

    pub fn tile_count(&self) -> usize {
        let (gx, gy) = self.dims();
        gx as usize * gy as usize
    }

    pub fn tile_id(&self, tx: u32, ty: u32) -> u32 {
        ty * self.dims().0 + tx
    }

    pub fn tile_coords(&self, id: u32) -> (u32, u32) {
        let gx = self.dims().0;
        (id % gx, id / gx)
    }

    pub fn full_rect(&self) -> TileRect {
        let (gx, gy) = self.dims();
        TileRect { x0: 0, y0: 0, x1: gx, y1: gy }
    }

    /// Pixels of a coarse tile, clipped at the image border.
    pub fn tile_pixels(&self, tx: u32, ty: u32) -> PixelRect {
        PixelRect {
            x0: tx * COARSE_TILE,
            y0: ty * COARSE_TILE,
            x1: ((tx + 1) * COARSE_TILE).min(self.width),
            y1: ((ty + 1) * COARSE_TILE).min(self.height),
        }
    }

    /// The non-empty 16-px subtiles of a coarse tile in row-major order.
    pub fn subtiles(&self, tx: u32, ty: u32) -> Vec<PixelRect> {
        let tile = self.tile_pixels(tx, ty);
        let mut out = Vec::with_capacity(4);
        for sy in 0..2 {
            for sx in 0..2 {
                let r = PixelRect {
                    x0: tile.x0 + sx * FINE_TILE,
                    y0: tile.y0 + sy * FINE_TILE,
                    x1: (tile.x0 + (sx + 1) * FINE_TILE).min(tile.x1),
                    y1: (tile.y0 + (sy + 1) * FINE_TILE).min(tile.y1),
                };
                if !r.is_empty() {
                    out.push(r);
                }
            }
        }
        out
    }

    /// Tile range overlapping a continuous pixel region, clamped to the grid.
    pub fn tiles_overlapping(&self, region: &Region) -> Result<TileRect, EmptyRect> {
        let (gx, gy) = self.dims();
        if !(region.max.x >= 0.0
            && region.max.y >= 0.0
            && region.min.x <= self.width as f64
            && region.min.y <= self.height as f64)
        {
            return Err(EmptyRect);
        }
        let t = COARSE_TILE as f64;
        let lo = |v: f64, n: u32| (v / t).floor().clamp(0.0, n as f64) as u32;
        let hi = |v: f64, n: u32| ((v / t).floor() + 1.0).clamp(0.0, n as f64) as u32;
        let rect = TileRect {
            x0: lo(region.min.x, gx),
            y0: lo(region.min.y, gy),
            x1: hi(region.max.x, gx),
            y1: hi(region.max.y, gy),
        };
        if rect.is_empty() {
            Err(EmptyRect)
        } else {
            Ok(rect)
        }
    }
}

/// Screen-space region outside which the splat's alpha stays below
/// [`ALPHA_MIN`]. Unbounded extents are reported with infinite coordinates.
/// `None` when the splat can never reach [`ALPHA_MIN`].
pub fn splat_screen_bounds(splat: &Splat2D, cam: &CameraModel) -> Option<Region> {
    // widen slightly so the bound stays conservative under rounding
    let r2 = splat.cutoff_radius_sq()? * (1.0 + 1e-9);
    match &splat.frame {
        SplatFrame::ScreenAffine => {
            let hx = (r2 * splat.cov2d.m11).sqrt();
            let hy = (r2 * splat.cov2d.m22).sqrt();
            let half = Vec2::new(hx, hy);
            Some(Region { min: splat.mean2d - half, max: splat.mean2d + half })
        }
        SplatFrame::OptimalPlane(frame) => Some(plane_ellipse_bounds(frame, &(splat.cov2d * r2), cam)),
    }
}

/// Screen bounding box of the plane ellipse `sᵀ Σ⁻¹ s ≤ 1`, via its dual conic
/// pushed through the plane-to-screen homography.
fn plane_ellipse_bounds(frame: &PlaneFrame, cov: &Mat2, cam: &CameraModel) -> Region {
    let k = Mat3::new(
        cam.focal.x,
        0.0,
        cam.principal_point.x,
        0.0,
        cam.focal.y,
        cam.principal_point.y,
        0.0,
        0.0,
        1.0,
    );
    let basis = frame.camera_basis();
    let h = k * basis;
    let m2 = h.fixed_columns::<2>(0).into_owned();
    let m3: Vec3 = h.column(2).into_owned();
    let dual = m2 * cov * m2.transpose() - m3 * m3.transpose();
    let unbounded = Region {
        min: Vec2::repeat(f64::NEG_INFINITY),
        max: Vec2::repeat(f64::INFINITY),
    };
    let c22 = dual[(2, 2)];
    if !(c22 < -1e-12 * m3.norm_squared()) {
        return unbounded;
    }
    let axis = |i: usize| -> Option<(f64, f64)> {
        let (c00, c02) = (dual[(i, i)], dual[(i, 2)]);
        let disc = c02 * c02 - c22 * c00;
        if !(disc >= 0.0) {
            return None;
        }
        let s = disc.sqrt();
        let (a, b) = ((c02 + s) / c22, (c02 - s) / c22);
        let (lo, hi) = (a.min(b), a.max(b));
        let pad = 1e-7 * (1.0 + lo.abs().max(hi.abs()));
        Some((lo - pad, hi + pad))
    };
    match (axis(0), axis(1)) {
        (Some((x0, x1)), Some((y0, y1))) => Region { min: Vec2::new(x0, y0), max: Vec2::new(x1, y1) },
        _ => unbounded,
    }
}

/// Coarse-tile rectangle conservatively covering every pixel where the
/// splat's alpha can reach [`ALPHA_MIN`].
pub fn splat_tile_rect(splat: &Splat2D, grid: &TileGrid, cam: &CameraModel) -> Result<TileRect, EmptyRect> {
    let bounds = splat_screen_bounds(splat, cam).ok_or(EmptyRect)?;
    grid.tiles_overlapping(&bounds)
}

/// Unclamped line parameter of the density maximum along `p + t·d`.
pub fn edge_maximizer(p: &Vec2, d: &Vec2, mean: &Vec2, cov_inv: &Mat2) -> f64 {
    let ad = cov_inv * d;
    d.dot(&(cov_inv * (mean - p))) / d.dot(&ad)
}

fn mahalanobis(x: &Vec2, mean: &Vec2, inv: &Mat2) -> f64 {
    let d = x - mean;
    d.dot(&(inv * d))
}

/// Point of the closed convex polygon closest to `mean` in the metric
/// `cov_inv`. Only edges whose supporting line separates `mean` from the
/// polygon are examined.
pub fn polygon_maximizer(corners: &[Vec2], mean: &Vec2, cov_inv: &Mat2) -> Vec2 {
    let n = corners.len();
    let twice_area: f64 = (0..n)
        .map(|i| {
            let (a, b) = (corners[i], corners[(i + 1) % n]);
            a.x * b.y - a.y * b.x
        })
        .sum();
    let orient = if twice_area >= 0.0 { 1.0 } else { -1.0 };
    let mut best: Option<(f64, Vec2)> = None;
    for i in 0..n {
        let (p, q) = (corners[i], corners[(i + 1) % n]);
        let d = q - p;
        let rel = mean - p;
        let side = orient * (d.x * rel.y - d.y * rel.x);
        if side >= 0.0 || d.norm_squared() == 0.0 {
            continue;
        }
        let t = edge_maximizer(&p, &d, mean, cov_inv).clamp(0.0, 1.0);
        let x = p + d * t;
        let m = mahalanobis(&x, mean, cov_inv);
        if best.is_none_or(|(bm, _)| m < bm) {
            best = Some((m, x));
        }
    }
    match best {
        Some((_, x)) => x,
        None => *mean,
    }
}

/// Maximum-contribution point of a splat inside a screen region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxContrib {
    /// Screen position of the maximum, in pixels.
    pub point: Vec2,
    pub alpha: f64,
    /// Some corner ray missed the splat's plane; the pair is kept
    /// conservatively and `alpha` is only an upper bound.
    pub degenerate: bool,
}

/// Maximum of an affine splat's alpha over a screen region.
pub fn max_contrib_screen(splat: &Splat2D, region: &Region) -> MaxContrib {
    let point = if region.contains(&splat.mean2d) {
        splat.mean2d
    } else {
        polygon_maximizer(&region.corners(), &splat.mean2d, &splat.cov2d_inv)
    };
    MaxContrib { point, alpha: splat.alpha_at_frame_point(&point), degenerate: false }
}

/// Maximum of an optimally projected splat's alpha over a screen region,
/// found on the region's quadrilateral image in the tangent plane. `None`
/// means the pair is culled.
pub fn max_contrib_optimal(splat: &Splat2D, region: &Region, cam: &CameraModel) -> Option<MaxContrib> {
    let frame = splat.plane().expect("optimal splat");
    let screen = region.corners();
    let plane: Vec<Option<Vec2>> = screen.iter().map(|c| frame.hit(&cam.pixel_dir_camera(c))).collect();
    if plane.iter().any(Option::is_none) {
        let nearest = screen
            .iter()
            .zip(&plane)
            .filter(|(_, p)| p.is_some())
            .map(|(c, _)| *c)
            .min_by(|a, b| (a - splat.screen_mean).norm().total_cmp(&(b - splat.screen_mean).norm()));
        let point = nearest.unwrap_or_else(|| region.clamp(&splat.screen_mean));
        return Some(MaxContrib { point, alpha: splat.opacity.min(ALPHA_MAX), degenerate: true });
    }
    let quad: Vec<Vec2> = plane.into_iter().map(Option::unwrap).collect();
    let best = polygon_maximizer(&quad, &splat.mean2d, &splat.cov2d_inv);
    let alpha = splat.alpha_at_frame_point(&best);
    if alpha < ALPHA_MIN {
        return None;
    }
    let point = if best == splat.mean2d {
        splat.screen_mean
    } else {
        optimal_plane_to_screen(&best, frame, cam).unwrap_or_else(|_| region.clamp(&splat.screen_mean))
    };
    Some(MaxContrib { point, alpha, degenerate: false })
}

/// Exact culling test for either frame: `None` when the splat's alpha stays
/// below [`ALPHA_MIN`] everywhere in the region.
pub fn max_contrib(splat: &Splat2D, region: &Region, cam: &CameraModel) -> Option<MaxContrib> {
    match splat.frame {
        SplatFrame::ScreenAffine => Some(max_contrib_screen(splat, region)).filter(|m| m.alpha >= ALPHA_MIN),
        SplatFrame::OptimalPlane(_) => max_contrib_optimal(splat, region, cam),
    }
}
