//! Foveation geometry: blend weights and per-tile classes.

use crate::tiles::{PixelRect, TileGrid};
use crate::visibility::VisibilityIndex;
use crate::Vec2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FoveaConfig {
    /// Size of the full-resolution rectangle relative to the image.
    pub center_fraction: f64,
    /// Width of the blend ramp, relative to the image, added around the
    /// center rectangle (split evenly between opposite sides).
    pub padding_fraction: f64,
    /// Gaze point in pixels; the image center when `None`.
    pub gaze: Option<Vec2>,
    pub visibility_cull: bool,
}

impl Default for FoveaConfig {
    fn default() -> Self {
        Self { center_fraction: 0.5, padding_fraction: 0.1, gaze: None, visibility_cull: true }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid fovea configuration: {0}")]
pub struct FoveaError(pub String);

impl FoveaConfig {
    pub fn validate(&self) -> Result<(), FoveaError> {
        if !(self.center_fraction > 0.0 && self.center_fraction <= 1.0) {
            return Err(FoveaError(format!("center fraction {} not in (0, 1]", self.center_fraction)));
        }
        if !(self.padding_fraction >= 0.0 && self.padding_fraction < self.center_fraction) {
            return Err(FoveaError(format!(
                "padding fraction {} not in [0, center fraction)",
                self.padding_fraction
            )));
        }
        if self.gaze.is_some_and(|g| !g.x.is_finite() || !g.y.is_finite()) {
            return Err(FoveaError("gaze must be finite".into()));
        }
        Ok(())
    }

    pub fn ramp(&self, width: u32, height: u32) -> Ramp {
        let size = Vec2::new(width as f64, height as f64);
        Ramp {
            gaze: self.gaze.unwrap_or(size * 0.5),
            inner_half: size * (self.center_fraction * 0.5),
            band: size * (self.padding_fraction * 0.5),
        }
    }
}

/// Rectangular ring ramp: weight 1 inside the inner rectangle, falling
/// linearly (in max-norm) to 0 across the band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ramp {
    pub gaze: Vec2,
    pub inner_half: Vec2,
    pub band: Vec2,
}

impl Ramp {
    pub fn weight_at(&self, p: &Vec2) -> f64 {
        let outside = |d: f64, half: f64, band: f64| {
            let excess = (d.abs() - half).max(0.0);
            if excess == 0.0 {
                0.0
            } else if band > 0.0 {
                excess / band
            } else {
                f64::INFINITY
            }
        };
        let r = outside(p.x - self.gaze.x, self.inner_half.x, self.band.x)
            .max(outside(p.y - self.gaze.y, self.inner_half.y, self.band.y));
        1.0 - r.clamp(0.0, 1.0)
    }

    /// Weight at the center of pixel `(x, y)`.
    pub fn weight(&self, x: u32, y: u32) -> f64 {
        self.weight_at(&Vec2::new(x as f64 + 0.5, y as f64 + 0.5))
    }

    /// Integer pixel rectangle containing every pixel with non-zero weight,
    /// clipped to the image.
    pub fn padded_pixels(&self, width: u32, height: u32) -> PixelRect {
        let half = self.inner_half + self.band;
        let lo = self.gaze - half;
        let hi = self.gaze + half;
        let clip = |v: f64, n: u32| v.clamp(0.0, n as f64) as u32;
        PixelRect {
            x0: clip(lo.x.floor(), width),
            y0: clip(lo.y.floor(), height),
            x1: clip(hi.x.ceil(), width),
            y1: clip(hi.y.ceil(), height),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TileClass {
    HighRes,
    LowRes,
    Hybrid,
    Invisible,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct ClassCounts {
    pub high_res: u64,
    pub low_res: u64,
    pub hybrid: u64,
    pub invisible: u64,
}

impl ClassCounts {
    pub fn total(&self) -> u64 {
        self.high_res + self.low_res + self.hybrid + self.invisible
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TilePartition {
    pub grid: TileGrid,
    pub classes: Vec<TileClass>,
    /// `None` means weight 1 everywhere.
    pub ramp: Option<Ramp>,
}

impl TilePartition {
    /// Every tile at full resolution, except tiles without visible pixels.
    pub fn full(grid: TileGrid, vi: Option<&VisibilityIndex>) -> Self {
        let classes = (0..grid.tile_count())
            .map(|id| {
                let (tx, ty) = grid.tile_coords(id as u32);
                match vi {
                    Some(vi) if !vi.bit(tx, ty) => TileClass::Invisible,
                    _ => TileClass::HighRes,
                }
            })
            .collect();
        Self { grid, classes, ramp: None }
    }

    pub fn class(&self, tx: u32, ty: u32) -> TileClass {
        self.classes[self.grid.tile_id(tx, ty) as usize]
    }

    pub fn weight(&self, x: u32, y: u32) -> f64 {
        self.ramp.map_or(1.0, |r| r.weight(x, y))
    }

    pub fn counts(&self) -> ClassCounts {
        let mut c = ClassCounts::default();
        for class in &self.classes {
            match class {
                TileClass::HighRes => c.high_res += 1,
                TileClass::LowRes => c.low_res += 1,
                TileClass::Hybrid => c.hybrid += 1,
                TileClass::Invisible => c.invisible += 1,
            }
        }
        c
    }

    /// Whether pixel `(x, y)` belongs to a LowRes tile.
    pub fn is_low_res_pixel(&self, x: u32, y: u32) -> bool {
        self.class(x / crate::tiles::COARSE_TILE, y / crate::tiles::COARSE_TILE) == TileClass::LowRes
    }
}

/// Classifies every coarse tile: Invisible when culling is enabled and its
/// visibility bit is clear, HighRes when all its pixels have weight 1, LowRes
/// when all have weight 0, Hybrid otherwise.
pub fn build_partition(cfg: &FoveaConfig, vi: &VisibilityIndex, grid: &TileGrid) -> TilePartition {
    let ramp = cfg.ramp(grid.width, grid.height);
    let classes = (0..grid.tile_count() as u32)
        .map(|id| {
            let (tx, ty) = grid.tile_coords(id);
            if cfg.visibility_cull && !vi.bit(tx, ty) {
                return TileClass::Invisible;
            }
            let r = grid.tile_pixels(tx, ty);
            let (mut any_full, mut any_zero, mut any_partial) = (false, false, false);
            for y in r.y0..r.y1 {
                for x in r.x0..r.x1 {
                    let w = ramp.weight(x, y);
                    if w >= 1.0 {
                        any_full = true;
                    } else if w <= 0.0 {
                        any_zero = true;
                    } else {
                        any_partial = true;
                    }
                }
            }
            match (any_full, any_zero, any_partial) {
                (true, false, false) => TileClass::HighRes,
                (false, true, false) => TileClass::LowRes,
                _ => TileClass::Hybrid,
            }
        })
        .collect();
    TilePartition { grid: *grid, classes, ramp: Some(ramp) }
}
