//! Per-tile visibility bits and their summed-area table.

use thiserror::Error;

use crate::tiles::{TileGrid, TileRect};

/// Per-pixel visibility raster (`true` = visible), row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VisibilityMask {
    pub width: u32,
    pub height: u32,
    pub visible: Vec<bool>,
}

impl VisibilityMask {
    pub fn all_visible(width: u32, height: u32) -> Self {
        Self { width, height, visible: vec![true; width as usize * height as usize] }
    }

    pub fn from_fn(width: u32, height: u32, f: impl Fn(u32, u32) -> bool) -> Self {
        let visible = (0..height).flat_map(|y| (0..width).map(move |x| (x, y))).map(|(x, y)| f(x, y)).collect();
        Self { width, height, visible }
    }

    pub fn get(&self, x: u32, y: u32) -> bool {
        self.visible[y as usize * self.width as usize + x as usize]
    }

    pub fn visible_count(&self) -> usize {
        self.visible.iter().filter(|&&v| v).count()
    }

    /// Sub-mask for a pixel rectangle.
    pub fn crop(&self, x: u32, y: u32, width: u32, height: u32) -> Self {
        Self::from_fn(width, height, |i, j| self.get(x + i, y + j))
    }
}

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
#[error("mask is {mask_w}x{mask_h} but the render is {width}x{height}")]
pub struct ResolutionMismatch {
    pub mask_w: u32,
    pub mask_h: u32,
    pub width: u32,
    pub height: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VisibilityIndex {
    grid_w: u32,
    grid_h: u32,
    bits: Vec<bool>,
    /// `sat[j * (grid_w + 1) + i]` = set bits in tiles `[0, i) × [0, j)`.
    sat: Vec<u32>,
}

impl VisibilityIndex {
    pub fn from_bits(grid_w: u32, grid_h: u32, bits: Vec<bool>) -> Self {
        assert_eq!(bits.len(), grid_w as usize * grid_h as usize);
        let stride = grid_w as usize + 1;
        let mut sat = vec![0u32; stride * (grid_h as usize + 1)];
        for j in 0..grid_h as usize {
            let mut row = 0u32;
            for i in 0..grid_w as usize {
                row += bits[j * grid_w as usize + i] as u32;
                sat[(j + 1) * stride + i + 1] = sat[j * stride + i + 1] + row;
            }
        }
        Self { grid_w, grid_h, bits, sat }
    }

    pub fn all_visible(grid: &TileGrid) -> Self {
        let (gx, gy) = grid.dims();
        Self::from_bits(gx, gy, vec![true; gx as usize * gy as usize])
    }

    pub fn bit(&self, tx: u32, ty: u32) -> bool {
        self.bits[ty as usize * self.grid_w as usize + tx as usize]
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn sat(&self, i: u32, j: u32) -> u32 {
        self.sat[j as usize * (self.grid_w as usize + 1) + i as usize]
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.grid_w, self.grid_h)
    }

    pub fn visible_tiles(&self) -> usize {
        self.sat(self.grid_w, self.grid_h) as usize
    }
}

/// Sets a tile's bit iff any of its pixels is visible.
pub fn build_visibility_index(mask: &VisibilityMask, grid: &TileGrid) -> Result<VisibilityIndex, ResolutionMismatch> {
    if mask.width != grid.width || mask.height != grid.height {
        return Err(ResolutionMismatch {
            mask_w: mask.width,
            mask_h: mask.height,
            width: grid.width,
            height: grid.height,
        });
    }
    let (gx, gy) = grid.dims();
    let mut bits = vec![false; gx as usize * gy as usize];
    for (ty, tx) in (0..gy).flat_map(|ty| (0..gx).map(move |tx| (ty, tx))) {
        let r = grid.tile_pixels(tx, ty);
        bits[(ty * gx + tx) as usize] = (r.y0..r.y1).any(|y| (r.x0..r.x1).any(|x| mask.get(x, y)));
    }
    Ok(VisibilityIndex::from_bits(gx, gy, bits))
}

/// Number of visible tiles inside a tile rectangle.
pub fn count_visible_tiles(vi: &VisibilityIndex, rect: &TileRect) -> u32 {
    if rect.is_empty() {
        return 0;
    }
    vi.sat(rect.x1, rect.y1) + vi.sat(rect.x0, rect.y0) - vi.sat(rect.x0, rect.y1) - vi.sat(rect.x1, rect.y0)
}
