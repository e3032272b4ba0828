//! (tile, splat) pair instantiation and the global key sort.

use rayon::prelude::*;

use crate::camera::CameraModel;
use crate::projection::{DepthMode, Splat2D};
use crate::tiles::{max_contrib, splat_tile_rect, TileGrid, TileRect};
use crate::visibility::{count_visible_tiles, VisibilityIndex};

/// Marks a reserved slot that the exact cull left unused.
pub const INVALID_KEY: u64 = u64::MAX;

/// Which depth goes into the low half of a sort key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KeyDepth {
    /// Depth of maximum density along the ray through the tile's
    /// maximum-contribution point.
    TileRay,
    /// The splat's per-splat depth hint.
    Hint(DepthMode),
}

/// Order-preserving encoding of a non-negative depth.
pub fn encode_depth(depth: f64) -> u32 {
    debug_assert!(depth >= 0.0);
    (depth.max(0.0) as f32).to_bits()
}

pub fn decode_depth(bits: u32) -> f64 {
    f32::from_bits(bits) as f64
}

pub fn make_key(tile_id: u32, depth: f64) -> u64 {
    ((tile_id as u64) << 32) | encode_depth(depth) as u64
}

pub fn key_tile(key: u64) -> u32 {
    (key >> 32) as u32
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PairList {
    pub keys: Vec<u64>,
    /// Index into the splat slice the list was built from.
    pub values: Vec<u32>,
    /// Per tile `(start, end)` into the sorted arrays; empty until sorted.
    pub ranges: Vec<(u32, u32)>,
}

impl PairList {
    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn tile_values(&self, tile_id: u32) -> &[u32] {
        let (a, b) = self.ranges[tile_id as usize];
        &self.values[a as usize..b as usize]
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PairCounts {
    /// Slots reserved from the per-splat visible-tile counts.
    pub reserved: u64,
    /// Pairs that survived the exact per-tile cull.
    pub emitted: u64,
}

/// Visible-tile rectangle and count for every splat.
pub fn stage_one(splats: &[Splat2D], grid: &TileGrid, vi: &VisibilityIndex, cam: &CameraModel) -> Vec<(TileRect, u32)> {
    splats
        .par_iter()
        .map(|s| match splat_tile_rect(s, grid, cam) {
            Ok(rect) => (rect, count_visible_tiles(vi, &rect)),
            Err(_) => (TileRect { x0: 0, y0: 0, x1: 0, y1: 0 }, 0),
        })
        .collect()
}

/// Two-stage pair instantiation: exact visible-tile counts reserve output
/// slots, then each splat fills its slots with the tiles that survive the
/// exact cull. Unused slots are compacted away.
pub fn instantiate_pairs(
    splats: &[Splat2D],
    grid: &TileGrid,
    vi: &VisibilityIndex,
    cam: &CameraModel,
    key_depth: KeyDepth,
) -> (PairList, PairCounts) {
    let rects = stage_one(splats, grid, vi, cam);
    let mut offsets = Vec::with_capacity(rects.len() + 1);
    let mut total = 0usize;
    offsets.push(0);
    for (_, n) in &rects {
        total += *n as usize;
        offsets.push(total);
    }
    let mut keys = vec![INVALID_KEY; total];
    let mut values = vec![u32::MAX; total];

    let mut slices = Vec::with_capacity(splats.len());
    let (mut krest, mut vrest) = (keys.as_mut_slice(), values.as_mut_slice());
    for (_, n) in &rects {
        let (k, kr) = krest.split_at_mut(*n as usize);
        let (v, vr) = vrest.split_at_mut(*n as usize);
        slices.push((k, v));
        krest = kr;
        vrest = vr;
    }
    slices.into_par_iter().enumerate().for_each(|(i, (kslot, vslot))| {
        let splat = &splats[i];
        let (rect, _) = &rects[i];
        let mut n = 0;
        for (tx, ty) in rect.tiles() {
            if !vi.bit(tx, ty) {
                continue;
            }
            let region = grid.tile_pixels(tx, ty).region();
            let Some(m) = max_contrib(splat, &region, cam) else { continue };
            let depth = match key_depth {
                KeyDepth::TileRay => splat.ray_depth_at(&m.point, cam),
                KeyDepth::Hint(mode) => splat.depth_hint(mode),
            };
            kslot[n] = make_key(grid.tile_id(tx, ty), depth);
            vslot[n] = i as u32;
            n += 1;
        }
    });

    let mut w = 0;
    for r in 0..total {
        if keys[r] != INVALID_KEY {
            keys[w] = keys[r];
            values[w] = values[r];
            w += 1;
        }
    }
    keys.truncate(w);
    values.truncate(w);
    let counts = PairCounts { reserved: total as u64, emitted: w as u64 };
    (PairList { keys, values, ranges: Vec::new() }, counts)
}

/// Stable LSD radix sort by key, then per-tile ranges. Entries with equal keys
/// keep their input order, which instantiation leaves ascending in splat
/// index.
pub fn sort_pairs(mut pairs: PairList, tile_count: usize) -> PairList {
    let n = pairs.keys.len();
    let mut keys_tmp = vec![0u64; n];
    let mut vals_tmp = vec![0u32; n];
    for byte in 0..8 {
        let shift = byte * 8;
        let mut hist = [0usize; 256];
        for k in &pairs.keys {
            hist[((k >> shift) & 0xff) as usize] += 1;
        }
        if hist.iter().any(|&c| c == n) {
            continue;
        }
        let mut pos = [0usize; 256];
        let mut acc = 0;
        for (p, c) in pos.iter_mut().zip(hist) {
            *p = acc;
            acc += c;
        }
        for (k, v) in pairs.keys.iter().zip(&pairs.values) {
            let b = ((k >> shift) & 0xff) as usize;
            keys_tmp[pos[b]] = *k;
            vals_tmp[pos[b]] = *v;
            pos[b] += 1;
        }
        std::mem::swap(&mut pairs.keys, &mut keys_tmp);
        std::mem::swap(&mut pairs.values, &mut vals_tmp);
    }
    let mut ranges = vec![(0u32, 0u32); tile_count];
    let mut start = 0;
    while start < n {
        let tile = key_tile(pairs.keys[start]);
        let mut end = start + 1;
        while end < n && key_tile(pairs.keys[end]) == tile {
            end += 1;
        }
        ranges[tile as usize] = (start as u32, end as u32);
        start = end;
    }
    pairs.ranges = ranges;
    pairs
}
