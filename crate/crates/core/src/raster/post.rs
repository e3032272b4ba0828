//! Blur of the upsampled periphery.

use crate::image::Image;
use crate::raster::fovea::TilePartition;
use crate::Vec3;

const KERNEL: [f64; 3] = [1.0, 2.0, 1.0];

/// Applies the 3×3 binomial kernel to pixels of LowRes tiles. The footprint
/// only gathers from LowRes pixels inside the image; weights are renormalized
/// over what remains.
pub fn periphery_postprocess(image: &Image, partition: &TilePartition) -> Image {
    let low = |x: u32, y: u32| partition.is_low_res_pixel(x, y);
    blur_where(image, low)
}

/// The same blur restricted to pixels selected by `include`.
pub fn blur_where(image: &Image, include: impl Fn(u32, u32) -> bool) -> Image {
    let (w, h) = (image.width as i64, image.height as i64);
    let mut out = image.clone();
    for y in 0..h {
        for x in 0..w {
            if !include(x as u32, y as u32) {
                continue;
            }
            let mut acc = Vec3::zeros();
            let mut total = 0.0;
            for dy in -1..=1i64 {
                for dx in -1..=1i64 {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= w || ny >= h || !include(nx as u32, ny as u32) {
                        continue;
                    }
                    let k = KERNEL[(dx + 1) as usize] * KERNEL[(dy + 1) as usize];
                    acc += image.get(nx as u32, ny as u32) * k;
                    total += k;
                }
            }
            out.set(x as u32, y as u32, acc / total);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::fovea::TileClass;
    use crate::tiles::TileGrid;

    fn all_low(w: u32, h: u32) -> TilePartition {
        let grid = TileGrid::new(w, h);
        TilePartition { grid, classes: vec![TileClass::LowRes; grid.tile_count()], ramp: None }
    }

    #[test]
    fn constant_region_unchanged() {
        let img = Image::new(40, 40, Vec3::new(0.25, 0.5, 0.75));
        assert_eq!(periphery_postprocess(&img, &all_low(40, 40)), img);
    }

    #[test]
    fn single_pixel_stamp() {
        let mut img = Image::new(20, 20, Vec3::zeros());
        img.set(10, 10, Vec3::repeat(1.0));
        let out = periphery_postprocess(&img, &all_low(20, 20));
        for y in 0..20 {
            for x in 0..20 {
                let (dx, dy) = ((x as i32 - 10).abs(), (y as i32 - 10).abs());
                let expected = if dx <= 1 && dy <= 1 { (4 >> (dx + dy)) as f64 / 16.0 } else { 0.0 };
                assert!((out.get(x, y).x - expected).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn checkerboard_matches_direct_convolution() {
        let img = Image::from_fn(33, 29, |x, y| Vec3::repeat(((x / 2 + y / 2) % 2) as f64));
        let out = periphery_postprocess(&img, &all_low(33, 29));
        for y in 0..29i64 {
            for x in 0..33i64 {
                let (mut acc, mut total) = (0.0, 0.0);
                for j in (y - 1).max(0)..=(y + 1).min(28) {
                    for i in (x - 1).max(0)..=(x + 1).min(32) {
                        let k = [1.0, 2.0, 1.0][(i - x + 1) as usize] * [1.0, 2.0, 1.0][(j - y + 1) as usize];
                        acc += k * img.get(i as u32, j as u32).x;
                        total += k;
                    }
                }
                assert!((out.get(x as u32, y as u32).x - acc / total).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn high_res_pixels_untouched_and_excluded() {
        let grid = TileGrid::new(64, 32);
        let partition = TilePartition { grid, classes: vec![TileClass::HighRes, TileClass::LowRes], ramp: None };
        let img = Image::from_fn(64, 32, |x, _| Vec3::repeat(if x < 32 { 1.0 } else { 0.0 }));
        let out = periphery_postprocess(&img, &partition);
        assert_eq!(out, img);
    }
}
