//! 8-bit grayscale visibility masks (PNG or PGM). Any value above zero is
//! visible.

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::visibility::VisibilityMask;

#[derive(Debug, Error)]
pub enum MaskError {
    #[error("cannot read mask {path}: {message}")]
    Read { path: PathBuf, message: String },
    #[error("mask must be 8-bit grayscale, found {0}")]
    UnsupportedFormat(String),
    #[error("mask is {found_w}x{found_h}, render is {width}x{height}")]
    ResolutionMismatch { found_w: u32, found_h: u32, width: u32, height: u32 },
}

pub fn load_mask(path: &Path, width: u32, height: u32) -> Result<VisibilityMask, MaskError> {
    let img = ::image::open(path).map_err(|e| MaskError::Read { path: path.to_path_buf(), message: e.to_string() })?;
    let ::image::DynamicImage::ImageLuma8(gray) = img else {
        return Err(MaskError::UnsupportedFormat(format!("{:?}", img.color())));
    };
    if gray.width() != width || gray.height() != height {
        return Err(MaskError::ResolutionMismatch { found_w: gray.width(), found_h: gray.height(), width, height });
    }
    Ok(VisibilityMask { width, height, visible: gray.as_raw().iter().map(|&v| v > 0).collect() })
}

pub fn save_mask(path: &Path, mask: &VisibilityMask) -> Result<(), ::image::ImageError> {
    let raw = mask.visible.iter().map(|&v| if v { 255 } else { 0 }).collect();
    ::image::GrayImage::from_raw(mask.width, mask.height, raw).expect("buffer size matches").save(path)
}

/// Headset-like oval: visible inside an ellipse filling most of the frame.
pub fn oval_mask(width: u32, height: u32) -> VisibilityMask {
    let (cx, cy) = (width as f64 * 0.5, height as f64 * 0.5);
    let (rx, ry) = (width as f64 * 0.55, height as f64 * 0.55);
    VisibilityMask::from_fn(width, height, |x, y| {
        let dx = (x as f64 + 0.5 - cx) / rx;
        let dy = (y as f64 + 0.5 - cy) / ry;
        dx * dx + dy * dy <= 1.0
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn load_variants() {
        let dir = tempfile::tempdir().unwrap();
        let all = dir.path().join("all.png");
        ::image::GrayImage::from_pixel(20, 10, ::image::Luma([255])).save(&all).unwrap();
        assert_eq!(load_mask(&all, 20, 10).unwrap().visible_count(), 200);
        let none = dir.path().join("none.pgm");
        ::image::GrayImage::from_pixel(20, 10, ::image::Luma([0])).save(&none).unwrap();
        assert_eq!(load_mask(&none, 20, 10).unwrap().visible_count(), 0);
        assert!(matches!(load_mask(&all, 10, 20), Err(MaskError::ResolutionMismatch { .. })));
        let rgb = dir.path().join("rgb.png");
        ::image::RgbImage::new(20, 10).save(&rgb).unwrap();
        assert!(matches!(load_mask(&rgb, 20, 10), Err(MaskError::UnsupportedFormat(_))));
    }

    #[test]
    fn oval_round_trip_count() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("oval.png");
        let mask = oval_mask(97, 61);
        save_mask(&path, &mask).unwrap();
        let loaded = load_mask(&path, 97, 61).unwrap();
        let direct = (0..61)
            .flat_map(|y| (0..97).map(move |x| (x, y)))
            .filter(|&(x, y)| {
                let dx = (x as f64 + 0.5 - 48.5) / (97.0 * 0.55);
                let dy = (y as f64 + 0.5 - 30.5) / (61.0 * 0.55);
                dx * dx + dy * dy <= 1.0
            })
            .count();
        assert_eq!(loaded.visible_count(), direct);
        assert!(direct < 97 * 61);
    }
}
