//! Linear RGB float images and 8-bit output.

use std::path::Path;

use crate::Vec3;

#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub width: u32,
    pub height: u32,
    pub pixels: Vec<Vec3>,
}

/// Converts a linear value to 8 bits: clamp to `[0, 1]`, scale, round half
/// away from zero.
pub fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

impl Image {
    pub fn new(width: u32, height: u32, fill: Vec3) -> Self {
        Self { width, height, pixels: vec![fill; width as usize * height as usize] }
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> Vec3) -> Self {
        let pixels = (0..height).flat_map(|y| (0..width).map(move |x| (x, y))).map(|(x, y)| f(x, y)).collect();
        Self { width, height, pixels }
    }

    fn index(&self, x: u32, y: u32) -> usize {
        y as usize * self.width as usize + x as usize
    }

    pub fn get(&self, x: u32, y: u32) -> Vec3 {
        self.pixels[self.index(x, y)]
    }

    pub fn set(&mut self, x: u32, y: u32, v: Vec3) {
        let i = self.index(x, y);
        self.pixels[i] = v;
    }

    pub fn crop(&self, x: u32, y: u32, width: u32, height: u32) -> Self {
        Self::from_fn(width, height, |i, j| self.get(x + i, y + j))
    }

    pub fn to_rgb8(&self) -> Vec<u8> {
        self.pixels.iter().flat_map(|p| [quantize(p.x), quantize(p.y), quantize(p.z)]).collect()
    }

    /// Image rebuilt from its 8-bit quantization.
    pub fn quantized(&self) -> Self {
        let pixels = self
            .pixels
            .iter()
            .map(|p| p.map(|v| quantize(v) as f64 / 255.0))
            .collect();
        Self { width: self.width, height: self.height, pixels }
    }

    /// Writes an 8-bit image; the format follows the extension (`.png`,
    /// `.ppm`).
    pub fn save(&self, path: &Path) -> Result<(), ::image::ImageError> {
        let buf = ::image::RgbImage::from_raw(self.width, self.height, self.to_rgb8()).expect("buffer size matches");
        buf.save(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantization_rounds_half_away() {
        assert_eq!(quantize(-0.3), 0);
        assert_eq!(quantize(1.7), 255);
        assert_eq!(quantize(0.5 / 255.0), 1);
        assert_eq!(quantize(0.499 / 255.0), 0);
        assert_eq!(quantize(127.5 / 255.0), 128);
    }

    #[test]
    fn png_and_ppm_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let img = Image::from_fn(7, 5, |x, y| Vec3::new(x as f64 / 6.0, y as f64 / 4.0, 0.25));
        for name in ["a.png", "a.ppm"] {
            let path = dir.path().join(name);
            img.save(&path).unwrap();
            let back = ::image::open(&path).unwrap().to_rgb8();
            assert_eq!(back.into_raw(), img.to_rgb8());
        }
    }
}
