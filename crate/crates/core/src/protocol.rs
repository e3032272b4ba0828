//! Large field-of-view consistency check.
//!
//! The scene is rendered with a camera covering three times the image extent
//! in each direction (same pixel focal length, so a third of the normalized
//! focal length) at three times the resolution. The center crop shares every
//! pixel ray with the normal render, so any difference comes from the
//! renderer, not from sampling.

use crate::camera::CameraModel;
use crate::image::Image;
use crate::metrics::{max_channel_diff_u8, psnr_u8};
use crate::Vec2;

/// The enlarged camera whose center `width × height` block reproduces `cam`.
pub fn wide_camera(cam: &CameraModel) -> CameraModel {
    CameraModel {
        width: cam.width * 3,
        height: cam.height * 3,
        principal_point: cam.principal_point + Vec2::new(cam.width as f64, cam.height as f64),
        ..cam.clone()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LargeFovResult {
    pub wide: Image,
    pub crop: Image,
    pub normal: Image,
    /// PSNR between the 8-bit crop and normal images.
    pub psnr: f64,
    pub max_diff: u8,
}

pub fn large_fov_protocol<E>(
    cam: &CameraModel,
    mut render: impl FnMut(&CameraModel) -> Result<Image, E>,
) -> Result<LargeFovResult, E> {
    let wide = render(&wide_camera(cam))?;
    let crop = wide.crop(cam.width, cam.height, cam.width, cam.height);
    let normal = render(cam)?;
    let psnr = psnr_u8(&crop, &normal).expect("same size");
    let max_diff = max_channel_diff_u8(&crop, &normal).expect("same size");
    Ok(LargeFovResult { wide, crop, normal, psnr, max_diff })
}
