//! Pinhole camera with a rigid world-to-camera pose.
//!
//! Camera space is x right, y down, z forward. Pixel `(i, j)` covers the
//! continuous square `[i, i+1) × [j, j+1)` and its ray passes through the
//! center `(i + 0.5, j + 0.5)`.

use nalgebra::{Rotation3, UnitQuaternion};
use thiserror::Error;

use crate::{Mat3, Vec2, Vec3};

pub const ORTHONORMAL_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CameraError {
    #[error("orientation is not a proper rotation (deviation {0:.3e})")]
    NonOrthonormalRotation(f64),
    #[error("focal lengths must be positive")]
    NonPositiveFocal,
    #[error("near plane must be positive")]
    NonPositiveNear,
    #[error("resolution must be non-zero")]
    EmptyResolution,
    #[error("non-finite camera parameter")]
    NonFinite,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CameraModel {
    /// Camera center `o` in world space.
    pub position: Vec3,
    /// World-to-camera rotation.
    pub orientation: Mat3,
    pub focal: Vec2,
    pub principal_point: Vec2,
    pub width: u32,
    pub height: u32,
    pub near: f64,
}

/// Maximum absolute entry of `R Rᵀ - I`, or infinity for reflections.
pub fn rotation_deviation(r: &Mat3) -> f64 {
    if r.iter().any(|v| !v.is_finite()) {
        return f64::INFINITY;
    }
    if r.determinant() <= 0.0 {
        return f64::INFINITY;
    }
    (r * r.transpose() - Mat3::identity()).abs().max()
}

/// Nearest proper rotation via polar decomposition.
pub fn orthonormalize(r: &Mat3) -> Mat3 {
    let svd = r.svd(true, true);
    let (u, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
    u * v_t
}

impl CameraModel {
    pub const DEFAULT_NEAR: f64 = 0.01;

    pub fn new(
        position: Vec3,
        orientation: Mat3,
        focal: Vec2,
        principal_point: Vec2,
        width: u32,
        height: u32,
        near: f64,
    ) -> Result<Self, CameraError> {
        if !(position.iter().chain(focal.iter()).chain(principal_point.iter()))
            .all(|v| v.is_finite())
        {
            return Err(CameraError::NonFinite);
        }
        let dev = rotation_deviation(&orientation);
        if dev > ORTHONORMAL_TOLERANCE {
            return Err(CameraError::NonOrthonormalRotation(dev));
        }
        if !(focal.x > 0.0 && focal.y > 0.0) {
            return Err(CameraError::NonPositiveFocal);
        }
        if !(near > 0.0 && near.is_finite()) {
            return Err(CameraError::NonPositiveNear);
        }
        if width == 0 || height == 0 {
            return Err(CameraError::EmptyResolution);
        }
        Ok(Self {
            position,
            orientation,
            focal,
            principal_point,
            width,
            height,
            near,
        })
    }

    /// Camera at `position` looking at `target`, principal point at the image
    /// center and square pixels.
    pub fn look_at(position: Vec3, target: Vec3, up: Vec3, width: u32, height: u32, focal: f64) -> Self {
        let forward = (target - position).normalize();
        let down = -up;
        let right = down.cross(&forward).normalize();
        let down = forward.cross(&right);
        let orientation = Mat3::from_rows(&[right.transpose(), down.transpose(), forward.transpose()]);
        Self::new(
            position,
            orientation,
            Vec2::new(focal, focal),
            Vec2::new(width as f64 * 0.5, height as f64 * 0.5),
            width,
            height,
            Self::DEFAULT_NEAR,
        )
        .expect("look_at builds a valid camera")
    }

    /// Identity pose at the origin looking down +z.
    pub fn simple(width: u32, height: u32, focal: f64) -> Self {
        Self::new(
            Vec3::zeros(),
            Mat3::identity(),
            Vec2::new(focal, focal),
            Vec2::new(width as f64 * 0.5, height as f64 * 0.5),
            width,
            height,
            Self::DEFAULT_NEAR,
        )
        .expect("valid camera")
    }

    pub fn rotation_quaternion(&self) -> UnitQuaternion<f64> {
        UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(self.orientation))
    }

    pub fn to_view(&self, world: &Vec3) -> Vec3 {
        self.orientation * (world - self.position)
    }

    /// Projects a camera-space point with positive z to pixel coordinates.
    pub fn view_to_pixel(&self, view: &Vec3) -> Vec2 {
        Vec2::new(
            self.focal.x * view.x / view.z + self.principal_point.x,
            self.focal.y * view.y / view.z + self.principal_point.y,
        )
    }

    /// Camera-space direction `((x-cx)/fx, (y-cy)/fy, 1)` through a pixel
    /// position (not normalized).
    pub fn pixel_dir_camera(&self, pixel: &Vec2) -> Vec3 {
        Vec3::new(
            (pixel.x - self.principal_point.x) / self.focal.x,
            (pixel.y - self.principal_point.y) / self.focal.y,
            1.0,
        )
    }

    /// Unit world-space direction of the ray through a pixel position.
    pub fn ray_dir(&self, pixel: &Vec2) -> Vec3 {
        (self.orientation.transpose() * self.pixel_dir_camera(pixel)).normalize()
    }

    pub fn pixel_center(x: u32, y: u32) -> Vec2 {
        Vec2::new(x as f64 + 0.5, y as f64 + 0.5)
    }

    /// Sub-camera for the pixel rectangle starting at `(x, y)` whose pixel
    /// `(i, j)` casts the same world ray as this camera's `(x+i, y+j)`.
    pub fn crop(&self, x: u32, y: u32, width: u32, height: u32) -> Self {
        Self {
            principal_point: self.principal_point - Vec2::new(x as f64, y as f64),
            width,
            height,
            ..self.clone()
        }
    }

    /// Same frustum sampled at `1/factor` resolution (rounded up).
    pub fn downscaled(&self, factor: u32) -> Self {
        let f = factor as f64;
        Self {
            focal: self.focal / f,
            principal_point: self.principal_point / f,
            width: self.width.div_ceil(factor),
            height: self.height.div_ceil(factor),
            ..self.clone()
        }
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }
}
