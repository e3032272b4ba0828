//! Camera paths for benchmarking: linear position, spherical-linear
//! orientation between consecutive poses.

use nalgebra::{Rotation3, UnitQuaternion};
use thiserror::Error;

use crate::camera::CameraModel;

pub const DEFAULT_SAMPLES_PER_PAIR: usize = 30;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PathError {
    #[error("a camera path needs at least 2 poses, got {0}")]
    TooFewPoses(usize),
    #[error("at least 2 samples per camera pair are required")]
    TooFewSamples,
    #[error("cameras {0} and {1} differ in resolution")]
    ResolutionMismatch(usize, usize),
}

fn pose(cam: &CameraModel, position: crate::Vec3, rotation: UnitQuaternion<f64>) -> CameraModel {
    CameraModel { position, orientation: rotation.to_rotation_matrix().into_inner(), ..cam.clone() }
}

/// Samples `samples_per_pair` poses between each pair of consecutive cameras
/// (both endpoints included; shared endpoints appear once). Intrinsics come
/// from the earlier camera of each pair.
pub fn interpolate_path(cams: &[CameraModel], samples_per_pair: usize) -> Result<Vec<CameraModel>, PathError> {
    if cams.len() < 2 {
        return Err(PathError::TooFewPoses(cams.len()));
    }
    if samples_per_pair < 2 {
        return Err(PathError::TooFewSamples);
    }
    let mut out = Vec::new();
    for (i, pair) in cams.windows(2).enumerate() {
        let (a, b) = (&pair[0], &pair[1]);
        if (a.width, a.height) != (b.width, b.height) {
            return Err(PathError::ResolutionMismatch(i, i + 1));
        }
        let (qa, qb) = (a.rotation_quaternion(), b.rotation_quaternion());
        let first = if i == 0 { 0 } else { 1 };
        for s in first..samples_per_pair {
            let t = s as f64 / (samples_per_pair - 1) as f64;
            let position = a.position.lerp(&b.position, t);
            let rotation = qa.try_slerp(&qb, t, 1e-12).unwrap_or(qa);
            out.push(pose(a, position, rotation));
        }
    }
    Ok(out)
}

/// Left and right eye cameras, offset by `±eye_distance/2` along the camera's
/// x axis.
pub fn stereo_pair(cam: &CameraModel, eye_distance: f64) -> [CameraModel; 2] {
    let right = Rotation3::from_matrix_unchecked(cam.orientation).inverse() * crate::Vec3::x();
    let half = right * (eye_distance * 0.5);
    [
        CameraModel { position: cam.position - half, ..cam.clone() },
        CameraModel { position: cam.position + half, ..cam.clone() },
    ]
}
