//! Camera files.
//!
//! The native format is TOML with one `[[camera]]` table per camera:
//!
//! ```toml
//! [[camera]]
//! id = 0
//! width = 192
//! height = 160
//! fx = 170.0
//! fy = 170.0
//! cx = 96.0          # optional, defaults to width / 2
//! cy = 80.0          # optional, defaults to height / 2
//! position = [0.0, 0.0, 0.0]
//! rotation = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
//! # or: quaternion = [1.0, 0.0, 0.0, 0.0]   (w, x, y, z)
//! near = 0.01        # optional
//! ```
//!
//! Rotations map world to camera coordinates (x right, y down, z forward).
//! Files ending in `.json` are read as the `cameras.json` written by the
//! reference 3DGS training code, whose rotations map camera to world.

use std::path::{Path, PathBuf};

use nalgebra::{Quaternion, UnitQuaternion};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::camera::{orthonormalize, rotation_deviation, CameraError, CameraModel, ORTHONORMAL_TOLERANCE};
use crate::{Mat3, Vec2, Vec3};

/// Rotations further than this from orthonormal are rejected; closer ones
/// beyond [`ORTHONORMAL_TOLERANCE`] are snapped to the nearest rotation.
pub const ROTATION_REJECT_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Error)]
pub enum CameraFileError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("cannot parse camera file: {0}")]
    Parse(String),
    #[error("camera {camera}: missing field `{field}`")]
    MissingField { camera: usize, field: &'static str },
    #[error("camera {camera}: both `rotation` and `quaternion` given")]
    ConflictingFields { camera: usize },
    #[error("camera {camera}: rotation is not orthonormal (deviation {deviation:.3e})")]
    NonOrthonormalRotation { camera: usize, deviation: f64 },
    #[error("camera {camera}: {source}")]
    Invalid { camera: usize, source: CameraError },
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CameraEntry {
    id: Option<u64>,
    width: Option<u32>,
    height: Option<u32>,
    fx: Option<f64>,
    fy: Option<f64>,
    cx: Option<f64>,
    cy: Option<f64>,
    position: Option<[f64; 3]>,
    rotation: Option<[[f64; 3]; 3]>,
    quaternion: Option<[f64; 4]>,
    near: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct CameraFile {
    #[serde(default)]
    camera: Vec<CameraEntry>,
}

fn required<T>(v: Option<T>, camera: usize, field: &'static str) -> Result<T, CameraFileError> {
    v.ok_or(CameraFileError::MissingField { camera, field })
}

/// Validates a rotation, snapping small deviations to the nearest proper
/// rotation.
fn checked_rotation(r: Mat3, camera: usize) -> Result<Mat3, CameraFileError> {
    let deviation = rotation_deviation(&r);
    if deviation > ROTATION_REJECT_TOLERANCE {
        return Err(CameraFileError::NonOrthonormalRotation { camera, deviation });
    }
    Ok(if deviation > ORTHONORMAL_TOLERANCE { orthonormalize(&r) } else { r })
}

fn build(e: &CameraEntry, camera: usize) -> Result<CameraModel, CameraFileError> {
    let width = required(e.width, camera, "width")?;
    let height = required(e.height, camera, "height")?;
    let fx = required(e.fx, camera, "fx")?;
    let fy = required(e.fy, camera, "fy")?;
    let position = required(e.position, camera, "position")?;
    let orientation = match (e.rotation, e.quaternion) {
        (Some(_), Some(_)) => return Err(CameraFileError::ConflictingFields { camera }),
        (Some(rows), None) => checked_rotation(Mat3::from_fn(|i, j| rows[i][j]), camera)?,
        (None, Some([w, x, y, z])) => {
            let q = Quaternion::new(w, x, y, z);
            if !(q.norm() > 0.0 && q.norm().is_finite()) {
                return Err(CameraFileError::NonOrthonormalRotation { camera, deviation: f64::INFINITY });
            }
            UnitQuaternion::from_quaternion(q).to_rotation_matrix().into_inner()
        }
        (None, None) => return Err(CameraFileError::MissingField { camera, field: "rotation" }),
    };
    CameraModel::new(
        Vec3::from(position),
        orientation,
        Vec2::new(fx, fy),
        Vec2::new(e.cx.unwrap_or(width as f64 * 0.5), e.cy.unwrap_or(height as f64 * 0.5)),
        width,
        height,
        e.near.unwrap_or(CameraModel::DEFAULT_NEAR),
    )
    .map_err(|source| CameraFileError::Invalid { camera, source })
}

pub fn parse_cameras(text: &str) -> Result<Vec<CameraModel>, CameraFileError> {
    let file: CameraFile = toml::from_str(text).map_err(|e| CameraFileError::Parse(e.to_string()))?;
    file.camera.iter().enumerate().map(|(i, e)| build(e, i)).collect()
}

/// Writes cameras in the native format. Values are written with
/// round-trip precision.
pub fn write_cameras(cams: &[CameraModel]) -> String {
    let file = CameraFile {
        camera: cams
            .iter()
            .enumerate()
            .map(|(i, c)| CameraEntry {
                id: Some(i as u64),
                width: Some(c.width),
                height: Some(c.height),
                fx: Some(c.focal.x),
                fy: Some(c.focal.y),
                cx: Some(c.principal_point.x),
                cy: Some(c.principal_point.y),
                position: Some(c.position.into()),
                rotation: Some([0, 1, 2].map(|r| [0, 1, 2].map(|col| c.orientation[(r, col)]))),
                quaternion: None,
                near: Some(c.near),
            })
            .collect(),
    };
    toml::to_string(&file).expect("camera entries serialize")
}

#[derive(Debug, Deserialize)]
struct JsonCamera {
    width: u32,
    height: u32,
    position: [f64; 3],
    /// Camera-to-world rotation, row-major.
    rotation: [[f64; 3]; 3],
    fx: f64,
    fy: f64,
}

/// Reads the 3DGS `cameras.json` layout.
pub fn parse_cameras_json(text: &str) -> Result<Vec<CameraModel>, CameraFileError> {
    let list: Vec<JsonCamera> = serde_json::from_str(text).map_err(|e| CameraFileError::Parse(e.to_string()))?;
    list.iter()
        .enumerate()
        .map(|(i, c)| {
            let c2w = Mat3::from_fn(|r, k| c.rotation[r][k]);
            let entry = CameraEntry {
                width: Some(c.width),
                height: Some(c.height),
                fx: Some(c.fx),
                fy: Some(c.fy),
                position: Some(c.position),
                rotation: Some([0, 1, 2].map(|r| [0, 1, 2].map(|k| c2w[(k, r)]))),
                ..Default::default()
            };
            build(&entry, i)
        })
        .collect()
}

pub fn load_cameras(path: &Path) -> Result<Vec<CameraModel>, CameraFileError> {
    let text = std::fs::read_to_string(path).map_err(|source| CameraFileError::Io { path: path.to_path_buf(), source })?;
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        parse_cameras_json(&text)
    } else {
        parse_cameras(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Rotation3;

    const IDENTITY: &str = r#"
[[camera]]
id = 0
width = 64
height = 48
fx = 50.0
fy = 50.0
position = [0.0, 0.0, 0.0]
rotation = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
"#;

    #[test]
    fn identity_camera() {
        let cams = parse_cameras(IDENTITY).unwrap();
        assert_eq!(cams.len(), 1);
        let c = &cams[0];
        assert_eq!(c.principal_point, Vec2::new(32.0, 24.0));
        assert!((c.ray_dir(&c.principal_point) - Vec3::z()).norm() < 1e-15);
    }

    #[test]
    fn round_trip_is_exact() {
        let cams = vec![
            CameraModel::look_at(Vec3::new(0.1, -0.3, 0.7), Vec3::new(1.0, 2.0, 5.0), -Vec3::y(), 100, 80, 91.3),
            CameraModel {
                principal_point: Vec2::new(40.123456789, 33.3),
                focal: Vec2::new(77.7, 78.8),
                ..CameraModel::look_at(Vec3::zeros(), Vec3::new(-1.0, 0.1, 0.2), -Vec3::y(), 90, 70, 1.0)
            },
        ];
        let back = parse_cameras(&write_cameras(&cams)).unwrap();
        assert_eq!(back, cams);
    }

    #[test]
    fn reflection_rejected() {
        let text = IDENTITY.replace("[0.0, 0.0, 1.0]]", "[0.0, 0.0, -1.0]]");
        assert!(matches!(parse_cameras(&text), Err(CameraFileError::NonOrthonormalRotation { .. })));
    }

    #[test]
    fn small_deviation_is_snapped() {
        let text = IDENTITY.replace("[[1.0, 0.0, 0.0]", "[[1.00001, 0.0, 0.0]");
        let c = &parse_cameras(&text).unwrap()[0];
        assert!(rotation_deviation(&c.orientation) < 1e-12);
        let text = IDENTITY.replace("[[1.0, 0.0, 0.0]", "[[1.01, 0.0, 0.0]");
        assert!(matches!(parse_cameras(&text), Err(CameraFileError::NonOrthonormalRotation { .. })));
    }

    #[test]
    fn missing_and_conflicting_fields() {
        let text = IDENTITY.replace("fx = 50.0\n", "");
        assert!(matches!(parse_cameras(&text), Err(CameraFileError::MissingField { field: "fx", .. })));
        let text = format!("{IDENTITY}quaternion = [1.0, 0.0, 0.0, 0.0]\n");
        assert!(matches!(parse_cameras(&text), Err(CameraFileError::ConflictingFields { .. })));
    }

    #[test]
    fn quaternion_form() {
        let q = UnitQuaternion::from_euler_angles(0.1, 0.2, 0.3);
        let text = IDENTITY.replace(
            "rotation = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]",
            &format!("quaternion = [{}, {}, {}, {}]", q.w, q.i, q.j, q.k),
        );
        let c = &parse_cameras(&text).unwrap()[0];
        assert!((c.orientation - Rotation3::from_euler_angles(0.1, 0.2, 0.3).into_inner()).abs().max() < 1e-12);
    }

    #[test]
    fn json_rotation_is_transposed() {
        let r = Rotation3::from_euler_angles(0.3, -0.2, 0.5).into_inner();
        let c2w = r.transpose();
        let rows: Vec<Vec<f64>> = (0..3).map(|i| (0..3).map(|j| c2w[(i, j)]).collect()).collect();
        let json = serde_json::json!([{
            "id": 0, "img_name": "a", "width": 40, "height": 30,
            "position": [1.0, 2.0, 3.0], "rotation": rows, "fx": 35.0, "fy": 36.0
        }]);
        let c = &parse_cameras_json(&json.to_string()).unwrap()[0];
        assert!((c.orientation - r).abs().max() < 1e-12);
        assert_eq!(c.position, Vec3::new(1.0, 2.0, 3.0));
    }
}
