//! Scene, camera and mask ingest.

pub mod cameras;
pub mod mask;
pub mod scene;

pub use cameras::{load_cameras, parse_cameras, write_cameras, CameraFileError};
pub use mask::{load_mask, MaskError};
pub use scene::{load_scene, save_scene, SceneError, SceneFileReport};
