//! Deterministic tile-based software rasterizer for 3D Gaussian scenes.
//!
//! The pipeline projects every Gaussian either with the local affine (EWA)
//! approximation or onto a per-Gaussian tangent plane of the unit view sphere,
//! assigns splats to 32-px tiles with exact per-tile culling, sorts the
//! resulting (tile, depth) keys, and blends each pixel front to back through a
//! bounded per-ray resort window. A single-pass foveated mode renders the
//! periphery at half resolution from the same sorted pair list.
//!
//! A brute-force per-pixel [`oracle::reference_render`] exists to check the
//! ordering and culling machinery.

pub mod bundled;
pub mod camera;
pub mod gaussian;
pub mod image;
pub mod io;
pub mod metrics;
pub mod oracle;
pub mod pairs;
pub mod path;
pub mod projection;
pub mod protocol;
pub mod raster;
pub mod resort;
pub mod stats;
pub mod tiles;
pub mod visibility;

pub type Vec2 = nalgebra::Vector2<f64>;
pub type Vec3 = nalgebra::Vector3<f64>;
pub type Mat2 = nalgebra::Matrix2<f64>;
pub type Mat3 = nalgebra::Matrix3<f64>;

/// Contributions below this alpha are skipped, and (splat, tile) pairs whose
/// maximum alpha inside the tile falls below it are culled.
pub const ALPHA_MIN: f64 = 1.0 / 255.0;

/// Upper clamp applied to every per-pixel alpha.
pub const ALPHA_MAX: f64 = 0.99;

/// Blending stops once the remaining transmittance would drop below this.
pub const TRANSMITTANCE_MIN: f64 = 1e-4;

pub use camera::CameraModel;
pub use gaussian::Gaussian3D;
pub use image::Image;
pub use projection::{DepthMode, ProjectionMode, Splat2D};
pub use raster::{RenderOutput, RenderSettings};
pub use stats::FrameStats;
