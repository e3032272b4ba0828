//! Small deterministic synthetic scenes used by tests, the acceptance suite
//! and `tilesplat synth`.

use nalgebra::{Quaternion, UnitQuaternion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::camera::CameraModel;
use crate::gaussian::{Gaussian3D, SH_C0};
use crate::Vec3;

pub const WIDTH: u32 = 192;
pub const HEIGHT: u32 = 160;
pub const FOCAL: f64 = 170.0;

#[derive(Debug, Clone)]
pub struct BundledScene {
    pub name: &'static str,
    pub gaussians: Vec<Gaussian3D>,
    pub camera: CameraModel,
}

/// Camera at the origin looking down +z.
pub fn default_camera() -> CameraModel {
    CameraModel::simple(WIDTH, HEIGHT, FOCAL)
}

fn random_rotation(rng: &mut ChaCha8Rng) -> UnitQuaternion<f64> {
    UnitQuaternion::new_normalize(Quaternion::new(
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
    ))
}

/// Degree-1 coefficients around a base color.
fn random_sh(rng: &mut ChaCha8Rng) -> Vec<Vec3> {
    let base = Vec3::new(rng.random(), rng.random(), rng.random());
    let mut sh = vec![(base - Vec3::repeat(0.5)) / SH_C0];
    for _ in 0..3 {
        sh.push(Vec3::new(rng.random_range(-0.2..0.2), rng.random_range(-0.2..0.2), rng.random_range(-0.2..0.2)));
    }
    sh
}

struct Ranges {
    depth: (f64, f64),
    spread: f64,
    scale: (f64, f64),
    opacity: (f64, f64),
}

fn scatter(rng: &mut ChaCha8Rng, n: usize, r: &Ranges) -> Vec<Gaussian3D> {
    (0..n)
        .map(|_| {
            let z = rng.random_range(r.depth.0..r.depth.1);
            let mean = Vec3::new(rng.random_range(-r.spread..r.spread) * z, rng.random_range(-r.spread..r.spread) * z, z);
            let scale = Vec3::new(
                rng.random_range(r.scale.0..r.scale.1),
                rng.random_range(r.scale.0..r.scale.1),
                rng.random_range(r.scale.0..r.scale.1),
            );
            Gaussian3D::new(mean, random_rotation(rng), scale, rng.random_range(r.opacity.0..r.opacity.1), random_sh(rng))
                .expect("valid parameters")
        })
        .collect()
}

/// `n` random Gaussians in front of [`default_camera`]'s frustum.
pub fn random_scene(seed: u64, n: usize) -> Vec<Gaussian3D> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    scatter(
        &mut rng,
        n,
        &Ranges { depth: (2.0, 6.0), spread: 0.6, scale: (0.06, 0.25), opacity: (0.05, 0.9) },
    )
}

/// `n` smaller, more tightly packed Gaussians.
pub fn dense_scene(seed: u64, n: usize) -> Vec<Gaussian3D> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    scatter(
        &mut rng,
        n,
        &Ranges { depth: (2.0, 6.0), spread: 0.6, scale: (0.05, 0.2), opacity: (0.05, 0.9) },
    )
}

/// A wide splat whose mean sits 60° off the optical axis of
/// [`default_camera`], plus a sparse backdrop.
pub fn off_axis_scene(seed: u64) -> Vec<Gaussian3D> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut scene = scatter(
        &mut rng,
        150,
        &Ranges { depth: (3.0, 6.0), spread: 0.55, scale: (0.1, 0.5), opacity: (0.1, 0.7) },
    );
    let angle = 60f64.to_radians();
    let mean = Vec3::new(angle.sin(), 0.0, angle.cos()) * 3.0;
    scene.push(
        Gaussian3D::with_color(
            mean,
            UnitQuaternion::from_euler_angles(0.0, 0.4, 0.2),
            Vec3::new(1.4, 0.9, 0.5),
            0.85,
            Vec3::new(0.9, 0.6, 0.2),
        )
        .expect("valid parameters"),
    );
    scene
}

/// Every scene shipped with the crate.
pub fn bundled_scenes() -> Vec<BundledScene> {
    let cam = default_camera();
    let mut layered = ChaCha8Rng::seed_from_u64(404);
    let mut layers = Vec::new();
    for (depth, opacity) in [(2.5, (0.2, 0.5)), (3.5, (0.2, 0.6)), (5.0, (0.5, 0.9))] {
        layers.extend(scatter(
            &mut layered,
            250,
            &Ranges { depth: (depth, depth + 0.4), spread: 0.6, scale: (0.08, 0.25), opacity },
        ));
    }
    vec![
        BundledScene { name: "cloud", gaussians: random_scene(101, 1200), camera: cam.clone() },
        BundledScene { name: "layers", gaussians: layers, camera: cam.clone() },
        BundledScene { name: "dense", gaussians: dense_scene(303, 2000), camera: cam.clone() },
        BundledScene { name: "off-axis", gaussians: off_axis_scene(505), camera: cam },
    ]
}
