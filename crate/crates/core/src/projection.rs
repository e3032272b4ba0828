//! Projection of 3D Gaussians to 2D splats.
//!
//! Two models are supported. [`project_affine`] linearizes the perspective
//! map at the mean and produces a screen-space ellipse. [`project_optimal`]
//! projects the Gaussian onto the plane tangent to the unit sphere around the
//! camera center at the direction of the mean; pixels are evaluated by
//! intersecting their ray with that plane, so the plane-to-screen map stays
//! exact and off-axis splats do not stretch.

use nalgebra::Matrix2x3;
use thiserror::Error;

use crate::camera::CameraModel;
use crate::gaussian::{eval_density, sh_to_color, Gaussian3D};
use crate::resort::ray_depth;
use crate::{Mat2, Mat3, Vec2, Vec3, ALPHA_MAX, ALPHA_MIN};

/// Screen-space dilation added to the 2D covariance, in px².
pub const DEFAULT_DILATION: f64 = 0.3;

/// Means closer than this to the camera center have no tangent plane.
pub const DEGENERATE_MEAN_EPS: f64 = 1e-6;

/// Slack beyond the image extent, as a fraction of that extent per side, used
/// to clamp the affine Jacobian (matches the common 1.3 × half-FOV clamp).
pub const JACOBIAN_CLAMP_MARGIN: f64 = 0.15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProjectionMode {
    Affine,
    Optimal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DepthMode {
    /// View-space z of the mean.
    ViewZ,
    /// Euclidean distance from the camera center to the mean.
    EuclideanDist,
}

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum Rejected {
    #[error("mean lies in front of the near plane")]
    BehindCamera,
    #[error("mean coincides with the camera center")]
    DegenerateMean,
    #[error("projected covariance is not positive definite")]
    DegenerateCovariance,
}

/// Tangent-plane frame of an optimally projected splat. The plane is
/// `{X : (X - o)·n = 1}`; plane coordinates are `((X-o)·u, (X-o)·v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneFrame {
    pub normal: Vec3,
    pub tangent_u: Vec3,
    pub tangent_v: Vec3,
    // camera-space copies, used per pixel
    normal_cam: Vec3,
    u_cam: Vec3,
    v_cam: Vec3,
}

impl PlaneFrame {
    /// Builds the frame for the direction `normal` (unit), with `u` aligned
    /// to the camera's x axis projected into the plane.
    pub fn new(normal: Vec3, cam: &CameraModel) -> Self {
        let cam_x = cam.orientation.row(0).transpose();
        let u = (cam_x - normal * cam_x.dot(&normal)).normalize();
        let v = normal.cross(&u);
        Self {
            normal,
            tangent_u: u,
            tangent_v: v,
            normal_cam: cam.orientation * normal,
            u_cam: cam.orientation * u,
            v_cam: cam.orientation * v,
        }
    }

    pub fn normal_cam(&self) -> &Vec3 {
        &self.normal_cam
    }

    /// Basis `[u v n]` expressed in camera space, as columns.
    pub fn camera_basis(&self) -> Mat3 {
        Mat3::from_columns(&[self.u_cam, self.v_cam, self.normal_cam])
    }

    /// Plane coordinates hit by a camera-space ray direction, if the ray meets
    /// the plane on its positive side.
    pub fn hit(&self, dir_cam: &Vec3) -> Option<Vec2> {
        let denom = dir_cam.dot(&self.normal_cam);
        if !(denom > 1e-12 * dir_cam.norm()) {
            return None;
        }
        Some(Vec2::new(dir_cam.dot(&self.u_cam), dir_cam.dot(&self.v_cam)) / denom)
    }

    /// Camera-space point of the plane at the given coordinates.
    pub fn lift_cam(&self, point: &Vec2) -> Vec3 {
        self.normal_cam + self.u_cam * point.x + self.v_cam * point.y
    }

    /// Jacobian of the plane-to-screen map at plane coordinates `point`.
    pub fn screen_jacobian(&self, point: &Vec2, cam: &CameraModel) -> Mat2 {
        let c = self.lift_cam(point);
        let iz2 = 1.0 / (c.z * c.z);
        let col = |t: &Vec3| {
            Vec2::new(
                cam.focal.x * (t.x * c.z - c.x * t.z) * iz2,
                cam.focal.y * (t.y * c.z - c.y * t.z) * iz2,
            )
        };
        Mat2::from_columns(&[col(&self.u_cam), col(&self.v_cam)])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SplatFrame {
    /// `mean2d` and `cov2d` are in pixels.
    ScreenAffine,
    /// `mean2d` and `cov2d` are tangent-plane coordinates (`mean2d` is the origin).
    OptimalPlane(PlaneFrame),
}

/// A projected Gaussian.
#[derive(Debug, Clone, PartialEq)]
pub struct Splat2D {
    /// Index of the source Gaussian in the scene.
    pub source: u32,
    pub mean2d: Vec2,
    pub cov2d: Mat2,
    pub cov2d_inv: Mat2,
    pub frame: SplatFrame,
    /// Projection of the 3D mean in pixels (equals `mean2d` for affine splats).
    pub screen_mean: Vec2,
    pub color: Vec3,
    pub opacity: f64,
    pub view_z: f64,
    pub distance: f64,
    pub mean3d: Vec3,
    pub cov3d: Mat3,
    pub cov3d_inv: Mat3,
}

impl Splat2D {
    pub fn depth_hint(&self, mode: DepthMode) -> f64 {
        match mode {
            DepthMode::ViewZ => self.view_z,
            DepthMode::EuclideanDist => self.distance,
        }
    }

    pub fn plane(&self) -> Option<&PlaneFrame> {
        match &self.frame {
            SplatFrame::OptimalPlane(f) => Some(f),
            SplatFrame::ScreenAffine => None,
        }
    }

    /// Alpha for a point given in the splat's own 2D frame.
    pub fn alpha_at_frame_point(&self, point: &Vec2) -> f64 {
        (self.opacity * eval_density(point, &self.mean2d, &self.cov2d_inv)).min(ALPHA_MAX)
    }

    /// `min(0.99, σ·G₂D)` along the ray through a pixel position; zero when
    /// the ray misses the splat's plane.
    pub fn alpha_at(&self, pixel: &Vec2, cam: &CameraModel) -> f64 {
        match &self.frame {
            SplatFrame::ScreenAffine => self.alpha_at_frame_point(pixel),
            SplatFrame::OptimalPlane(f) => match f.hit(&cam.pixel_dir_camera(pixel)) {
                Some(s) => self.alpha_at_frame_point(&s),
                None => 0.0,
            },
        }
    }

    /// Depth of maximum 3D density along the ray through a pixel position.
    pub fn ray_depth_at(&self, pixel: &Vec2, cam: &CameraModel) -> f64 {
        ray_depth(&cam.position, &cam.ray_dir(pixel), &self.mean3d, &self.cov3d_inv, cam.near)
    }

    /// Squared Mahalanobis radius inside which alpha reaches [`ALPHA_MIN`].
    /// `None` when the splat can never reach it.
    pub fn cutoff_radius_sq(&self) -> Option<f64> {
        let r2 = 2.0 * (self.opacity / ALPHA_MIN).ln();
        (r2 > 0.0).then_some(r2)
    }
}

pub fn project(
    g: &Gaussian3D,
    source: u32,
    cam: &CameraModel,
    mode: ProjectionMode,
    dilation: f64,
) -> Result<Splat2D, Rejected> {
    match mode {
        ProjectionMode::Affine => project_affine(g, source, cam, dilation),
        ProjectionMode::Optimal => project_optimal(g, source, cam, dilation),
    }
}

fn invert_spd(cov: &Mat2) -> Result<Mat2, Rejected> {
    let det = cov.determinant();
    if !(det > 0.0 && cov.m11 > 0.0 && det.is_finite()) {
        return Err(Rejected::DegenerateCovariance);
    }
    Ok(Mat2::new(cov.m22, -cov.m12, -cov.m21, cov.m11) / det)
}

fn symmetrize(m: Mat2) -> Mat2 {
    let off = 0.5 * (m.m12 + m.m21);
    Mat2::new(m.m11, off, off, m.m22)
}

/// Local affine (EWA) projection `Σ' = J W Σ Wᵀ Jᵀ`.
pub fn project_affine(g: &Gaussian3D, source: u32, cam: &CameraModel, dilation: f64) -> Result<Splat2D, Rejected> {
    let t = cam.to_view(&g.mean);
    if !(t.z >= cam.near) {
        return Err(Rejected::BehindCamera);
    }
    let (w, h) = (cam.width as f64, cam.height as f64);
    let clamp_axis = |ratio: f64, c: f64, f: f64, extent: f64| {
        let lo = -c / f - JACOBIAN_CLAMP_MARGIN * extent / f;
        let hi = (extent - c) / f + JACOBIAN_CLAMP_MARGIN * extent / f;
        ratio.clamp(lo, hi)
    };
    let rx = clamp_axis(t.x / t.z, cam.principal_point.x, cam.focal.x, w);
    let ry = clamp_axis(t.y / t.z, cam.principal_point.y, cam.focal.y, h);
    let (fx, fy) = (cam.focal.x, cam.focal.y);
    let j = Matrix2x3::new(fx / t.z, 0.0, -fx * rx / t.z, 0.0, fy / t.z, -fy * ry / t.z);
    let cov3d = g.covariance();
    let cov_view = cam.orientation * cov3d * cam.orientation.transpose();
    let cov2d = symmetrize(j * cov_view * j.transpose()) + Mat2::identity() * dilation;
    let cov2d_inv = invert_spd(&cov2d)?;
    let cov3d_inv = cov3d.try_inverse().ok_or(Rejected::DegenerateCovariance)?;
    let mean2d = cam.view_to_pixel(&t);
    let offset = g.mean - cam.position;
    let distance = offset.norm();
    Ok(Splat2D {
        source,
        mean2d,
        cov2d,
        cov2d_inv,
        frame: SplatFrame::ScreenAffine,
        screen_mean: mean2d,
        color: sh_to_color(&g.sh, &(offset / distance)),
        opacity: g.opacity,
        view_z: t.z,
        distance,
        mean3d: g.mean,
        cov3d,
        cov3d_inv,
    })
}

/// Projection onto the tangent plane of the unit sphere at the camera center,
/// perpendicular to the camera-to-mean direction.
///
/// The screen dilation is pulled back to the plane through the inverse of the
/// plane-to-screen Jacobian at the mean, so it equals `dilation · I` in pixels
/// there.
pub fn project_optimal(g: &Gaussian3D, source: u32, cam: &CameraModel, dilation: f64) -> Result<Splat2D, Rejected> {
    let offset = g.mean - cam.position;
    let distance = offset.norm();
    if !(distance > DEGENERATE_MEAN_EPS) {
        return Err(Rejected::DegenerateMean);
    }
    let t = cam.orientation * offset;
    if !(t.z >= cam.near) {
        return Err(Rejected::BehindCamera);
    }
    let normal = offset / distance;
    let frame = PlaneFrame::new(normal, cam);
    let basis = Matrix2x3::from_rows(&[frame.tangent_u.transpose(), frame.tangent_v.transpose()]);
    let cov3d = g.covariance();
    let mut cov2d = symmetrize(basis * cov3d * basis.transpose() / (distance * distance));
    if dilation > 0.0 {
        let jac = frame.screen_jacobian(&Vec2::zeros(), cam);
        let jinv = jac.try_inverse().ok_or(Rejected::DegenerateCovariance)?;
        cov2d += symmetrize(jinv * jinv.transpose()) * dilation;
    }
    let cov2d_inv = invert_spd(&cov2d)?;
    let cov3d_inv = cov3d.try_inverse().ok_or(Rejected::DegenerateCovariance)?;
    let screen_mean = cam.view_to_pixel(&frame.normal_cam);
    Ok(Splat2D {
        source,
        mean2d: Vec2::zeros(),
        cov2d,
        cov2d_inv,
        frame: SplatFrame::OptimalPlane(frame),
        screen_mean,
        color: sh_to_color(&g.sh, &normal),
        opacity: g.opacity,
        view_z: t.z,
        distance,
        mean3d: g.mean,
        cov3d,
        cov3d_inv,
    })
}

/// Intersects the ray through a pixel position with the splat's tangent
/// plane. `None` when the ray is parallel to the plane or meets it behind the
/// camera.
pub fn ray_to_optimal_plane(pixel: &Vec2, cam: &CameraModel, frame: &PlaneFrame) -> Option<Vec2> {
    frame.hit(&cam.pixel_dir_camera(pixel))
}

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
#[error("plane point lifts behind the camera")]
pub struct BehindCamera;

/// Lifts a tangent-plane point to 3D and projects it through the camera.
pub fn optimal_plane_to_screen(point: &Vec2, frame: &PlaneFrame, cam: &CameraModel) -> Result<Vec2, BehindCamera> {
    let c = frame.lift_cam(point);
    if !(c.z > 1e-12 * c.norm()) {
        return Err(BehindCamera);
    }
    Ok(cam.view_to_pixel(&c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Quaternion, Rotation3, UnitQuaternion};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn gaussian(mean: Vec3, rot: UnitQuaternion<f64>, scale: Vec3) -> Gaussian3D {
        Gaussian3D::new(mean, rot, scale, 0.8, vec![Vec3::zeros()]).unwrap()
    }

    fn random_rot(rng: &mut ChaCha8Rng) -> UnitQuaternion<f64> {
        UnitQuaternion::new_normalize(Quaternion::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        ))
    }

    /// Brute-force maximum of the 3D density along a unit ray.
    fn ray_march_max(origin: &Vec3, dir: &Vec3, g: &Gaussian3D) -> (f64, f64) {
        let inv = g.covariance().try_inverse().unwrap();
        let center = (g.mean - origin).dot(dir);
        let half = 8.0 * g.scale.max();
        let steps = 20_000;
        let mut best = (0.0, center);
        for i in 0..=steps {
            let t = center - half + 2.0 * half * i as f64 / steps as f64;
            let x = origin + dir * t;
            let v = eval_density(&x, &g.mean, &inv);
            if v > best.0 {
                best = (v, t);
            }
        }
        best
    }

    #[test]
    fn affine_on_axis() {
        let cam = CameraModel::simple(64, 64, 80.0);
        let g = gaussian(Vec3::new(0.0, 0.0, 4.0), UnitQuaternion::identity(), Vec3::repeat(1.0));
        let s = project_affine(&g, 0, &cam, DEFAULT_DILATION).unwrap();
        assert!((s.mean2d - cam.principal_point).norm() < 1e-12);
        let k = (80.0f64 / 4.0).powi(2) + DEFAULT_DILATION;
        assert!((s.cov2d - Mat2::identity() * k).abs().max() < 1e-9);
        assert!((s.cov2d * s.cov2d_inv - Mat2::identity()).abs().max() < 1e-12);
    }

    #[test]
    fn behind_camera_rejected() {
        let cam = CameraModel::simple(64, 64, 80.0);
        let g = gaussian(Vec3::new(0.0, 0.0, -1.0), UnitQuaternion::identity(), Vec3::repeat(1.0));
        assert_eq!(project_affine(&g, 0, &cam, 0.3).unwrap_err(), Rejected::BehindCamera);
        assert_eq!(project_optimal(&g, 0, &cam, 0.3).unwrap_err(), Rejected::BehindCamera);
    }

    #[test]
    fn optimal_on_axis_matches_affine_scaled() {
        let cam = CameraModel::simple(64, 64, 80.0);
        let g = gaussian(
            Vec3::new(0.0, 0.0, 4.0),
            UnitQuaternion::from_euler_angles(0.3, 0.2, 0.1),
            Vec3::new(0.5, 0.2, 0.3),
        );
        let a = project_affine(&g, 0, &cam, DEFAULT_DILATION).unwrap();
        let o = project_optimal(&g, 0, &cam, DEFAULT_DILATION).unwrap();
        assert_eq!(o.mean2d, Vec2::zeros());
        let frame = o.plane().unwrap();
        assert!((frame.normal - Vec3::z()).norm() < 1e-15);
        assert!((o.cov2d * 80.0 * 80.0 - a.cov2d).abs().max() < 1e-9);
        assert!((o.screen_mean - cam.principal_point).norm() < 1e-12);
    }

    #[test]
    fn on_axis_footprints_agree_per_pixel() {
        let cam = CameraModel::simple(64, 64, 60.0);
        let g = gaussian(
            Vec3::new(0.0, 0.0, 3.0),
            UnitQuaternion::from_euler_angles(0.5, -0.2, 0.9),
            Vec3::new(0.2, 0.05, 0.1),
        );
        let a = project_affine(&g, 0, &cam, DEFAULT_DILATION).unwrap();
        let o = project_optimal(&g, 0, &cam, DEFAULT_DILATION).unwrap();
        for y in 16..48 {
            for x in 16..48 {
                let p = CameraModel::pixel_center(x, y);
                let d = (a.alpha_at(&p, &cam) - o.alpha_at(&p, &cam)).abs();
                assert!(d < 1e-4, "pixel ({x},{y}) differs by {d}");
            }
        }
    }

    #[test]
    fn degenerate_mean() {
        let cam = CameraModel::simple(64, 64, 80.0);
        let g = gaussian(Vec3::new(1e-8, 0.0, 1e-8), UnitQuaternion::identity(), Vec3::repeat(1.0));
        assert_eq!(project_optimal(&g, 0, &cam, 0.3).unwrap_err(), Rejected::DegenerateMean);
    }

    #[test]
    fn plane_ray_examples() {
        let cam = CameraModel::simple(64, 64, 80.0);
        let g = gaussian(Vec3::new(0.0, 0.0, 4.0), UnitQuaternion::identity(), Vec3::repeat(1.0));
        let o = project_optimal(&g, 0, &cam, 0.3).unwrap();
        let frame = o.plane().unwrap();
        let s = ray_to_optimal_plane(&cam.principal_point, &cam, frame).unwrap();
        assert!(s.norm() < 1e-15);
        let back = optimal_plane_to_screen(&Vec2::zeros(), frame, &cam).unwrap();
        assert!((back - cam.principal_point).norm() < 1e-12);

        // A splat 90° off axis has a plane whose normal is orthogonal to the
        // central ray.
        let side = PlaneFrame::new(Vec3::x(), &cam);
        assert!(ray_to_optimal_plane(&cam.principal_point, &cam, &side).is_none());
        // ...and a plane point on the far side of the camera lifts behind it.
        let frame = PlaneFrame::new(Vec3::new(0.0, 0.6, 0.8), &cam);
        assert_eq!(optimal_plane_to_screen(&Vec2::new(0.0, 5.0), &frame, &cam), Err(BehindCamera));
    }

    #[test]
    fn plane_hit_satisfies_ray_and_plane_equations() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let cam = CameraModel::look_at(
            Vec3::new(0.3, -0.2, 0.1),
            Vec3::new(1.0, 0.5, 4.0),
            Vec3::new(0.0, -1.0, 0.0),
            128,
            96,
            90.0,
        );
        for _ in 0..1000 {
            let n = Vec3::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5), 1.0);
            let n = (cam.orientation.transpose() * n).normalize();
            let frame = PlaneFrame::new(n, &cam);
            let pixel = Vec2::new(rng.random_range(0.0..128.0), rng.random_range(0.0..96.0));
            let s = ray_to_optimal_plane(&pixel, &cam, &frame).unwrap();
            let x = cam.position + frame.normal + frame.tangent_u * s.x + frame.tangent_v * s.y;
            // plane equation
            assert!(((x - cam.position).dot(&n) - 1.0).abs() < 1e-6);
            // ray equation: x - o parallel to the pixel ray
            let d = cam.ray_dir(&pixel);
            let rel = x - cam.position;
            assert!(rel.cross(&d).norm() < 1e-6 * rel.norm());
            assert!(rel.dot(&d) > 0.0);
            // round trips
            let back = optimal_plane_to_screen(&s, &frame, &cam).unwrap();
            assert!((back - pixel).norm() < 1e-5);
            let s2 = ray_to_optimal_plane(&back, &cam, &frame).unwrap();
            assert!((s2 - s).norm() < 1e-9);
        }
    }

    /// Worst relative error, over rings out to 3σ, of the optimal and affine
    /// footprints against the ray-marched maximum density.
    fn off_axis_errors(scale: Vec3) -> (f64, f64) {
        let cam = CameraModel::simple(64, 64, 50.0);
        let angle = 60f64.to_radians();
        let dir = Vec3::new(angle.sin(), 0.0, angle.cos());
        let g = Gaussian3D::new(dir * 5.0, UnitQuaternion::from_euler_angles(0.4, 1.1, -0.3), scale, 0.9, vec![Vec3::zeros()])
            .unwrap();
        let o = project_optimal(&g, 0, &cam, 0.0).unwrap();
        let a = project_affine(&g, 0, &cam, 0.0).unwrap();
        let frame = o.plane().unwrap();
        let chol = o.cov2d.cholesky().unwrap().l();
        let (mut err_opt, mut err_aff) = (0.0f64, 0.0f64);
        for ring in 1..=6 {
            let radius = ring as f64 * 0.5;
            for k in 0..24 {
                let phi = k as f64 / 24.0 * std::f64::consts::TAU;
                let s = chol * Vec2::new(phi.cos(), phi.sin()) * radius;
                let pixel = optimal_plane_to_screen(&s, frame, &cam).unwrap();
                let (truth, _) = ray_march_max(&cam.position, &cam.ray_dir(&pixel), &g);
                let opt = o.alpha_at(&pixel, &cam) / g.opacity;
                let aff = a.alpha_at(&pixel, &cam) / g.opacity;
                err_opt = err_opt.max((opt - truth).abs() / truth);
                err_aff = err_aff.max((aff - truth).abs() / truth);
            }
        }
        (err_opt, err_aff)
    }

    /// Off-axis splat at 60°: the tangent-plane footprint reproduces the
    /// maximum 3D density along each ray; the affine ellipse does not. The
    /// tangent-plane map is first order, so its error grows linearly with the
    /// splat's angular size.
    #[test]
    fn optimal_matches_ray_march_off_axis() {
        let (err_opt, err_aff) = off_axis_errors(Vec3::new(0.0006, 0.0004, 0.0002));
        assert!(err_opt <= 1e-3, "optimal relative error {err_opt}");
        assert!(err_aff > 1e-2, "affine relative error {err_aff}");
        let (big_opt, big_aff) = off_axis_errors(Vec3::new(0.006, 0.004, 0.002));
        assert!(big_aff > 0.5);
        let ratio = big_opt / err_opt;
        assert!((8.0..12.0).contains(&ratio), "error ratio {ratio}");
    }

    /// At 45° the affine ellipse is elongated relative to the true perspective
    /// footprint, measured on a pixel grid.
    #[test]
    fn affine_elongation_at_45_degrees() {
        let cam = CameraModel::simple(64, 64, 200.0);
        let angle = 45f64.to_radians();
        let g = Gaussian3D::new(
            Vec3::new(angle.sin(), 0.0, angle.cos()) * 4.0,
            UnitQuaternion::from_euler_angles(0.2, 0.3, 0.1),
            Vec3::new(0.06, 0.03, 0.04),
            0.9,
            vec![Vec3::zeros()],
        )
        .unwrap();
        let o = project_optimal(&g, 0, &cam, 0.0).unwrap();
        let a = project_affine(&g, 0, &cam, 0.0).unwrap();
        let c = a.screen_mean;
        let (mut err_opt, mut err_aff) = (0.0f64, 0.0f64);
        for dy in -8..=8 {
            for dx in -8..=8 {
                let pixel = c + Vec2::new(dx as f64, dy as f64) * 0.75;
                let (truth, _) = ray_march_max(&cam.position, &cam.ray_dir(&pixel), &g);
                if truth < 1e-2 {
                    continue;
                }
                err_opt = err_opt.max((o.alpha_at(&pixel, &cam) / g.opacity - truth).abs());
                err_aff = err_aff.max((a.alpha_at(&pixel, &cam) / g.opacity - truth).abs());
            }
        }
        assert!(err_aff > 5.0 * err_opt, "affine {err_aff} vs optimal {err_opt}");
        assert!(err_aff > 1e-2, "affine error {err_aff} is not measurable");
    }

    #[test]
    fn optimal_projection_is_roll_equivariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let base = CameraModel::simple(128, 128, 100.0);
        for _ in 0..200 {
            let roll = rng.random_range(-3.0..3.0);
            let rolled = CameraModel {
                orientation: Rotation3::from_axis_angle(&Vec3::z_axis(), roll).into_inner() * base.orientation,
                ..base.clone()
            };
            let mean = Vec3::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(2.0..5.0));
            let scale = Vec3::new(rng.random_range(0.05..0.4), rng.random_range(0.05..0.4), rng.random_range(0.05..0.4));
            let g = gaussian(mean, random_rot(&mut rng), scale);
            let a = project_optimal(&g, 0, &base, DEFAULT_DILATION).unwrap();
            let b = project_optimal(&g, 0, &rolled, DEFAULT_DILATION).unwrap();
            let fa = a.plane().unwrap();
            let chol = a.cov2d.cholesky().unwrap().l();
            let (c, s) = (roll.cos(), roll.sin());
            for k in 0..16 {
                let phi = k as f64 / 16.0 * std::f64::consts::TAU;
                let contour = chol * Vec2::new(phi.cos(), phi.sin());
                let p = optimal_plane_to_screen(&contour, fa, &base).unwrap() - base.principal_point;
                let p_rolled = Vec2::new(c * p.x - s * p.y, s * p.x + c * p.y) + base.principal_point;
                // the rotated contour point must lie on the rolled splat's
                // unit contour...
                let sb = ray_to_optimal_plane(&p_rolled, &rolled, b.plane().unwrap()).unwrap();
                let q = sb.dot(&(b.cov2d_inv * sb));
                assert!((q - 1.0).abs() < 1e-8, "q = {q}");
                // ...and map back onto the same screen position.
                let back = optimal_plane_to_screen(&sb, b.plane().unwrap(), &rolled).unwrap();
                assert!((back - p_rolled).norm() < 1e-4);
            }
        }
    }

    #[test]
    fn projected_covariances_are_spd() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let cam = CameraModel::simple(256, 256, 200.0);
        for _ in 0..2000 {
            let mean = Vec3::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0), rng.random_range(0.5..8.0));
            let scale = Vec3::new(
                10f64.powf(rng.random_range(-3.0..0.0)),
                10f64.powf(rng.random_range(-3.0..0.0)),
                10f64.powf(rng.random_range(-3.0..0.0)),
            );
            let g = gaussian(mean, random_rot(&mut rng), scale);
            for mode in [ProjectionMode::Affine, ProjectionMode::Optimal] {
                let s = project(&g, 0, &cam, mode, DEFAULT_DILATION).unwrap();
                assert_eq!(s.cov2d, s.cov2d.transpose());
                assert!(s.cov2d.cholesky().is_some());
                let err = (s.cov2d * s.cov2d_inv - Mat2::identity()).abs().max();
                assert!(err < 1e-5, "{err}");
            }
        }
    }
}
