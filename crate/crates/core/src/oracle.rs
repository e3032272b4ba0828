//! Brute-force per-pixel renderer: every splat is evaluated at every pixel
//! and the contributions are fully sorted by ray depth. No tiles, no culling,
//! no windows.

use rayon::prelude::*;

use crate::camera::CameraModel;
use crate::gaussian::Gaussian3D;
use crate::image::Image;
use crate::raster::{project_scene, RenderSettings};
use crate::resort::{full_sort_blend, Fragment};
use crate::{Vec3, ALPHA_MIN};

/// Uses `settings.projection`, `settings.dilation` and
/// `settings.background`; ordering and windows are ignored.
pub fn reference_render(scene: &[Gaussian3D], cam: &CameraModel, settings: &RenderSettings) -> Image {
    let splats = project_scene(scene, cam, settings);
    let bg = settings.background();
    let rows: Vec<Vec<Vec3>> = (0..cam.height)
        .into_par_iter()
        .map(|y| {
            let mut frags = Vec::new();
            (0..cam.width)
                .map(|x| {
                    let p = CameraModel::pixel_center(x, y);
                    frags.clear();
                    for s in &splats {
                        let alpha = s.alpha_at(&p, cam);
                        if alpha >= ALPHA_MIN {
                            frags.push(Fragment { depth: s.ray_depth_at(&p, cam), index: s.source, alpha, color: s.color });
                        }
                    }
                    full_sort_blend(&frags, &bg)
                })
                .collect()
        })
        .collect();
    Image { width: cam.width, height: cam.height, pixels: rows.into_iter().flatten().collect() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::render_full;
    use crate::resort::Blender;
    use nalgebra::UnitQuaternion;

    #[test]
    fn empty_and_single() {
        let cam = CameraModel::simple(40, 30, 40.0);
        let settings = RenderSettings { background: [0.5, 0.0, 0.0], ..Default::default() };
        let img = reference_render(&[], &cam, &settings);
        assert!(img.pixels.iter().all(|p| *p == Vec3::new(0.5, 0.0, 0.0)));
        let scene = [Gaussian3D::with_color(
            Vec3::new(0.1, 0.0, 3.0),
            UnitQuaternion::identity(),
            Vec3::new(0.3, 0.1, 0.2),
            0.7,
            Vec3::new(0.2, 0.9, 0.4),
        )
        .unwrap()];
        let full = render_full(&scene, &cam, &settings, None).unwrap();
        assert_eq!(reference_render(&scene, &cam, &settings), full.image);
    }

    #[test]
    fn two_splats_blend_in_ray_order() {
        let cam = CameraModel::simple(32, 32, 40.0);
        // same result whichever order the scene lists them in
        let near = Gaussian3D::with_color(Vec3::new(0.0, 0.0, 2.0), UnitQuaternion::identity(), Vec3::repeat(0.5), 0.6, Vec3::x()).unwrap();
        let far = Gaussian3D::with_color(Vec3::new(0.0, 0.0, 3.0), UnitQuaternion::identity(), Vec3::repeat(0.5), 0.6, Vec3::y()).unwrap();
        let settings = RenderSettings::default();
        for scene in [vec![near.clone(), far.clone()], vec![far.clone(), near.clone()]] {
            let img = reference_render(&scene, &cam, &settings);
            let p = CameraModel::pixel_center(16, 16);
            let splats = project_scene(&scene, &cam, &settings);
            let n = splats.iter().find(|s| s.mean3d.z == 2.0).unwrap();
            let f = splats.iter().find(|s| s.mean3d.z == 3.0).unwrap();
            let mut b = Blender::default();
            b.blend(n.alpha_at(&p, &cam), &n.color);
            b.blend(f.alpha_at(&p, &cam), &f.color);
            assert!((img.get(16, 16) - b.finish(&Vec3::zeros())).norm() < 1e-12);
        }
    }
}
