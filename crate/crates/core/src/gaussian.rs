//! Scene primitive and per-Gaussian math: covariance construction, density
//! evaluation and view-dependent color.

use nalgebra::{Quaternion, SMatrix, SVector, UnitQuaternion};
use thiserror::Error;

use crate::{Mat3, Vec3};

/// Quaternions whose norm deviates from one by more than this are reported as
/// renormalized at ingest.
pub const QUATERNION_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GaussianError {
    #[error("scale component {0} is not strictly positive")]
    NonPositiveScale(f64),
    #[error("opacity {0} outside (0, 1)")]
    OpacityOutOfRange(f64),
    #[error("{0} spherical-harmonics coefficients do not form a full band up to degree 3")]
    ShCount(usize),
    #[error("rotation quaternion has zero or non-finite norm")]
    DegenerateRotation,
    #[error("non-finite field")]
    NonFinite,
}

/// One scene primitive with activated parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gaussian3D {
    pub mean: Vec3,
    pub rotation: UnitQuaternion<f64>,
    /// Per-axis standard deviations.
    pub scale: Vec3,
    pub opacity: f64,
    /// `(L + 1)^2` RGB coefficients, band-major with `m` ascending inside a band.
    pub sh: Vec<Vec3>,
}

impl Gaussian3D {
    pub fn new(
        mean: Vec3,
        rotation: UnitQuaternion<f64>,
        scale: Vec3,
        opacity: f64,
        sh: Vec<Vec3>,
    ) -> Result<Self, GaussianError> {
        if !mean.iter().all(|v| v.is_finite())
            || !sh.iter().flat_map(|c| c.iter()).all(|v| v.is_finite())
        {
            return Err(GaussianError::NonFinite);
        }
        if let Some(&s) = scale.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
            return Err(GaussianError::NonPositiveScale(s));
        }
        if !(opacity > 0.0 && opacity < 1.0) {
            return Err(GaussianError::OpacityOutOfRange(opacity));
        }
        if sh_degree_for_len(sh.len()).is_none() {
            return Err(GaussianError::ShCount(sh.len()));
        }
        Ok(Self {
            mean,
            rotation,
            scale,
            opacity,
            sh,
        })
    }

    /// Convenience constructor for a view-independent colored Gaussian.
    ///
    /// `color` is the desired RGB output; the DC coefficient is derived by
    /// inverting the constant band and offset.
    pub fn with_color(
        mean: Vec3,
        rotation: UnitQuaternion<f64>,
        scale: Vec3,
        opacity: f64,
        color: Vec3,
    ) -> Result<Self, GaussianError> {
        let dc = (color - Vec3::repeat(0.5)) / SH_C0;
        Self::new(mean, rotation, scale, opacity, vec![dc])
    }

    pub fn sh_degree(&self) -> usize {
        sh_degree_for_len(self.sh.len()).unwrap_or(0)
    }

    pub fn covariance(&self) -> Mat3 {
        build_covariance(&self.rotation, &self.scale)
    }
}

/// Normalizes a raw quaternion. The flag is set when the input norm was off
/// by more than [`QUATERNION_TOLERANCE`].
pub fn normalize_rotation(q: Quaternion<f64>) -> Result<(UnitQuaternion<f64>, bool), GaussianError> {
    let norm = q.norm();
    if !(norm.is_finite() && norm > 0.0) {
        return Err(GaussianError::DegenerateRotation);
    }
    let flagged = (norm - 1.0).abs() > QUATERNION_TOLERANCE;
    Ok((UnitQuaternion::new_normalize(q), flagged))
}

/// `Σ = R S Sᵀ Rᵀ`.
pub fn build_covariance(rotation: &UnitQuaternion<f64>, scale: &Vec3) -> Mat3 {
    let m = rotation.to_rotation_matrix().into_inner() * Mat3::from_diagonal(scale);
    m * m.transpose()
}

/// `exp(-½ (x-μ)ᵀ Σ⁻¹ (x-μ))` for any fixed dimension.
pub fn eval_density<const D: usize>(
    x: &SVector<f64, D>,
    mean: &SVector<f64, D>,
    cov_inv: &SMatrix<f64, D, D>,
) -> f64 {
    let d = x - mean;
    (-0.5 * d.dot(&(cov_inv * d))).exp()
}

/// Number of SH bands implied by a coefficient count, if it is a full set up
/// to degree 3.
pub fn sh_degree_for_len(len: usize) -> Option<usize> {
    match len {
        1 => Some(0),
        4 => Some(1),
        9 => Some(2),
        16 => Some(3),
        _ => None,
    }
}

pub const SH_C0: f64 = 0.282_094_791_773_878_14;
const SH_C1: f64 = 0.488_602_511_902_919_9;
const SH_C2: [f64; 5] = [
    1.092_548_430_592_079_2,
    -1.092_548_430_592_079_2,
    0.315_391_565_252_520_05,
    -1.092_548_430_592_079_2,
    0.546_274_215_296_039_6,
];
const SH_C3: [f64; 7] = [
    -0.590_043_589_926_643_5,
    2.890_611_442_640_554,
    -0.457_045_799_464_465_8,
    0.373_176_332_590_115_4,
    -0.457_045_799_464_465_8,
    1.445_305_721_320_277,
    -0.590_043_589_926_643_5,
];

/// Real SH basis values through degree 3 for a unit direction, in coefficient
/// order.
pub fn sh_basis(dir: &Vec3) -> [f64; 16] {
    let (x, y, z) = (dir.x, dir.y, dir.z);
    let (xx, yy, zz) = (x * x, y * y, z * z);
    [
        SH_C0,
        -SH_C1 * y,
        SH_C1 * z,
        -SH_C1 * x,
        SH_C2[0] * x * y,
        SH_C2[1] * y * z,
        SH_C2[2] * (2.0 * zz - xx - yy),
        SH_C2[3] * x * z,
        SH_C2[4] * (xx - yy),
        SH_C3[0] * y * (3.0 * xx - yy),
        SH_C3[1] * x * y * z,
        SH_C3[2] * y * (4.0 * zz - xx - yy),
        SH_C3[3] * z * (2.0 * zz - 3.0 * xx - 3.0 * yy),
        SH_C3[4] * x * (4.0 * zz - xx - yy),
        SH_C3[5] * z * (xx - yy),
        SH_C3[6] * x * (xx - 3.0 * yy),
    ]
}

/// View-dependent color: SH expansion plus 0.5, floored at zero per channel.
pub fn sh_to_color(sh: &[Vec3], view_dir: &Vec3) -> Vec3 {
    let basis = sh_basis(view_dir);
    let mut c = Vec3::repeat(0.5);
    for (coeff, b) in sh.iter().zip(basis.iter()) {
        c += coeff * *b;
    }
    c.map(|v| v.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Mat2;
    use nalgebra::{Rotation3, Vector2};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn random_quat(rng: &mut ChaCha8Rng) -> UnitQuaternion<f64> {
        let q = Quaternion::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        UnitQuaternion::new_normalize(q)
    }

    #[test]
    fn covariance_examples() {
        let id = UnitQuaternion::identity();
        assert_eq!(build_covariance(&id, &Vec3::new(1.0, 1.0, 1.0)), Mat3::identity());
        assert_eq!(
            build_covariance(&id, &Vec3::new(2.0, 1.0, 1.0)),
            Mat3::from_diagonal(&Vec3::new(4.0, 1.0, 1.0))
        );
        // R = [[0,-1,0],[1,0,0],[0,0,1]], R S = [[0,-1,0],[2,0,0],[0,0,1]],
        // (R S)(R S)ᵀ = diag(1, 4, 1).
        let rz = UnitQuaternion::from_axis_angle(&Vec3::z_axis(), FRAC_PI_2);
        let cov = build_covariance(&rz, &Vec3::new(2.0, 1.0, 1.0));
        let expected = Mat3::from_diagonal(&Vec3::new(1.0, 4.0, 1.0));
        assert!((cov - expected).abs().max() < 1e-12, "{cov}");
    }

    #[test]
    fn covariance_is_spd_on_random_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10_000 {
            let q = random_quat(&mut rng);
            let s = Vec3::new(
                10f64.powf(rng.random_range(-3.0..1.0)),
                10f64.powf(rng.random_range(-3.0..1.0)),
                10f64.powf(rng.random_range(-3.0..1.0)),
            );
            let cov = build_covariance(&q, &s);
            assert_eq!(cov, cov.transpose());
            assert!(cov.cholesky().is_some(), "not SPD: {cov} from {s}");
        }
    }

    #[test]
    fn density_examples() {
        let mu = Vector2::new(0.3, -1.0);
        assert_eq!(eval_density(&mu, &mu, &Mat2::identity()), 1.0);
        let x = mu + Vector2::new(1.0, 0.0);
        assert!((eval_density(&x, &mu, &Mat2::identity()) - (-0.5f64).exp()).abs() < 1e-15);

        // Oracle: solve Σ y = d numerically and use q = dᵀ y.
        let cov = Mat2::new(4.0, 0.0, 0.0, 1.0);
        let d = Vector2::new(2.0, 0.0);
        let y = cov.lu().solve(&d).unwrap();
        let q = d.dot(&y);
        assert!((q - 1.0).abs() < 1e-12);
        let inv = cov.try_inverse().unwrap();
        let g = eval_density(&(mu + d), &mu, &inv);
        assert!((g - (-0.5 * q).exp()).abs() < 1e-15);
    }

    #[test]
    fn density_is_rotation_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10_000 {
            let q = random_quat(&mut rng);
            let s = Vec3::new(
                rng.random_range(0.1..2.0),
                rng.random_range(0.1..2.0),
                rng.random_range(0.1..2.0),
            );
            let cov = build_covariance(&q, &s);
            let mu = Vec3::new(rng.random(), rng.random(), rng.random());
            let x = mu + Vec3::new(rng.random(), rng.random(), rng.random()) * 0.5;
            let r = Rotation3::from(random_quat(&mut rng)).into_inner();
            let a = eval_density(&x, &mu, &cov.try_inverse().unwrap());
            let cov_r = r * cov * r.transpose();
            let b = eval_density(&(r * x), &(r * mu), &cov_r.try_inverse().unwrap());
            assert!((a - b).abs() <= 1e-9 * a.abs().max(1e-300), "{a} vs {b}");
        }
    }

    #[test]
    fn sh_constant_band() {
        let dir = Vec3::new(0.0, 0.0, 1.0);
        assert_eq!(sh_to_color(&[Vec3::zeros()], &dir), Vec3::repeat(0.5));
        let c = sh_to_color(&[Vec3::repeat(1.0)], &dir);
        assert!((c - Vec3::repeat(0.782_094_79)).abs().max() < 1e-8);
        assert_eq!(sh_to_color(&[Vec3::repeat(-3.0)], &dir), Vec3::zeros());
    }

    /// Associated Legendre P_l^m(x) with the Condon-Shortley phase, m >= 0.
    fn legendre(l: i32, m: i32, x: f64) -> f64 {
        let mut pmm = 1.0;
        if m > 0 {
            let somx2 = ((1.0 - x) * (1.0 + x)).sqrt();
            let mut fact = 1.0;
            for _ in 0..m {
                pmm *= -fact * somx2;
                fact += 2.0;
            }
        }
        if l == m {
            return pmm;
        }
        let mut pmmp1 = x * (2 * m + 1) as f64 * pmm;
        if l == m + 1 {
            return pmmp1;
        }
        let mut pll = 0.0;
        for ll in (m + 2)..=l {
            pll = ((2 * ll - 1) as f64 * x * pmmp1 - (ll + m - 1) as f64 * pmm) / (ll - m) as f64;
            pmm = pmmp1;
            pmmp1 = pll;
        }
        pll
    }

    fn factorial(n: i32) -> f64 {
        (1..=n).map(|v| v as f64).product()
    }

    /// Real SH from the spherical-coordinate definition.
    fn real_sh(l: i32, m: i32, dir: &Vec3) -> f64 {
        let theta = dir.z.clamp(-1.0, 1.0).acos();
        let phi = dir.y.atan2(dir.x);
        let am = m.abs();
        let k = ((2 * l + 1) as f64 / (4.0 * PI) * factorial(l - am) / factorial(l + am)).sqrt();
        let p = legendre(l, am, theta.cos());
        match m.cmp(&0) {
            std::cmp::Ordering::Equal => k * p,
            std::cmp::Ordering::Greater => 2f64.sqrt() * k * (m as f64 * phi).cos() * p,
            std::cmp::Ordering::Less => 2f64.sqrt() * k * (am as f64 * phi).sin() * p,
        }
    }

    #[test]
    fn sh_basis_matches_spherical_definition() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..500 {
            let dir = Vec3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            )
            .normalize();
            let basis = sh_basis(&dir);
            for l in 0..=3 {
                for m in -l..=l {
                    let idx = (l * l + l + m) as usize;
                    let oracle = real_sh(l, m, &dir);
                    assert!(
                        (basis[idx] - oracle).abs() < 1e-12,
                        "l={l} m={m}: {} vs {oracle}",
                        basis[idx]
                    );
                }
            }
        }
    }

    #[test]
    fn constructor_rejects_invalid() {
        let q = UnitQuaternion::identity();
        let ok = Gaussian3D::new(Vec3::zeros(), q, Vec3::repeat(1.0), 0.5, vec![Vec3::zeros()]);
        assert!(ok.is_ok());
        assert!(matches!(
            Gaussian3D::new(Vec3::zeros(), q, Vec3::new(1.0, 0.0, 1.0), 0.5, vec![Vec3::zeros()]),
            Err(GaussianError::NonPositiveScale(_))
        ));
        assert!(matches!(
            Gaussian3D::new(Vec3::zeros(), q, Vec3::repeat(1.0), 1.0, vec![Vec3::zeros()]),
            Err(GaussianError::OpacityOutOfRange(_))
        ));
        assert!(matches!(
            Gaussian3D::new(Vec3::zeros(), q, Vec3::repeat(1.0), 0.5, vec![Vec3::zeros(); 5]),
            Err(GaussianError::ShCount(5))
        ));
        let (_, flagged) = normalize_rotation(Quaternion::new(2.0, 0.0, 0.0, 0.0)).unwrap();
        assert!(flagged);
        assert!(normalize_rotation(Quaternion::new(0.0, 0.0, 0.0, 0.0)).is_err());
    }

    #[test]
    fn with_color_round_trips() {
        let g = Gaussian3D::with_color(
            Vec3::zeros(),
            UnitQuaternion::identity(),
            Vec3::repeat(1.0),
            0.5,
            Vec3::new(0.2, 0.4, 0.9),
        )
        .unwrap();
        let c = sh_to_color(&g.sh, &Vec3::z());
        assert!((c - Vec3::new(0.2, 0.4, 0.9)).abs().max() < 1e-12);
    }
}
