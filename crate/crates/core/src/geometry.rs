//! Pinhole camera model, SE(3) transforms, and the least-squares rigid fit.
//!
//! The fit solves `argmin over R in SO(3), t` of `sum ||R*src_k + t - dst_k||^2`
//! by centroid subtraction, a cross-covariance SVD, and a determinant sign
//! correction on the least-significant singular axis so the result is always
//! a proper rotation, never a reflection.

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

/// 3D point in the camera frame, meters, z forward along the optical axis.
pub type Point3 = nalgebra::Point3<f64>;

/// Ordered list of 3D points; paired clouds used for fitting are index-aligned.
pub type PointCloud = Vec<Point3>;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("depth must be positive, got {0}")]
    InvalidDepth(f64),
    #[error("point is behind the camera (z = {0})")]
    BehindCamera(f64),
    #[error("point cloud lengths differ: {src} vs {dst}")]
    LengthMismatch { src: usize, dst: usize },
    #[error("rigid fit needs at least 3 correspondences, got {0}")]
    TooFewPoints(usize),
    #[error("degenerate point configuration (collinear or coincident)")]
    DegenerateFit,
    #[error("invalid camera intrinsics: {0}")]
    InvalidIntrinsics(String),
    #[error("matrix is not a proper rotation")]
    NotARotation,
}

/// Pinhole intrinsics. Focal lengths and principal point in pixels.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

impl CameraIntrinsics {
    pub fn new(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        width: u32,
        height: u32,
    ) -> Result<Self, GeometryError> {
        let intr = Self { fx, fy, cx, cy, width, height };
        intr.validate()?;
        Ok(intr)
    }

    /// Centered principal point with a single focal length.
    pub fn centered(f: f64, width: u32, height: u32) -> Result<Self, GeometryError> {
        Self::new(f, f, width as f64 / 2.0, height as f64 / 2.0, width, height)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if !(self.fx > 0.0 && self.fy > 0.0) {
            return Err(GeometryError::InvalidIntrinsics(format!(
                "focal lengths must be positive (fx={}, fy={})",
                self.fx, self.fy
            )));
        }
        if !(0.0 <= self.cx && self.cx < self.width as f64) {
            return Err(GeometryError::InvalidIntrinsics(format!(
                "cx={} outside [0, {})",
                self.cx, self.width
            )));
        }
        if !(0.0 <= self.cy && self.cy < self.height as f64) {
            return Err(GeometryError::InvalidIntrinsics(format!(
                "cy={} outside [0, {})",
                self.cy, self.height
            )));
        }
        Ok(())
    }

    pub fn contains(&self, u: f64, v: f64) -> bool {
        u >= 0.0 && v >= 0.0 && u <= (self.width - 1) as f64 && v <= (self.height - 1) as f64
    }
}

/// Lift a pixel plus metric depth through the inverse pinhole model.
///
/// `depth` is the camera-frame z coordinate of the surface point, not the
/// Euclidean ray length.
pub fn unproject(
    pixel: (f64, f64),
    depth: f64,
    intr: &CameraIntrinsics,
) -> Result<Point3, GeometryError> {
    if depth <= 0.0 {
        return Err(GeometryError::InvalidDepth(depth));
    }
    let (u, v) = pixel;
    Ok(Point3::new(
        (u - intr.cx) * depth / intr.fx,
        (v - intr.cy) * depth / intr.fy,
        depth,
    ))
}

/// Project a camera-frame point to pixel coordinates.
pub fn project(p: &Point3, intr: &CameraIntrinsics) -> Result<(f64, f64), GeometryError> {
    if p.z <= 0.0 {
        return Err(GeometryError::BehindCamera(p.z));
    }
    Ok((
        intr.fx * p.x / p.z + intr.cx,
        intr.fy * p.y / p.z + intr.cy,
    ))
}

/// Rotation in SO(3) plus a translation in meters.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RigidTransform {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

const ROTATION_TOL: f64 = 1e-9;

impl RigidTransform {
    pub fn identity() -> Self {
        Self { rotation: Matrix3::identity(), translation: Vector3::zeros() }
    }

    /// Construct from parts, rejecting matrices outside SO(3).
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self, GeometryError> {
        let t = Self { rotation, translation };
        if !t.rotation_is_proper(ROTATION_TOL * 10.0) {
            return Err(GeometryError::NotARotation);
        }
        Ok(t)
    }

    pub(crate) fn from_parts_unchecked(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Self {
        Self { rotation, translation }
    }

    pub fn from_translation(translation: Vector3<f64>) -> Self {
        Self { rotation: Matrix3::identity(), translation }
    }

    pub fn rotation_is_proper(&self, tol: f64) -> bool {
        let rtr = self.rotation.transpose() * self.rotation;
        (rtr - Matrix3::identity()).norm() <= tol
            && (self.rotation.determinant() - 1.0).abs() <= tol
    }

    pub fn transform_point(&self, p: &Point3) -> Point3 {
        Point3::from(self.rotation * p.coords + self.translation)
    }

    /// `self.compose(other)` applies `other` first: `(self∘other)(p) = self(other(p))`.
    pub fn compose(&self, other: &Self) -> Self {
        Self {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self { rotation: rt, translation: -(rt * self.translation) }
    }

    /// Geodesic rotation angle `arccos((trace(R) - 1) / 2)`, clamped to `[0, pi]`.
    pub fn rotation_angle(&self) -> f64 {
        ((self.rotation.trace() - 1.0) / 2.0).clamp(-1.0, 1.0).acos()
    }

    /// In-plane rotation about the optical axis for a downward-facing camera:
    /// `atan2(R10, R00)`.
    pub fn yaw(&self) -> f64 {
        self.rotation[(1, 0)].atan2(self.rotation[(0, 0)])
    }

    /// Mixed alignment norm `||t|| + beta * rotation_angle`, meters.
    ///
    /// `beta` (meters/radian) weighs rotational misalignment against
    /// translational; 0.1 makes one degree count like 1.75 mm.
    pub fn magnitude(&self, beta: f64) -> f64 {
        self.translation.norm() + beta * self.rotation_angle()
    }
}

/// Rotation by `angle` about the x axis.
pub fn rot_x(angle: f64) -> Matrix3<f64> {
    let (s, c) = angle.sin_cos();
    Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

/// Rotation by `angle` about the y axis.
pub fn rot_y(angle: f64) -> Matrix3<f64> {
    let (s, c) = angle.sin_cos();
    Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

/// Rotation by `angle` about the z axis.
pub fn rot_z(angle: f64) -> Matrix3<f64> {
    let (s, c) = angle.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

// Relative spread below which the cross-covariance is treated as rank
// deficient. Planar clouds (third singular value zero) are fine; collinear
// and coincident ones are not.
const RANK_TOL: f64 = 1e-9;

/// Least-squares rigid fit mapping `src` onto `dst`.
///
/// Minimizes `sum ||R*src_k + t - dst_k||^2` over proper rotations. The
/// reflection case is handled by flipping the singular axis with the
/// smallest singular value, which keeps the optimum within SO(3).
pub fn fit_rigid(src: &[Point3], dst: &[Point3]) -> Result<RigidTransform, GeometryError> {
    if src.len() != dst.len() {
        return Err(GeometryError::LengthMismatch { src: src.len(), dst: dst.len() });
    }
    if src.len() < 3 {
        return Err(GeometryError::TooFewPoints(src.len()));
    }
    let n = src.len() as f64;
    let src_centroid = src.iter().fold(Vector3::zeros(), |a, p| a + p.coords) / n;
    let dst_centroid = dst.iter().fold(Vector3::zeros(), |a, p| a + p.coords) / n;

    let mut cross = Matrix3::zeros();
    for (s, d) in src.iter().zip(dst.iter()) {
        cross += (s.coords - src_centroid) * (d.coords - dst_centroid).transpose();
    }

    let svd = cross.svd(true, true);
    let u = svd.u.ok_or(GeometryError::DegenerateFit)?;
    let v_t = svd.v_t.ok_or(GeometryError::DegenerateFit)?;

    // nalgebra does not promise ordered singular values; sort indices ourselves.
    let sv = svd.singular_values;
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| sv[b].partial_cmp(&sv[a]).unwrap());
    let (s_max, s_mid) = (sv[order[0]], sv[order[1]]);
    if s_max <= 0.0 || s_mid <= s_max * RANK_TOL {
        return Err(GeometryError::DegenerateFit);
    }

    let v = v_t.transpose();
    let mut rotation = v * u.transpose();
    if rotation.determinant() < 0.0 {
        let mut d = Matrix3::identity();
        d[(order[2], order[2])] = -1.0;
        rotation = v * d * u.transpose();
    }
    let translation = dst_centroid - rotation * src_centroid;
    Ok(RigidTransform { rotation, translation })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn test_intrinsics() -> CameraIntrinsics {
        CameraIntrinsics::new(500.0, 500.0, 320.0, 240.0, 640, 480).unwrap()
    }

    fn random_rotation(rng: &mut ChaCha8Rng) -> Matrix3<f64> {
        // Uniform-ish rotation from a normalized random quaternion.
        let q = nalgebra::Quaternion::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        nalgebra::UnitQuaternion::from_quaternion(q).to_rotation_matrix().into_inner()
    }

    fn random_transform(rng: &mut ChaCha8Rng) -> RigidTransform {
        RigidTransform {
            rotation: random_rotation(rng),
            translation: Vector3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            ),
        }
    }

    fn random_cloud(rng: &mut ChaCha8Rng, n: usize) -> Vec<Point3> {
        (0..n)
            .map(|_| {
                Point3::new(
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                )
            })
            .collect()
    }

    #[test]
    fn unproject_principal_point_hits_optical_axis() {
        let intr = test_intrinsics();
        let p = unproject((intr.cx, intr.cy), 1.0, &intr).unwrap();
        assert_eq!(p, Point3::new(0.0, 0.0, 1.0));
    }

    #[test]
    fn unproject_matches_pinhole_formula() {
        let intr = test_intrinsics();
        let p = unproject((820.0, 240.0), 1.0, &intr).unwrap();
        assert_abs_diff_eq!(p.x, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.y, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.z, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn unproject_rejects_nonpositive_depth() {
        let intr = test_intrinsics();
        assert_eq!(unproject((10.0, 10.0), 0.0, &intr), Err(GeometryError::InvalidDepth(0.0)));
        assert!(matches!(
            unproject((10.0, 10.0), -0.5, &intr),
            Err(GeometryError::InvalidDepth(_))
        ));
    }

    #[test]
    fn project_optical_axis_hits_principal_point() {
        let intr = test_intrinsics();
        let (u, v) = project(&Point3::new(0.0, 0.0, 2.0), &intr).unwrap();
        assert_eq!((u, v), (intr.cx, intr.cy));
    }

    #[test]
    fn project_rejects_points_behind_camera() {
        let intr = test_intrinsics();
        assert!(matches!(
            project(&Point3::new(0.0, 0.0, -1.0), &intr),
            Err(GeometryError::BehindCamera(_))
        ));
    }

    #[test]
    fn project_unproject_round_trip() {
        let intr = test_intrinsics();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let u = rng.random_range(0.0..639.0);
            let v = rng.random_range(0.0..479.0);
            let d = rng.random_range(0.051..10.0);
            let p = unproject((u, v), d, &intr).unwrap();
            let (u2, v2) = project(&p, &intr).unwrap();
            assert_abs_diff_eq!(u2, u, epsilon = 1e-6);
            assert_abs_diff_eq!(v2, v, epsilon = 1e-6);
        }
    }

    #[test]
    fn intrinsics_validation_rejects_bad_fields() {
        assert!(CameraIntrinsics::new(0.0, 500.0, 320.0, 240.0, 640, 480).is_err());
        assert!(CameraIntrinsics::new(500.0, 500.0, 700.0, 240.0, 640, 480).is_err());
        assert!(CameraIntrinsics::new(500.0, 500.0, 320.0, -1.0, 640, 480).is_err());
    }

    #[test]
    fn fit_identity_on_equal_clouds() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let cloud = random_cloud(&mut rng, 20);
        let t = fit_rigid(&cloud, &cloud).unwrap();
        assert!((t.rotation - Matrix3::identity()).norm() < 1e-12);
        assert!(t.translation.norm() < 1e-12);
    }

    #[test]
    fn fit_pure_translation() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let src = random_cloud(&mut rng, 12);
        let shift = Vector3::new(1.0, 2.0, 3.0);
        let dst: Vec<_> = src.iter().map(|p| Point3::from(p.coords + shift)).collect();
        let t = fit_rigid(&src, &dst).unwrap();
        assert!((t.rotation - Matrix3::identity()).norm() < 1e-12);
        assert!((t.translation - shift).norm() < 1e-12);
    }

    #[test]
    fn fit_recovers_constructed_rotation_translation() {
        let src = vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
            Point3::new(0.0, 0.0, 1.0),
        ];
        let truth = RigidTransform {
            rotation: rot_z(std::f64::consts::FRAC_PI_2),
            translation: Vector3::new(0.1, 0.0, 0.0),
        };
        let dst: Vec<_> = src.iter().map(|p| truth.transform_point(p)).collect();
        let fit = fit_rigid(&src, &dst).unwrap();
        assert!((fit.rotation - truth.rotation).norm() < 1e-9);
        assert!((fit.translation - truth.translation).norm() < 1e-9);
    }

    #[test]
    fn fit_exact_recovery_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let n = rng.random_range(3..120);
            let src = random_cloud(&mut rng, n);
            let truth = random_transform(&mut rng);
            let dst: Vec<_> = src.iter().map(|p| truth.transform_point(p)).collect();
            let fit = fit_rigid(&src, &dst).unwrap();
            assert!((fit.rotation - truth.rotation).norm() < 1e-9);
            assert!((fit.translation - truth.translation).norm() < 1e-9);
        }
    }

    #[test]
    fn fit_is_optimal_against_perturbations() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let residual = |t: &RigidTransform, src: &[Point3], dst: &[Point3]| -> f64 {
            src.iter()
                .zip(dst)
                .map(|(s, d)| (t.transform_point(s) - d).norm_squared())
                .sum()
        };
        for _ in 0..20 {
            let n = rng.random_range(3..500);
            let src = random_cloud(&mut rng, n);
            // Noisy targets so the optimum is nontrivial.
            let truth = random_transform(&mut rng);
            let dst: Vec<_> = src
                .iter()
                .map(|p| {
                    let q = truth.transform_point(p);
                    Point3::new(
                        q.x + rng.random_range(-0.01..0.01),
                        q.y + rng.random_range(-0.01..0.01),
                        q.z + rng.random_range(-0.01..0.01),
                    )
                })
                .collect();
            let fit = fit_rigid(&src, &dst).unwrap();
            let best = residual(&fit, &src, &dst);
            for _ in 0..100 {
                let eps = rng.random_range(1e-6..1e-2);
                let axis = nalgebra::Unit::new_normalize(Vector3::new(
                    rng.random_range(-1.0..1.0f64),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                ));
                let wiggle = RigidTransform {
                    rotation: nalgebra::Rotation3::from_axis_angle(&axis, eps).into_inner(),
                    translation: Vector3::new(
                        rng.random_range(-eps..eps),
                        rng.random_range(-eps..eps),
                        rng.random_range(-eps..eps),
                    ),
                };
                let perturbed = wiggle.compose(&fit);
                assert!(best <= residual(&perturbed, &src, &dst) + 1e-12);
            }
        }
    }

    #[test]
    fn fit_never_returns_reflection() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        // Mirror-symmetric planar cloud plus noisy targets: the unconstrained
        // optimum is a reflection, the fit must still return det +1.
        let src = vec![
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(-1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
            Point3::new(0.0, -1.0, 0.0),
        ];
        let dst = vec![
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(-1.0, 0.0, 0.0),
            Point3::new(0.0, -1.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
        ];
        let fit = fit_rigid(&src, &dst).unwrap();
        assert_abs_diff_eq!(fit.rotation.determinant(), 1.0, epsilon = 1e-9);
        for _ in 0..200 {
            let n = rng.random_range(3..40);
            let src = random_cloud(&mut rng, n);
            let dst = random_cloud(&mut rng, n);
            if let Ok(fit) = fit_rigid(&src, &dst) {
                assert_abs_diff_eq!(fit.rotation.determinant(), 1.0, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn fit_rejects_bad_inputs() {
        let a = vec![Point3::new(0.0, 0.0, 1.0); 4];
        let b = vec![Point3::new(0.0, 0.0, 1.0); 3];
        assert_eq!(
            fit_rigid(&a, &b),
            Err(GeometryError::LengthMismatch { src: 4, dst: 3 })
        );
        assert_eq!(fit_rigid(&b[..2], &b[..2]), Err(GeometryError::TooFewPoints(2)));
        // Coincident points.
        assert_eq!(fit_rigid(&a, &a), Err(GeometryError::DegenerateFit));
        // Collinear points.
        let line: Vec<_> = (0..5).map(|i| Point3::new(i as f64, 2.0 * i as f64, 0.0)).collect();
        assert_eq!(fit_rigid(&line, &line), Err(GeometryError::DegenerateFit));
    }

    #[test]
    fn planar_clouds_are_not_degenerate() {
        let src = vec![
            Point3::new(0.0, 0.0, 1.0),
            Point3::new(0.1, 0.0, 1.0),
            Point3::new(0.0, 0.1, 1.0),
            Point3::new(0.1, 0.1, 1.0),
        ];
        let truth = RigidTransform {
            rotation: rot_z(0.3),
            translation: Vector3::new(0.02, -0.01, 0.005),
        };
        let dst: Vec<_> = src.iter().map(|p| truth.transform_point(p)).collect();
        let fit = fit_rigid(&src, &dst).unwrap();
        assert!((fit.rotation - truth.rotation).norm() < 1e-9);
        assert!((fit.translation - truth.translation).norm() < 1e-9);
    }

    #[test]
    fn compose_invert_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        assert_eq!(RigidTransform::identity().inverse(), RigidTransform::identity());
        for _ in 0..100 {
            let t = random_transform(&mut rng);
            let round = t.compose(&t.inverse());
            assert!((round.rotation - Matrix3::identity()).norm() < 1e-12);
            assert!(round.translation.norm() < 1e-12);
            let p = Point3::new(
                rng.random_range(-2.0..2.0),
                rng.random_range(-2.0..2.0),
                rng.random_range(-2.0..2.0),
            );
            let back = t.inverse().transform_point(&t.transform_point(&p));
            assert!((back - p).norm() < 1e-12);
        }
    }

    #[test]
    fn compose_matches_sequential_application() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..50 {
            let a = random_transform(&mut rng);
            let b = random_transform(&mut rng);
            let p = Point3::new(
                rng.random_range(-2.0..2.0),
                rng.random_range(-2.0..2.0),
                rng.random_range(-2.0..2.0),
            );
            let lhs = a.compose(&b).transform_point(&p);
            let rhs = a.transform_point(&b.transform_point(&p));
            assert!((lhs - rhs).norm() < 1e-12);
        }
    }

    #[test]
    fn translation_applies_to_origin() {
        let t = RigidTransform::from_translation(Vector3::new(1.0, 0.0, 0.0));
        assert_eq!(t.transform_point(&Point3::origin()), Point3::new(1.0, 0.0, 0.0));
    }

    #[test]
    fn rotation_angle_cases() {
        assert_eq!(RigidTransform::identity().rotation_angle(), 0.0);
        let quarter = RigidTransform { rotation: rot_z(std::f64::consts::FRAC_PI_2), translation: Vector3::zeros() };
        assert_abs_diff_eq!(quarter.rotation_angle(), std::f64::consts::FRAC_PI_2, epsilon = 1e-12);
        let half = RigidTransform { rotation: rot_x(std::f64::consts::PI), translation: Vector3::zeros() };
        assert_abs_diff_eq!(half.rotation_angle(), std::f64::consts::PI, epsilon = 1e-12);
    }

    #[test]
    fn yaw_cases() {
        assert_eq!(RigidTransform::identity().yaw(), 0.0);
        let t = RigidTransform { rotation: rot_z(std::f64::consts::FRAC_PI_6), translation: Vector3::zeros() };
        assert_abs_diff_eq!(t.yaw(), std::f64::consts::FRAC_PI_6, epsilon = 1e-12);
        let pitch = RigidTransform { rotation: rot_y(0.05), translation: Vector3::zeros() };
        assert_abs_diff_eq!(pitch.yaw(), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn magnitude_cases() {
        assert_eq!(RigidTransform::identity().magnitude(0.1), 0.0);
        let t = RigidTransform::from_translation(Vector3::new(0.01, 0.0, 0.0));
        assert_abs_diff_eq!(t.magnitude(0.0), 0.01, epsilon = 1e-15);
        assert_abs_diff_eq!(t.magnitude(5.0), 0.01, epsilon = 1e-15);
        let r = RigidTransform { rotation: rot_z(std::f64::consts::FRAC_PI_2), translation: Vector3::zeros() };
        assert_abs_diff_eq!(r.magnitude(0.1), 0.1 * std::f64::consts::FRAC_PI_2, epsilon = 1e-12);
    }

    #[test]
    fn magnitude_zero_iff_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let t = random_transform(&mut rng);
            let mag = t.magnitude(0.1);
            let is_identity = (t.rotation - Matrix3::identity()).norm() < 1e-12
                && t.translation.norm() < 1e-12;
            assert_eq!(mag <= 1e-12, is_identity);
        }
    }
}
