//! Coordinate frames, angular parameterizations, rotations and Plücker lines.
//!
//! The world frame is right-handed with Z up and X forward at azimuth zero.
//! Panoramic models address directions by (azimuth, elevation) around the
//! camera X axis; revolution-symmetric models (fish-eye, catadioptric) use
//! (azimuth, polar angle) measured from the camera optical axis +Z.

use nalgebra::{Matrix3, Vector3};

use crate::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// A direction in spherical coordinates. The two angle conventions are
/// separate variants and are never converted implicitly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SphericalDir {
    /// Azimuth `theta` in [-π, π], elevation `phi` in [-π/2, π/2].
    Elevation { theta: f64, phi: f64 },
    /// Azimuth `theta` in [-π, π], polar angle `phi` in [0, π] from +Z.
    Polar { theta: f64, phi: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AngleConvention {
    Elevation,
    Polar,
}

impl SphericalDir {
    pub fn theta(&self) -> f64 {
        match *self {
            SphericalDir::Elevation { theta, .. } | SphericalDir::Polar { theta, .. } => theta,
        }
    }

    pub fn phi(&self) -> f64 {
        match *self {
            SphericalDir::Elevation { phi, .. } | SphericalDir::Polar { phi, .. } => phi,
        }
    }
}

/// Unit vector for a spherical direction.
pub fn spherical_to_dir(s: SphericalDir) -> Vec3 {
    match s {
        SphericalDir::Elevation { theta, phi } => {
            let (st, ct) = theta.sin_cos();
            let (sp, cp) = phi.sin_cos();
            Vec3::new(cp * ct, cp * st, sp)
        }
        SphericalDir::Polar { theta, phi } => {
            let (st, ct) = theta.sin_cos();
            let (sp, cp) = phi.sin_cos();
            Vec3::new(sp * ct, sp * st, cp)
        }
    }
}

/// Inverse of [`spherical_to_dir`]. On the axis the azimuth is pinned to 0.
pub fn dir_to_spherical(v: &Vec3, convention: AngleConvention) -> Result<SphericalDir> {
    let norm = v.norm();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::domain(
            "cannot convert a zero or non-finite vector to spherical",
        ));
    }
    let horiz = v.x.hypot(v.y);
    let theta = if horiz == 0.0 { 0.0 } else { v.y.atan2(v.x) };
    Ok(match convention {
        AngleConvention::Elevation => SphericalDir::Elevation {
            theta,
            phi: v.z.atan2(horiz),
        },
        AngleConvention::Polar => SphericalDir::Polar {
            theta,
            phi: horiz.atan2(v.z),
        },
    })
}

/// Left-handed engine frame to the right-handed world frame (Y is negated).
pub fn ue4_to_world(v: &Vec3) -> Vec3 {
    Vec3::new(v.x, -v.y, v.z)
}

pub fn world_to_ue4(v: &Vec3) -> Vec3 {
    Vec3::new(v.x, -v.y, v.z)
}

/// Orthonormal 3×3 rotation matrix with determinant +1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation(Matrix3<f64>);

impl Default for Rotation {
    fn default() -> Self {
        Self::identity()
    }
}

impl Rotation {
    /// Tolerance used when accepting externally supplied matrices.
    pub const ACCEPT_TOL: f64 = 1e-6;

    pub fn identity() -> Self {
        Rotation(Matrix3::identity())
    }

    pub fn new(m: Matrix3<f64>) -> Result<Self> {
        let err = (m.transpose() * m - Matrix3::identity()).abs().max();
        if !(err < Self::ACCEPT_TOL) {
            return Err(Error::domain(format!(
                "matrix is not orthonormal (max |RᵀR - I| = {err:e})"
            )));
        }
        let det = m.determinant();
        if (det - 1.0).abs() > Self::ACCEPT_TOL {
            return Err(Error::domain(format!(
                "rotation determinant is {det}, expected +1"
            )));
        }
        Ok(Rotation(m))
    }

    pub fn from_axis_angle(axis: &Vec3, angle: f64) -> Result<Self> {
        let n = axis.norm();
        if !(n > 0.0) {
            return Err(Error::domain("rotation axis must be non-zero"));
        }
        let k = axis / n;
        let (s, c) = angle.sin_cos();
        let t = 1.0 - c;
        #[rustfmt::skip]
        let m = Matrix3::new(
            t * k.x * k.x + c,       t * k.x * k.y - s * k.z, t * k.x * k.z + s * k.y,
            t * k.x * k.y + s * k.z, t * k.y * k.y + c,       t * k.y * k.z - s * k.x,
            t * k.x * k.z - s * k.y, t * k.y * k.z + s * k.x, t * k.z * k.z + c,
        );
        Ok(Rotation(m))
    }

    pub fn rot_x(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Rotation(Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c))
    }

    pub fn rot_y(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Rotation(Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c))
    }

    pub fn rot_z(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Rotation(Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0))
    }

    /// Camera-to-world rotation from yaw (about world Z), pitch (nose up
    /// positive) and roll (about the forward axis), applied in that order as
    /// intrinsic rotations: `R = Rz(yaw) · Ry(-pitch) · Rx(roll)`.
    pub fn from_yaw_pitch_roll(yaw: f64, pitch: f64, roll: f64) -> Self {
        Self::rot_z(yaw)
            .compose(&Self::rot_y(-pitch))
            .compose(&Self::rot_x(roll))
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    /// `self · other` (apply `other` first).
    pub fn compose(&self, other: &Rotation) -> Rotation {
        Rotation(self.0 * other.0)
    }

    pub fn inverse(&self) -> Rotation {
        Rotation(self.0.transpose())
    }

    pub fn apply(&self, v: &Vec3) -> Vec3 {
        self.0 * v
    }

    pub fn apply_inverse(&self, v: &Vec3) -> Vec3 {
        self.0.tr_mul(v)
    }
}

/// Camera pose: position in world meters, camera-to-world orientation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Pose {
    pub position: Vec3,
    pub orientation: Rotation,
}

impl Pose {
    pub fn new(position: Vec3, orientation: Rotation) -> Self {
        Pose {
            position,
            orientation,
        }
    }

    pub fn at(position: Vec3) -> Self {
        Pose {
            position,
            orientation: Rotation::identity(),
        }
    }

    /// Express a camera-frame Plücker line in the world frame.
    pub fn line_to_world(&self, line: &PluckerRay) -> PluckerRay {
        let xi = self.orientation.apply(&line.xi);
        let xi_bar = self.orientation.apply(&line.xi_bar) + self.position.cross(&xi);
        PluckerRay { xi, xi_bar }
    }

    pub fn point_to_world(&self, p: &Vec3) -> Vec3 {
        self.position + self.orientation.apply(p)
    }

    pub fn point_to_camera(&self, p: &Vec3) -> Vec3 {
        self.orientation.apply_inverse(&(p - self.position))
    }
}

/// Rotate a camera-frame ray into the world. Returns `(origin, unit direction)`.
pub fn compose_pose(pose: &Pose, camera_ray: &Vec3) -> Result<(Vec3, Vec3)> {
    let dir = pose.orientation.apply(camera_ray);
    let n = dir.norm();
    if !(n > 0.0) {
        return Err(Error::domain("camera ray must be non-zero"));
    }
    Ok((pose.position, dir / n))
}

/// Oriented 3D line: unit direction `xi` and moment `xi_bar = p × xi` for any
/// point `p` on the line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PluckerRay {
    pub xi: Vec3,
    pub xi_bar: Vec3,
}

impl PluckerRay {
    /// Normalize a raw (direction, moment) pair so that |xi| = 1.
    pub fn from_raw(xi: Vec3, xi_bar: Vec3) -> Result<Self> {
        let n = xi.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::domain("Plücker direction must be non-zero"));
        }
        Ok(PluckerRay {
            xi: xi / n,
            xi_bar: xi_bar / n,
        })
    }

    /// `xi · xi_bar`; zero for a valid line.
    pub fn side_constraint(&self) -> f64 {
        self.xi.dot(&self.xi_bar)
    }

    /// Point on the line closest to the origin.
    pub fn closest_point_to_origin(&self) -> Vec3 {
        self.xi.cross(&self.xi_bar)
    }

    /// Euclidean distance from `p` to the line.
    pub fn distance_to_point(&self, p: &Vec3) -> f64 {
        (p.cross(&self.xi) - self.xi_bar).norm()
    }
}

/// Line through `p` with direction `d`.
pub fn plucker_from_point_dir(p: &Vec3, d: &Vec3) -> Result<PluckerRay> {
    let n = d.norm();
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::domain("line direction must be non-zero"));
    }
    let xi = d / n;
    Ok(PluckerRay {
        xi,
        xi_bar: p.cross(&xi),
    })
}

/// Elevation within this margin of ±π/2 is treated as a pole in tests.
pub const POLE_MARGIN: f64 = 1e-6;

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn elevation_axes() {
        let x = spherical_to_dir(SphericalDir::Elevation {
            theta: 0.0,
            phi: 0.0,
        });
        assert_abs_diff_eq!(x, Vec3::new(1.0, 0.0, 0.0), epsilon = 1e-15);
        let y = spherical_to_dir(SphericalDir::Elevation {
            theta: PI / 2.0,
            phi: 0.0,
        });
        assert_abs_diff_eq!(y, Vec3::new(0.0, 1.0, 0.0), epsilon = 1e-15);
        let z = spherical_to_dir(SphericalDir::Polar {
            theta: 1.2,
            phi: 0.0,
        });
        assert_abs_diff_eq!(z, Vec3::new(0.0, 0.0, 1.0), epsilon = 1e-15);
    }

    #[test]
    fn spherical_round_trip_fixed() {
        let v = spherical_to_dir(SphericalDir::Elevation {
            theta: 0.3,
            phi: 0.7,
        });
        let s = dir_to_spherical(&v, AngleConvention::Elevation).unwrap();
        assert!(matches!(s, SphericalDir::Elevation { .. }));
        assert_abs_diff_eq!(s.theta(), 0.3, epsilon = 1e-12);
        assert_abs_diff_eq!(s.phi(), 0.7, epsilon = 1e-12);
    }

    #[test]
    fn pole_and_zero_vector() {
        let s = dir_to_spherical(&Vec3::new(1.0, 0.0, 0.0), AngleConvention::Elevation).unwrap();
        assert_eq!(
            s,
            SphericalDir::Elevation {
                theta: 0.0,
                phi: 0.0
            }
        );
        let s = dir_to_spherical(&Vec3::new(0.0, 0.0, 1.0), AngleConvention::Elevation).unwrap();
        assert_eq!(
            s,
            SphericalDir::Elevation {
                theta: 0.0,
                phi: PI / 2.0
            }
        );
        let s = dir_to_spherical(&Vec3::new(0.0, 0.0, -3.0), AngleConvention::Polar).unwrap();
        assert_eq!(
            s,
            SphericalDir::Polar {
                theta: 0.0,
                phi: PI
            }
        );
        assert!(dir_to_spherical(&Vec3::zeros(), AngleConvention::Polar).is_err());
    }

    #[test]
    fn ue4_flip() {
        let v = Vec3::new(1.0, 2.0, 3.0);
        assert_eq!(ue4_to_world(&v), Vec3::new(1.0, -2.0, 3.0));
        assert_eq!(world_to_ue4(&ue4_to_world(&v)), v);
        // the map is a reflection: triple products change sign
        let (a, b, c) = (
            Vec3::new(0.3, -1.0, 2.0),
            Vec3::new(1.5, 0.2, -0.7),
            Vec3::new(-0.4, 0.9, 0.1),
        );
        let before = a.dot(&b.cross(&c));
        let after = ue4_to_world(&a).dot(&ue4_to_world(&b).cross(&ue4_to_world(&c)));
        assert_abs_diff_eq!(before, -after, epsilon = 1e-14);
    }

    #[test]
    fn plucker_examples() {
        let l = plucker_from_point_dir(&Vec3::zeros(), &Vec3::new(0.0, 0.0, 1.0)).unwrap();
        assert_eq!(l.xi, Vec3::new(0.0, 0.0, 1.0));
        assert_eq!(l.xi_bar, Vec3::zeros());
        let l =
            plucker_from_point_dir(&Vec3::new(1.0, 0.0, 0.0), &Vec3::new(0.0, 1.0, 0.0)).unwrap();
        assert_eq!(l.xi, Vec3::new(0.0, 1.0, 0.0));
        assert_eq!(l.xi_bar, Vec3::new(0.0, 0.0, 1.0));
        assert!(plucker_from_point_dir(&Vec3::zeros(), &Vec3::zeros()).is_err());
    }

    #[test]
    fn compose_pose_examples() {
        let (o, d) = compose_pose(&Pose::default(), &Vec3::new(1.0, 0.0, 0.0)).unwrap();
        assert_eq!(o, Vec3::zeros());
        assert_eq!(d, Vec3::new(1.0, 0.0, 0.0));
        let pose = Pose::new(Vec3::new(0.1, 0.2, 0.3), Rotation::rot_z(PI / 2.0));
        let (o, d) = compose_pose(&pose, &Vec3::new(1.0, 0.0, 0.0)).unwrap();
        assert_eq!(o, Vec3::new(0.1, 0.2, 0.3));
        assert_abs_diff_eq!(d, Vec3::new(0.0, 1.0, 0.0), epsilon = 1e-15);
    }

    #[test]
    fn yaw_pitch_roll_convention() {
        let r = Rotation::from_yaw_pitch_roll(PI / 2.0, 0.0, 0.0);
        assert_abs_diff_eq!(r.apply(&Vec3::x()), Vec3::y(), epsilon = 1e-15);
        let r = Rotation::from_yaw_pitch_roll(0.0, PI / 2.0, 0.0);
        assert_abs_diff_eq!(r.apply(&Vec3::x()), Vec3::z(), epsilon = 1e-15);
        assert!(Rotation::new(Matrix3::new(1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 1.0)).is_err());
        assert!(Rotation::new(Matrix3::from_diagonal_element(2.0)).is_err());
    }

    #[test]
    fn rotation_chain_stays_orthonormal() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        let mut acc = Rotation::identity();
        for _ in 0..1000 {
            let axis = Vec3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            );
            let r = Rotation::from_axis_angle(&axis, rng.random_range(-PI..PI)).unwrap();
            acc = acc.compose(&r);
        }
        let m = acc.matrix();
        assert!((m.transpose() * m - Matrix3::identity()).abs().max() < 1e-10);
        assert!((m.determinant() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn spherical_round_trip_bulk() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        for _ in 0..100_000 {
            let theta = rng.random_range(-PI..PI);
            let phi = rng.random_range(
                -(std::f64::consts::FRAC_PI_2 - POLE_MARGIN)
                    ..(std::f64::consts::FRAC_PI_2 - POLE_MARGIN),
            );
            let v = spherical_to_dir(SphericalDir::Elevation { theta, phi });
            let s = dir_to_spherical(&v, AngleConvention::Elevation).unwrap();
            assert!((s.theta() - theta).abs() < 1e-12 && (s.phi() - phi).abs() < 1e-12);
            let back = spherical_to_dir(s);
            assert!((back - v).norm() < 1e-12);
        }
    }

    fn unit_vec() -> impl Strategy<Value = Vec3> {
        (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0)
            .prop_filter("non-degenerate", |(x, y, z)| x * x + y * y + z * z > 1e-3)
            .prop_map(|(x, y, z)| Vec3::new(x, y, z).normalize())
    }

    proptest! {
        #[test]
        fn dir_round_trip(v in unit_vec(), polar in any::<bool>()) {
            let conv = if polar { AngleConvention::Polar } else { AngleConvention::Elevation };
            let back = spherical_to_dir(dir_to_spherical(&v, conv).unwrap());
            prop_assert!((back - v).norm() < 1e-12);
        }

        #[test]
        fn closest_point_lies_on_line(
            p in (-5.0f64..5.0, -5.0f64..5.0, -5.0f64..5.0),
            d in unit_vec(),
        ) {
            let p = Vec3::new(p.0, p.1, p.2);
            let l = plucker_from_point_dir(&p, &d).unwrap();
            prop_assert!(l.side_constraint().abs() < 1e-10);
            prop_assert!(l.distance_to_point(&l.closest_point_to_origin()) < 1e-10);
            prop_assert!(l.distance_to_point(&p) < 1e-10);
        }

        #[test]
        fn compose_is_associative(
            a1 in unit_vec(), t1 in -3.0f64..3.0,
            a2 in unit_vec(), t2 in -3.0f64..3.0,
            v in unit_vec(),
        ) {
            let r1 = Rotation::from_axis_angle(&a1, t1).unwrap();
            let r2 = Rotation::from_axis_angle(&a2, t2).unwrap();
            let (_, d12) = compose_pose(&Pose::new(Vec3::zeros(), r1.compose(&r2)), &v).unwrap();
            let (_, d2) = compose_pose(&Pose::new(Vec3::zeros(), r2), &v).unwrap();
            let (_, d) = compose_pose(&Pose::new(Vec3::zeros(), r1), &d2).unwrap();
            prop_assert!((d12 - d).norm() < 1e-12);
        }

        #[test]
        fn line_transform_keeps_constraint(
            p in (-2.0f64..2.0, -2.0f64..2.0, -2.0f64..2.0),
            d in unit_vec(), axis in unit_vec(), ang in -3.0f64..3.0,
            t in (-2.0f64..2.0, -2.0f64..2.0, -2.0f64..2.0),
        ) {
            let p = Vec3::new(p.0, p.1, p.2);
            let pose = Pose::new(Vec3::new(t.0, t.1, t.2), Rotation::from_axis_angle(&axis, ang).unwrap());
            let w = pose.line_to_world(&plucker_from_point_dir(&p, &d).unwrap());
            prop_assert!(w.side_constraint().abs() < 1e-10);
            prop_assert!(w.distance_to_point(&pose.point_to_world(&p)) < 1e-10);
        }
    }
}
