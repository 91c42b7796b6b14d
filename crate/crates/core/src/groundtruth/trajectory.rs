//! Trajectory files and pose error metrics.
//!
//! One frame per line, `id tx ty tz qx qy qz qw` (Hamilton quaternion, w
//! last, camera-to-world). Blank lines and `#` comments are ignored.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{Quaternion, Rotation3, UnitQuaternion};

use crate::geometry::{Rotation, Vec3};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRecord {
    pub id: u64,
    pub position: Vec3,
    pub rotation: Rotation,
}

impl TrajectoryRecord {
    pub fn quaternion(&self) -> UnitQuaternion<f64> {
        UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(
            *self.rotation.matrix(),
        ))
    }
}

pub fn format_trajectory(records: &[TrajectoryRecord]) -> String {
    let mut out = String::new();
    for r in records {
        let q = r.quaternion();
        let _ = writeln!(
            out,
            "{} {} {} {} {} {} {} {}",
            r.id, r.position.x, r.position.y, r.position.z, q.i, q.j, q.k, q.w
        );
    }
    out
}

pub fn parse_trajectory(text: &str) -> Result<Vec<TrajectoryRecord>> {
    let mut out: Vec<TrajectoryRecord> = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        if fields.len() != 8 {
            return Err(Error::Parse {
                line,
                message: format!(
                    "expected 8 fields `id tx ty tz qx qy qz qw`, found {}",
                    fields.len()
                ),
            });
        }
        let id: u64 = fields[0].parse().map_err(|_| Error::Parse {
            line,
            message: format!("frame id '{}' is not a non-negative integer", fields[0]),
        })?;
        let mut v = [0.0f64; 7];
        for (k, f) in fields[1..].iter().enumerate() {
            v[k] = f
                .parse()
                .ok()
                .filter(|x: &f64| x.is_finite())
                .ok_or_else(|| Error::Parse {
                    line,
                    message: format!("'{f}' is not a finite number"),
                })?;
        }
        let q = Quaternion::new(v[6], v[3], v[4], v[5]);
        if !(q.norm() > 1e-12) {
            return Err(Error::Parse {
                line,
                message: "quaternion has zero norm".into(),
            });
        }
        let rot = UnitQuaternion::from_quaternion(q).to_rotation_matrix();
        let rotation = Rotation::new(*rot.matrix()).map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?;
        if let Some(prev) = out.last() {
            if id <= prev.id {
                return Err(Error::Parse {
                    line,
                    message: format!("frame ids must increase, {id} follows {}", prev.id),
                });
            }
        }
        out.push(TrajectoryRecord {
            id,
            position: Vec3::new(v[0], v[1], v[2]),
            rotation,
        });
    }
    Ok(out)
}

pub fn write_trajectory(path: &Path, records: &[TrajectoryRecord]) -> Result<()> {
    std::fs::write(path, format_trajectory(records)).map_err(|e| Error::io(path, e))
}

pub fn read_trajectory(path: &Path) -> Result<Vec<TrajectoryRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_trajectory(&text).map_err(|e| match e {
        Error::Parse { line, message } => Error::Format {
            path: path.into(),
            message: format!("line {line}: {message}"),
        },
        other => other,
    })
}

/// Angle in degrees between two translation directions; `None` if either is zero.
pub fn translation_error_deg(gt: &Vec3, est: &Vec3) -> Option<f64> {
    if gt.norm() == 0.0 || est.norm() == 0.0 {
        return None;
    }
    Some(gt.cross(est).norm().atan2(gt.dot(est)).to_degrees())
}

/// Angle in degrees of the relative rotation `R_gt · R_estᵀ`.
pub fn rotation_error_deg(gt: &Rotation, est: &Rotation) -> f64 {
    let m = gt.matrix() * est.matrix().transpose();
    let w = Vec3::new(
        m[(2, 1)] - m[(1, 2)],
        m[(0, 2)] - m[(2, 0)],
        m[(1, 0)] - m[(0, 1)],
    );
    let trace = m[(0, 0)] + m[(1, 1)] + m[(2, 2)];
    w.norm().atan2(trace - 1.0).to_degrees()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameError {
    pub id: u64,
    /// `None` when either translation is zero.
    pub translation_deg: Option<f64>,
    pub rotation_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrajectoryReport {
    pub frames: Vec<FrameError>,
    /// Ground-truth frames with no estimate.
    pub missing: Vec<u64>,
}

impl TrajectoryReport {
    /// Frames whose translation error is undefined.
    pub fn skipped_translation(&self) -> Vec<u64> {
        self.frames
            .iter()
            .filter(|f| f.translation_deg.is_none())
            .map(|f| f.id)
            .collect()
    }

    pub fn mean_translation_deg(&self) -> Option<f64> {
        let v: Vec<f64> = self
            .frames
            .iter()
            .filter_map(|f| f.translation_deg)
            .collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }

    pub fn mean_rotation_deg(&self) -> Option<f64> {
        (!self.frames.is_empty()).then(|| {
            self.frames.iter().map(|f| f.rotation_deg).sum::<f64>() / self.frames.len() as f64
        })
    }
}

/// Per-frame errors of `est` against `gt`, matched by frame id. Every
/// estimated frame must exist in the ground truth.
pub fn trajectory_errors(
    gt: &[TrajectoryRecord],
    est: &[TrajectoryRecord],
) -> Result<TrajectoryReport> {
    let mut report = TrajectoryReport::default();
    for e in est {
        if !gt.iter().any(|g| g.id == e.id) {
            return Err(Error::domain(format!(
                "estimated frame {} has no ground truth",
                e.id
            )));
        }
    }
    for g in gt {
        match est.iter().find(|e| e.id == g.id) {
            Some(e) => report.frames.push(FrameError {
                id: g.id,
                translation_deg: translation_error_deg(&g.position, &e.position),
                rotation_deg: rotation_error_deg(&g.rotation, &e.rotation),
            }),
            None => report.missing.push(g.id),
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rec(id: u64, t: [f64; 3], r: Rotation) -> TrajectoryRecord {
        TrajectoryRecord {
            id,
            position: Vec3::new(t[0], t[1], t[2]),
            rotation: r,
        }
    }

    #[test]
    fn quarter_turn_is_ninety_degrees() {
        let e = rotation_error_deg(
            &Rotation::identity(),
            &Rotation::rot_z(std::f64::consts::FRAC_PI_2),
        );
        assert!((e - 90.0).abs() < 1e-9);
        let e = rotation_error_deg(
            &Rotation::rot_x(0.4),
            &Rotation::rot_x(0.4).compose(&Rotation::rot_y(1.0)),
        );
        assert!((e - 1f64.to_degrees()).abs() < 1e-9);
    }

    #[test]
    fn zero_translation_is_skipped() {
        assert_eq!(translation_error_deg(&Vec3::zeros(), &Vec3::x()), None);
        let gt = [
            rec(0, [0.0; 3], Rotation::identity()),
            rec(1, [1.0, 0.0, 0.0], Rotation::identity()),
        ];
        let report = trajectory_errors(&gt, &gt).unwrap();
        assert_eq!(report.skipped_translation(), vec![0]);
        assert_eq!(report.frames[1].translation_deg, Some(0.0));
    }

    #[test]
    fn unmatched_ids() {
        let gt = [
            rec(0, [1.0, 0.0, 0.0], Rotation::identity()),
            rec(1, [1.0, 1.0, 0.0], Rotation::identity()),
        ];
        let report = trajectory_errors(&gt, &gt[..1]).unwrap();
        assert_eq!(report.missing, vec![1]);
        assert!(trajectory_errors(&gt[..1], &gt).is_err());
    }

    #[test]
    fn file_round_trip() {
        let recs = vec![
            rec(
                0,
                [0.1, -0.2, 0.3],
                Rotation::from_yaw_pitch_roll(0.3, -0.2, 0.1),
            ),
            rec(5, [1.0, 2.0, 3.0], Rotation::rot_z(2.5)),
        ];
        let back = parse_trajectory(&format_trajectory(&recs)).unwrap();
        assert_eq!(back.len(), 2);
        for (a, b) in recs.iter().zip(&back) {
            assert_eq!(a.id, b.id);
            assert_eq!(a.position, b.position);
            assert!(rotation_error_deg(&a.rotation, &b.rotation) < 1e-9);
        }
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(
            parse_trajectory("0 1 2 3 0 0 0\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_trajectory("# c\n0 1 2 3 0 0 0 0\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(parse_trajectory("1 0 0 0 0 0 0 1\n1 0 0 0 0 0 0 1\n").is_err());
        assert!(parse_trajectory("x 0 0 0 0 0 0 1\n").is_err());
    }

    fn rotation() -> impl Strategy<Value = Rotation> {
        (-3.1f64..3.1, -1.5f64..1.5, -3.1f64..3.1)
            .prop_map(|(y, p, r)| Rotation::from_yaw_pitch_roll(y, p, r))
    }

    proptest! {
        #[test]
        fn identical_inputs_give_exact_zero(r in rotation(), t in prop::array::uniform3(-5.0f64..5.0)) {
            prop_assume!(Vec3::from(t).norm() > 1e-6);
            let a = rec(0, t, r);
            let report = trajectory_errors(&[a], &[a]).unwrap();
            prop_assert_eq!(report.frames[0].rotation_deg, 0.0);
            prop_assert_eq!(report.frames[0].translation_deg, Some(0.0));
        }

        #[test]
        fn rotation_error_is_symmetric(a in rotation(), b in rotation()) {
            prop_assert_eq!(rotation_error_deg(&a, &b), rotation_error_deg(&b, &a));
        }

        #[test]
        fn translation_error_is_scale_free(t in prop::array::uniform3(-5.0f64..5.0), s in 0.01f64..100.0) {
            let t = Vec3::from(t);
            prop_assume!(t.norm() > 1e-6);
            prop_assert!(translation_error_deg(&t, &(s * t)).unwrap() < 1e-9);
        }
    }
}
