use std::f64::consts::PI;

use rayon::prelude::*;

use crate::camera::CameraModel;
use crate::environment::{EnvironmentOracle, RenderMode};
use crate::geometry::{Pose, Rotation, Vec3};
use crate::image::{Image, ImageGrid};
use crate::Result;

use super::TrajectoryRecord;

#[derive(Debug, Clone)]
pub struct Frame {
    pub id: u64,
    pub pose: Pose,
    /// One image per requested mode, in request order.
    pub images: Vec<Image>,
}

#[derive(Debug, Clone)]
pub struct Sequence {
    pub frames: Vec<Frame>,
    pub records: Vec<TrajectoryRecord>,
}

/// `frames` poses evenly spaced on a horizontal circle, all with the given orientation.
pub fn circular_trajectory(
    center: Vec3,
    radius: f64,
    frames: usize,
    orientation: Rotation,
) -> Vec<Pose> {
    (0..frames)
        .map(|k| {
            let a = 2.0 * PI * k as f64 / frames as f64;
            Pose::new(
                center + radius * Vec3::new(a.cos(), a.sin(), 0.0),
                orientation,
            )
        })
        .collect()
}

/// Render every pose in every mode; frame ids are the pose indices.
pub fn sequence_generate(
    oracle: &dyn EnvironmentOracle,
    model: &CameraModel,
    poses: &[Pose],
    grid: ImageGrid,
    modes: &[RenderMode],
) -> Result<Sequence> {
    let frames = poses
        .par_iter()
        .enumerate()
        .map(|(k, pose)| {
            let images = modes
                .iter()
                .map(|&mode| model.render(pose, grid, mode, oracle))
                .collect::<Result<Vec<_>>>()?;
            Ok(Frame {
                id: k as u64,
                pose: *pose,
                images,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let records = frames
        .iter()
        .map(|f| TrajectoryRecord {
            id: f.id,
            position: f.pose.position,
            rotation: f.pose.orientation,
        })
        .collect();
    Ok(Sequence { frames, records })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::ModelKind;
    use crate::environment::Scene;

    #[test]
    fn three_poses_three_records() {
        let scene = Scene::unit_room();
        let grid = ImageGrid::new(16, 8).unwrap();
        let model = ModelKind::Equirectangular.default_model(grid).unwrap();
        let poses = circular_trajectory(Vec3::zeros(), 0.3, 3, Rotation::identity());
        let seq = sequence_generate(&scene, &model, &poses, grid, &[RenderMode::Semantic]).unwrap();
        assert_eq!(
            seq.records.iter().map(|r| r.id).collect::<Vec<_>>(),
            vec![0, 1, 2]
        );
    }

    #[test]
    fn static_trajectory_repeats_frames() {
        let scene = Scene::reference();
        let grid = ImageGrid::new(32, 16).unwrap();
        let model = ModelKind::FishEyeEquiSolid.default_model(grid).unwrap();
        let poses = vec![Pose::at(Vec3::new(0.1, 0.1, 0.0)); 4];
        let seq = sequence_generate(&scene, &model, &poses, grid, &RenderMode::ALL).unwrap();
        for f in &seq.frames[1..] {
            assert_eq!(f.images, seq.frames[0].images);
        }
    }

    #[test]
    fn circular_trajectory_wall_depth() {
        let scene = Scene::unit_room();
        let grid = ImageGrid::new(64, 32).unwrap();
        let model = ModelKind::Equirectangular.default_model(grid).unwrap();
        let poses = circular_trajectory(Vec3::zeros(), 0.4, 8, Rotation::identity());
        let seq = sequence_generate(&scene, &model, &poses, grid, &[RenderMode::Depth]).unwrap();
        let center = 16 * 64 + 32;
        let CameraModel::Central(central) = &model else {
            unreachable!()
        };
        let (u, v) = grid.pixel_center(center);
        let dir = central.back_project(u, v, grid).unwrap().unwrap();
        for f in &seq.frames {
            let expected = (1.0 - f.pose.position.x) / dir.x;
            let got = f.images[0].depths().unwrap()[center];
            assert!((got - expected).abs() < 1e-12 * expected, "frame {}", f.id);
        }
    }
}
