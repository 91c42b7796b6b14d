//! Ground truth emitted next to the renders: room-layout maps, pose
//! trajectories and the metrics used to score estimates against them.

mod layout;
mod metrics;
mod sequence;
mod trajectory;

pub use layout::{default_dilation, dilate, layout_gt, project_room_corners, LayoutGT};
pub use metrics::{layout_metrics, LayoutMetrics};
pub use sequence::{circular_trajectory, sequence_generate, Frame, Sequence};
pub use trajectory::{
    format_trajectory, parse_trajectory, read_trajectory, rotation_error_deg, trajectory_errors,
    translation_error_deg, write_trajectory, FrameError, TrajectoryRecord, TrajectoryReport,
};

use std::path::Path;

use crate::image::{read_mask_png, write_mask_png, ImageGrid};
use crate::Result;

/// Binary image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    pub grid: ImageGrid,
    pub data: Vec<bool>,
}

impl Mask {
    pub fn empty(grid: ImageGrid) -> Self {
        Mask {
            grid,
            data: vec![false; grid.len()],
        }
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.data[j * self.grid.width + i]
    }

    pub fn set(&mut self, i: usize, j: usize) {
        self.data[j * self.grid.width + i] = true;
    }

    /// Every set pixel of `self` is set in `other`.
    pub fn is_subset_of(&self, other: &Mask) -> bool {
        self.grid == other.grid && self.data.iter().zip(&other.data).all(|(a, b)| !a || *b)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_mask_png(path, self.grid, &self.data)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let (grid, data) = read_mask_png(path)?;
        Ok(Mask { grid, data })
    }
}
