use crate::central::CentralModel;
use crate::environment::{Room, Scene};
use crate::geometry::{Pose, Vec3};
use crate::image::ImageGrid;
use crate::{Error, Result};

use super::Mask;

/// Edge and corner maps of the room's structural lines.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayoutGT {
    pub edges: Mask,
    pub corners: Mask,
}

/// Dilation radius in pixels: 4 px at 1024 px width, linear in width.
pub fn default_dilation(grid: ImageGrid) -> f64 {
    4.0 * grid.width as f64 / 1024.0
}

/// Projected spacing below which an edge is no longer subdivided.
const MAX_STEP_PX: f64 = 0.25;
const MAX_DEPTH: u32 = 48;
/// Subdivision depth explored while both ends of a piece are out of view.
const BLIND_DEPTH: u32 = 10;

struct Rasterizer<'a> {
    model: &'a CentralModel,
    pose: &'a Pose,
    grid: ImageGrid,
    wrap: bool,
    mask: Mask,
}

impl Rasterizer<'_> {
    fn project(&self, p: &Vec3) -> Option<(f64, f64)> {
        let d = self.pose.point_to_camera(p);
        self.model.project(&d, self.grid)
    }

    fn mark(&mut self, (u, v): (f64, f64)) {
        let (w, h) = (self.grid.width as f64, self.grid.height as f64);
        let u = if self.wrap { u.rem_euclid(w) } else { u };
        if !(u >= 0.0 && u <= w && v >= 0.0 && v <= h) {
            return;
        }
        let i = (u.floor() as usize).min(self.grid.width - 1);
        let j = (v.floor() as usize).min(self.grid.height - 1);
        self.mask.set(i, j);
    }

    fn pixel_distance(&self, a: (f64, f64), b: (f64, f64)) -> f64 {
        let mut du = (a.0 - b.0).abs();
        if self.wrap {
            du = du.min(self.grid.width as f64 - du);
        }
        du.hypot(a.1 - b.1)
    }

    fn segment(&mut self, a: Vec3, b: Vec3) {
        let (pa, pb) = (self.project(&a), self.project(&b));
        if let Some(p) = pa {
            self.mark(p);
        }
        if let Some(p) = pb {
            self.mark(p);
        }
        self.subdivide(a, pa, b, pb, 0);
    }

    fn subdivide(
        &mut self,
        a: Vec3,
        pa: Option<(f64, f64)>,
        b: Vec3,
        pb: Option<(f64, f64)>,
        depth: u32,
    ) {
        if depth >= MAX_DEPTH {
            return;
        }
        match (pa, pb) {
            (Some(x), Some(y)) if self.pixel_distance(x, y) <= MAX_STEP_PX => return,
            (None, None) if depth >= BLIND_DEPTH => return,
            _ => {}
        }
        let m = 0.5 * (a + b);
        let pm = self.project(&m);
        if let Some(p) = pm {
            self.mark(p);
        }
        self.subdivide(a, pa, m, pm, depth + 1);
        self.subdivide(m, pm, b, pb, depth + 1);
    }
}

/// Dilate a mask by a disc of radius `radius` pixels (wrapping horizontally if asked).
pub fn dilate(mask: &Mask, radius: f64, wrap: bool) -> Mask {
    let grid = mask.grid;
    let r = radius.max(0.0);
    let reach = r.floor() as isize;
    let offsets: Vec<(isize, isize)> = (-reach..=reach)
        .flat_map(|dy| (-reach..=reach).map(move |dx| (dx, dy)))
        .filter(|&(dx, dy)| ((dx * dx + dy * dy) as f64) <= r * r)
        .collect();
    let (w, h) = (grid.width as isize, grid.height as isize);
    let mut out = Mask::empty(grid);
    for j in 0..h {
        for i in 0..w {
            if !mask.get(i as usize, j as usize) {
                continue;
            }
            for &(dx, dy) in &offsets {
                let y = j + dy;
                if y < 0 || y >= h {
                    continue;
                }
                let x = if wrap {
                    (i + dx).rem_euclid(w)
                } else if i + dx < 0 || i + dx >= w {
                    continue;
                } else {
                    i + dx
                };
                out.set(x as usize, y as usize);
            }
        }
    }
    out
}

/// Continuous pixel coordinates of the eight room corners (`None` when not imaged).
pub fn project_room_corners(
    room: &Room,
    model: &CentralModel,
    pose: &Pose,
    grid: ImageGrid,
) -> Vec<Option<(f64, f64)>> {
    room.corners()
        .iter()
        .map(|c| model.project(&pose.point_to_camera(c), grid))
        .collect()
}

/// Rasterize the room's twelve edges and eight corners as seen by `model`
/// at `pose`, then dilate both maps by `dilation` pixels.
pub fn layout_gt(
    scene: &Scene,
    model: &CentralModel,
    pose: &Pose,
    grid: ImageGrid,
    dilation: f64,
) -> Result<LayoutGT> {
    let room = &scene.room;
    if !room.contains_strictly(&pose.position) {
        return Err(Error::domain(
            "layout ground truth needs a camera strictly inside the room",
        ));
    }
    if !(dilation >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "dilation must be ≥ 0, got {dilation}"
        )));
    }
    let wrap = model.wraps_horizontally();
    let corners = room.corners();
    let mut raster = Rasterizer {
        model,
        pose,
        grid,
        wrap,
        mask: Mask::empty(grid),
    };
    for (a, b) in room.edges() {
        raster.segment(corners[a], corners[b]);
    }
    let edges = raster.mask;
    let mut corner_raster = Rasterizer {
        model,
        pose,
        grid,
        wrap,
        mask: Mask::empty(grid),
    };
    for p in project_room_corners(room, model, pose, grid)
        .into_iter()
        .flatten()
    {
        corner_raster.mark(p);
    }
    Ok(LayoutGT {
        edges: dilate(&edges, dilation, wrap),
        corners: dilate(&corner_raster.mask, dilation, wrap),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::central::FishEyeLens;
    use crate::geometry::Rotation;

    fn components(mask: &Mask, wrap: bool) -> usize {
        let (w, h) = (mask.grid.width, mask.grid.height);
        let mut seen = vec![false; w * h];
        let mut count = 0;
        for start in 0..w * h {
            if !mask.data[start] || seen[start] {
                continue;
            }
            count += 1;
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(p) = stack.pop() {
                let (i, j) = ((p % w) as isize, (p / w) as isize);
                for dy in -1..=1isize {
                    for dx in -1..=1isize {
                        let y = j + dy;
                        let mut x = i + dx;
                        if y < 0 || y >= h as isize {
                            continue;
                        }
                        if wrap {
                            x = x.rem_euclid(w as isize);
                        } else if x < 0 || x >= w as isize {
                            continue;
                        }
                        let q = y as usize * w + x as usize;
                        if mask.data[q] && !seen[q] {
                            seen[q] = true;
                            stack.push(q);
                        }
                    }
                }
            }
        }
        count
    }

    #[test]
    fn equirect_center_camera_sees_eight_corners() {
        let grid = ImageGrid::new(256, 128).unwrap();
        let gt = layout_gt(
            &Scene::unit_room(),
            &CentralModel::Equirect,
            &Pose::default(),
            grid,
            2.0,
        )
        .unwrap();
        assert_eq!(components(&gt.corners, true), 8);
        assert!(gt.corners.is_subset_of(&gt.edges));
        assert!(gt.edges.count() > 0);
    }

    #[test]
    fn fisheye_layout_is_nonempty_and_contains_corners() {
        let grid = ImageGrid::new(128, 128).unwrap();
        let model = CentralModel::fisheye(
            FishEyeLens::EquiAngular,
            64.0 / (std::f64::consts::PI / 2.0),
        )
        .unwrap();
        let pose = Pose::new(Vec3::new(0.1, 0.0, -0.2), Rotation::rot_y(-0.3));
        let gt = layout_gt(&Scene::unit_room(), &model, &pose, grid, 1.5).unwrap();
        assert!(gt.edges.count() > 100);
        assert!(gt.corners.is_subset_of(&gt.edges));
    }

    #[test]
    fn camera_outside_room_is_rejected() {
        let grid = ImageGrid::new(8, 4).unwrap();
        let pose = Pose::at(Vec3::new(3.0, 0.0, 0.0));
        assert!(layout_gt(
            &Scene::unit_room(),
            &CentralModel::Equirect,
            &pose,
            grid,
            1.0
        )
        .is_err());
    }

    #[test]
    fn dilation_disc_shape() {
        let grid = ImageGrid::new(9, 9).unwrap();
        let mut m = Mask::empty(grid);
        m.set(4, 4);
        assert_eq!(dilate(&m, 0.0, false).count(), 1);
        assert_eq!(dilate(&m, 1.0, false).count(), 5);
        assert_eq!(dilate(&m, 2.0, false).count(), 13);
        let mut edge = Mask::empty(grid);
        edge.set(0, 4);
        assert_eq!(dilate(&edge, 1.0, true).count(), 5);
        assert_eq!(dilate(&edge, 1.0, false).count(), 4);
    }
}
