//! Answers "what does the world look like along this ray?".
//!
//! An [`EnvironmentOracle`] is first *acquired* at an optical center, which
//! yields a [`Probe`] that can be sampled along any direction from that
//! center. The built-in [`Scene`] answers directly by ray casting; a
//! [`CubeMapOracle`] renders a cube map at every acquisition and samples it;
//! [`IngestedCubeMaps`] serves cube maps loaded from disk.

mod cubemap;
mod scene;

pub use cubemap::{
    acquire_cubemap, cubemap_sample, select_face, CubeData, CubeFace, CubeFrame, CubeMap,
    CubeMapOracle, Filter, ImportOptions, IngestedCubeMaps,
};
pub use scene::{Material, Room, Scene, SceneObject, Shape, AMBIENT};

use std::fmt;
use std::str::FromStr;

use crate::geometry::Vec3;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RenderMode {
    Lit,
    Semantic,
    Depth,
}

impl RenderMode {
    pub const ALL: [RenderMode; 3] = [RenderMode::Lit, RenderMode::Semantic, RenderMode::Depth];

    pub fn name(&self) -> &'static str {
        match self {
            RenderMode::Lit => "lit",
            RenderMode::Semantic => "semantic",
            RenderMode::Depth => "depth",
        }
    }
}

impl fmt::Display for RenderMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RenderMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lit" => Ok(RenderMode::Lit),
            "semantic" | "object_mask" | "mask" => Ok(RenderMode::Semantic),
            "depth" => Ok(RenderMode::Depth),
            other => Err(format!(
                "unknown render mode '{other}' (expected lit, semantic or depth)"
            )),
        }
    }
}

/// Semantic class id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Label(pub u32);

impl Label {
    pub const WALL_POS_X: Label = Label(1);
    pub const WALL_NEG_X: Label = Label(2);
    pub const WALL_POS_Y: Label = Label(3);
    pub const WALL_NEG_Y: Label = Label(4);
    pub const FLOOR: Label = Label(5);
    pub const CEILING: Label = Label(6);

    pub const ROOM: [Label; 6] = [
        Label::WALL_POS_X,
        Label::WALL_NEG_X,
        Label::WALL_POS_Y,
        Label::WALL_NEG_Y,
        Label::FLOOR,
        Label::CEILING,
    ];

    /// Largest id representable by the palette.
    pub const MAX: u32 = (1 << 24) - 1;

    pub fn is_room(&self) -> bool {
        (1..=6).contains(&self.0)
    }
}

/// Palette color of a label. The mapping spreads the id's bits over the
/// high bits of the three channels, so it is injective for ids below 2^24.
pub fn palette_color(label: Label) -> [u8; 3] {
    let mut id = label.0;
    let (mut r, mut g, mut b) = (0u8, 0u8, 0u8);
    for j in 0..8 {
        r |= ((id & 1) as u8) << (7 - j);
        g |= (((id >> 1) & 1) as u8) << (7 - j);
        b |= (((id >> 2) & 1) as u8) << (7 - j);
        id >>= 3;
    }
    [r, g, b]
}

/// Inverse of [`palette_color`].
pub fn label_from_color(rgb: [u8; 3]) -> Label {
    let mut id = 0u32;
    for j in 0..8 {
        let bit = |c: u8| ((c >> (7 - j)) & 1) as u32;
        id |= bit(rgb[0]) << (3 * j);
        id |= bit(rgb[1]) << (3 * j + 1);
        id |= bit(rgb[2]) << (3 * j + 2);
    }
    Label(id)
}

/// Everything the scene knows about the first hit along a ray.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RaySample {
    pub color: [u8; 3],
    pub label: Label,
    /// Euclidean distance from the ray origin to the hit, meters.
    pub depth: f64,
}

impl RaySample {
    pub fn value(&self, mode: RenderMode) -> PixelValue {
        match mode {
            RenderMode::Lit => PixelValue::Color(self.color),
            RenderMode::Semantic => PixelValue::Label(self.label),
            RenderMode::Depth => PixelValue::Depth(self.depth),
        }
    }
}

/// One sample in a single render mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PixelValue {
    Color([u8; 3]),
    Label(Label),
    Depth(f64),
}

/// Source of environment samples for a given optical center.
pub trait EnvironmentOracle: Sync {
    /// Prepare to answer queries from `center` in `mode`. Each call counts
    /// as one acquisition.
    fn acquire(&self, center: &Vec3, mode: RenderMode) -> Result<Box<dyn Probe + '_>>;
}

/// Samples the environment along unit directions from a fixed center.
pub trait Probe: Sync {
    fn sample(&self, dir: &Vec3) -> Result<PixelValue>;
}

impl<T: EnvironmentOracle + ?Sized> EnvironmentOracle for &T {
    fn acquire(&self, center: &Vec3, mode: RenderMode) -> Result<Box<dyn Probe + '_>> {
        (**self).acquire(center, mode)
    }
}
