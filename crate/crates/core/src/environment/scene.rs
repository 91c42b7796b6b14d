//! Procedural room scene and its analytic ray caster.
//!
//! Scene files are line oriented; `#` starts a comment:
//!
//! ```text
//! room W D H                          # required, centered at the origin
//! box cx cy cz sx sy sz label r g b   # axis-aligned, full side lengths
//! sphere cx cy cz radius label r g b
//! light lx ly lz                      # direction towards the light
//! checker on|off                      # checker texture on room surfaces
//! ```
//!
//! The room spans `[-W/2, W/2] × [-D/2, D/2] × [-H/2, H/2]`. Its six faces
//! carry the reserved labels 1..=6; object labels must be 7 or larger.

use std::path::Path;

use super::{EnvironmentOracle, Label, PixelValue, Probe, RaySample, RenderMode};
use crate::geometry::Vec3;
use crate::{Error, Result};

/// Ambient term of the lit shading.
pub const AMBIENT: f64 = 0.2;

const CHECKER_SIZE: f64 = 0.25;
const CHECKER_DARKEN: f64 = 0.7;
const EPS_T: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Room {
    pub width: f64,
    pub depth: f64,
    pub height: f64,
}

impl Room {
    pub fn half_extents(&self) -> Vec3 {
        Vec3::new(self.width / 2.0, self.depth / 2.0, self.height / 2.0)
    }

    pub fn contains_strictly(&self, p: &Vec3) -> bool {
        let h = self.half_extents();
        (0..3).all(|a| p[a] > -h[a] && p[a] < h[a])
    }

    pub fn diagonal(&self) -> f64 {
        (self.width.powi(2) + self.depth.powi(2) + self.height.powi(2)).sqrt()
    }

    /// The eight corners, floor first, counter-clockwise seen from above.
    pub fn corners(&self) -> [Vec3; 8] {
        let h = self.half_extents();
        let ring = [(1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0)];
        let mut out = [Vec3::zeros(); 8];
        for (k, z) in [-h.z, h.z].into_iter().enumerate() {
            for (i, (sx, sy)) in ring.iter().enumerate() {
                out[4 * k + i] = Vec3::new(sx * h.x, sy * h.y, z);
            }
        }
        out
    }

    /// The twelve edges as corner index pairs: floor ring, ceiling ring, verticals.
    pub fn edges(&self) -> [(usize, usize); 12] {
        [
            (0, 1),
            (1, 2),
            (2, 3),
            (3, 0),
            (4, 5),
            (5, 6),
            (6, 7),
            (7, 4),
            (0, 4),
            (1, 5),
            (2, 6),
            (3, 7),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    /// Axis-aligned box; `size` holds full side lengths.
    Box {
        center: Vec3,
        size: Vec3,
    },
    Sphere {
        center: Vec3,
        radius: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Material {
    Solid([u8; 3]),
    Checker([u8; 3]),
}

impl Material {
    fn albedo(&self, p: &Vec3, normal_axis: usize) -> [f64; 3] {
        let (base, checker) = match *self {
            Material::Solid(c) => (c, false),
            Material::Checker(c) => (c, true),
        };
        let mut a = base.map(|c| c as f64 / 255.0);
        if checker {
            let (i, j) = match normal_axis {
                0 => (1, 2),
                1 => (0, 2),
                _ => (0, 1),
            };
            let cell = (p[i] / CHECKER_SIZE).floor() + (p[j] / CHECKER_SIZE).floor();
            if cell.rem_euclid(2.0) == 1.0 {
                a = a.map(|c| c * CHECKER_DARKEN);
            }
        }
        a
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneObject {
    pub shape: Shape,
    pub albedo: [u8; 3],
    pub label: Label,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub room: Room,
    pub objects: Vec<SceneObject>,
    /// Unit direction towards the light.
    pub light: Vec3,
    pub checker: bool,
}

const ROOM_ALBEDO: [[u8; 3]; 6] = [
    [205, 192, 170],
    [190, 200, 185],
    [200, 185, 185],
    [185, 190, 205],
    [140, 100, 70],
    [235, 235, 230],
];

struct Hit {
    t: f64,
    normal: Vec3,
    normal_axis: usize,
    material: Material,
    label: Label,
}

impl Scene {
    pub fn default_light() -> Vec3 {
        Vec3::new(-0.4, -0.3, 0.85).normalize()
    }

    pub fn new(room: Room, objects: Vec<SceneObject>, light: Vec3, checker: bool) -> Result<Self> {
        let scene = Scene {
            room,
            objects,
            light,
            checker,
        };
        scene.validate()?;
        let mut scene = scene;
        scene.light = scene.light.normalize();
        Ok(scene)
    }

    /// Empty 2×2×2 m room centered at the origin.
    pub fn unit_room() -> Self {
        Scene {
            room: Room {
                width: 2.0,
                depth: 2.0,
                height: 2.0,
            },
            objects: Vec::new(),
            light: Self::default_light(),
            checker: false,
        }
    }

    /// The 2×2×2 m reference room with a sphere, a box and checkered walls.
    pub fn reference() -> Self {
        let mut s = Self::unit_room();
        s.checker = true;
        s.objects = vec![
            SceneObject {
                shape: Shape::Sphere {
                    center: Vec3::new(0.6, 0.45, -0.4),
                    radius: 0.2,
                },
                albedo: [200, 40, 40],
                label: Label(7),
            },
            SceneObject {
                shape: Shape::Box {
                    center: Vec3::new(-0.5, -0.55, -0.75),
                    size: Vec3::new(0.4, 0.4, 0.5),
                },
                albedo: [40, 90, 200],
                label: Label(8),
            },
            SceneObject {
                shape: Shape::Box {
                    center: Vec3::new(0.1, 0.85, 0.3),
                    size: Vec3::new(0.6, 0.1, 0.4),
                },
                albedo: [60, 160, 60],
                label: Label(9),
            },
        ];
        s
    }

    pub fn validate(&self) -> Result<()> {
        let r = &self.room;
        if !(r.width > 0.0 && r.depth > 0.0 && r.height > 0.0) {
            return Err(Error::InvalidParameter(
                "room dimensions must be positive".into(),
            ));
        }
        if !(self.light.norm() > 0.0) {
            return Err(Error::InvalidParameter(
                "light direction must be non-zero".into(),
            ));
        }
        let h = r.half_extents();
        let mut colors: Vec<(Label, [u8; 3])> = Vec::new();
        for (i, o) in self.objects.iter().enumerate() {
            if o.label.0 <= 6 || o.label.0 > Label::MAX {
                return Err(Error::InvalidParameter(format!(
                    "object {i}: label {} is reserved or out of range (use 7..={})",
                    o.label.0,
                    Label::MAX
                )));
            }
            let (lo, hi) = match o.shape {
                Shape::Box { center, size } => {
                    if !(size.min() > 0.0) {
                        return Err(Error::InvalidParameter(format!(
                            "object {i}: box size must be positive"
                        )));
                    }
                    (center - size / 2.0, center + size / 2.0)
                }
                Shape::Sphere { center, radius } => {
                    if !(radius > 0.0) {
                        return Err(Error::InvalidParameter(format!(
                            "object {i}: radius must be positive"
                        )));
                    }
                    let rv = Vec3::repeat(radius);
                    (center - rv, center + rv)
                }
            };
            if (0..3).any(|a| lo[a] < -h[a] || hi[a] > h[a]) {
                return Err(Error::InvalidParameter(format!(
                    "object {i} is not inside the room"
                )));
            }
            // one class may own several objects, but it must keep one albedo
            if let Some((_, c)) = colors.iter().find(|(l, _)| *l == o.label) {
                if *c != o.albedo {
                    return Err(Error::InvalidParameter(format!(
                        "label {} used with two different colors",
                        o.label.0
                    )));
                }
            } else {
                colors.push((o.label, o.albedo));
            }
        }
        Ok(())
    }

    /// Every label that can appear in a semantic render of this scene.
    pub fn labels(&self) -> Vec<Label> {
        let mut out: Vec<Label> = Label::ROOM.to_vec();
        for o in &self.objects {
            if !out.contains(&o.label) {
                out.push(o.label);
            }
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut room = None;
        let mut objects = Vec::new();
        let mut light = Self::default_light();
        let mut checker = false;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let keyword = it.next().unwrap();
            let rest: Vec<&str> = it.collect();
            let err = |message: String| Error::Parse {
                line: line_no,
                message,
            };
            let nums = |n: usize| -> Result<Vec<f64>> {
                if rest.len() != n {
                    return Err(err(format!(
                        "'{keyword}' expects {n} values, found {}",
                        rest.len()
                    )));
                }
                rest.iter()
                    .map(|s| {
                        s.parse::<f64>()
                            .ok()
                            .filter(|v| v.is_finite())
                            .ok_or_else(|| err(format!("'{s}' is not a number")))
                    })
                    .collect()
            };
            let color_label = |v: &[f64]| -> Result<(Label, [u8; 3])> {
                let label = v[0];
                if label.fract() != 0.0 || label < 0.0 {
                    return Err(err(format!(
                        "label must be a non-negative integer, got {label}"
                    )));
                }
                let mut c = [0u8; 3];
                for (k, x) in v[1..4].iter().enumerate() {
                    if x.fract() != 0.0 || !(0.0..=255.0).contains(x) {
                        return Err(err(format!(
                            "color channel must be an integer in 0..=255, got {x}"
                        )));
                    }
                    c[k] = *x as u8;
                }
                Ok((Label(label as u32), c))
            };
            match keyword {
                "room" => {
                    let v = nums(3)?;
                    room = Some(Room {
                        width: v[0],
                        depth: v[1],
                        height: v[2],
                    });
                }
                "box" => {
                    let v = nums(10)?;
                    let (label, albedo) = color_label(&v[6..])?;
                    objects.push(SceneObject {
                        shape: Shape::Box {
                            center: Vec3::new(v[0], v[1], v[2]),
                            size: Vec3::new(v[3], v[4], v[5]),
                        },
                        albedo,
                        label,
                    });
                }
                "sphere" => {
                    let v = nums(8)?;
                    let (label, albedo) = color_label(&v[4..])?;
                    objects.push(SceneObject {
                        shape: Shape::Sphere {
                            center: Vec3::new(v[0], v[1], v[2]),
                            radius: v[3],
                        },
                        albedo,
                        label,
                    });
                }
                "light" => {
                    let v = nums(3)?;
                    light = Vec3::new(v[0], v[1], v[2]);
                }
                "checker" => match rest.as_slice() {
                    ["on"] => checker = true,
                    ["off"] => checker = false,
                    _ => return Err(err("'checker' expects 'on' or 'off'".into())),
                },
                other => return Err(err(format!("unknown keyword '{other}'"))),
            }
        }
        let room = room.ok_or(Error::Parse {
            line: 0,
            message: "scene has no 'room' line".into(),
        })?;
        Scene::new(room, objects, light, checker)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Scene::parse(&text).map_err(|e| match e {
            Error::Parse { line, message } => Error::Format {
                path: path.into(),
                message: format!("line {line}: {message}"),
            },
            other => other,
        })
    }

    /// Serialize to the scene file format.
    pub fn to_text(&self) -> String {
        let mut s = format!(
            "room {} {} {}\n",
            self.room.width, self.room.depth, self.room.height
        );
        for o in &self.objects {
            let [r, g, b] = o.albedo;
            match o.shape {
                Shape::Box { center: c, size: z } => s.push_str(&format!(
                    "box {} {} {} {} {} {} {} {r} {g} {b}\n",
                    c.x, c.y, c.z, z.x, z.y, z.z, o.label.0
                )),
                Shape::Sphere { center: c, radius } => s.push_str(&format!(
                    "sphere {} {} {} {radius} {} {r} {g} {b}\n",
                    c.x, c.y, c.z, o.label.0
                )),
            }
        }
        s.push_str(&format!(
            "light {} {} {}\n",
            self.light.x, self.light.y, self.light.z
        ));
        s.push_str(if self.checker {
            "checker on\n"
        } else {
            "checker off\n"
        });
        s
    }

    fn room_hit(&self, o: &Vec3, d: &Vec3) -> Hit {
        let h = self.room.half_extents();
        let mut best = (f64::INFINITY, 0usize, 1.0f64);
        for a in 0..3 {
            let (bound, sign) = if d[a] > 0.0 {
                (h[a], 1.0)
            } else if d[a] < 0.0 {
                (-h[a], -1.0)
            } else {
                continue;
            };
            let t = (bound - o[a]) / d[a];
            if t < best.0 {
                best = (t, a, sign);
            }
        }
        let (t, axis, sign) = best;
        let face = 2 * axis + usize::from(sign < 0.0);
        // faces in label order: +X, -X, +Y, -Y, then -Z (floor), +Z (ceiling)
        let label_index = match face {
            4 => 5,
            5 => 4,
            f => f,
        };
        let mut normal = Vec3::zeros();
        normal[axis] = -sign;
        let albedo = ROOM_ALBEDO[label_index];
        Hit {
            t,
            normal,
            normal_axis: axis,
            material: if self.checker {
                Material::Checker(albedo)
            } else {
                Material::Solid(albedo)
            },
            label: Label::ROOM[label_index],
        }
    }

    fn object_hit(obj: &SceneObject, o: &Vec3, d: &Vec3) -> Option<Hit> {
        let (t, normal, axis) = match obj.shape {
            Shape::Sphere { center, radius } => {
                let oc = o - center;
                let b = d.dot(&oc);
                let c = oc.norm_squared() - radius * radius;
                let disc = b * b - c;
                if disc < 0.0 {
                    return None;
                }
                // stable roots of t² + 2bt + c = 0
                let q = -b - b.signum() * disc.sqrt();
                let (t1, t2) = if q == 0.0 { (0.0, 0.0) } else { (q, c / q) };
                let (lo, hi) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
                let t = if lo > EPS_T {
                    lo
                } else if hi > EPS_T {
                    hi
                } else {
                    return None;
                };
                let n = (o + d * t - center) / radius;
                let axis = n.iamax();
                (t, n, axis)
            }
            Shape::Box { center, size } => {
                let lo = center - size / 2.0;
                let hi = center + size / 2.0;
                let mut t_near = f64::NEG_INFINITY;
                let mut t_far = f64::INFINITY;
                let mut near_axis = (0usize, 0.0f64);
                let mut far_axis = (0usize, 0.0f64);
                for a in 0..3 {
                    if d[a] == 0.0 {
                        if o[a] < lo[a] || o[a] > hi[a] {
                            return None;
                        }
                        continue;
                    }
                    let t0 = (lo[a] - o[a]) / d[a];
                    let t1 = (hi[a] - o[a]) / d[a];
                    // entering through the slab side facing the ray
                    let (tn, tf, sn, sf) = if t0 < t1 {
                        (t0, t1, -1.0, 1.0)
                    } else {
                        (t1, t0, 1.0, -1.0)
                    };
                    if tn > t_near {
                        t_near = tn;
                        near_axis = (a, sn);
                    }
                    if tf < t_far {
                        t_far = tf;
                        far_axis = (a, sf);
                    }
                }
                if t_near > t_far {
                    return None;
                }
                let (t, (axis, sign)) = if t_near > EPS_T {
                    (t_near, near_axis)
                } else if t_far > EPS_T {
                    (t_far, far_axis)
                } else {
                    return None;
                };
                let mut n = Vec3::zeros();
                n[axis] = sign;
                (t, n, axis)
            }
        };
        Some(Hit {
            t,
            normal,
            normal_axis: axis,
            material: Material::Solid(obj.albedo),
            label: obj.label,
        })
    }

    /// Cast a ray from a point strictly inside the room and report the first hit.
    pub fn cast(&self, origin: &Vec3, dir: &Vec3) -> Result<RaySample> {
        if !self.room.contains_strictly(origin) {
            return Err(Error::domain(format!(
                "ray origin ({:.6}, {:.6}, {:.6}) is not strictly inside the room",
                origin.x, origin.y, origin.z
            )));
        }
        let n = dir.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::domain("ray direction must be non-zero"));
        }
        let d = dir / n;
        let mut hit = self.room_hit(origin, &d);
        for obj in &self.objects {
            if let Some(h) = Self::object_hit(obj, origin, &d) {
                if h.t <= hit.t {
                    hit = h;
                }
            }
        }
        let p = origin + d * hit.t;
        let mut normal = hit.normal;
        if normal.dot(&d) > 0.0 {
            normal = -normal;
        }
        let shade = (AMBIENT + normal.dot(&self.light).max(0.0)).min(1.0);
        let albedo = hit.material.albedo(&p, hit.normal_axis);
        let color = albedo.map(|a| (a * shade * 255.0).round().clamp(0.0, 255.0) as u8);
        Ok(RaySample {
            color,
            label: hit.label,
            depth: hit.t,
        })
    }
}

struct SceneProbe<'a> {
    scene: &'a Scene,
    origin: Vec3,
    mode: RenderMode,
}

impl Probe for SceneProbe<'_> {
    fn sample(&self, dir: &Vec3) -> Result<PixelValue> {
        Ok(self.scene.cast(&self.origin, dir)?.value(self.mode))
    }
}

impl EnvironmentOracle for Scene {
    fn acquire(&self, center: &Vec3, mode: RenderMode) -> Result<Box<dyn Probe + '_>> {
        if !self.room.contains_strictly(center) {
            return Err(Error::domain(format!(
                "optical center ({:.6}, {:.6}, {:.6}) is not strictly inside the room",
                center.x, center.y, center.z
            )));
        }
        Ok(Box::new(SceneProbe {
            scene: self,
            origin: *center,
            mode,
        }))
    }
}
