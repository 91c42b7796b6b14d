//! Non-central projection models (rays given as Plücker lines) and the
//! group-wise composer that acquires the environment once per optical center.
//!
//! Disc models (conical and spherical mirrors) use image polar coordinates
//! `u = u0 + r cos θ`, `v = v0 − r sin θ` about the image center. Pixels are
//! grouped into rings by `round(r)`; every pixel of ring `k` is back-projected
//! with the ring radius `k` and its own azimuth, so all rays of a ring share
//! one optical center on the mirror axis (camera +Z).

use std::f64::consts::PI;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::environment::{EnvironmentOracle, PixelValue, RenderMode};
use crate::geometry::{
    compose_pose, spherical_to_dir, PluckerRay, Pose, Rotation, SphericalDir, Vec3,
};
use crate::image::{Image, ImageGrid};
use crate::{Error, Result};

/// Panorama whose column centers lie on a circle of radius `r_c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NcPanorama {
    pub r_c: f64,
    pub center: Vec3,
    /// Pitch of the circle's plane about camera Y, radians.
    pub tilt: f64,
}

/// Perspective camera looking up the axis of a conical mirror.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConicalMirror {
    pub z_c: f64,
    pub r_c: f64,
    /// Cone aperture τ, radians, in (0, π/4).
    pub tau: f64,
    /// Viewing angle of the host camera at the disc edge; sets the
    /// normalized ring radius `tan(angle) · k / r_max`.
    pub max_view_angle: f64,
}

/// Perspective camera at height `z_m + r_s` above a spherical mirror of
/// radius `r_s` centered at the camera-frame origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphericalMirror {
    pub z_m: f64,
    pub r_s: f64,
    pub max_view_angle: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NonCentralModel {
    Panorama(NcPanorama),
    Conical(ConicalMirror),
    Spherical(SphericalMirror),
}

impl NcPanorama {
    pub fn new(r_c: f64, center: Vec3, tilt: f64) -> Result<Self> {
        if !(r_c >= 0.0) || !r_c.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "panorama radius must be ≥ 0, got {r_c}"
            )));
        }
        if !tilt.is_finite() || center.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter(
                "panorama center and tilt must be finite".into(),
            ));
        }
        Ok(NcPanorama { r_c, center, tilt })
    }
}

impl ConicalMirror {
    pub const DEFAULT_VIEW_ANGLE: f64 = PI / 4.0;

    pub fn new(z_c: f64, r_c: f64, tau: f64, max_view_angle: f64) -> Result<Self> {
        if !(r_c > 0.0) || !z_c.is_finite() || !r_c.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "conical mirror needs R_c > 0, got {r_c}"
            )));
        }
        if !(tau > 0.0 && tau < PI / 4.0) {
            return Err(Error::InvalidParameter(format!(
                "cone aperture τ must be in (0, π/4), got {tau}"
            )));
        }
        if !(max_view_angle > 0.0 && max_view_angle < PI / 2.0) {
            return Err(Error::InvalidParameter(
                "host camera view angle must be in (0, π/2)".into(),
            ));
        }
        Ok(ConicalMirror {
            z_c,
            r_c,
            tau,
            max_view_angle,
        })
    }

    /// `cot φ` for normalized image radius `r`; `None` at or past the singular ring.
    pub fn cot_phi(&self, r: f64) -> Option<f64> {
        let t = (2.0 * self.tau).tan();
        let den = t - r;
        (den > 0.0).then(|| (1.0 + r * t) / den)
    }

    /// Height of the optical center for normalized radius `r`.
    pub fn z_r(&self, r: f64) -> Option<f64> {
        self.cot_phi(r).map(|c| self.z_c + self.r_c * c)
    }
}

impl SphericalMirror {
    pub fn new(z_m: f64, r_s: f64, max_view_angle: Option<f64>) -> Result<Self> {
        if !(r_s > 0.0) || !(z_m > 0.0) || !r_s.is_finite() || !z_m.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "spherical mirror needs R_s > 0 and Z_m > 0, got R_s = {r_s}, Z_m = {z_m}"
            )));
        }
        let limit = (r_s / (z_m + r_s)).asin();
        let max_view_angle = max_view_angle.unwrap_or(limit);
        if !(max_view_angle > 0.0 && max_view_angle < PI / 2.0) {
            return Err(Error::InvalidParameter(
                "host camera view angle must be in (0, π/2)".into(),
            ));
        }
        Ok(SphericalMirror {
            z_m,
            r_s,
            max_view_angle,
        })
    }

    /// Camera height above the sphere center.
    pub fn z_s(&self) -> f64 {
        self.z_m + self.r_s
    }

    fn terms(&self, x: f64, y: f64, z: f64) -> Option<SphereTerms> {
        let zs = self.z_s();
        let zr = zs / self.r_s;
        let zr2 = zr * zr;
        let r2 = x * x + y * y;
        let rho2 = r2 + z * z;
        let gamma = (-r2 * zr2 + rho2) * zr2;
        // Tangent rays: γ is pure rounding noise there and √γ would amplify it.
        if gamma <= GRAZING_TOL * rho2 * zr2 {
            return None;
        }
        let sg = gamma.sqrt();
        let delta = 2.0 * r2 * zr2 * zr2 - 2.0 * z * sg * zr2 - 3.0 * rho2 * zr2 + rho2;
        let epsilon = (-r2 + z * z) * zr2 + 2.0 * sg * z + rho2;
        let zeta =
            2.0 * r2 * z * zr2 * zr2 - z * rho2 * zr2 - 2.0 * sg * (-r2 * zr2 + rho2) - z * rho2;
        Some(SphereTerms {
            gamma,
            delta,
            epsilon,
            zeta,
        })
    }

    /// Height on the axis where all rays of normalized radius `r` meet.
    pub fn axis_crossing(&self, r: f64) -> Option<f64> {
        let t = self.terms(r, 0.0, 1.0)?;
        (t.delta != 0.0).then(|| -t.epsilon * self.z_s() / t.delta)
    }

    /// The tabulated `−ζ/δ` height, reported for comparison only.
    pub fn tabulated_z_r(&self, r: f64) -> Option<f64> {
        let t = self.terms(r, 0.0, 1.0)?;
        (t.delta != 0.0).then(|| -t.zeta / t.delta)
    }
}

/// Relative band around tangency in which the host camera's ray counts as missing the sphere.
const GRAZING_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy)]
struct SphereTerms {
    #[allow(dead_code)]
    gamma: f64,
    delta: f64,
    epsilon: f64,
    zeta: f64,
}

/// Image polar coordinates `(r, θ)` about the image center.
pub fn pixel_polar(u: f64, v: f64, grid: ImageGrid) -> (f64, f64) {
    let (u0, v0) = grid.center();
    ((u - u0).hypot(v - v0), (v0 - v).atan2(u - u0))
}

/// Ring index of a pixel, or `None` outside the rendered disc.
pub fn ring_of(u: f64, v: f64, grid: ImageGrid) -> Option<usize> {
    let (r, _) = pixel_polar(u, v, grid);
    (r <= grid.disc_radius()).then(|| r.round() as usize)
}

fn normalized_radius(ring: usize, grid: ImageGrid, view_angle: f64) -> f64 {
    ring as f64 / grid.disc_radius() * view_angle.tan()
}

/// Optical center of panorama column `u` (continuous coordinate).
pub fn nc_panorama_center(u: f64, grid: ImageGrid, model: &NcPanorama) -> Vec3 {
    let theta = (2.0 * u / grid.width as f64 - 1.0) * PI;
    let (s, c) = theta.sin_cos();
    let (st, ct) = model.tilt.sin_cos();
    model.center + model.r_c * Vec3::new(c * ct, s, c * st)
}

/// Ray of panorama pixel `(u, v)`: the equirectangular direction of the
/// pixel, displaced to pass through its column's center on the circle.
pub fn nc_panorama_ray(u: f64, v: f64, grid: ImageGrid, model: &NcPanorama) -> PluckerRay {
    let theta = (2.0 * u / grid.width as f64 - 1.0) * PI;
    let phi = (0.5 - v / grid.height as f64) * PI;
    let xi = spherical_to_dir(SphericalDir::Elevation { theta, phi });
    let (s, c) = theta.sin_cos();
    let xi_bar = model.r_c * phi.sin() * Vec3::new(s, -c, 0.0);
    let tilt = Rotation::rot_y(-model.tilt);
    let xi = tilt.apply(&xi);
    let xi_bar = tilt.apply(&xi_bar) + model.center.cross(&xi);
    PluckerRay { xi, xi_bar }
}

/// Conical-mirror ray of a pixel, with its optical-center height `Z_r`.
/// `None` outside the disc or on/after the singular ring.
pub fn conical_ray(
    u: f64,
    v: f64,
    grid: ImageGrid,
    model: &ConicalMirror,
) -> Option<(PluckerRay, f64)> {
    let ring = ring_of(u, v, grid)?;
    let (_, theta) = pixel_polar(u, v, grid);
    conical_ring_ray(ring, theta, grid, model)
}

fn conical_ring_ray(
    ring: usize,
    theta: f64,
    grid: ImageGrid,
    model: &ConicalMirror,
) -> Option<(PluckerRay, f64)> {
    let r = normalized_radius(ring, grid, model.max_view_angle);
    let cot = model.cot_phi(r)?;
    let z_r = model.z_c + model.r_c * cot;
    // φ ∈ (0, π/2) here since both numerator and denominator are positive
    let phi = (1.0 / cot).atan();
    let (sp, cp) = phi.sin_cos();
    let (st, ct) = theta.sin_cos();
    let xi = Vec3::new(sp * ct, sp * st, cp);
    let xi_bar = Vec3::new(-z_r * sp * st, z_r * sp * ct, 0.0);
    Some((PluckerRay { xi, xi_bar }, z_r))
}

/// Spherical-mirror ray of a pixel. `None` outside the disc or where the
/// host camera's ray misses the mirror.
pub fn spherical_cat_ray(
    u: f64,
    v: f64,
    grid: ImageGrid,
    model: &SphericalMirror,
) -> Option<PluckerRay> {
    let ring = ring_of(u, v, grid)?;
    let (_, theta) = pixel_polar(u, v, grid);
    spherical_ring_ray(ring, theta, grid, model)
}

fn spherical_ring_ray(
    ring: usize,
    theta: f64,
    grid: ImageGrid,
    model: &SphericalMirror,
) -> Option<PluckerRay> {
    let r = normalized_radius(ring, grid, model.max_view_angle);
    let (x, y, z) = (r * theta.cos(), r * theta.sin(), 1.0);
    let t = model.terms(x, y, z)?;
    let zs = model.z_s();
    let xi = Vec3::new(-x * t.delta, y * t.delta, -t.zeta);
    let xi_bar = Vec3::new(t.epsilon * y * zs, t.epsilon * x * zs, 0.0);
    PluckerRay::from_raw(xi, xi_bar).ok()
}

impl NonCentralModel {
    pub fn is_disc(&self) -> bool {
        !matches!(self, NonCentralModel::Panorama(_))
    }

    /// Camera-frame Plücker ray of pixel `(u, v)`; `None` outside the field of view.
    pub fn ray(&self, u: f64, v: f64, grid: ImageGrid) -> Option<PluckerRay> {
        match self {
            NonCentralModel::Panorama(m) => Some(nc_panorama_ray(u, v, grid, m)),
            NonCentralModel::Conical(m) => conical_ray(u, v, grid, m).map(|(ray, _)| ray),
            NonCentralModel::Spherical(m) => spherical_cat_ray(u, v, grid, m),
        }
    }

    /// Camera-frame optical center of group `key` (column or ring index).
    pub fn group_center(&self, key: usize, grid: ImageGrid) -> Option<Vec3> {
        match self {
            NonCentralModel::Panorama(m) => Some(nc_panorama_center(key as f64 + 0.5, grid, m)),
            NonCentralModel::Conical(m) => {
                conical_ring_ray(key, 0.0, grid, m).map(|(_, z)| Vec3::new(0.0, 0.0, z))
            }
            NonCentralModel::Spherical(m) => {
                let r = normalized_radius(key, grid, m.max_view_angle);
                spherical_ring_ray(key, 0.0, grid, m)?;
                m.axis_crossing(r).map(|h| Vec3::new(0.0, 0.0, h))
            }
        }
    }

    fn group_key(&self, index: usize, grid: ImageGrid) -> Option<usize> {
        match self {
            NonCentralModel::Panorama(_) => Some(index % grid.width),
            _ => {
                let (u, v) = grid.pixel_center(index);
                ring_of(u, v, grid)
            }
        }
    }
}

/// Pixels sharing one optical center.
#[derive(Debug, Clone, PartialEq)]
pub struct OpticalCenterGroup {
    /// Column index for panoramas, ring radius for disc models.
    pub key: usize,
    /// Camera-frame optical center.
    pub center: Vec3,
    /// Row-major pixel indices.
    pub pixels: Vec<usize>,
}

/// Partition of an image into optical-center groups plus pixels outside
/// the field of view.
#[derive(Debug, Clone, PartialEq)]
pub struct Grouping {
    /// Ordered by ascending key (center to edge for rings).
    pub groups: Vec<OpticalCenterGroup>,
    pub masked: Vec<usize>,
}

pub fn optical_center_groups(model: &NonCentralModel, grid: ImageGrid) -> Grouping {
    let mut buckets: Vec<Vec<usize>> = Vec::new();
    let mut masked = Vec::new();
    for index in 0..grid.len() {
        match model.group_key(index, grid) {
            Some(key) => {
                if buckets.len() <= key {
                    buckets.resize_with(key + 1, Vec::new);
                }
                buckets[key].push(index);
            }
            None => masked.push(index),
        }
    }
    let mut groups = Vec::new();
    for (key, pixels) in buckets.into_iter().enumerate() {
        if pixels.is_empty() {
            continue;
        }
        match model.group_center(key, grid) {
            Some(center) => groups.push(OpticalCenterGroup {
                key,
                center,
                pixels,
            }),
            None => masked.extend(pixels),
        }
    }
    masked.sort_unstable();
    Grouping { groups, masked }
}

/// Render a non-central camera: one environment acquisition per optical
/// center group, then every member pixel is sampled along its own ray from
/// that center. Groups run in parallel; the result does not depend on the
/// schedule.
pub fn compose_noncentral(
    model: &NonCentralModel,
    pose: &Pose,
    grid: ImageGrid,
    mode: RenderMode,
    oracle: &dyn EnvironmentOracle,
) -> Result<Image> {
    let grouping = optical_center_groups(model, grid);
    let per_group = grouping
        .groups
        .par_iter()
        .map(|group| -> Result<Vec<(usize, PixelValue)>> {
            let center = pose.point_to_world(&group.center);
            let probe = oracle.acquire(&center, mode)?;
            group
                .pixels
                .iter()
                .map(|&index| {
                    let (u, v) = grid.pixel_center(index);
                    let ray = model.ray(u, v, grid).ok_or_else(|| {
                        Error::Numeric(format!("grouped pixel {index} has no ray"))
                    })?;
                    let (_, dir) = compose_pose(pose, &ray.xi)?;
                    Ok((index, probe.sample(&dir)?))
                })
                .collect()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut values = vec![None; grid.len()];
    for (index, value) in per_group.into_iter().flatten() {
        values[index] = Some(value);
    }
    Image::from_samples(grid, mode, values)
}

/// JSON text listing every group's world-frame optical center.
pub fn centers_sidecar(model: &NonCentralModel, pose: &Pose, grid: ImageGrid) -> String {
    let grouping = optical_center_groups(model, grid);
    let kind = match model {
        NonCentralModel::Panorama(_) => "column",
        _ => "ring",
    };
    let mut out = String::new();
    let _ = writeln!(out, "{{");
    let _ = writeln!(out, "  \"width\": {},", grid.width);
    let _ = writeln!(out, "  \"height\": {},", grid.height);
    let _ = writeln!(out, "  \"group_kind\": \"{kind}\",");
    let _ = writeln!(out, "  \"groups\": [");
    let n = grouping.groups.len();
    for (i, g) in grouping.groups.iter().enumerate() {
        let c = pose.point_to_world(&g.center);
        let _ = writeln!(
            out,
            "    {{\"key\": {}, \"center\": [{:?}, {:?}, {:?}], \"pixels\": {}}}{}",
            g.key,
            c.x,
            c.y,
            c.z,
            g.pixels.len(),
            if i + 1 < n { "," } else { "" }
        );
    }
    let _ = writeln!(out, "  ]");
    let _ = writeln!(out, "}}");
    out
}
