//! Central projection models: pixel → camera ray (back-projection), the
//! matching forward maps, and the single-center image composer.
//!
//! Camera frames: panoramic models look along +X at azimuth zero with +Z up.
//! Revolution-symmetric models look along the optical axis +Z; for the
//! dioptric ones (fish-eye, Kannala–Brandt, Scaramuzza) the azimuth of pixel
//! offset `(du, dv)` from the center is `atan2(-du, dv)`, so camera +X points
//! to image-down and +Y to image-left.

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;

use crate::environment::{EnvironmentOracle, RenderMode};
use crate::geometry::{compose_pose, spherical_to_dir, Pose, Rotation, SphericalDir, Vec3};
use crate::image::{Image, ImageGrid};
use crate::{Error, Result};

use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FishEyeLens {
    EquiAngular,
    Stereographic,
    Orthogonal,
    EquiSolid,
}

impl FishEyeLens {
    pub const ALL: [FishEyeLens; 4] = [
        FishEyeLens::EquiAngular,
        FishEyeLens::Stereographic,
        FishEyeLens::Orthogonal,
        FishEyeLens::EquiSolid,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            FishEyeLens::EquiAngular => "equiangular",
            FishEyeLens::Stereographic => "stereographic",
            FishEyeLens::Orthogonal => "orthogonal",
            FishEyeLens::EquiSolid => "equisolid",
        }
    }

    /// Image radius of a ray at polar angle `phi`.
    pub fn radius(&self, phi: f64, f: f64) -> Option<f64> {
        match self {
            FishEyeLens::EquiAngular => Some(f * phi),
            FishEyeLens::Stereographic => (phi < PI).then(|| 2.0 * f * (phi / 2.0).tan()),
            FishEyeLens::Orthogonal => (phi <= PI / 2.0).then(|| f * phi.sin()),
            FishEyeLens::EquiSolid => Some(f * (phi / 2.0).sin()),
        }
    }

    /// Polar angle of image radius `r`; `None` beyond the lens' range.
    pub fn polar_angle(&self, r: f64, f: f64) -> Option<f64> {
        let phi = match self {
            FishEyeLens::EquiAngular => r / f,
            FishEyeLens::Stereographic => 2.0 * (r / (2.0 * f)).atan(),
            FishEyeLens::Orthogonal => {
                if r / f > 1.0 {
                    return None;
                }
                (r / f).asin()
            }
            FishEyeLens::EquiSolid => {
                if r / f > 1.0 {
                    return None;
                }
                2.0 * (r / f).asin()
            }
        };
        (phi <= PI).then_some(phi)
    }

    /// Focal length placing the polar angle `phi` at image radius `r`.
    pub fn focal_for(&self, r: f64, phi: f64) -> f64 {
        r / self.radius(phi, 1.0).expect("angle within lens range")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mirror {
    Para,
    Hyper,
}

/// Central catadioptric camera under the unified sphere model.
#[derive(Debug, Clone, PartialEq)]
pub struct Catadioptric {
    pub mirror: Mirror,
    /// Camera-to-mirror distance, meters (hyperbolic mirror only).
    pub d: f64,
    /// Half the mirror's latus rectum, meters.
    pub p: f64,
    pub fx: f64,
    pub fy: f64,
    pub u0: f64,
    pub v0: f64,
    pub r_c: Rotation,
    xi: f64,
    eta: f64,
    h: Matrix3<f64>,
    h_inv: Matrix3<f64>,
}

impl Catadioptric {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        mirror: Mirror,
        d: f64,
        p: f64,
        fx: f64,
        fy: f64,
        u0: f64,
        v0: f64,
        r_c: Rotation,
    ) -> Result<Self> {
        if !(p > 0.0) || (mirror == Mirror::Hyper && !(d > 0.0)) {
            return Err(Error::InvalidParameter(
                "catadioptric mirror needs p > 0 (and d > 0 for hyperbolic)".into(),
            ));
        }
        if !(fx > 0.0 && fy > 0.0) {
            return Err(Error::InvalidParameter(
                "catadioptric focal lengths must be positive".into(),
            ));
        }
        let (xi, eta) = mirror_parameters(mirror, d, p);
        let k = Matrix3::new(fx, 0.0, u0, 0.0, fy, v0, 0.0, 0.0, 1.0);
        let m = Matrix3::from_diagonal(&Vector3::new(eta - xi, xi - eta, 1.0));
        let h = k * r_c.matrix() * m;
        let h_inv = h.try_inverse().ok_or_else(|| {
            Error::InvalidParameter("catadioptric calibration matrix is singular".into())
        })?;
        Ok(Catadioptric {
            mirror,
            d,
            p,
            fx,
            fy,
            u0,
            v0,
            r_c,
            xi,
            eta,
            h,
            h_inv,
        })
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Mirror parameter Ψ of the forward calibration formulation (`1 + 2p`
    /// for parabolic, `(d + 2p)/√(d² + 4p²)` for hyperbolic). Not used by the
    /// back-projection path.
    pub fn psi(&self) -> f64 {
        match self.mirror {
            Mirror::Para => 1.0 + 2.0 * self.p,
            Mirror::Hyper => {
                (self.d + 2.0 * self.p) / (self.d * self.d + 4.0 * self.p * self.p).sqrt()
            }
        }
    }

    /// Full calibration matrix `K · R_c · M`.
    pub fn calibration(&self) -> &Matrix3<f64> {
        &self.h
    }
}

/// (ξ, η) of a central mirror.
pub fn mirror_parameters(mirror: Mirror, d: f64, p: f64) -> (f64, f64) {
    match mirror {
        Mirror::Para => (1.0, -2.0 * p),
        Mirror::Hyper => {
            let n = (d * d + 4.0 * p * p).sqrt();
            (d / n, -2.0 * p / n)
        }
    }
}

/// Polynomial omnidirectional model `f(ρ) = a0 + a1 ρ + … + aN ρ^N`.
#[derive(Debug, Clone, PartialEq)]
pub struct Scaramuzza {
    pub coeffs: Vec<f64>,
    pub u0: f64,
    pub v0: f64,
}

impl Scaramuzza {
    pub fn new(coeffs: Vec<f64>, u0: f64, v0: f64) -> Result<Self> {
        match coeffs.first() {
            Some(a0) if *a0 != 0.0 && a0.is_finite() => {}
            _ => {
                return Err(Error::InvalidParameter(
                    "Scaramuzza a0 must be non-zero".into(),
                ))
            }
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter(
                "Scaramuzza coefficients must be finite".into(),
            ));
        }
        Ok(Scaramuzza { coeffs, u0, v0 })
    }

    pub fn eval(&self, rho: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, a| acc * rho + a)
    }

    /// Sign that makes the principal ray point along +Z. A negative `a0`
    /// turns the camera half a turn about its image-down axis.
    fn axis_sign(&self) -> f64 {
        self.coeffs[0].signum()
    }
}

/// Generic polynomial fish-eye model with `d(θ) = θ + k1 θ³ + k2 θ⁵ + k3 θ⁷ + k4 θ⁹`.
#[derive(Debug, Clone, PartialEq)]
pub struct KannalaBrandt {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub k: [f64; 4],
    theta_max: f64,
}

pub const KB_MAX_ITERATIONS: usize = 50;

impl KannalaBrandt {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, k: [f64; 4]) -> Result<Self> {
        if !(fx > 0.0 && fy > 0.0) {
            return Err(Error::InvalidParameter(
                "Kannala–Brandt focal lengths must be positive".into(),
            ));
        }
        if k.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter(
                "Kannala–Brandt coefficients must be finite".into(),
            ));
        }
        let mut model = KannalaBrandt {
            fx,
            fy,
            cx,
            cy,
            k,
            theta_max: PI,
        };
        model.theta_max = model.monotone_limit();
        Ok(model)
    }

    pub fn distort(&self, theta: f64) -> f64 {
        let t2 = theta * theta;
        let [k1, k2, k3, k4] = self.k;
        theta * (1.0 + t2 * (k1 + t2 * (k2 + t2 * (k3 + t2 * k4))))
    }

    pub fn distort_derivative(&self, theta: f64) -> f64 {
        let t2 = theta * theta;
        let [k1, k2, k3, k4] = self.k;
        1.0 + t2 * (3.0 * k1 + t2 * (5.0 * k2 + t2 * (7.0 * k3 + t2 * 9.0 * k4)))
    }

    /// Largest polar angle up to which `d(θ)` is increasing (at most π).
    pub fn theta_max(&self) -> f64 {
        self.theta_max
    }

    fn monotone_limit(&self) -> f64 {
        const STEPS: usize = 2048;
        let mut prev = 0.0;
        for s in 1..=STEPS {
            let t = PI * s as f64 / STEPS as f64;
            if self.distort_derivative(t) <= 0.0 {
                let (mut lo, mut hi) = (prev, t);
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if self.distort_derivative(mid) > 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                return lo;
            }
            prev = t;
        }
        PI
    }

    /// Solve `d(θ) = target` on `[0, θ_max]` by Newton's method with a
    /// bisection fallback.
    pub fn solve_theta(&self, target: f64) -> Result<Option<f64>> {
        if target == 0.0 {
            return Ok(Some(0.0));
        }
        if target > self.distort(self.theta_max) {
            return Ok(None);
        }
        let (mut lo, mut hi) = (0.0, self.theta_max);
        let mut theta = target.min(self.theta_max);
        for _ in 0..KB_MAX_ITERATIONS {
            let r = self.distort(theta) - target;
            if r.abs() <= 1e-15 * target.max(1.0) {
                return Ok(Some(theta));
            }
            if r > 0.0 {
                hi = theta;
            } else {
                lo = theta;
            }
            let slope = self.distort_derivative(theta);
            let mut next = theta - r / slope;
            if !(slope > 0.0) || !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - theta).abs() <= 1e-16 * theta.max(1e-300) || hi - lo <= f64::EPSILON * hi {
                return Ok(Some(next));
            }
            theta = next;
        }
        Err(Error::Numeric(format!(
            "Kannala–Brandt inversion did not converge for d = {target}"
        )))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CylinderMapping {
    /// Rows linear in elevation angle.
    #[default]
    Linear,
    /// Rows linear in height on the cylinder (`tan φ`).
    Tangent,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CentralModel {
    Equirect,
    Cylindrical {
        fov_h: f64,
        fov_v: f64,
        mapping: CylinderMapping,
    },
    FishEye {
        lens: FishEyeLens,
        f: f64,
    },
    Catadioptric(Catadioptric),
    Scaramuzza(Scaramuzza),
    KannalaBrandt(KannalaBrandt),
}

impl CentralModel {
    pub fn cylindrical(fov_h: f64, fov_v: f64, mapping: CylinderMapping) -> Result<Self> {
        if !(fov_h > 0.0 && fov_h <= 2.0 * PI) {
            return Err(Error::InvalidParameter(format!(
                "fov_h must be in (0, 2π], got {fov_h}"
            )));
        }
        if !(fov_v > 0.0 && fov_v < PI) {
            return Err(Error::InvalidParameter(format!(
                "fov_v must be in (0, π), got {fov_v}"
            )));
        }
        Ok(CentralModel::Cylindrical {
            fov_h,
            fov_v,
            mapping,
        })
    }

    pub fn fisheye(lens: FishEyeLens, f: f64) -> Result<Self> {
        if !(f > 0.0) || !f.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "fish-eye focal length must be positive, got {f}"
            )));
        }
        Ok(CentralModel::FishEye { lens, f })
    }

    /// Whether the image wraps around horizontally (full 360° azimuth).
    pub fn wraps_horizontally(&self) -> bool {
        match self {
            CentralModel::Equirect => true,
            CentralModel::Cylindrical { fov_h, .. } => *fov_h >= 2.0 * PI,
            _ => false,
        }
    }

    /// Camera-frame unit ray through continuous pixel coordinates `(u, v)`,
    /// or `None` when the pixel lies outside the field of view.
    pub fn back_project(&self, u: f64, v: f64, grid: ImageGrid) -> Result<Option<Vec3>> {
        Ok(match self {
            CentralModel::Equirect => Some(spherical_to_dir(equirect_pixel_to_angles(u, v, grid))),
            CentralModel::Cylindrical {
                fov_h,
                fov_v,
                mapping,
            } => {
                let s = cylindrical_pixel_to_angles(u, v, grid, *fov_h, *fov_v);
                let s = match (mapping, s) {
                    (CylinderMapping::Tangent, SphericalDir::Elevation { theta, .. }) => {
                        let t = (1.0 - 2.0 * v / grid.height as f64) * (fov_v / 2.0).tan();
                        SphericalDir::Elevation {
                            theta,
                            phi: t.atan(),
                        }
                    }
                    (_, s) => s,
                };
                Some(spherical_to_dir(s))
            }
            CentralModel::FishEye { lens, f } => fisheye_pixel_to_ray(u, v, grid, *lens, *f),
            CentralModel::Catadioptric(m) => catadioptric_pixel_to_ray(u, v, grid, m),
            CentralModel::Scaramuzza(m) => Some(scaramuzza_pixel_to_ray(u, v, m)),
            CentralModel::KannalaBrandt(m) => kannala_brandt_pixel_to_ray(u, v, m)?,
        })
    }

    /// Forward map: camera-frame direction → continuous pixel coordinates.
    /// `None` when the direction is not imaged.
    pub fn project(&self, dir: &Vec3, grid: ImageGrid) -> Option<(f64, f64)> {
        let n = dir.norm();
        if !(n > 0.0) {
            return None;
        }
        let d = dir / n;
        let (w, h) = (grid.width as f64, grid.height as f64);
        let horiz = d.x.hypot(d.y);
        let azimuth = if horiz == 0.0 { 0.0 } else { d.y.atan2(d.x) };
        match self {
            CentralModel::Equirect => {
                let phi = d.z.atan2(horiz);
                Some(((azimuth / PI + 1.0) * w / 2.0, (0.5 - phi / PI) * h))
            }
            CentralModel::Cylindrical {
                fov_h,
                fov_v,
                mapping,
            } => {
                let phi = d.z.atan2(horiz);
                if azimuth.abs() > fov_h / 2.0 || phi.abs() >= PI / 2.0 {
                    return None;
                }
                let row = match mapping {
                    CylinderMapping::Linear => {
                        if phi.abs() > fov_v / 2.0 {
                            return None;
                        }
                        1.0 - 2.0 * phi / fov_v
                    }
                    CylinderMapping::Tangent => {
                        let t = phi.tan() / (fov_v / 2.0).tan();
                        if t.abs() > 1.0 {
                            return None;
                        }
                        1.0 - t
                    }
                };
                Some(((azimuth / (fov_h / 2.0) + 1.0) * w / 2.0, row * h / 2.0))
            }
            CentralModel::FishEye { lens, f } => {
                let phi = horiz.atan2(d.z);
                let r = lens.radius(phi, *f)?;
                if r > grid.disc_radius() {
                    return None;
                }
                let (u0, v0) = grid.center();
                let (s, c) = azimuth.sin_cos();
                Some((u0 - r * s, v0 + r * c))
            }
            CentralModel::Catadioptric(m) => {
                let denom = d.z + m.xi;
                if !(denom > 0.0) {
                    return None;
                }
                let p = m.h * Vec3::new(d.x / denom, d.y / denom, 1.0);
                if !(p.z > 0.0) {
                    return None;
                }
                let (u, v) = (p.x / p.z, p.y / p.z);
                let (u0, v0) = grid.center();
                ((u - u0).hypot(v - v0) <= grid.disc_radius()).then_some((u, v))
            }
            CentralModel::Scaramuzza(m) => scaramuzza_project(m, &d, grid),
            CentralModel::KannalaBrandt(m) => {
                let theta = horiz.atan2(d.z);
                if theta > m.theta_max {
                    return None;
                }
                if horiz == 0.0 {
                    return Some((m.cx, m.cy));
                }
                let dist = m.distort(theta);
                let a = -dist * d.y / horiz;
                let b = dist * d.x / horiz;
                Some((m.cx + m.fx * a, m.cy + m.fy * b))
            }
        }
    }
}

/// Equirectangular pixel → (azimuth, elevation).
pub fn equirect_pixel_to_angles(u: f64, v: f64, grid: ImageGrid) -> SphericalDir {
    SphericalDir::Elevation {
        theta: (2.0 * u / grid.width as f64 - 1.0) * PI,
        phi: (0.5 - v / grid.height as f64) * PI,
    }
}

/// Cylindrical pixel → (azimuth, elevation), both linear in the pixel coordinates.
pub fn cylindrical_pixel_to_angles(
    u: f64,
    v: f64,
    grid: ImageGrid,
    fov_h: f64,
    fov_v: f64,
) -> SphericalDir {
    SphericalDir::Elevation {
        theta: (2.0 * u / grid.width as f64 - 1.0) * fov_h / 2.0,
        phi: (1.0 - 2.0 * v / grid.height as f64) * fov_v / 2.0,
    }
}

/// Fish-eye pixel → ray. Pixels beyond the centered disc of radius
/// `min(width, height)/2`, or beyond the lens' angular range, are outside.
pub fn fisheye_pixel_to_ray(
    u: f64,
    v: f64,
    grid: ImageGrid,
    lens: FishEyeLens,
    f: f64,
) -> Option<Vec3> {
    let (u0, v0) = grid.center();
    let r = (u - u0).hypot(v - v0);
    if r > grid.disc_radius() {
        return None;
    }
    let theta = (u0 - u).atan2(v - v0);
    let phi = lens.polar_angle(r, f)?;
    Some(spherical_to_dir(SphericalDir::Polar { theta, phi }))
}

/// Catadioptric pixel → ray through the inverse calibration and the sphere lift.
pub fn catadioptric_pixel_to_ray(
    u: f64,
    v: f64,
    grid: ImageGrid,
    model: &Catadioptric,
) -> Option<Vec3> {
    let (gu, gv) = grid.center();
    if (u - gu).hypot(v - gv) > grid.disc_radius() {
        return None;
    }
    let bar = model.h_inv * Vec3::new(u, v, 1.0);
    lift_to_sphere(&bar, model.xi)
}

/// Inverse of the sphere model's non-linear map for mirror parameter `xi`.
pub fn lift_to_sphere(bar: &Vec3, xi: f64) -> Option<Vec3> {
    let r2 = bar.x * bar.x + bar.y * bar.y;
    let disc = bar.z * bar.z + (1.0 - xi * xi) * r2;
    if disc < 0.0 {
        return None;
    }
    let norm2 = r2 + bar.z * bar.z;
    if !(norm2 > 0.0) {
        return None;
    }
    let factor = (bar.z * xi + disc.sqrt()) / norm2;
    let ray = Vec3::new(factor * bar.x, factor * bar.y, factor * bar.z - xi);
    let n = ray.norm();
    (n > 0.0).then(|| ray / n)
}

/// Scaramuzza pixel → ray; total over the image plane.
pub fn scaramuzza_pixel_to_ray(u: f64, v: f64, model: &Scaramuzza) -> Vec3 {
    let du = u - model.u0;
    let dv = v - model.v0;
    let rho = du.hypot(dv);
    let s = model.axis_sign();
    Vec3::new(s * dv, -du, s * model.eval(rho)).normalize()
}

fn scaramuzza_project(m: &Scaramuzza, d: &Vec3, grid: ImageGrid) -> Option<(f64, f64)> {
    let horiz = d.x.hypot(d.y);
    if horiz == 0.0 {
        return (d.z > 0.0).then_some((m.u0, m.v0));
    }
    let s = m.axis_sign();
    let g = |rho: f64| s * m.eval(rho) * horiz - rho * d.z;
    let (w, h) = (grid.width as f64, grid.height as f64);
    let rho_max = [(0.0, 0.0), (w, 0.0), (0.0, h), (w, h)]
        .iter()
        .map(|(x, y)| (x - m.u0).hypot(y - m.v0))
        .fold(0.0, f64::max)
        + 1.0;
    const STEPS: usize = 1024;
    let mut prev = (0.0, g(0.0));
    for k in 1..=STEPS {
        let rho = rho_max * k as f64 / STEPS as f64;
        let val = g(rho);
        if val == 0.0 || val.signum() != prev.1.signum() {
            let (mut lo, mut hi) = (prev.0, rho);
            let lo_sign = prev.1.signum();
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if g(mid).signum() == lo_sign {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let rho = 0.5 * (lo + hi);
            return Some((m.u0 - rho * d.y / horiz, m.v0 + s * rho * d.x / horiz));
        }
        prev = (rho, val);
    }
    None
}

/// Kannala–Brandt pixel → ray, inverting `d(θ)` numerically.
pub fn kannala_brandt_pixel_to_ray(u: f64, v: f64, model: &KannalaBrandt) -> Result<Option<Vec3>> {
    let a = (u - model.cx) / model.fx;
    let b = (v - model.cy) / model.fy;
    let dist = a.hypot(b);
    if dist == 0.0 {
        return Ok(Some(Vec3::z()));
    }
    let Some(theta) = model.solve_theta(dist)? else {
        return Ok(None);
    };
    let (s, c) = theta.sin_cos();
    Ok(Some(Vec3::new(s * b / dist, -s * a / dist, c)))
}

/// Render a central camera: one acquisition at the pose's position, then one
/// oracle sample per in-FOV pixel. Rows are processed in parallel.
pub fn compose_central(
    model: &CentralModel,
    pose: &Pose,
    grid: ImageGrid,
    mode: RenderMode,
    oracle: &dyn EnvironmentOracle,
) -> Result<Image> {
    let probe = oracle.acquire(&pose.position, mode)?;
    let values = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let (u, v) = grid.pixel_center(idx);
            match model.back_project(u, v, grid)? {
                Some(ray) => {
                    let (_, dir) = compose_pose(pose, &ray)?;
                    probe.sample(&dir).map(Some)
                }
                None => Ok(None),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Image::from_samples(grid, mode, values)
}

/// Angle in radians between two directions, robust near 0 and π.
pub fn angle_between(a: &Vec3, b: &Vec3) -> f64 {
    a.cross(b).norm().atan2(a.dot(b))
}
