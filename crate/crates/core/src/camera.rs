//! The 13 supported camera models behind one type, with their catalog entries
//! and default parameters.

use std::f64::consts::PI;
use std::fmt;

use crate::central::{
    compose_central, Catadioptric, CentralModel, CylinderMapping, FishEyeLens, KannalaBrandt,
    Mirror, Scaramuzza,
};
use crate::environment::{EnvironmentOracle, RenderMode};
use crate::geometry::{Pose, Rotation, Vec3};
use crate::image::{Image, ImageGrid};
use crate::noncentral::{
    compose_noncentral, ConicalMirror, NcPanorama, NonCentralModel, SphericalMirror,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelKind {
    Equirectangular,
    Cylindrical,
    FishEyeEquiAngular,
    FishEyeStereographic,
    FishEyeOrthogonal,
    FishEyeEquiSolid,
    CatadioptricPara,
    CatadioptricHyper,
    Scaramuzza,
    KannalaBrandt,
    NonCentralPanorama,
    ConicalCatadioptric,
    SphericalCatadioptric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Central,
    NonCentral,
}

/// One row of the model catalog.
#[derive(Debug, Clone, Copy)]
pub struct CatalogEntry {
    pub kind: ModelKind,
    /// Identifier used in job configs (`model = ...` plus `lens`/`mirror`).
    pub id: &'static str,
    pub title: &'static str,
    pub family: Family,
    /// Projection in one line.
    pub formula: &'static str,
    /// Config keys and their defaults.
    pub parameters: &'static str,
    pub default_resolution: (usize, usize),
}

const DISC: (usize, usize) = (1024, 1024);

pub const CATALOG: [CatalogEntry; 13] = [
    CatalogEntry {
        kind: ModelKind::Equirectangular,
        id: "equirectangular",
        title: "Equirectangular panorama",
        family: Family::Central,
        formula: "θ = (2u/W − 1)π, φ = (1/2 − v/H)π (elevation)",
        parameters: "none",
        default_resolution: (1920, 960),
    },
    CatalogEntry {
        kind: ModelKind::Cylindrical,
        id: "cylindrical",
        title: "Cylindrical panorama",
        family: Family::Central,
        formula: "θ = (2u/W − 1)·FOVh/2, φ = (1 − 2v/H)·FOVv/2 (tan φ with true_cylinder)",
        parameters: "fov_h = 360 deg, fov_v = 90 deg, true_cylinder = false",
        default_resolution: (1920, 960),
    },
    CatalogEntry {
        kind: ModelKind::FishEyeEquiAngular,
        id: "fisheye lens=equiangular",
        title: "Fish-eye, equiangular lens",
        family: Family::Central,
        formula: "r = f·φ on a centered disc, azimuth atan2(u0 − u, v − v0)",
        parameters: "f = pixels (default: 180 deg across the disc)",
        default_resolution: DISC,
    },
    CatalogEntry {
        kind: ModelKind::FishEyeStereographic,
        id: "fisheye lens=stereographic",
        title: "Fish-eye, stereographic lens",
        family: Family::Central,
        formula: "r = 2f·tan(φ/2)",
        parameters: "f = pixels (default: 180 deg across the disc)",
        default_resolution: DISC,
    },
    CatalogEntry {
        kind: ModelKind::FishEyeOrthogonal,
        id: "fisheye lens=orthogonal",
        title: "Fish-eye, orthogonal lens",
        family: Family::Central,
        formula: "r = f·sin φ",
        parameters: "f = pixels (default: 180 deg across the disc)",
        default_resolution: DISC,
    },
    CatalogEntry {
        kind: ModelKind::FishEyeEquiSolid,
        id: "fisheye lens=equisolid",
        title: "Fish-eye, equisolid lens",
        family: Family::Central,
        formula: "r = f·sin(φ/2)",
        parameters: "f = pixels (default: 180 deg across the disc)",
        default_resolution: DISC,
    },
    CatalogEntry {
        kind: ModelKind::CatadioptricPara,
        id: "catadioptric mirror=para",
        title: "Central catadioptric, parabolic mirror",
        family: Family::Central,
        formula: "unified sphere model, ξ = 1, η = −2p, H = K·Rc·diag(η−ξ, ξ−η, 1)",
        parameters: "p = 0.1 m, fx/fy/u0/v0 (default: 110 deg polar angle at the disc edge), rc_roll/rc_pitch/rc_yaw = 0",
        default_resolution: DISC,
    },
    CatalogEntry {
        kind: ModelKind::CatadioptricHyper,
        id: "catadioptric mirror=hyper",
        title: "Central catadioptric, hyperbolic mirror",
        family: Family::Central,
        formula: "unified sphere model, ξ = d/√(d²+4p²), η = −2p/√(d²+4p²)",
        parameters: "d = 0.5 m, p = 0.2 m, fx/fy/u0/v0 (default: 110 deg polar angle at the disc edge), rc_roll/rc_pitch/rc_yaw = 0",
        default_resolution: DISC,
    },
    CatalogEntry {
        kind: ModelKind::Scaramuzza,
        id: "scaramuzza",
        title: "Scaramuzza polynomial omnidirectional camera",
        family: Family::Central,
        formula: "ray ∝ (u'', v'', a0 + a1ρ + … + aNρ^N)",
        parameters: "coeffs = a0 .. aN (default: degree-4 fit of a 180 deg equiangular lens), u0/v0 = image center",
        default_resolution: DISC,
    },
    CatalogEntry {
        kind: ModelKind::KannalaBrandt,
        id: "kannala_brandt",
        title: "Kannala–Brandt generic fish-eye",
        family: Family::Central,
        formula: "d(θ) = θ + k1θ³ + k2θ⁵ + k3θ⁷ + k4θ⁹, pixel = (fx·d·cos, fy·d·sin) + c",
        parameters: "fx/fy (default r_max/(π/2)), cx/cy = image center, k = 0.02 -0.005 0 0",
        default_resolution: DISC,
    },
    CatalogEntry {
        kind: ModelKind::NonCentralPanorama,
        id: "noncentral_panorama",
        title: "Non-central circular panorama",
        family: Family::NonCentral,
        formula: "column centers c + Rc(cos θ cos φt, sin θ, cos θ sin φt), Plücker moment Rc sin φ (sin θ, −cos θ, 0)",
        parameters: "radius = 0.1 m, center = 0 0 0, tilt = 0 deg",
        default_resolution: (2048, 1024),
    },
    CatalogEntry {
        kind: ModelKind::ConicalCatadioptric,
        id: "conical",
        title: "Conical catadioptric (non-central)",
        family: Family::NonCentral,
        formula: "Zr = Zc + Rc·cot φ, cot φ = (1 + r·tan 2τ)/(tan 2τ − r), moment (−Zr sin φ sin θ, Zr sin φ cos θ, 0)",
        parameters: "zc = 0 m, rc = 0.05 m, tau = 30 deg, view_angle = 45 deg",
        default_resolution: DISC,
    },
    CatalogEntry {
        kind: ModelKind::SphericalCatadioptric,
        id: "spherical",
        title: "Spherical catadioptric (non-central)",
        family: Family::NonCentral,
        formula: "Ξ = (−xδ, yδ, −ζ, εyZs, εxZs, 0) with Zs = Zm + Rs",
        parameters: "zm = 0.3 m, rs = 0.1 m, view_angle = asin(Rs/Zs)",
        default_resolution: DISC,
    },
];

impl ModelKind {
    pub fn entry(&self) -> &'static CatalogEntry {
        CATALOG
            .iter()
            .find(|e| e.kind == *self)
            .expect("every kind is cataloged")
    }

    pub fn all() -> impl Iterator<Item = ModelKind> {
        CATALOG.iter().map(|e| e.kind)
    }

    /// Short file-name friendly identifier.
    pub fn slug(&self) -> &'static str {
        match self {
            ModelKind::Equirectangular => "equirectangular",
            ModelKind::Cylindrical => "cylindrical",
            ModelKind::FishEyeEquiAngular => "fisheye_equiangular",
            ModelKind::FishEyeStereographic => "fisheye_stereographic",
            ModelKind::FishEyeOrthogonal => "fisheye_orthogonal",
            ModelKind::FishEyeEquiSolid => "fisheye_equisolid",
            ModelKind::CatadioptricPara => "catadioptric_para",
            ModelKind::CatadioptricHyper => "catadioptric_hyper",
            ModelKind::Scaramuzza => "scaramuzza",
            ModelKind::KannalaBrandt => "kannala_brandt",
            ModelKind::NonCentralPanorama => "noncentral_panorama",
            ModelKind::ConicalCatadioptric => "conical",
            ModelKind::SphericalCatadioptric => "spherical",
        }
    }

    pub fn from_slug(s: &str) -> Option<ModelKind> {
        ModelKind::all().find(|k| k.slug() == s)
    }

    pub fn is_disc(&self) -> bool {
        self.entry().default_resolution == DISC
    }

    /// Default model of this kind for the given output grid.
    pub fn default_model(&self, grid: ImageGrid) -> Result<CameraModel> {
        let r_max = grid.disc_radius();
        let (u0, v0) = grid.center();
        let fisheye =
            |lens: FishEyeLens| CentralModel::fisheye(lens, lens.focal_for(r_max, PI / 2.0));
        let m = match self {
            ModelKind::Equirectangular => CameraModel::Central(CentralModel::Equirect),
            ModelKind::Cylindrical => CameraModel::Central(CentralModel::cylindrical(
                2.0 * PI,
                PI / 2.0,
                CylinderMapping::Linear,
            )?),
            ModelKind::FishEyeEquiAngular => {
                CameraModel::Central(fisheye(FishEyeLens::EquiAngular)?)
            }
            ModelKind::FishEyeStereographic => {
                CameraModel::Central(fisheye(FishEyeLens::Stereographic)?)
            }
            ModelKind::FishEyeOrthogonal => CameraModel::Central(fisheye(FishEyeLens::Orthogonal)?),
            ModelKind::FishEyeEquiSolid => CameraModel::Central(fisheye(FishEyeLens::EquiSolid)?),
            ModelKind::CatadioptricPara => CameraModel::Central(CentralModel::Catadioptric(
                default_catadioptric(Mirror::Para, 0.0, 0.1, grid)?,
            )),
            ModelKind::CatadioptricHyper => CameraModel::Central(CentralModel::Catadioptric(
                default_catadioptric(Mirror::Hyper, 0.5, 0.2, grid)?,
            )),
            ModelKind::Scaramuzza => CameraModel::Central(CentralModel::Scaramuzza(
                Scaramuzza::new(default_scaramuzza_coeffs(r_max), u0, v0)?,
            )),
            ModelKind::KannalaBrandt => {
                let f = r_max / (PI / 2.0);
                CameraModel::Central(CentralModel::KannalaBrandt(KannalaBrandt::new(
                    f,
                    f,
                    u0,
                    v0,
                    [0.02, -0.005, 0.0, 0.0],
                )?))
            }
            ModelKind::NonCentralPanorama => CameraModel::NonCentral(NonCentralModel::Panorama(
                NcPanorama::new(0.1, Vec3::zeros(), 0.0)?,
            )),
            ModelKind::ConicalCatadioptric => CameraModel::NonCentral(NonCentralModel::Conical(
                ConicalMirror::new(0.0, 0.05, PI / 6.0, ConicalMirror::DEFAULT_VIEW_ANGLE)?,
            )),
            ModelKind::SphericalCatadioptric => CameraModel::NonCentral(
                NonCentralModel::Spherical(SphericalMirror::new(0.3, 0.1, None)?),
            ),
        };
        Ok(m)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

/// Polar angle imaged at the edge of the default catadioptric disc.
pub const CATADIOPTRIC_EDGE_ANGLE: f64 = 110.0 * PI / 180.0;

/// Focal length that places polar angle `edge` at radius `r_max` on a
/// catadioptric image with mirror parameters (ξ, η).
pub fn catadioptric_focal(xi: f64, eta: f64, r_max: f64, edge: f64) -> f64 {
    r_max * (edge.cos() + xi) / ((eta - xi).abs() * edge.sin())
}

fn default_catadioptric(mirror: Mirror, d: f64, p: f64, grid: ImageGrid) -> Result<Catadioptric> {
    let (xi, eta) = crate::central::mirror_parameters(mirror, d, p);
    let f = catadioptric_focal(xi, eta, grid.disc_radius(), CATADIOPTRIC_EDGE_ANGLE);
    let (u0, v0) = grid.center();
    Catadioptric::new(mirror, d, p, f, f, u0, v0, Rotation::identity())
}

/// Truncated series of `ρ·cot(ρ/F)` with `F = r_max/(π/2)`: a degree-4
/// polynomial close to a 180° equiangular lens.
pub fn default_scaramuzza_coeffs(r_max: f64) -> Vec<f64> {
    let f = r_max / (PI / 2.0);
    vec![f, 0.0, -1.0 / (3.0 * f), 0.0, -1.0 / (45.0 * f * f * f)]
}

#[derive(Debug, Clone, PartialEq)]
pub enum CameraModel {
    Central(CentralModel),
    NonCentral(NonCentralModel),
}

impl CameraModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            CameraModel::Central(m) => match m {
                CentralModel::Equirect => ModelKind::Equirectangular,
                CentralModel::Cylindrical { .. } => ModelKind::Cylindrical,
                CentralModel::FishEye { lens, .. } => match lens {
                    FishEyeLens::EquiAngular => ModelKind::FishEyeEquiAngular,
                    FishEyeLens::Stereographic => ModelKind::FishEyeStereographic,
                    FishEyeLens::Orthogonal => ModelKind::FishEyeOrthogonal,
                    FishEyeLens::EquiSolid => ModelKind::FishEyeEquiSolid,
                },
                CentralModel::Catadioptric(c) => match c.mirror {
                    Mirror::Para => ModelKind::CatadioptricPara,
                    Mirror::Hyper => ModelKind::CatadioptricHyper,
                },
                CentralModel::Scaramuzza(_) => ModelKind::Scaramuzza,
                CentralModel::KannalaBrandt(_) => ModelKind::KannalaBrandt,
            },
            CameraModel::NonCentral(m) => match m {
                NonCentralModel::Panorama(_) => ModelKind::NonCentralPanorama,
                NonCentralModel::Conical(_) => ModelKind::ConicalCatadioptric,
                NonCentralModel::Spherical(_) => ModelKind::SphericalCatadioptric,
            },
        }
    }

    pub fn is_central(&self) -> bool {
        matches!(self, CameraModel::Central(_))
    }

    pub fn as_central(&self) -> Result<&CentralModel> {
        match self {
            CameraModel::Central(m) => Ok(m),
            CameraModel::NonCentral(_) => Err(Error::Unsupported(format!(
                "{} is a non-central model",
                self.kind()
            ))),
        }
    }

    /// Render one image of this camera.
    pub fn render(
        &self,
        pose: &Pose,
        grid: ImageGrid,
        mode: RenderMode,
        oracle: &dyn EnvironmentOracle,
    ) -> Result<Image> {
        match self {
            CameraModel::Central(m) => compose_central(m, pose, grid, mode, oracle),
            CameraModel::NonCentral(m) => compose_noncentral(m, pose, grid, mode, oracle),
        }
    }
}

/// Human-readable catalog, one block per model.
pub fn list_models() -> String {
    let mut out = String::new();
    for (i, e) in CATALOG.iter().enumerate() {
        let family = match e.family {
            Family::Central => "central",
            Family::NonCentral => "non-central",
        };
        out.push_str(&format!(
            "{:>2}. {} [{}]\n    model: {}\n    projection: {}\n    parameters: {}\n    default resolution: {}x{}\n",
            i + 1,
            e.title,
            family,
            e.id,
            e.formula,
            e.parameters,
            e.default_resolution.0,
            e.default_resolution.1
        ));
    }
    out.push_str(&format!(
        "{} models x {} render modes ({}) = {} image types\n",
        CATALOG.len(),
        RenderMode::ALL.len(),
        RenderMode::ALL.map(|m| m.name()).join(", "),
        CATALOG.len() * RenderMode::ALL.len()
    ));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::central::angle_between;

    #[test]
    fn catalog_has_thirteen_distinct_models() {
        assert_eq!(CATALOG.len(), 13);
        let mut kinds: Vec<_> = ModelKind::all().collect();
        kinds.dedup();
        assert_eq!(kinds.len(), 13);
        assert_eq!(
            CATALOG
                .iter()
                .filter(|e| e.family == Family::NonCentral)
                .count(),
            3
        );
        assert!(list_models().contains("13 models x 3 render modes"));
        assert!(list_models().contains("= 39 image types"));
    }

    #[test]
    fn defaults_round_trip_kind() {
        for kind in ModelKind::all() {
            let (w, h) = kind.entry().default_resolution;
            let grid = ImageGrid::new(w / 8, h / 8).unwrap();
            let m = kind.default_model(grid).unwrap();
            assert_eq!(m.kind(), kind);
            assert_eq!(ModelKind::from_slug(kind.slug()), Some(kind));
        }
    }

    #[test]
    fn catadioptric_default_edge_angle() {
        let grid = ImageGrid::new(200, 200).unwrap();
        for kind in [ModelKind::CatadioptricPara, ModelKind::CatadioptricHyper] {
            let CameraModel::Central(m) = kind.default_model(grid).unwrap() else {
                panic!()
            };
            let ray = m.back_project(199.9999, 100.0, grid).unwrap().unwrap();
            assert!(
                (angle_between(&ray, &Vec3::z()) - CATADIOPTRIC_EDGE_ANGLE).abs() < 1e-4,
                "{kind}"
            );
        }
    }
}
