//! Job configuration files.
//!
//! TOML with four tables; angles are in degrees. Example:
//!
//! ```toml
//! [scene]
//! source = "reference"        # reference | unit_room | file | cubemaps
//!
//! [camera]
//! model = "fisheye"
//! lens = "equisolid"
//! width = 1024
//! height = 1024
//!
//! [pose]
//! position = [0, 0, 0.2]
//! yaw = 30
//!
//! [output]
//! dir = "out"
//! modes = ["lit", "semantic", "depth"]
//! layout = true
//! ```
//!
//! Validation reports every problem it finds, each with its line number.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};

use crate::camera::{
    catadioptric_focal, default_scaramuzza_coeffs, CameraModel, ModelKind, CATADIOPTRIC_EDGE_ANGLE,
};
use crate::central::{
    mirror_parameters, Catadioptric, CentralModel, CylinderMapping, FishEyeLens, KannalaBrandt,
    Mirror, Scaramuzza,
};
use crate::environment::{CubeFrame, RenderMode};
use crate::geometry::{Pose, Rotation, Vec3};
use crate::image::ImageGrid;
use crate::noncentral::{ConicalMirror, NcPanorama, NonCentralModel, SphericalMirror};
use crate::{Error, Result};

/// One configuration problem; `line` is 0 when it concerns the file as a whole.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line > 0 {
            write!(f, "line {}: {}", self.line, self.message)
        } else {
            f.write_str(&self.message)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SceneSource {
    Reference,
    UnitRoom,
    File(PathBuf),
    /// Pre-rendered cube maps; each prefix is loaded once per mode as `<prefix>_<mode>`.
    CubeMaps {
        prefixes: Vec<PathBuf>,
        planar_depth: bool,
        frame: Option<CubeFrame>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParamValue {
    Number(f64),
    Flag(bool),
    List(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CameraConfig {
    pub kind: ModelKind,
    pub width: usize,
    pub height: usize,
    /// Explicitly given model parameters (angles in degrees).
    pub params: BTreeMap<String, ParamValue>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PosePath {
    Single,
    Trajectory(PathBuf),
    Circle {
        center: Vec3,
        radius: f64,
        frames: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoseConfig {
    pub position: Vec3,
    pub yaw_deg: f64,
    pub pitch_deg: f64,
    pub roll_deg: f64,
    pub path: PosePath,
}

impl PoseConfig {
    pub fn orientation(&self) -> Rotation {
        Rotation::from_yaw_pitch_roll(
            self.yaw_deg.to_radians(),
            self.pitch_deg.to_radians(),
            self.roll_deg.to_radians(),
        )
    }

    pub fn single_pose(&self) -> Pose {
        Pose::new(self.position, self.orientation())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Via {
    #[default]
    Direct,
    CubeMap,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub modes: Vec<RenderMode>,
    pub layout: bool,
    pub dilation: Option<f64>,
    pub workers: Option<usize>,
    pub via: Via,
    pub face_res: Option<usize>,
    pub depth_preview: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JobConfig {
    pub scene: SceneSource,
    pub camera: CameraConfig,
    pub pose: PoseConfig,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Copy)]
enum Check {
    Any,
    /// `(lo, lo_inclusive, hi, hi_inclusive)`
    Range(f64, bool, f64, bool),
}

impl Check {
    fn accepts(&self, x: f64) -> bool {
        match *self {
            Check::Any => x.is_finite(),
            Check::Range(lo, li, hi, hi_incl) => {
                (if li { x >= lo } else { x > lo }) && (if hi_incl { x <= hi } else { x < hi })
            }
        }
    }

    fn describe(&self) -> String {
        match *self {
            Check::Any => "a finite number".into(),
            Check::Range(lo, li, hi, hi_incl) => {
                let hi_s = if hi.is_infinite() {
                    "∞".to_string()
                } else {
                    hi.to_string()
                };
                format!(
                    "{}{lo}, {hi_s}{}",
                    if li { '[' } else { '(' },
                    if hi_incl { ']' } else { ')' }
                )
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Spec {
    Num(Check),
    Flag,
    /// Fixed length (`Some`) or at least one value.
    List(Option<usize>),
}

const POSITIVE: Check = Check::Range(0.0, false, f64::INFINITY, false);
const NON_NEGATIVE: Check = Check::Range(0.0, true, f64::INFINITY, false);

fn param_specs(kind: ModelKind) -> Vec<(&'static str, Spec)> {
    use ModelKind::*;
    match kind {
        Equirectangular => vec![],
        Cylindrical => vec![
            ("fov_h", Spec::Num(Check::Range(0.0, false, 360.0, true))),
            ("fov_v", Spec::Num(Check::Range(0.0, false, 180.0, false))),
            ("true_cylinder", Spec::Flag),
        ],
        FishEyeEquiAngular | FishEyeStereographic | FishEyeOrthogonal | FishEyeEquiSolid => {
            vec![("f", Spec::Num(POSITIVE))]
        }
        CatadioptricPara | CatadioptricHyper => {
            let mut v = vec![
                ("p", Spec::Num(POSITIVE)),
                ("fx", Spec::Num(POSITIVE)),
                ("fy", Spec::Num(POSITIVE)),
                ("u0", Spec::Num(Check::Any)),
                ("v0", Spec::Num(Check::Any)),
                ("rc_yaw", Spec::Num(Check::Any)),
                ("rc_pitch", Spec::Num(Check::Any)),
                ("rc_roll", Spec::Num(Check::Any)),
            ];
            if kind == CatadioptricHyper {
                v.push(("d", Spec::Num(POSITIVE)));
            }
            v
        }
        Scaramuzza => vec![
            ("coeffs", Spec::List(None)),
            ("u0", Spec::Num(Check::Any)),
            ("v0", Spec::Num(Check::Any)),
        ],
        KannalaBrandt => vec![
            ("fx", Spec::Num(POSITIVE)),
            ("fy", Spec::Num(POSITIVE)),
            ("cx", Spec::Num(Check::Any)),
            ("cy", Spec::Num(Check::Any)),
            ("k", Spec::List(Some(4))),
        ],
        NonCentralPanorama => vec![
            ("radius", Spec::Num(NON_NEGATIVE)),
            ("center", Spec::List(Some(3))),
            ("tilt", Spec::Num(Check::Range(-90.0, true, 90.0, true))),
        ],
        ConicalCatadioptric => vec![
            ("zc", Spec::Num(Check::Any)),
            ("rc", Spec::Num(POSITIVE)),
            ("tau", Spec::Num(Check::Range(0.0, false, 45.0, false))),
            (
                "view_angle",
                Spec::Num(Check::Range(0.0, false, 90.0, false)),
            ),
        ],
        SphericalCatadioptric => vec![
            ("zm", Spec::Num(POSITIVE)),
            ("rs", Spec::Num(POSITIVE)),
            (
                "view_angle",
                Spec::Num(Check::Range(0.0, false, 90.0, false)),
            ),
        ],
    }
}

/// Base model names accepted by `model = ...`.
pub const MODEL_NAMES: [&str; 9] = [
    "equirectangular",
    "cylindrical",
    "fisheye",
    "catadioptric",
    "scaramuzza",
    "kannala_brandt",
    "noncentral_panorama",
    "conical",
    "spherical",
];

fn lens_name(lens: FishEyeLens) -> &'static str {
    lens.name()
}

fn kind_base_name(kind: ModelKind) -> (&'static str, Option<(&'static str, &'static str)>) {
    use ModelKind::*;
    match kind {
        Equirectangular => ("equirectangular", None),
        Cylindrical => ("cylindrical", None),
        FishEyeEquiAngular => (
            "fisheye",
            Some(("lens", lens_name(FishEyeLens::EquiAngular))),
        ),
        FishEyeStereographic => (
            "fisheye",
            Some(("lens", lens_name(FishEyeLens::Stereographic))),
        ),
        FishEyeOrthogonal => (
            "fisheye",
            Some(("lens", lens_name(FishEyeLens::Orthogonal))),
        ),
        FishEyeEquiSolid => ("fisheye", Some(("lens", lens_name(FishEyeLens::EquiSolid)))),
        CatadioptricPara => ("catadioptric", Some(("mirror", "para"))),
        CatadioptricHyper => ("catadioptric", Some(("mirror", "hyper"))),
        Scaramuzza => ("scaramuzza", None),
        KannalaBrandt => ("kannala_brandt", None),
        NonCentralPanorama => ("noncentral_panorama", None),
        ConicalCatadioptric => ("conical", None),
        SphericalCatadioptric => ("spherical", None),
    }
}

type Spanned<T> = toml::Spanned<T>;
type RawSection = BTreeMap<String, Spanned<toml::Value>>;

struct Entry {
    line: usize,
    value: toml::Value,
    used: bool,
}

struct Section {
    line: usize,
    entries: BTreeMap<String, Entry>,
}

struct Reader {
    sections: BTreeMap<String, Section>,
    errors: Vec<ConfigError>,
}

fn type_name(v: &toml::Value) -> &'static str {
    v.type_str()
}

fn as_f64(v: &toml::Value) -> Option<f64> {
    match v {
        toml::Value::Float(x) => Some(*x),
        toml::Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

impl Reader {
    fn err(&mut self, line: usize, message: impl Into<String>) {
        self.errors.push(ConfigError {
            line,
            message: message.into(),
        });
    }

    fn take(&mut self, section: &str, key: &str) -> Option<(usize, toml::Value)> {
        let e = self.sections.get_mut(section)?.entries.get_mut(key)?;
        e.used = true;
        Some((e.line, e.value.clone()))
    }

    fn line_of(&self, section: &str, key: &str) -> usize {
        self.sections
            .get(section)
            .and_then(|s| s.entries.get(key))
            .map_or(0, |e| e.line)
    }

    fn section_line(&self, section: &str) -> usize {
        self.sections.get(section).map_or(0, |s| s.line)
    }

    fn number(&mut self, section: &str, key: &str, check: Check) -> Option<f64> {
        let (line, raw) = self.take(section, key)?;
        match as_f64(&raw) {
            Some(x) if check.accepts(x) => Some(x),
            Some(x) => {
                self.err(
                    line,
                    format!("{key} = {x} is out of range {}", check.describe()),
                );
                None
            }
            None => {
                self.err(
                    line,
                    format!("{key}: expected a number, got {}", type_name(&raw)),
                );
                None
            }
        }
    }

    fn count(&mut self, section: &str, key: &str, min: usize) -> Option<usize> {
        let (line, raw) = self.take(section, key)?;
        match raw {
            toml::Value::Integer(i) if i >= min as i64 => Some(i as usize),
            other => {
                self.err(
                    line,
                    format!("{key}: expected an integer ≥ {min}, got {other}"),
                );
                None
            }
        }
    }

    fn flag(&mut self, section: &str, key: &str) -> Option<bool> {
        let (line, raw) = self.take(section, key)?;
        match raw {
            toml::Value::Boolean(b) => Some(b),
            other => {
                self.err(line, format!("{key}: expected true or false, got {other}"));
                None
            }
        }
    }

    fn string(&mut self, section: &str, key: &str) -> Option<(usize, String)> {
        let (line, raw) = self.take(section, key)?;
        match raw {
            toml::Value::String(s) => Some((line, s)),
            other => {
                self.err(
                    line,
                    format!("{key}: expected a string, got {}", type_name(&other)),
                );
                None
            }
        }
    }

    /// A string or an array of strings.
    fn strings(&mut self, section: &str, key: &str) -> Option<(usize, Vec<String>)> {
        let (line, raw) = self.take(section, key)?;
        let items = match &raw {
            toml::Value::String(s) => Some(vec![s.clone()]),
            toml::Value::Array(a) => a.iter().map(|v| v.as_str().map(str::to_string)).collect(),
            _ => None,
        };
        if items.is_none() {
            self.err(
                line,
                format!("{key}: expected a string or a list of strings"),
            );
        }
        items.map(|v| (line, v))
    }

    fn list(&mut self, section: &str, key: &str, len: Option<usize>) -> Option<Vec<f64>> {
        let (line, raw) = self.take(section, key)?;
        let values: Option<Vec<f64>> = match &raw {
            toml::Value::Array(a) => a.iter().map(as_f64).collect(),
            _ => None,
        };
        match values {
            Some(v) if v.iter().all(|x| x.is_finite()) => match len {
                Some(n) if v.len() != n => {
                    self.err(
                        line,
                        format!("{key}: expected {n} numbers, got {}", v.len()),
                    );
                    None
                }
                None if v.is_empty() => {
                    self.err(line, format!("{key}: expected at least one number"));
                    None
                }
                _ => Some(v),
            },
            _ => {
                self.err(line, format!("{key}: expected a list of numbers"));
                None
            }
        }
    }

    fn vec3(&mut self, section: &str, key: &str) -> Option<Vec3> {
        self.list(section, key, Some(3))
            .map(|v| Vec3::new(v[0], v[1], v[2]))
    }
}

fn line_at(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

const SECTIONS: [&str; 4] = ["scene", "camera", "pose", "output"];

/// Parse and validate a job configuration, collecting every error.
pub fn parse_config(text: &str) -> Result<JobConfig> {
    parse_config_collect(text).map_err(Error::Config)
}

fn parse_config_collect(text: &str) -> std::result::Result<JobConfig, Vec<ConfigError>> {
    let raw: BTreeMap<String, Spanned<RawSection>> = toml::from_str(text).map_err(|e| {
        vec![ConfigError {
            line: e.span().map_or(0, |s| line_at(text, s.start)),
            message: e.message().trim().to_string(),
        }]
    })?;
    let mut r = Reader {
        sections: BTreeMap::new(),
        errors: Vec::new(),
    };
    for (name, table) in raw {
        let line = line_at(text, table.span().start);
        if !SECTIONS.contains(&name.as_str()) {
            r.err(
                line,
                format!("unknown table [{name}] (expected scene, camera, pose or output)"),
            );
            continue;
        }
        let entries = table
            .into_inner()
            .into_iter()
            .map(|(k, v)| {
                let entry = Entry {
                    line: line_at(text, v.span().start),
                    value: v.into_inner(),
                    used: false,
                };
                (k, entry)
            })
            .collect();
        r.sections.insert(name, Section { line, entries });
    }

    let scene = read_scene(&mut r);
    let camera = read_camera(&mut r);
    let pose = read_pose(&mut r);
    let output = read_output(&mut r);

    for (name, sec) in &r.sections {
        for (key, e) in &sec.entries {
            if !e.used {
                r.errors.push(ConfigError {
                    line: e.line,
                    message: format!("unknown key '{key}' in [{name}]"),
                });
            }
        }
    }

    if let (Some(scene), Some(camera), Some(output)) = (&scene, &camera, &output) {
        if let Err(e) = camera.build() {
            let line = r.line_of("camera", "model");
            r.err(line, e.to_string());
        }
        let layout_line = r.line_of("output", "layout");
        if output.layout {
            if camera.kind.entry().family != crate::camera::Family::Central {
                r.err(
                    layout_line,
                    format!(
                        "layout ground truth is only available for central models, not {}",
                        camera.kind
                    ),
                );
            }
            if matches!(scene, SceneSource::CubeMaps { .. }) {
                r.err(
                    layout_line,
                    "layout ground truth needs a scene, not ingested cube maps",
                );
            }
        }
        if output.via == Via::CubeMap && matches!(scene, SceneSource::CubeMaps { .. }) {
            let line = r.line_of("output", "via");
            r.err(
                line,
                "via = \"cubemap\" re-renders a scene; ingested cube maps are sampled directly",
            );
        }
    }

    r.errors.sort_by_key(|e| e.line);
    match (scene, camera, pose, output) {
        (Some(scene), Some(camera), Some(pose), Some(output)) if r.errors.is_empty() => {
            Ok(JobConfig {
                scene,
                camera,
                pose,
                output,
            })
        }
        _ => {
            if r.errors.is_empty() {
                r.err(0, "invalid configuration");
            }
            Err(r.errors)
        }
    }
}

fn read_scene(r: &mut Reader) -> Option<SceneSource> {
    let ok = r.errors.len();
    let file = r.string("scene", "file");
    let prefixes = r.strings("scene", "cubemaps");
    let planar = r.flag("scene", "planar_depth");
    let frame = r.string("scene", "frame");
    let source = r.string("scene", "source");
    let line = source.as_ref().map_or(r.section_line("scene"), |s| s.0);
    let name = match &source {
        Some((_, s)) => s.to_ascii_lowercase(),
        None if file.is_some() => "file".into(),
        None if prefixes.is_some() => "cubemaps".into(),
        None => "reference".into(),
    };
    let out = match name.as_str() {
        "reference" => Some(SceneSource::Reference),
        "unit_room" => Some(SceneSource::UnitRoom),
        "file" => match &file {
            Some((_, path)) => Some(SceneSource::File(PathBuf::from(path))),
            None => {
                r.err(line, "source = \"file\" needs the missing key `file`");
                None
            }
        },
        "cubemaps" => match &prefixes {
            Some((_, list)) => {
                let frame = match frame.as_ref().map(|(l, f)| (*l, f.to_ascii_lowercase())) {
                    None => None,
                    Some((_, f)) if f == "world" => Some(CubeFrame::World),
                    Some((_, f)) if f == "ue4" => Some(CubeFrame::Ue4),
                    Some((l, f)) => {
                        r.err(
                            l,
                            format!("frame: expected \"world\" or \"ue4\", got '{f}'"),
                        );
                        None
                    }
                };
                Some(SceneSource::CubeMaps {
                    prefixes: list.iter().map(PathBuf::from).collect(),
                    planar_depth: planar.unwrap_or(false),
                    frame,
                })
            }
            None => {
                r.err(line, "source = \"cubemaps\" needs the missing key `cubemaps` (list of file prefixes)");
                None
            }
        },
        other => {
            r.err(line, format!("unknown scene source '{other}' (expected reference, unit_room, file or cubemaps)"));
            None
        }
    };
    if name != "file" {
        if let Some((l, _)) = file {
            r.err(l, "`file` is only used with source = \"file\"");
        }
    }
    if name != "cubemaps" {
        for key in ["cubemaps", "frame", "planar_depth"] {
            if r.sections
                .get("scene")
                .is_some_and(|s| s.entries.contains_key(key))
            {
                let l = r.line_of("scene", key);
                r.err(
                    l,
                    format!("`{key}` is only used with source = \"cubemaps\""),
                );
            }
        }
    }
    (r.errors.len() == ok).then_some(out).flatten()
}

fn read_camera(r: &mut Reader) -> Option<CameraConfig> {
    let section_line = r.section_line("camera");
    let model = r.string("camera", "model");
    let lens = r.string("camera", "lens");
    let mirror = r.string("camera", "mirror");
    let width = r.count("camera", "width", 1);
    let height = r.count("camera", "height", 1);
    let Some((model_line, model)) = model else {
        if !r
            .errors
            .iter()
            .any(|e| e.line == r.line_of("camera", "model") && e.line > 0)
        {
            r.err(section_line, "[camera] needs the missing key `model`");
        }
        return None;
    };
    let model = model.to_ascii_lowercase();
    let kind = match model.as_str() {
        "equirectangular" | "equirect" => ModelKind::Equirectangular,
        "cylindrical" => ModelKind::Cylindrical,
        "scaramuzza" => ModelKind::Scaramuzza,
        "kannala_brandt" => ModelKind::KannalaBrandt,
        "noncentral_panorama" => ModelKind::NonCentralPanorama,
        "conical" => ModelKind::ConicalCatadioptric,
        "spherical" => ModelKind::SphericalCatadioptric,
        "fisheye" => match lens.as_ref().map(|(l, s)| (*l, s.to_ascii_lowercase())) {
            None => {
                r.err(
                    model_line,
                    "model = \"fisheye\" needs the missing key `lens` (equiangular, stereographic, orthogonal or equisolid)",
                );
                return None;
            }
            Some((l, s)) => match FishEyeLens::ALL.iter().find(|x| x.name() == s) {
                Some(FishEyeLens::EquiAngular) => ModelKind::FishEyeEquiAngular,
                Some(FishEyeLens::Stereographic) => ModelKind::FishEyeStereographic,
                Some(FishEyeLens::Orthogonal) => ModelKind::FishEyeOrthogonal,
                Some(FishEyeLens::EquiSolid) => ModelKind::FishEyeEquiSolid,
                None => {
                    r.err(l, format!("unknown lens '{s}' (expected equiangular, stereographic, orthogonal or equisolid)"));
                    return None;
                }
            },
        },
        "catadioptric" => match mirror.as_ref().map(|(l, s)| (*l, s.to_ascii_lowercase())) {
            None => {
                r.err(
                    model_line,
                    "model = \"catadioptric\" needs the missing key `mirror` (para or hyper)",
                );
                return None;
            }
            Some((_, s)) if s == "para" || s == "parabolic" => ModelKind::CatadioptricPara,
            Some((_, s)) if s == "hyper" || s == "hyperbolic" => ModelKind::CatadioptricHyper,
            Some((l, s)) => {
                r.err(l, format!("unknown mirror '{s}' (expected para or hyper)"));
                return None;
            }
        },
        other => {
            r.err(
                model_line,
                format!(
                    "unknown model '{other}' (expected one of {})",
                    MODEL_NAMES.join(", ")
                ),
            );
            return None;
        }
    };
    if model != "fisheye" {
        if let Some((l, _)) = lens {
            r.err(l, "`lens` is only used with model = \"fisheye\"");
        }
    }
    if model != "catadioptric" {
        if let Some((l, _)) = mirror {
            r.err(l, "`mirror` is only used with model = \"catadioptric\"");
        }
    }
    let mut params = BTreeMap::new();
    for (key, spec) in param_specs(kind) {
        let value = match spec {
            Spec::Num(check) => r.number("camera", key, check).map(ParamValue::Number),
            Spec::Flag => r.flag("camera", key).map(ParamValue::Flag),
            Spec::List(len) => r.list("camera", key, len).map(ParamValue::List),
        };
        if let Some(v) = value {
            params.insert(key.to_string(), v);
        }
    }
    let (dw, dh) = kind.entry().default_resolution;
    let (width, height) = match (width, height) {
        (Some(w), Some(h)) => (w, h),
        (Some(w), None) => (w, ((w * dh) as f64 / dw as f64).round().max(1.0) as usize),
        (None, Some(h)) => (((h * dw) as f64 / dh as f64).round().max(1.0) as usize, h),
        (None, None) => (dw, dh),
    };
    Some(CameraConfig {
        kind,
        width,
        height,
        params,
    })
}

fn read_pose(r: &mut Reader) -> Option<PoseConfig> {
    let ok = r.errors.len();
    let position = r.vec3("pose", "position").unwrap_or_else(Vec3::zeros);
    let yaw_deg = r.number("pose", "yaw", Check::Any).unwrap_or(0.0);
    let pitch_deg = r.number("pose", "pitch", Check::Any).unwrap_or(0.0);
    let roll_deg = r.number("pose", "roll", Check::Any).unwrap_or(0.0);
    let trajectory = r.string("pose", "trajectory");
    let circle = r.take("pose", "circle");
    let path = match (trajectory, circle) {
        (Some((l, _)), Some(_)) => {
            r.err(l, "`trajectory` and `circle` cannot both be given");
            PosePath::Single
        }
        (Some((_, p)), None) => PosePath::Trajectory(PathBuf::from(p)),
        (None, Some((line, value))) => match read_circle(&value) {
            Ok(path) => path,
            Err(message) => {
                r.err(line, message);
                PosePath::Single
            }
        },
        (None, None) => PosePath::Single,
    };
    (r.errors.len() == ok).then_some(PoseConfig {
        position,
        yaw_deg,
        pitch_deg,
        roll_deg,
        path,
    })
}

const CIRCLE_USAGE: &str =
    "circle: expected { center = [x, y, z], radius = r, frames = n } with r ≥ 0 and n ≥ 1";

fn read_circle(value: &toml::Value) -> std::result::Result<PosePath, String> {
    let table = value.as_table().ok_or(CIRCLE_USAGE)?;
    if table
        .keys()
        .any(|k| !["center", "radius", "frames"].contains(&k.as_str()))
    {
        return Err(CIRCLE_USAGE.into());
    }
    let center = match table.get("center") {
        None => Vec3::zeros(),
        Some(toml::Value::Array(a)) if a.len() == 3 => {
            let c: Option<Vec<f64>> = a.iter().map(as_f64).collect();
            let c = c.ok_or(CIRCLE_USAGE)?;
            Vec3::new(c[0], c[1], c[2])
        }
        Some(_) => return Err(CIRCLE_USAGE.into()),
    };
    let radius = table
        .get("radius")
        .and_then(as_f64)
        .filter(|r| *r >= 0.0 && r.is_finite())
        .ok_or(CIRCLE_USAGE)?;
    let frames = match table.get("frames") {
        Some(toml::Value::Integer(n)) if *n >= 1 => *n as usize,
        _ => return Err(CIRCLE_USAGE.into()),
    };
    Ok(PosePath::Circle {
        center,
        radius,
        frames,
    })
}

fn read_output(r: &mut Reader) -> Option<OutputConfig> {
    let ok = r.errors.len();
    let dir = r
        .string("output", "dir")
        .map_or_else(|| PathBuf::from("omnisynth_out"), |(_, d)| PathBuf::from(d));
    let modes = match r.strings("output", "modes") {
        None => RenderMode::ALL.to_vec(),
        Some((line, names)) => {
            let mut modes = Vec::new();
            for name in names {
                match name.parse::<RenderMode>() {
                    Ok(m) if modes.contains(&m) => r.err(line, format!("mode '{m}' listed twice")),
                    Ok(m) => modes.push(m),
                    Err(e) => r.err(line, e),
                }
            }
            if modes.is_empty() && r.errors.len() == ok {
                r.err(
                    line,
                    "modes: at least one of lit, semantic, depth is required",
                );
            }
            modes
        }
    };
    let layout = r.flag("output", "layout").unwrap_or(false);
    let dilation = r.number("output", "dilation", NON_NEGATIVE);
    let workers = r.count("output", "workers", 1);
    let via = match r.string("output", "via") {
        None => Via::Direct,
        Some((_, v)) if v.eq_ignore_ascii_case("direct") => Via::Direct,
        Some((_, v)) if v.eq_ignore_ascii_case("cubemap") => Via::CubeMap,
        Some((line, v)) => {
            r.err(
                line,
                format!("via: expected \"direct\" or \"cubemap\", got '{v}'"),
            );
            Via::Direct
        }
    };
    let face_res = r.count("output", "face_res", 1);
    let depth_preview = r.flag("output", "depth_preview").unwrap_or(true);
    (r.errors.len() == ok).then_some(OutputConfig {
        dir,
        modes,
        layout,
        dilation,
        workers,
        via,
        face_res,
        depth_preview,
    })
}

fn num_list(v: &[f64]) -> toml::Value {
    toml::Value::Array(v.iter().map(|x| toml::Value::Float(*x)).collect())
}

fn path_value(p: &Path) -> toml::Value {
    toml::Value::String(p.to_string_lossy().into_owned())
}

impl JobConfig {
    /// Canonical TOML form; parses back to an equal config.
    pub fn to_text(&self) -> String {
        use toml::{Table, Value};
        let s = |x: &str| Value::String(x.to_string());

        let mut scene = Table::new();
        match &self.scene {
            SceneSource::Reference => {
                scene.insert("source".into(), s("reference"));
            }
            SceneSource::UnitRoom => {
                scene.insert("source".into(), s("unit_room"));
            }
            SceneSource::File(p) => {
                scene.insert("source".into(), s("file"));
                scene.insert("file".into(), path_value(p));
            }
            SceneSource::CubeMaps {
                prefixes,
                planar_depth,
                frame,
            } => {
                scene.insert("source".into(), s("cubemaps"));
                scene.insert(
                    "cubemaps".into(),
                    Value::Array(prefixes.iter().map(|p| path_value(p)).collect()),
                );
                scene.insert("planar_depth".into(), Value::Boolean(*planar_depth));
                match frame {
                    Some(CubeFrame::World) => {
                        scene.insert("frame".into(), s("world"));
                    }
                    Some(CubeFrame::Ue4) => {
                        scene.insert("frame".into(), s("ue4"));
                    }
                    None => {}
                }
            }
        }

        let c = &self.camera;
        let mut camera = Table::new();
        let (base, extra) = kind_base_name(c.kind);
        camera.insert("model".into(), s(base));
        if let Some((k, v)) = extra {
            camera.insert(k.into(), s(v));
        }
        camera.insert("width".into(), Value::Integer(c.width as i64));
        camera.insert("height".into(), Value::Integer(c.height as i64));
        for (k, v) in &c.params {
            let v = match v {
                ParamValue::Number(x) => Value::Float(*x),
                ParamValue::Flag(b) => Value::Boolean(*b),
                ParamValue::List(l) => num_list(l),
            };
            camera.insert(k.clone(), v);
        }

        let p = &self.pose;
        let mut pose = Table::new();
        pose.insert("position".into(), num_list(p.position.as_slice()));
        pose.insert("yaw".into(), Value::Float(p.yaw_deg));
        pose.insert("pitch".into(), Value::Float(p.pitch_deg));
        pose.insert("roll".into(), Value::Float(p.roll_deg));
        match &p.path {
            PosePath::Single => {}
            PosePath::Trajectory(t) => {
                pose.insert("trajectory".into(), path_value(t));
            }
            PosePath::Circle {
                center,
                radius,
                frames,
            } => {
                let mut circle = Table::new();
                circle.insert("center".into(), num_list(center.as_slice()));
                circle.insert("radius".into(), Value::Float(*radius));
                circle.insert("frames".into(), Value::Integer(*frames as i64));
                pose.insert("circle".into(), Value::Table(circle));
            }
        }

        let o = &self.output;
        let mut output = Table::new();
        output.insert("dir".into(), path_value(&o.dir));
        output.insert(
            "modes".into(),
            Value::Array(o.modes.iter().map(|m| s(m.name())).collect()),
        );
        output.insert("layout".into(), Value::Boolean(o.layout));
        output.insert(
            "via".into(),
            s(match o.via {
                Via::Direct => "direct",
                Via::CubeMap => "cubemap",
            }),
        );
        output.insert("depth_preview".into(), Value::Boolean(o.depth_preview));
        if let Some(d) = o.dilation {
            output.insert("dilation".into(), Value::Float(d));
        }
        if let Some(w) = o.workers {
            output.insert("workers".into(), Value::Integer(w as i64));
        }
        if let Some(f) = o.face_res {
            output.insert("face_res".into(), Value::Integer(f as i64));
        }

        let mut doc = Table::new();
        doc.insert("scene".into(), Value::Table(scene));
        doc.insert("camera".into(), Value::Table(camera));
        doc.insert("pose".into(), Value::Table(pose));
        doc.insert("output".into(), Value::Table(output));
        toml::to_string(&doc).expect("config tables serialize")
    }

    /// Read a config file; relative paths inside it are resolved against
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = parse_config(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        match &mut cfg.scene {
            SceneSource::File(p) => fix(p),
            SceneSource::CubeMaps { prefixes, .. } => prefixes.iter_mut().for_each(fix),
            _ => {}
        }
        if let PosePath::Trajectory(p) = &mut cfg.pose.path {
            fix(p);
        }
        fix(&mut cfg.output.dir);
        Ok(cfg)
    }
}

impl CameraConfig {
    pub fn grid(&self) -> Result<ImageGrid> {
        ImageGrid::new(self.width, self.height)
    }

    fn num(&self, key: &str) -> Option<f64> {
        match self.params.get(key) {
            Some(ParamValue::Number(x)) => Some(*x),
            _ => None,
        }
    }

    fn list(&self, key: &str) -> Option<&[f64]> {
        match self.params.get(key) {
            Some(ParamValue::List(v)) => Some(v),
            _ => None,
        }
    }

    fn flag(&self, key: &str) -> Option<bool> {
        match self.params.get(key) {
            Some(ParamValue::Flag(b)) => Some(*b),
            _ => None,
        }
    }

    /// Instantiate the model, filling unset parameters with defaults.
    pub fn build(&self) -> Result<(CameraModel, ImageGrid)> {
        let grid = self.grid()?;
        let r_max = grid.disc_radius();
        let (cu, cv) = grid.center();
        let rad = |x: f64| x * PI / 180.0;
        let kind = self.kind;
        let model = match kind {
            ModelKind::Equirectangular => CameraModel::Central(CentralModel::Equirect),
            ModelKind::Cylindrical => CameraModel::Central(CentralModel::cylindrical(
                rad(self.num("fov_h").unwrap_or(360.0)),
                rad(self.num("fov_v").unwrap_or(90.0)),
                if self.flag("true_cylinder").unwrap_or(false) {
                    CylinderMapping::Tangent
                } else {
                    CylinderMapping::Linear
                },
            )?),
            ModelKind::FishEyeEquiAngular
            | ModelKind::FishEyeStereographic
            | ModelKind::FishEyeOrthogonal
            | ModelKind::FishEyeEquiSolid => {
                let lens = match kind {
                    ModelKind::FishEyeEquiAngular => FishEyeLens::EquiAngular,
                    ModelKind::FishEyeStereographic => FishEyeLens::Stereographic,
                    ModelKind::FishEyeOrthogonal => FishEyeLens::Orthogonal,
                    _ => FishEyeLens::EquiSolid,
                };
                let f = self
                    .num("f")
                    .unwrap_or_else(|| lens.focal_for(r_max, PI / 2.0));
                CameraModel::Central(CentralModel::fisheye(lens, f)?)
            }
            ModelKind::CatadioptricPara | ModelKind::CatadioptricHyper => {
                let (mirror, d0, p0) = if kind == ModelKind::CatadioptricPara {
                    (Mirror::Para, 0.0, 0.1)
                } else {
                    (Mirror::Hyper, 0.5, 0.2)
                };
                let d = self.num("d").unwrap_or(d0);
                let p = self.num("p").unwrap_or(p0);
                let (xi, eta) = mirror_parameters(mirror, d, p);
                let f0 = catadioptric_focal(xi, eta, r_max, CATADIOPTRIC_EDGE_ANGLE);
                let r_c = Rotation::from_yaw_pitch_roll(
                    rad(self.num("rc_yaw").unwrap_or(0.0)),
                    rad(self.num("rc_pitch").unwrap_or(0.0)),
                    rad(self.num("rc_roll").unwrap_or(0.0)),
                );
                CameraModel::Central(CentralModel::Catadioptric(Catadioptric::new(
                    mirror,
                    d,
                    p,
                    self.num("fx").unwrap_or(f0),
                    self.num("fy").unwrap_or(f0),
                    self.num("u0").unwrap_or(cu),
                    self.num("v0").unwrap_or(cv),
                    r_c,
                )?))
            }
            ModelKind::Scaramuzza => {
                let coeffs = self
                    .list("coeffs")
                    .map_or_else(|| default_scaramuzza_coeffs(r_max), |c| c.to_vec());
                CameraModel::Central(CentralModel::Scaramuzza(Scaramuzza::new(
                    coeffs,
                    self.num("u0").unwrap_or(cu),
                    self.num("v0").unwrap_or(cv),
                )?))
            }
            ModelKind::KannalaBrandt => {
                let f0 = r_max / (PI / 2.0);
                let k = self
                    .list("k")
                    .map_or([0.02, -0.005, 0.0, 0.0], |k| [k[0], k[1], k[2], k[3]]);
                CameraModel::Central(CentralModel::KannalaBrandt(KannalaBrandt::new(
                    self.num("fx").unwrap_or(f0),
                    self.num("fy").unwrap_or(f0),
                    self.num("cx").unwrap_or(cu),
                    self.num("cy").unwrap_or(cv),
                    k,
                )?))
            }
            ModelKind::NonCentralPanorama => {
                let center = self
                    .list("center")
                    .map_or_else(Vec3::zeros, |c| Vec3::new(c[0], c[1], c[2]));
                CameraModel::NonCentral(NonCentralModel::Panorama(NcPanorama::new(
                    self.num("radius").unwrap_or(0.1),
                    center,
                    rad(self.num("tilt").unwrap_or(0.0)),
                )?))
            }
            ModelKind::ConicalCatadioptric => {
                CameraModel::NonCentral(NonCentralModel::Conical(ConicalMirror::new(
                    self.num("zc").unwrap_or(0.0),
                    self.num("rc").unwrap_or(0.05),
                    rad(self.num("tau").unwrap_or(30.0)),
                    rad(self.num("view_angle").unwrap_or(45.0)),
                )?))
            }
            ModelKind::SphericalCatadioptric => {
                CameraModel::NonCentral(NonCentralModel::Spherical(SphericalMirror::new(
                    self.num("zm").unwrap_or(0.3),
                    self.num("rs").unwrap_or(0.1),
                    self.num("view_angle").map(rad),
                )?))
            }
        };
        Ok((model, grid))
    }
}
