//! Batch rendering driven by a [`JobConfig`].

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::camera::CameraModel;
use crate::config::{JobConfig, PosePath, SceneSource, Via};
use crate::environment::{
    CubeMap, CubeMapOracle, EnvironmentOracle, ImportOptions, IngestedCubeMaps, RenderMode, Scene,
};
use crate::geometry::Pose;
use crate::groundtruth::{
    circular_trajectory, default_dilation, layout_gt, read_trajectory, write_trajectory,
    TrajectoryRecord,
};
use crate::image::{write_depth_preview, ImageGrid};
use crate::noncentral::centers_sidecar;
use crate::{Error, Result};

pub const WORKERS_ENV: &str = "OMNISYNTH_WORKERS";

#[derive(Debug, Clone)]
pub struct JobReport {
    pub out_dir: PathBuf,
    pub frames: usize,
    /// Every file written, relative to `out_dir`, sorted.
    pub files: Vec<PathBuf>,
}

/// Frame ids and poses for the job.
pub fn job_poses(cfg: &JobConfig) -> Result<Vec<(u64, Pose)>> {
    let p = &cfg.pose;
    Ok(match &p.path {
        PosePath::Single => vec![(0, p.single_pose())],
        PosePath::Circle {
            center,
            radius,
            frames,
        } => circular_trajectory(*center, *radius, *frames, p.orientation())
            .into_iter()
            .enumerate()
            .map(|(k, pose)| (k as u64, pose))
            .collect(),
        PosePath::Trajectory(path) => read_trajectory(path)?
            .into_iter()
            .map(|r| (r.id, Pose::new(r.position, r.rotation)))
            .collect(),
    })
}

fn worker_count(cfg: &JobConfig) -> Result<Option<usize>> {
    if let Some(w) = cfg.output.workers {
        return Ok(Some(w));
    }
    match std::env::var(WORKERS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(Error::InvalidParameter(format!(
                "{WORKERS_ENV} must be a positive integer, got '{v}'"
            ))),
        },
        Err(_) => Ok(None),
    }
}

enum Source {
    Scene(Scene),
    Ingested(IngestedCubeMaps),
}

fn load_source(cfg: &JobConfig) -> Result<Source> {
    Ok(match &cfg.scene {
        SceneSource::Reference => Source::Scene(Scene::reference()),
        SceneSource::UnitRoom => Source::Scene(Scene::unit_room()),
        SceneSource::File(p) => Source::Scene(Scene::load(p)?),
        SceneSource::CubeMaps {
            prefixes,
            planar_depth,
            frame,
        } => {
            let options = ImportOptions {
                planar_depth: *planar_depth,
                frame: *frame,
            };
            let mut maps = Vec::new();
            for prefix in prefixes {
                for mode in &cfg.output.modes {
                    let p = PathBuf::from(format!("{}_{}", prefix.to_string_lossy(), mode.name()));
                    maps.push(CubeMap::load(&p, options)?);
                }
            }
            Source::Ingested(IngestedCubeMaps::new(maps))
        }
    })
}

fn sha256_hex(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let digest = Sha256::digest(&bytes);
    let mut out = String::with_capacity(64);
    for b in digest.iter() {
        let _ = write!(out, "{b:02x}");
    }
    Ok(out)
}

/// Render every frame of the job into its output directory and write a
/// `manifest.txt` of SHA-256 digests.
pub fn run_job(cfg: &JobConfig) -> Result<JobReport> {
    let (model, grid) = cfg.camera.build()?;
    let poses = job_poses(cfg)?;
    let source = load_source(cfg)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = worker_count(cfg)? {
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| Error::InvalidParameter(format!("cannot start worker pool: {e}")))?;
    let out_dir = cfg.output.dir.clone();
    std::fs::create_dir_all(&out_dir).map_err(|e| Error::io(&out_dir, e))?;

    let base: &dyn EnvironmentOracle = match &source {
        Source::Scene(s) => s,
        Source::Ingested(m) => m,
    };
    let face_res = cfg
        .output
        .face_res
        .unwrap_or_else(|| (4 * grid.width).min(2048));
    let via_cubes = CubeMapOracle::new(base, face_res);
    let oracle: &dyn EnvironmentOracle = match cfg.output.via {
        Via::Direct => base,
        Via::CubeMap => &via_cubes,
    };

    let mut files = pool.install(|| -> Result<Vec<PathBuf>> {
        let mut files = Vec::new();
        for (id, pose) in &poses {
            files.extend(render_frame(
                cfg, &model, grid, *id, pose, oracle, &source, &out_dir,
            )?);
        }
        Ok(files)
    })?;

    let records: Vec<TrajectoryRecord> = poses
        .iter()
        .map(|(id, p)| TrajectoryRecord {
            id: *id,
            position: p.position,
            rotation: p.orientation,
        })
        .collect();
    write_trajectory(&out_dir.join("trajectory.txt"), &records)?;
    files.push(PathBuf::from("trajectory.txt"));
    files.sort();

    let mut manifest = String::new();
    for f in &files {
        let _ = writeln!(
            manifest,
            "{}  {}",
            sha256_hex(&out_dir.join(f))?,
            f.to_string_lossy()
        );
    }
    let manifest_path = out_dir.join("manifest.txt");
    std::fs::write(&manifest_path, manifest).map_err(|e| Error::io(&manifest_path, e))?;
    files.push(PathBuf::from("manifest.txt"));
    Ok(JobReport {
        out_dir,
        frames: poses.len(),
        files,
    })
}

#[allow(clippy::too_many_arguments)]
fn render_frame(
    cfg: &JobConfig,
    model: &CameraModel,
    grid: ImageGrid,
    id: u64,
    pose: &Pose,
    oracle: &dyn EnvironmentOracle,
    source: &Source,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    let stem = format!("frame_{id:05}");
    let mut written = Vec::new();
    for &mode in &cfg.output.modes {
        let image = model.render(pose, grid, mode, oracle)?;
        let ext = if mode == RenderMode::Depth {
            "depth"
        } else {
            "png"
        };
        let name = format!("{stem}_{}.{ext}", mode.name());
        image.save(&out_dir.join(&name))?;
        written.push(PathBuf::from(name));
        if mode == RenderMode::Depth && cfg.output.depth_preview {
            let depth = image.depths().expect("depth image");
            let name = format!("{stem}_depth_preview.png");
            let scale = write_depth_preview(&out_dir.join(&name), grid, depth)?;
            written.push(PathBuf::from(name));
            let name = format!("{stem}_depth_preview.txt");
            let path = out_dir.join(&name);
            std::fs::write(&path, format!("meters_per_level {scale}\n"))
                .map_err(|e| Error::io(&path, e))?;
            written.push(PathBuf::from(name));
        }
    }
    if let CameraModel::NonCentral(m) = model {
        let name = format!("{stem}_centers.json");
        let path = out_dir.join(&name);
        std::fs::write(&path, centers_sidecar(m, pose, grid)).map_err(|e| Error::io(&path, e))?;
        written.push(PathBuf::from(name));
    }
    if cfg.output.layout {
        let Source::Scene(scene) = source else {
            return Err(Error::Unsupported(
                "layout ground truth needs a scene".into(),
            ));
        };
        let dilation = cfg
            .output
            .dilation
            .unwrap_or_else(|| default_dilation(grid));
        let gt = layout_gt(scene, model.as_central()?, pose, grid, dilation)?;
        for (suffix, mask) in [("edges", &gt.edges), ("corners", &gt.corners)] {
            let name = format!("{stem}_layout_{suffix}.png");
            mask.save(&out_dir.join(&name))?;
            written.push(PathBuf::from(name));
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    fn config(dir: &Path, body: &str) -> JobConfig {
        let text = format!(
            "{body}\n[output]\ndir = {:?}\nworkers = 2\n",
            dir.display().to_string()
        );
        parse_config(&text).unwrap()
    }

    #[test]
    fn single_frame_job_writes_manifest() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = config(
            tmp.path(),
            "[scene]\nsource = \"unit_room\"\n[camera]\nmodel = \"equirectangular\"\nwidth = 32\nheight = 16",
        );
        let report = run_job(&cfg).unwrap();
        assert_eq!(report.frames, 1);
        let manifest = std::fs::read_to_string(tmp.path().join("manifest.txt")).unwrap();
        assert_eq!(manifest.lines().count(), report.files.len() - 1);
        for line in manifest.lines() {
            let (hash, name) = line.split_once("  ").unwrap();
            assert_eq!(hash.len(), 64);
            assert!(tmp.path().join(name).exists());
        }
        assert!(tmp.path().join("frame_00000_lit.png").exists());
        assert!(tmp.path().join("frame_00000_depth.depth").exists());
    }

    #[test]
    fn noncentral_job_writes_centers() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = config(
            tmp.path(),
            "[scene]\nsource = \"unit_room\"\n[camera]\nmodel = \"noncentral_panorama\"\nwidth = 16\nheight = 8\n[pose]\ncircle = { radius = 0.2, frames = 2 }",
        );
        let report = run_job(&cfg).unwrap();
        assert_eq!(report.frames, 2);
        assert!(tmp.path().join("frame_00001_centers.json").exists());
        let traj = read_trajectory(&tmp.path().join("trajectory.txt")).unwrap();
        assert_eq!(traj.len(), 2);
    }

    #[test]
    fn rerun_is_byte_identical() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let body =
            "[camera]\nmodel = \"fisheye\"\nlens = \"stereographic\"\nwidth = 24\nheight = 24\n";
        run_job(&config(a.path(), body)).unwrap();
        let mut cfg = config(b.path(), body);
        cfg.output.workers = Some(1);
        run_job(&cfg).unwrap();
        let ma = std::fs::read_to_string(a.path().join("manifest.txt")).unwrap();
        let mb = std::fs::read_to_string(b.path().join("manifest.txt")).unwrap();
        assert_eq!(ma, mb);
    }
}
