#![allow(clippy::needless_range_loop)]

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::atomic::{AtomicUsize, Ordering};

use nalgebra::{DMatrix, DVector, Matrix3};
use proptest::prelude::*;

use omnisynth::camera::{CameraModel, ModelKind};
use omnisynth::central::{CentralModel, FishEyeLens, Scaramuzza};
use omnisynth::environment::{
    acquire_cubemap, select_face, CubeMapOracle, EnvironmentOracle, Label, PixelValue, Probe,
    RenderMode, Scene, SceneObject, Shape,
};
use omnisynth::geometry::{ue4_to_world, world_to_ue4, Pose, Rotation, Vec3};
use omnisynth::groundtruth::layout_gt;
use omnisynth::image::ImageGrid;
use omnisynth::noncentral::{optical_center_groups, NonCentralModel};
use omnisynth::Result;

fn grid(w: usize, h: usize) -> ImageGrid {
    ImageGrid::new(w, h).unwrap()
}

fn quarter_turn() -> Rotation {
    Rotation::new(Matrix3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0)).unwrap()
}

fn rotate_scene(scene: &Scene, r: &Rotation) -> Scene {
    let objects = scene
        .objects
        .iter()
        .map(|o| {
            let shape = match o.shape {
                Shape::Sphere { center, radius } => Shape::Sphere {
                    center: r.apply(&center),
                    radius,
                },
                Shape::Box { center, size } => Shape::Box {
                    center: r.apply(&center),
                    size: r.apply(&size).abs(),
                },
            };
            SceneObject { shape, ..*o }
        })
        .collect();
    Scene::new(scene.room, objects, r.apply(&scene.light), scene.checker).unwrap()
}

/// Label seen after a quarter turn about +Z of the scene content.
fn relabel_quarter_turn(l: Label) -> Label {
    match l {
        Label::WALL_POS_X => Label::WALL_POS_Y,
        Label::WALL_POS_Y => Label::WALL_NEG_X,
        Label::WALL_NEG_X => Label::WALL_NEG_Y,
        Label::WALL_NEG_Y => Label::WALL_POS_X,
        other => other,
    }
}

#[test]
fn pose_equivariance_under_quarter_turn() {
    let scene = Scene::reference();
    let r = quarter_turn();
    let turned = rotate_scene(&scene, &r);
    let poses = [
        Pose::at(Vec3::new(0.03, 0.07, -0.02)),
        Pose::new(
            Vec3::new(0.1, -0.2, 0.05),
            Rotation::from_yaw_pitch_roll(0.4, -0.2, 0.1),
        ),
    ];
    for kind in ModelKind::all() {
        let g = if kind.is_disc() {
            grid(48, 48)
        } else {
            grid(64, 32)
        };
        let model = kind.default_model(g).unwrap();
        for pose in &poses {
            let moved = Pose::new(r.apply(&pose.position), r.compose(&pose.orientation));
            let a = model.render(pose, g, RenderMode::Semantic, &scene).unwrap();
            let b = model
                .render(&moved, g, RenderMode::Semantic, &turned)
                .unwrap();
            let expected: Vec<Option<Label>> = a
                .labels()
                .unwrap()
                .iter()
                .map(|l| l.map(relabel_quarter_turn))
                .collect();
            assert_eq!(expected.as_slice(), b.labels().unwrap(), "{}", kind.slug());
        }
    }
}

fn equirect_faces(w: usize, h: usize) -> [bool; 6] {
    let g = grid(w, h);
    let mut seen = [false; 6];
    for i in 0..g.len() {
        let (u, v) = g.pixel_center(i);
        let ray = CentralModel::Equirect
            .back_project(u, v, g)
            .unwrap()
            .unwrap();
        seen[select_face(&ray).0.index()] = true;
    }
    seen
}

/// At 4×2 every pixel center sits at ±45° elevation, which lands on the poles.
#[test]
fn smallest_equirect_grid_sees_only_the_poles() {
    let seen = equirect_faces(4, 2);
    assert_eq!(seen.iter().filter(|&&s| s).count(), 2);
}

proptest! {
    #[test]
    fn equirect_rays_cover_all_cube_faces(w in 5usize..80, h in 3usize..40) {
        prop_assert_eq!(equirect_faces(w, h), [true; 6]);
    }
}

/// Scene oracle that counts acquisitions and samples.
struct Counting<'a> {
    scene: &'a Scene,
    acquisitions: AtomicUsize,
    samples: &'a AtomicUsize,
}

struct CountingProbe<'a> {
    inner: Box<dyn Probe + 'a>,
    samples: &'a AtomicUsize,
}

impl Probe for CountingProbe<'_> {
    fn sample(&self, dir: &Vec3) -> Result<PixelValue> {
        self.samples.fetch_add(1, Ordering::Relaxed);
        self.inner.sample(dir)
    }
}

impl EnvironmentOracle for Counting<'_> {
    fn acquire(&self, center: &Vec3, mode: RenderMode) -> Result<Box<dyn Probe + '_>> {
        self.acquisitions.fetch_add(1, Ordering::Relaxed);
        Ok(Box::new(CountingProbe {
            inner: self.scene.acquire(center, mode)?,
            samples: self.samples,
        }))
    }
}

#[test]
fn fisheye_samples_only_the_image_disc() {
    let scene = Scene::unit_room();
    let g = grid(40, 30);
    let r_max = g.disc_radius();
    let (cu, cv) = g.center();
    for lens in FishEyeLens::ALL {
        let model = CentralModel::fisheye(lens, lens.focal_for(r_max, FRAC_PI_2)).unwrap();
        let samples = AtomicUsize::new(0);
        let oracle = Counting {
            scene: &scene,
            acquisitions: AtomicUsize::new(0),
            samples: &samples,
        };
        let image = CameraModel::Central(model)
            .render(&Pose::default(), g, RenderMode::Semantic, &oracle)
            .unwrap();
        let labels = image.labels().unwrap();
        let mut inside = 0;
        for i in 0..g.len() {
            let (u, v) = g.pixel_center(i);
            let in_disc = (u - cu).hypot(v - cv) <= r_max;
            inside += in_disc as usize;
            assert_eq!(labels[i].is_some(), in_disc, "{} pixel {i}", lens.name());
        }
        assert_eq!(samples.load(Ordering::Relaxed), inside);
        assert_eq!(oracle.acquisitions.load(Ordering::Relaxed), 1);
    }
}

#[test]
fn noncentral_acquires_once_per_group() {
    let scene = Scene::reference();
    for kind in [
        ModelKind::NonCentralPanorama,
        ModelKind::ConicalCatadioptric,
        ModelKind::SphericalCatadioptric,
    ] {
        let g = if kind.is_disc() {
            grid(32, 32)
        } else {
            grid(32, 16)
        };
        let CameraModel::NonCentral(model) = kind.default_model(g).unwrap() else {
            unreachable!()
        };
        let groups = optical_center_groups(&model, g).groups.len();
        let samples = AtomicUsize::new(0);
        let direct = Counting {
            scene: &scene,
            acquisitions: AtomicUsize::new(0),
            samples: &samples,
        };
        let camera = CameraModel::NonCentral(model);
        camera
            .render(&Pose::default(), g, RenderMode::Depth, &direct)
            .unwrap();
        assert_eq!(
            direct.acquisitions.load(Ordering::Relaxed),
            groups,
            "{}",
            kind.slug()
        );

        let counted = Counting {
            scene: &scene,
            acquisitions: AtomicUsize::new(0),
            samples: &samples,
        };
        let cubes = CubeMapOracle::new(&counted, 4);
        camera
            .render(&Pose::default(), g, RenderMode::Semantic, &cubes)
            .unwrap();
        assert_eq!(
            counted.acquisitions.load(Ordering::Relaxed),
            groups,
            "{} via cube maps",
            kind.slug()
        );
    }
}

/// Continuous image point at polar position `(r, θ)` about the center.
fn polar_point(g: ImageGrid, r: f64, theta: f64) -> (f64, f64) {
    let (cu, cv) = g.center();
    (cu + r * theta.cos(), cv - r * theta.sin())
}

/// Turning the camera about the mirror axis by α turns the image about its
/// center. Each pixel of the turned render is checked against a direct cast of
/// the unturned camera's ray at the rotated image point.
#[test]
fn ring_models_are_equivariant_about_the_mirror_axis() {
    let scene = Scene::reference();
    let g = grid(128, 128);
    let base = Pose::at(Vec3::new(0.05, -0.05, 0.1));
    // The spherical mirror image is reflected, so its azimuth runs the other way.
    for (kind, sense) in [
        (ModelKind::ConicalCatadioptric, 1.0),
        (ModelKind::SphericalCatadioptric, -1.0),
    ] {
        let CameraModel::NonCentral(model) = kind.default_model(g).unwrap() else {
            unreachable!()
        };
        let camera = CameraModel::NonCentral(model);
        for alpha in [FRAC_PI_2, 0.61, -2.2] {
            let turned = Pose::new(base.position, Rotation::rot_z(alpha));
            let b = camera
                .render(&turned, g, RenderMode::Semantic, &scene)
                .unwrap();
            let b = b.labels().unwrap();
            let (cu, cv) = g.center();
            let (mut total, mut agree) = (0usize, 0usize);
            for i in 0..g.len() {
                let Some(lb) = b[i] else { continue };
                let (u, v) = g.pixel_center(i);
                let r = (u - cu).hypot(v - cv);
                let theta = (cv - v).atan2(u - cu);
                let (ru, rv) = polar_point(g, r, theta + sense * alpha);
                let ring = r.round() as usize;
                let (Some(ray), Some(center)) = (model.ray(ru, rv, g), model.group_center(ring, g))
                else {
                    continue;
                };
                let hit = scene
                    .cast(
                        &base.point_to_world(&center),
                        &base.orientation.apply(&ray.xi),
                    )
                    .unwrap();
                total += 1;
                agree += (hit.label == lb) as usize;
            }
            let share = agree as f64 / total as f64;
            assert!(share >= 0.999, "{} α = {alpha}: {share}", kind.slug());
        }
    }
}

#[test]
fn layout_shifts_with_camera_yaw() {
    let scene = Scene::unit_room();
    let g = grid(256, 128);
    let w = g.width;
    let position = Vec3::new(0.2, -0.1, 0.15);
    let a = layout_gt(&scene, &CentralModel::Equirect, &Pose::at(position), g, 2.0).unwrap();
    for k in [1usize, 17, 64, 200] {
        let alpha = 2.0 * PI * k as f64 / w as f64;
        let pose = Pose::new(position, Rotation::rot_z(alpha));
        let b = layout_gt(&scene, &CentralModel::Equirect, &pose, g, 2.0).unwrap();
        for (ma, mb) in [(&a.edges, &b.edges), (&a.corners, &b.corners)] {
            let mut mismatched = 0;
            for j in 0..g.height {
                for i in 0..w {
                    mismatched += (mb.get(i, j) != ma.get((i + k) % w, j)) as usize;
                }
            }
            assert_eq!(mismatched, 0, "shift {k}");
        }
    }
}

/// Least-squares fit of `a0..a4` to an equiangular fish-eye, then compare rays.
#[test]
fn scaramuzza_fit_matches_equiangular_fisheye() {
    let g = grid(256, 256);
    let r_max = g.disc_radius();
    let f = r_max / FRAC_PI_2;
    let n = 400;
    let mut a = DMatrix::zeros(n, 5);
    let mut b = DVector::zeros(n);
    for i in 0..n {
        let rho = r_max * i as f64 / (n - 1) as f64;
        let phi = rho / f;
        let target = if rho == 0.0 {
            f
        } else {
            rho * phi.cos() / phi.sin()
        };
        for p in 0..5 {
            a[(i, p)] = rho.powi(p as i32);
        }
        b[i] = target;
    }
    let coeffs = a.svd(true, true).solve(&b, 1e-14).unwrap();
    let (cu, cv) = g.center();
    let poly = CentralModel::Scaramuzza(
        Scaramuzza::new(coeffs.iter().copied().collect(), cu, cv).unwrap(),
    );
    let fisheye = CentralModel::fisheye(FishEyeLens::EquiAngular, f).unwrap();
    let mut worst = 0f64;
    for i in 0..g.len() {
        let (u, v) = g.pixel_center(i);
        let Some(expected) = fisheye.back_project(u, v, g).unwrap() else {
            continue;
        };
        let got = poly.back_project(u, v, g).unwrap().unwrap();
        worst = worst.max(got.cross(&expected).norm().atan2(got.dot(&expected)));
    }
    assert!(worst.to_degrees() < 0.2, "worst {}°", worst.to_degrees());
}

/// Forward sphere model written out independently: lift, shift by ξ, then `H`.
#[test]
fn catadioptric_back_projection_inverts_sphere_model() {
    for kind in [ModelKind::CatadioptricPara, ModelKind::CatadioptricHyper] {
        let g = grid(100, 100);
        let CameraModel::Central(CentralModel::Catadioptric(c)) = kind.default_model(g).unwrap()
        else {
            unreachable!()
        };
        let mut c = c;
        c = omnisynth::central::Catadioptric::new(
            c.mirror,
            c.d,
            c.p,
            c.fx,
            c.fy * 1.05,
            c.u0 + 1.5,
            c.v0 - 0.5,
            Rotation::from_yaw_pitch_roll(0.02, -0.01, 0.03),
        )
        .unwrap();
        let (xi, eta) = (c.xi(), c.eta());
        let k = Matrix3::new(c.fx, 0.0, c.u0, 0.0, c.fy, c.v0, 0.0, 0.0, 1.0);
        let h = k * c.r_c.matrix() * Matrix3::from_diagonal(&Vec3::new(eta - xi, xi - eta, 1.0));
        let model = CentralModel::Catadioptric(c);
        let mut checked = 0;
        for i in 0..g.len() {
            let (u, v) = g.pixel_center(i);
            let Some(ray) = model.back_project(u, v, g).unwrap() else {
                continue;
            };
            let s = ray.normalize();
            let m = Vec3::new(s.x / (s.z + xi), s.y / (s.z + xi), 1.0);
            let p = h * m;
            let (pu, pv) = (p.x / p.z, p.y / p.z);
            assert!(
                (pu - u).hypot(pv - v) < 0.5,
                "{} pixel ({u}, {v}) → ({pu}, {pv})",
                kind.slug()
            );
            checked += 1;
        }
        assert!(checked > 5000);
    }
}

fn unit_dir() -> impl Strategy<Value = Vec3> {
    (-PI..PI, -1.0f64..1.0).prop_map(|(t, z)| {
        let s = (1.0 - z * z).sqrt();
        Vec3::new(s * t.cos(), s * t.sin(), z)
    })
}

fn inside_room() -> impl Strategy<Value = Vec3> {
    prop::array::uniform3(-0.99f64..0.99).prop_map(Vec3::from)
}

proptest! {
    #[test]
    fn ue4_conversion_is_an_exact_involution_pair(v in prop::array::uniform3(-1e3f64..1e3)) {
        let v = Vec3::from(v);
        prop_assert_eq!(ue4_to_world(&world_to_ue4(&v)), v);
        prop_assert_eq!(world_to_ue4(&ue4_to_world(&v)), v);
    }

    #[test]
    fn scene_hits_are_in_range_and_labeled(o in inside_room(), d in unit_dir()) {
        let scene = Scene::reference();
        let hit = scene.cast(&o, &d).unwrap();
        prop_assert!(hit.depth > 0.0 && hit.depth <= scene.room.diagonal());
        prop_assert!(scene.labels().contains(&hit.label));
    }

    #[test]
    fn rays_are_unit_for_every_model(kind_index in 0usize..13, fu in 0.0f64..1.0, fv in 0.0f64..1.0) {
        let kind = ModelKind::all().nth(kind_index).unwrap();
        let g = if kind.is_disc() { grid(64, 64) } else { grid(128, 64) };
        let (u, v) = (fu * g.width as f64, fv * g.height as f64);
        match kind.default_model(g).unwrap() {
            CameraModel::Central(m) => {
                if let Some(r) = m.back_project(u, v, g).unwrap() {
                    prop_assert!((r.norm() - 1.0).abs() < 1e-10);
                }
            }
            CameraModel::NonCentral(m) => {
                if let Some(r) = m.ray(u, v, g) {
                    prop_assert!((r.xi.norm() - 1.0).abs() < 1e-10);
                    prop_assert!(r.xi.dot(&r.xi_bar).abs() < 1e-10);
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn cube_map_semantics_stay_in_label_set(d in unit_dir(), c in prop::array::uniform3(-0.5f64..0.5)) {
        let scene = Scene::reference();
        let cube = acquire_cubemap(&scene, &Vec3::from(c), &Rotation::identity(), 8, RenderMode::Semantic).unwrap();
        match cube.sample(&d).unwrap() {
            PixelValue::Label(l) => prop_assert!(scene.labels().contains(&l)),
            other => prop_assert!(false, "unexpected sample {other:?}"),
        }
    }

    #[test]
    fn noncentral_groups_partition_the_grid(kind_index in 0usize..3, w in 1usize..40, h in 1usize..40) {
        let kind = [ModelKind::NonCentralPanorama, ModelKind::ConicalCatadioptric, ModelKind::SphericalCatadioptric][kind_index];
        let g = grid(w, h);
        let CameraModel::NonCentral(model) = kind.default_model(g).unwrap() else { unreachable!() };
        let grouping = optical_center_groups(&model, g);
        let mut owner = vec![0u32; g.len()];
        for grp in &grouping.groups {
            for &p in &grp.pixels {
                owner[p] += 1;
            }
        }
        for &p in &grouping.masked {
            owner[p] += 1;
        }
        prop_assert!(owner.iter().all(|&c| c == 1));
        prop_assert!(grouping.groups.windows(2).all(|p| p[0].key < p[1].key));
        if let NonCentralModel::Panorama(_) = model {
            prop_assert_eq!(grouping.groups.len(), w);
        }
    }
}
