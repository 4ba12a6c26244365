//! Seeded synthetic scenes with exact ground truth.
//!
//! Each scene is a handful of analytic primitives (spheres and an interior
//! box) with procedural textures, a Gaussian cloud sampled on their
//! surfaces, and default reference and target cameras. Ground truth depth,
//! object ids and colour come from ray casting the primitives, not from
//! rasterizing the cloud.

mod noise;

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix3, UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub use noise::{Texture, ValueNoise, OCTAVES};

use crate::error::{Error, Result};
use crate::gaussians::{Gaussian3D, GaussianCloud};
use crate::image::FieldImage;
use crate::pose::{axis_angle, Pose};
use crate::sphere_geom::GridSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SceneKind {
    /// Constant-colour spherical shell around the origin.
    Shell,
    /// Interior of a box with textured walls.
    TexturedRoom,
    /// Small Gaussians clustered around the north pole.
    PolarField,
    /// Two textured spheres inside a textured backdrop sphere.
    TwoObjects,
}

impl SceneKind {
    pub const ALL: [SceneKind; 4] = [
        SceneKind::Shell,
        SceneKind::TexturedRoom,
        SceneKind::PolarField,
        SceneKind::TwoObjects,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SceneKind::Shell => "shell",
            SceneKind::TexturedRoom => "textured-room",
            SceneKind::PolarField => "polar-field",
            SceneKind::TwoObjects => "two-objects",
        }
    }
}

impl fmt::Display for SceneKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SceneKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SceneKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "unknown scene '{s}' (expected shell, textured-room, polar-field or two-objects)"
                ))
            })
    }
}

/// Colour of a primitive's surface.
#[derive(Debug, Clone)]
pub enum Surface {
    Constant([f64; 3]),
    Textured(Texture),
}

impl Surface {
    fn color(&self, p: &Vector3<f64>) -> [f64; 3] {
        match self {
            Surface::Constant(c) => *c,
            Surface::Textured(t) => t.color(p),
        }
    }
}

#[derive(Debug, Clone)]
pub enum Shape {
    Sphere { center: Vector3<f64>, radius: f64 },
    /// Axis-aligned box; rays from inside hit the walls from within.
    Box { min: Vector3<f64>, max: Vector3<f64> },
}

#[derive(Debug, Clone)]
pub struct Primitive {
    pub shape: Shape,
    pub id: u32,
    pub surface: Surface,
}

const HIT_EPS: f64 = 1e-9;

impl Primitive {
    /// Nearest positive ray parameter of an intersection (unit `d`).
    fn intersect(&self, o: &Vector3<f64>, d: &Vector3<f64>) -> Option<f64> {
        match &self.shape {
            Shape::Sphere { center, radius } => {
                let oc = o - center;
                let b = oc.dot(d);
                let disc = b * b - (oc.norm_squared() - radius * radius);
                if disc < 0.0 {
                    return None;
                }
                let sq = disc.sqrt();
                [-b - sq, -b + sq].into_iter().find(|&t| t > HIT_EPS)
            }
            Shape::Box { min, max } => {
                let (mut t_in, mut t_out) = (f64::NEG_INFINITY, f64::INFINITY);
                for a in 0..3 {
                    if d[a] == 0.0 {
                        if o[a] < min[a] || o[a] > max[a] {
                            return None;
                        }
                        continue;
                    }
                    let t1 = (min[a] - o[a]) / d[a];
                    let t2 = (max[a] - o[a]) / d[a];
                    t_in = t_in.max(t1.min(t2));
                    t_out = t_out.min(t1.max(t2));
                }
                if t_in > t_out {
                    None
                } else if t_in > HIT_EPS {
                    Some(t_in)
                } else if t_out > HIT_EPS {
                    Some(t_out)
                } else {
                    None
                }
            }
        }
    }
}

/// Result of casting one ray into a scene.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub distance: f64,
    pub id: u32,
    pub color: [f64; 3],
}

/// Ground truth rasters on one grid. Rays that hit nothing get depth 0,
/// id 0 and black.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub image: FieldImage,
    pub depth: FieldImage,
    pub ids: FieldImage,
}

#[derive(Debug, Clone)]
pub struct Scene {
    pub kind: SceneKind,
    pub cloud: GaussianCloud,
    primitives: Vec<Primitive>,
    /// World-from-scene rigid motion `x -> rotation * x + translation`.
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
    pub reference_poses: Vec<Pose>,
    pub target_poses: Vec<Pose>,
}

/// Builds the named scene from `seed`.
pub fn make_scene(name: &str, seed: u64) -> Result<Scene> {
    Ok(build_scene(name.parse()?, seed))
}

pub fn build_scene(kind: SceneKind, seed: u64) -> Scene {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (kind as u64).wrapping_mul(0x9e37_79b9));
    let (primitives, cloud, reference_poses, target_poses) = match kind {
        SceneKind::Shell => shell(),
        SceneKind::TexturedRoom => textured_room(&mut rng),
        SceneKind::PolarField => polar_field(&mut rng),
        SceneKind::TwoObjects => two_objects(&mut rng),
    };
    Scene {
        kind,
        cloud,
        primitives,
        rotation: Matrix3::identity(),
        translation: Vector3::zeros(),
        reference_poses,
        target_poses,
    }
}

type Parts = (Vec<Primitive>, GaussianCloud, Vec<Pose>, Vec<Pose>);

/// Shell radius and colour.
pub const SHELL_RADIUS: f64 = 2.0;
pub const SHELL_COLOR: [f64; 3] = [0.8, 0.5, 0.2];
const SHELL_OPACITY: f64 = 0.3;

fn shell() -> Parts {
    let prim = Primitive {
        shape: Shape::Sphere {
            center: Vector3::zeros(),
            radius: SHELL_RADIUS,
        },
        id: 1,
        surface: Surface::Constant(SHELL_COLOR),
    };
    let gaussians = sample_sphere(&prim, Vector3::zeros(), SHELL_RADIUS, 0.08, SHELL_OPACITY);
    let cloud = GaussianCloud::from_gaussians(0, gaussians).expect("valid shell");
    let refs = vec![Pose::identity(), Pose::from_center(Vector3::new(0.3, 0.0, 0.0))];
    let targets = vec![Pose::identity()];
    (vec![prim], cloud, refs, targets)
}

/// Half extents of the room box.
pub const ROOM_HALF_EXTENT: [f64; 3] = [4.0, 4.0, 2.5];

fn textured_room(rng: &mut ChaCha8Rng) -> Parts {
    let half = Vector3::from(ROOM_HALF_EXTENT);
    let texture = Texture::new(rng, [0.5, 0.45, 0.4], 1.5, 0.9);
    let prim = Primitive {
        shape: Shape::Box {
            min: -half,
            max: half,
        },
        id: 1,
        surface: Surface::Textured(texture),
    };
    let spacing = 0.1;
    let mut gaussians = Vec::new();
    // Six walls, each a regular grid of splats.
    for axis in 0..3 {
        let (a1, a2) = ((axis + 1) % 3, (axis + 2) % 3);
        let n1 = (2.0 * half[a1] / spacing).round() as usize;
        let n2 = (2.0 * half[a2] / spacing).round() as usize;
        for side in [-1.0, 1.0] {
            for i in 0..n1 {
                for j in 0..n2 {
                    let mut p = Vector3::zeros();
                    p[axis] = side * half[axis];
                    p[a1] = -half[a1] + (i as f64 + 0.5) * 2.0 * half[a1] / n1 as f64;
                    p[a2] = -half[a2] + (j as f64 + 0.5) * 2.0 * half[a2] / n2 as f64;
                    let c = prim.surface.color(&p);
                    gaussians.push(Gaussian3D::isotropic(p, 0.75 * spacing, 0.9, c));
                }
            }
        }
    }
    let cloud = GaussianCloud::from_gaussians(0, gaussians).expect("valid room");
    let yaw = |deg: f64| axis_angle(Vector3::z(), deg.to_radians());
    let at = |r: Matrix3<f64>, c: Vector3<f64>| Pose::new(r, c).expect("rotation");
    let refs = vec![
        at(Matrix3::identity(), Vector3::new(-0.6, -0.3, 0.0)),
        at(yaw(8.0), Vector3::new(0.6, 0.3, 0.15)),
    ];
    let targets = vec![
        at(yaw(3.0), Vector3::new(0.0, 0.0, 0.05)),
        at(yaw(-20.0), Vector3::new(0.3, -0.4, -0.1)),
    ];
    (vec![prim], cloud, refs, targets)
}

/// Angular radius of the polar cap the field fills, and its distance.
pub const POLAR_CAP_DEGREES: f64 = 22.0;
const POLAR_DISTANCE: f64 = 3.0;

fn polar_field(rng: &mut ChaCha8Rng) -> Parts {
    let cap = POLAR_CAP_DEGREES.to_radians();
    let count = 300;
    let sigma = 0.01;
    let mut prims = Vec::with_capacity(count);
    let mut gaussians = Vec::with_capacity(count);
    for _ in 0..count {
        // Uniform over the cap's area.
        let z = 1.0 - rng.gen::<f64>() * (1.0 - cap.cos());
        let phi = rng.gen_range(-PI..PI);
        let rho = (1.0 - z * z).max(0.0).sqrt();
        let p = Vector3::new(rho * phi.cos(), rho * phi.sin(), z) * POLAR_DISTANCE;
        let c = [
            rng.gen_range(0.5..1.0),
            rng.gen_range(0.3..0.8),
            rng.gen_range(0.1..0.5),
        ];
        gaussians.push(Gaussian3D::isotropic(p, sigma, 0.8, c));
        prims.push(Primitive {
            shape: Shape::Sphere {
                center: p,
                radius: sigma,
            },
            id: 1,
            surface: Surface::Constant(c),
        });
    }
    let cloud = GaussianCloud::from_gaussians(0, gaussians).expect("valid field");
    let refs = vec![Pose::identity(), Pose::from_center(Vector3::new(0.2, 0.0, 0.0))];
    let targets = vec![Pose::identity()];
    (prims, cloud, refs, targets)
}

/// Radius of the backdrop sphere around the two objects.
pub const BACKDROP_RADIUS: f64 = 8.0;

fn two_objects(rng: &mut ChaCha8Rng) -> Parts {
    let backdrop = Primitive {
        shape: Shape::Sphere {
            center: Vector3::zeros(),
            radius: BACKDROP_RADIUS,
        },
        id: 0,
        surface: Surface::Textured(Texture::new(rng, [0.35, 0.4, 0.5], 0.6, 0.8)),
    };
    let objects = [
        (Vector3::new(3.0, 0.8, 0.2), 0.9, [0.7, 0.35, 0.3]),
        (Vector3::new(-0.6, 3.2, -0.4), 1.0, [0.3, 0.65, 0.35]),
    ];
    let mut prims = vec![backdrop.clone()];
    let mut gaussians = sample_sphere(&backdrop, Vector3::zeros(), BACKDROP_RADIUS, 0.3, 0.95);
    for (i, (center, radius, base)) in objects.into_iter().enumerate() {
        let prim = Primitive {
            shape: Shape::Sphere { center, radius },
            id: i as u32 + 1,
            surface: Surface::Textured(Texture::new(rng, base, 3.0, 0.8)),
        };
        gaussians.extend(sample_sphere(&prim, center, radius, 0.06, 0.95));
        prims.push(prim);
    }
    let cloud = GaussianCloud::from_gaussians(0, gaussians).expect("valid objects");
    let refs = vec![
        Pose::from_center(Vector3::new(-0.4, -0.2, 0.0)),
        Pose::from_center(Vector3::new(0.4, 0.2, 0.1)),
    ];
    let targets = vec![Pose::from_center(Vector3::new(0.0, 0.0, 0.05))];
    (prims, cloud, refs, targets)
}

/// Isotropic splats on a Fibonacci lattice over a sphere, about `spacing`
/// apart, coloured by the primitive's surface.
fn sample_sphere(
    prim: &Primitive,
    center: Vector3<f64>,
    radius: f64,
    spacing: f64,
    opacity: f64,
) -> Vec<Gaussian3D> {
    let n = ((4.0 * PI * radius * radius) / (spacing * spacing)).ceil().max(1.0) as usize;
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let rho = (1.0 - z * z).sqrt();
            let phi = golden * i as f64;
            let p = center + Vector3::new(rho * phi.cos(), rho * phi.sin(), z) * radius;
            Gaussian3D::isotropic(p, 0.75 * spacing, opacity, prim.surface.color(&p))
        })
        .collect()
}

impl Scene {
    pub fn primitives(&self) -> &[Primitive] {
        &self.primitives
    }

    /// Nearest surface along the world-space ray `origin + t dir`.
    pub fn trace(&self, origin: &Vector3<f64>, dir: &Vector3<f64>) -> Option<Hit> {
        // Work in the scene's own frame so textures move with it.
        let rt = self.rotation.transpose();
        let o = rt * (origin - self.translation);
        let d = (rt * dir).normalize();
        let mut best: Option<(f64, &Primitive)> = None;
        for prim in &self.primitives {
            if let Some(t) = prim.intersect(&o, &d) {
                if best.map_or(true, |(bt, _)| t < bt) {
                    best = Some((t, prim));
                }
            }
        }
        best.map(|(t, prim)| Hit {
            distance: t,
            id: prim.id,
            color: prim.surface.color(&(o + d * t)),
        })
    }

    /// Ray-cast ground truth at every pixel centre of `grid`.
    pub fn render_truth(&self, pose: &Pose, grid: &GridSpec) -> GroundTruth {
        self.render_truth_supersampled(pose, grid, 1)
    }

    /// As [`Scene::render_truth`], with the colour averaged over an
    /// `n x n` grid of sub-pixel rays. Depth and ids stay at the centre.
    pub fn render_truth_supersampled(&self, pose: &Pose, grid: &GridSpec, n: usize) -> GroundTruth {
        let n = n.max(1);
        let (h, w) = (grid.height, grid.width);
        let eye = pose.center();
        let rows: Vec<(Vec<f64>, Vec<f64>, Vec<f64>)> = (0..h)
            .into_par_iter()
            .map(|v| {
                let mut img = vec![0.0; 3 * w];
                let mut depth = vec![0.0; w];
                let mut ids = vec![0.0; w];
                for u in 0..w {
                    let ray = |du: f64, dv: f64| {
                        let d = grid.direction_at(u as f64 + du, v as f64 + dv);
                        *pose.direction_to_world(&d).as_vector()
                    };
                    if let Some(hit) = self.trace(&eye, &ray(0.5, 0.5)) {
                        depth[u] = hit.distance;
                        ids[u] = hit.id as f64;
                    }
                    let mut acc = [0.0; 3];
                    for i in 0..n {
                        for j in 0..n {
                            let du = (i as f64 + 0.5) / n as f64;
                            let dv = (j as f64 + 0.5) / n as f64;
                            if let Some(hit) = self.trace(&eye, &ray(du, dv)) {
                                for c in 0..3 {
                                    acc[c] += hit.color[c];
                                }
                            }
                        }
                    }
                    for c in 0..3 {
                        img[3 * u + c] = acc[c] / (n * n) as f64;
                    }
                }
                (img, depth, ids)
            })
            .collect();
        let mut image = Vec::with_capacity(3 * h * w);
        let mut depth = Vec::with_capacity(h * w);
        let mut ids = Vec::with_capacity(h * w);
        for (a, b, c) in rows {
            image.extend(a);
            depth.extend(b);
            ids.extend(c);
        }
        GroundTruth {
            image: FieldImage::new(h, w, 3, image).expect("finite colours"),
            depth: FieldImage::new(h, w, 1, depth).expect("finite depths"),
            ids: FieldImage::new(h, w, 1, ids).expect("finite ids"),
        }
    }

    /// The same scene after the world moves by `x -> q x + s`: primitives,
    /// splats and cameras all move together.
    pub fn transformed(&self, q: &Matrix3<f64>, s: &Vector3<f64>) -> Result<Scene> {
        let rq = UnitQuaternion::from_matrix(q);
        let gaussians = self
            .cloud
            .gaussians()
            .iter()
            .map(|g| {
                let [w, x, y, z] = g.rotation;
                let r = rq * UnitQuaternion::from_quaternion(nalgebra::Quaternion::new(w, x, y, z));
                Gaussian3D {
                    position: q * g.position + s,
                    rotation: [r.w, r.i, r.j, r.k],
                    ..g.clone()
                }
            })
            .collect();
        Ok(Scene {
            kind: self.kind,
            cloud: GaussianCloud::from_gaussians(self.cloud.sh_degree(), gaussians)?,
            primitives: self.primitives.clone(),
            rotation: q * self.rotation,
            translation: q * self.translation + s,
            reference_poses: self.reference_poses.iter().map(|p| p.transformed(q, s)).collect(),
            target_poses: self.target_poses.iter().map(|p| p.transformed(q, s)).collect(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io_formats::encode_cloud;

    #[test]
    fn shell_depth_from_centre_is_radius() {
        let scene = make_scene("shell", 0).unwrap();
        let gt = scene.render_truth(&Pose::identity(), &GridSpec::equirect(16).unwrap());
        assert!(gt.depth.data().iter().all(|&d| (d - SHELL_RADIUS).abs() < 1e-12));
        assert!(gt.image.data().chunks(3).all(|p| p == SHELL_COLOR));
    }

    #[test]
    fn same_seed_same_bytes() {
        for kind in SceneKind::ALL {
            let a = build_scene(kind, 7);
            let b = build_scene(kind, 7);
            assert_eq!(encode_cloud(&a.cloud).unwrap(), encode_cloud(&b.cloud).unwrap());
        }
        let a = build_scene(SceneKind::TexturedRoom, 1);
        let b = build_scene(SceneKind::TexturedRoom, 2);
        assert_ne!(a.cloud, b.cloud);
    }

    #[test]
    fn two_objects_has_three_ids() {
        let scene = make_scene("two-objects", 0).unwrap();
        let gt = scene.render_truth(&scene.reference_poses[0], &GridSpec::equirect(32).unwrap());
        let mut ids: Vec<u32> = gt.ids.data().iter().map(|&x| x as u32).collect();
        ids.sort_unstable();
        ids.dedup();
        assert_eq!(ids, vec![0, 1, 2]);
    }

    #[test]
    fn unknown_scene_rejected() {
        assert!(make_scene("cathedral", 0).is_err());
    }

    #[test]
    fn room_depth_matches_wall_distance() {
        let scene = build_scene(SceneKind::TexturedRoom, 0);
        let pose = Pose::identity();
        let hit = scene.trace(&pose.center(), &Vector3::x()).unwrap();
        assert!((hit.distance - ROOM_HALF_EXTENT[0]).abs() < 1e-12);
        let hit = scene.trace(&Vector3::new(1.0, 0.0, 0.0), &-Vector3::z()).unwrap();
        assert!((hit.distance - ROOM_HALF_EXTENT[2]).abs() < 1e-12);
    }

    #[test]
    fn depth_is_equivariant_under_rigid_motion() {
        let scene = build_scene(SceneKind::TwoObjects, 3);
        let q = axis_angle(Vector3::new(0.3, -1.0, 0.5), 0.7);
        let s = Vector3::new(2.0, -1.0, 0.5);
        let moved = scene.transformed(&q, &s).unwrap();
        let grid = GridSpec::equirect(16).unwrap();
        let a = scene.render_truth(&scene.reference_poses[1], &grid);
        let b = moved.render_truth(&moved.reference_poses[1], &grid);
        for (x, y) in a.depth.data().iter().zip(b.depth.data()) {
            assert!((x - y).abs() < 1e-9);
        }
        assert_eq!(a.ids, b.ids);
        for (x, y) in a.image.data().iter().zip(b.image.data()) {
            assert!((x - y).abs() < 1e-9);
        }
    }
}
