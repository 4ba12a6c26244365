use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use yysplat::decompose::decompose_labels;
use yysplat::gaussians::{pixel_aligned_cloud, PixelAlignedParams};
use yysplat::metrics::psnr;
use yysplat::rasterizer::{oracle_render, rasterize, rasterize_with, render_yinyang, RasterConfig};
use yysplat::scene_synth::{build_scene, SceneKind, Texture};
use yysplat::sphere_geom::cubemap_rig;
use yysplat::sweep::{
    match_segments_multi, sweep_view, warp_coordinates, DepthCandidates, LabelMap, ViewFeatures,
};
use yysplat::{Direction, FieldImage, Gaussian3D, GaussianCloud, GridSpec, Pose};

fn random_direction(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    let z: f64 = rng.gen_range(-1.0..=1.0);
    let phi: f64 = rng.gen_range(-PI..PI);
    let r = (1.0 - z * z).sqrt();
    Vector3::new(r * phi.cos(), r * phi.sin(), z)
}

#[test]
fn cubemap_faces_cover_random_directions() {
    let rig = cubemap_rig(8).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10_000 {
        let d = Direction::new(random_direction(&mut rng)).unwrap();
        let hit = rig.iter().any(|(grid, _)| grid.direction_to_pixel(&d).inside);
        assert!(hit, "{:?} outside every face", d.as_vector());
    }
    // each face camera looks through its own centre pixel
    for (grid, pose) in &rig {
        let centre = grid.direction_at(4.0, 4.0);
        let forward = pose.rotation().transpose() * Vector3::z();
        assert!((centre.as_vector() - forward).norm() < 1e-9);
    }
}

/// Solid angle of every cell of a Yin-layout grid by midpoint summation
/// over sub-rows; Yang cells are congruent.
fn yin_cell_areas(h: usize) -> Vec<f64> {
    let w = 3 * h;
    let dphi = 1.5 * PI / w as f64;
    let sub = 32;
    (0..h)
        .map(|v| {
            let top = FRAC_PI_4 - FRAC_PI_2 * v as f64 / h as f64;
            let dt = FRAC_PI_2 / h as f64 / sub as f64;
            (0..sub).map(|i| (top - (i as f64 + 0.5) * dt).cos() * dt).sum::<f64>() * dphi
        })
        .flat_map(|a| std::iter::repeat(a).take(w))
        .collect()
}

#[test]
fn yin_and_yang_cells_overlap_but_each_falls_short_of_the_sphere() {
    let yin: f64 = yin_cell_areas(64).iter().sum();
    let yang = yin;
    assert!(yin < 4.0 * PI);
    assert!(yin + yang > 4.0 * PI);
    // closed form for the patch: 3pi/2 * 2 sin(pi/4)
    assert!((yin - 1.5 * PI * 2.0 * FRAC_PI_4.sin()).abs() < 1e-6);
}

#[test]
fn translation_shift_matches_closed_form_projection() {
    let grid = GridSpec::yin(16).unwrap();
    let cands = DepthCandidates::new(1.0, 100.0, 16).unwrap();
    let b = 0.5;
    let target = Pose::identity();
    let source = Pose::from_center(Vector3::new(b, 0.0, 0.0));
    let coords = warp_coordinates(&grid, &grid, &target, &source, &cands).unwrap();
    let np = grid.pixel_count();
    let (h, w) = (grid.height as f64, grid.width as f64);
    for k in [0, 5, 15] {
        let depth = cands.values()[k];
        for v in (0..16).step_by(3) {
            for u in (0..48).step_by(5) {
                let phi = 1.5 * PI * (u as f64 + 0.5) / w - 0.75 * PI;
                let theta = FRAC_PI_4 - FRAC_PI_2 * (v as f64 + 0.5) / h;
                let x = depth * Vector3::new(theta.cos() * phi.cos(), theta.cos() * phi.sin(), theta.sin())
                    - Vector3::new(b, 0.0, 0.0);
                let phi2 = x.y.atan2(x.x);
                let theta2 = x.z.atan2(x.x.hypot(x.y));
                if phi2.abs() > 0.75 * PI || theta2.abs() > FRAC_PI_4 {
                    continue;
                }
                let eu = (phi2 + 0.75 * PI) / (1.5 * PI) * w;
                let ev = (FRAC_PI_4 - theta2) / FRAC_PI_2 * h;
                let c = coords[k * np + v * 48 + u];
                assert!(c.inside);
                assert!((c.u - eu).abs() < 0.5 && (c.v - ev).abs() < 0.5, "k {k} ({u},{v}): ({}, {}) vs ({eu}, {ev})", c.u, c.v);
            }
        }
    }
}

/// Equirect view of a textured sphere of radius `r` around the origin seen
/// from `center`, 2x2 supersampled, with its exact depth.
fn textured_sphere_view(tex: &Texture, r: f64, center: Vector3<f64>, grid: &GridSpec) -> FieldImage {
    let n = 2;
    FieldImage::from_fn(grid.height, grid.width, 3, |u, v, p| {
        let mut acc = [0.0; 3];
        for sy in 0..n {
            for sx in 0..n {
                let d = grid.direction_at(u as f64 + (sx as f64 + 0.5) / n as f64, v as f64 + (sy as f64 + 0.5) / n as f64);
                let t = sphere_hit(center, *d.as_vector(), r);
                let c = tex.color(&(center + d.as_vector() * t));
                for i in 0..3 {
                    acc[i] += c[i] / (n * n) as f64;
                }
            }
        }
        p.copy_from_slice(&acc);
    })
}

fn sphere_hit(o: Vector3<f64>, d: Vector3<f64>, r: f64) -> f64 {
    let b = o.dot(&d);
    let c = o.norm_squared() - r * r;
    -b + (b * b - c).sqrt()
}

#[test]
fn argmax_depth_on_textured_sphere() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let tex = Texture::new(&mut rng, [0.5, 0.45, 0.4], 1.5, 0.9);
    let r = 5.0;
    let centers = [Vector3::new(-0.4, -0.2, 0.0), Vector3::new(0.4, 0.2, 0.1)];
    let eq = GridSpec::equirect(128).unwrap();
    let poses = centers.map(Pose::from_center);
    let feats = centers.map(|c| ViewFeatures::from_equirect(&textured_sphere_view(&tex, r, c, &eq), 64, 5).unwrap());
    let cands = DepthCandidates::new(1.0, 100.0, 64).unwrap();
    let sweep = sweep_view(&feats[0], &feats[1], &poses[0], &poses[1], &cands).unwrap();
    let (mut good, mut valid) = (0usize, 0usize);
    for gi in 0..2 {
        let grid = feats[0].grids[gi];
        for v in 0..grid.height {
            for u in 0..grid.width {
                let d = grid.pixel_to_direction(u, v).unwrap();
                let k_gt = cands.nearest_index(sphere_hit(centers[0], *d.as_vector(), r));
                if sweep.cost[gi].mask(u, v, k_gt) == 0.0 {
                    continue;
                }
                valid += 1;
                good += usize::from(sweep.cost[gi].best_index(u, v).abs_diff(k_gt) <= 1);
            }
        }
    }
    let frac = good as f64 / valid as f64;
    assert!(frac >= 0.9, "{good} of {valid} valid pixels within one bin ({frac:.3})");
}

#[test]
fn segments_of_two_objects_match_ground_truth_ids() {
    let scene = build_scene(SceneKind::TwoObjects, 0);
    let eq = GridSpec::equirect(128).unwrap();
    let fh = 64;
    let poses = [scene.reference_poses[0], scene.reference_poses[1]];
    let truth = poses.map(|p| scene.render_truth_supersampled(&p, &eq, 2));
    let feats = [0, 1].map(|i| ViewFeatures::from_equirect(&truth[i].image, fh, 5).unwrap());
    let labels: Vec<[LabelMap; 2]> = (0..2)
        .map(|i| {
            let ids = scene.render_truth(&poses[i], &eq).ids;
            let (yin, yang) = decompose_labels(&ids, fh).unwrap();
            [
                LabelMap::from_field_image(feats[i].grids[0], &yin).unwrap(),
                LabelMap::from_field_image(feats[i].grids[1], &yang).unwrap(),
            ]
        })
        .collect();
    let cands = DepthCandidates::new(1.0, 100.0, 64).unwrap();
    let sweep = sweep_view(&feats[0], &feats[1], &poses[0], &poses[1], &cands).unwrap();
    let matches = match_segments_multi(
        &[(&sweep.cost[0], &labels[0][0]), (&sweep.cost[1], &labels[0][1])],
        &poses[0],
        &poses[1],
        &labels[1],
    )
    .unwrap();
    for id in [1, 2] {
        let m = matches.iter().find(|m| m.src_label == id).expect("object label present");
        assert_eq!(m.dst_label, id, "{m:?}");
    }
}

fn random_cloud(n: usize, seed: u64) -> GaussianCloud {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = (0..n)
        .map(|_| {
            let p = random_direction(&mut rng) * rng.gen_range(1.5..5.0);
            let mut q = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let norm = q.iter().map(|x: &f64| x * x).sum::<f64>().sqrt();
            q.iter_mut().for_each(|x| *x /= norm);
            Gaussian3D {
                position: p,
                scale: Vector3::new(rng.gen_range(0.05..0.4), rng.gen_range(0.05..0.4), rng.gen_range(0.05..0.4)),
                rotation: q,
                opacity: rng.gen_range(0.2..1.0),
                sh: (0..3).map(|_| rng.gen_range(-1.0..2.5)).collect(),
            }
        })
        .collect();
    GaussianCloud::from_gaussians(0, g).unwrap()
}

#[test]
fn unculled_rasterizer_reproduces_oracle() {
    let cloud = random_cloud(50, 21);
    let pose = Pose::from_center(Vector3::new(0.2, 0.1, -0.1));
    let cfg = RasterConfig {
        cull: false,
        min_transmittance: 0.0,
        ..RasterConfig::default()
    };
    for grid in [GridSpec::equirect(32).unwrap(), GridSpec::yin(16).unwrap(), GridSpec::yang(16).unwrap()] {
        let fast = rasterize_with(&cloud, &grid, &pose, &cfg).unwrap();
        let slow = oracle_render(&cloud, &grid, &pose).unwrap();
        for (a, b) in [(&fast.color, &slow.color), (&fast.alpha, &slow.alpha)] {
            let diff = a.data().iter().zip(b.data()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            assert!(diff <= 1e-6, "{:?}: {diff}", grid.family);
        }
    }
}

#[test]
fn oracle_is_bit_stable() {
    let cloud = random_cloud(20, 4);
    let grid = GridSpec::equirect(16).unwrap();
    let a = oracle_render(&cloud, &grid, &Pose::identity()).unwrap();
    let b = oracle_render(&cloud, &grid, &Pose::identity()).unwrap();
    assert_eq!(a, b);
}

/// Smooth blob of splats well inside the Yin-only band (|theta| < 25 deg,
/// |phi| < 100 deg).
fn yin_only_cloud() -> GaussianCloud {
    let mut g = Vec::new();
    for i in 0..9 {
        for j in 0..5 {
            let phi = (-80.0 + 20.0 * i as f64).to_radians();
            let theta = (-16.0 + 8.0 * j as f64).to_radians();
            let d = Vector3::new(theta.cos() * phi.cos(), theta.cos() * phi.sin(), theta.sin());
            let c = [0.3 + 0.05 * i as f64, 0.6 - 0.08 * j as f64, 0.5];
            g.push(Gaussian3D::isotropic(d * 3.0, 0.3, 0.9, c));
        }
    }
    GaussianCloud::from_gaussians(0, g).unwrap()
}

#[test]
fn yinyang_and_equirect_agree_inside_yin_only_band() {
    let cloud = yin_only_cloud();
    let grid = GridSpec::equirect(64).unwrap();
    let direct = rasterize(&cloud, &grid, &Pose::identity()).unwrap();
    let yy = render_yinyang(&cloud, &Pose::identity(), &grid).unwrap();
    let p = psnr(&yy.image, &direct.image).unwrap();
    assert!(p >= 40.0, "{p} dB");
}

#[test]
fn pixel_aligned_cloud_reprojects_to_its_image() {
    let grid = GridSpec::yin(24).unwrap();
    let img = FieldImage::from_fn(24, 72, 3, |u, v, p| {
        let (x, y) = (u as f64 / 72.0, v as f64 / 24.0);
        p.copy_from_slice(&[0.3 + 0.4 * x, 0.6 - 0.3 * y, 0.4 + 0.2 * (3.0 * x).sin() * y]);
    });
    let depth = FieldImage::from_fn(24, 72, 1, |u, _, p| p[0] = 3.0 + u as f64 / 72.0);
    let pose = Pose::from_center(Vector3::new(0.1, -0.3, 0.2));
    let cloud = pixel_aligned_cloud(&img, &depth, &grid, &pose, PixelAlignedParams::default()).unwrap();
    let out = rasterize(&cloud, &grid, &pose).unwrap();
    let p = psnr(&out.image, &img).unwrap();
    assert!(p >= 30.0, "{p} dB");
}
