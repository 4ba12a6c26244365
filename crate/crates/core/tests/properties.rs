use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use proptest::prelude::*;

use yysplat::decompose::{blend_weights, recompose_direction, recompose_yinyang};
use yysplat::gaussians::{pixel_aligned_cloud, refine_colors, PixelAlignedParams, RefineOptions, RefineView};
use yysplat::io_formats::{decode_cloud, decode_pfm, decode_png, encode_cloud, encode_pfm, encode_png, format_poses, parse_poses, PoseRecord};
use yysplat::metrics::{psnr, ssim};
use yysplat::pose::axis_angle;
use yysplat::rasterizer::rasterize;
use yysplat::sphere_geom::{yang_transform, yin_contains};
use yysplat::sweep::{
    blend_warped, cost_volume, depth_candidates, sweep_view, warp_coordinates, DepthCandidates,
    ViewFeatures, WarpedStack,
};
use yysplat::{Direction, FieldImage, Gaussian3D, GaussianCloud, GridSpec, Pose};

fn unit_vector() -> impl Strategy<Value = Vector3<f64>> {
    (-1.0f64..=1.0, -PI..PI).prop_map(|(z, phi)| {
        let r = (1.0 - z * z).sqrt();
        Vector3::new(r * phi.cos(), r * phi.sin(), z)
    })
}

fn rotation() -> impl Strategy<Value = Matrix3<f64>> {
    (unit_vector(), -PI..PI).prop_map(|(axis, angle)| axis_angle(axis, angle))
}

fn pose() -> impl Strategy<Value = Pose> {
    (rotation(), prop::array::uniform3(-2.0f64..2.0))
        .prop_map(|(r, c)| Pose::new(r, Vector3::from(c)).unwrap())
}

fn image(h: usize, w: usize, c: usize) -> impl Strategy<Value = FieldImage> {
    prop::collection::vec(0.0f64..1.0, h * w * c)
        .prop_map(move |d| FieldImage::new(h, w, c, d).unwrap())
}

fn gaussian() -> impl Strategy<Value = Gaussian3D> {
    (
        unit_vector(),
        1.5f64..4.0,
        prop::array::uniform3(0.05f64..0.4),
        unit_vector(),
        0.0f64..PI,
        0.1f64..1.0,
        prop::array::uniform3(-1.0f64..2.0),
    )
        .prop_map(|(dir, dist, scale, axis, angle, opacity, sh)| {
            let q = nalgebra::UnitQuaternion::from_axis_angle(&nalgebra::Unit::new_normalize(axis), angle);
            Gaussian3D {
                position: dir * dist,
                scale: Vector3::from(scale),
                rotation: [q.w, q.i, q.j, q.k],
                opacity,
                sh: sh.to_vec(),
            }
        })
}

fn cloud(max: usize) -> impl Strategy<Value = GaussianCloud> {
    prop::collection::vec(gaussian(), 1..max)
        .prop_map(|g| GaussianCloud::from_gaussians(0, g).unwrap())
}

fn stack(h: usize, w: usize, c: usize, d: usize) -> impl Strategy<Value = WarpedStack> {
    (
        prop::collection::vec(-1.0f64..1.0, h * w * c * d),
        prop::collection::vec(prop::bool::ANY, h * w * d),
    )
        .prop_map(move |(f, m)| {
            let mask: Vec<f64> = m.iter().map(|&b| f64::from(u8::from(b))).collect();
            let mut f = f;
            for (i, &mk) in mask.iter().enumerate() {
                if mk == 0.0 {
                    f[i * c..(i + 1) * c].iter_mut().for_each(|x| *x = 0.0);
                }
            }
            WarpedStack::new(h, w, c, d, f, mask).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn every_direction_is_in_yin_or_yang(v in unit_vector()) {
        let d = Direction::new(v).unwrap();
        prop_assert!(yin_contains(d.to_spherical()) || yin_contains(yang_transform(&d).to_spherical()));
    }

    #[test]
    fn yang_transform_is_involution(v in unit_vector()) {
        let d = Direction::new(v).unwrap();
        let back = yang_transform(&yang_transform(&d));
        prop_assert!((back.as_vector() - d.as_vector()).norm() == 0.0);
    }

    #[test]
    fn pixel_round_trip(h in 2usize..40, fam in 0u8..3, fu in 0.0f64..1.0, fv in 0.0f64..1.0) {
        let grid = match fam { 0 => GridSpec::equirect(h), 1 => GridSpec::yin(h), _ => GridSpec::yang(h) }.unwrap();
        let u = ((fu * grid.width as f64) as usize).min(grid.width - 1);
        let v = ((fv * grid.height as f64) as usize).min(grid.height - 1);
        let d = grid.pixel_to_direction(u, v).unwrap();
        let p = grid.direction_to_pixel(&d);
        prop_assert!(p.inside);
        prop_assert!((p.u - (u as f64 + 0.5)).abs() < 1e-9 && (p.v - (v as f64 + 0.5)).abs() < 1e-9);
    }

    #[test]
    fn blend_weights_sum_to_one(v in unit_vector()) {
        let (a, b) = blend_weights(&Direction::new(v).unwrap()).unwrap();
        prop_assert!(a >= 0.0 && b >= 0.0);
        prop_assert!((a + b - 1.0).abs() < 1e-9);
    }

    #[test]
    fn recompose_is_symmetric_under_swap(yin in image(4, 12, 2), yang in image(4, 12, 2), v in unit_vector()) {
        let d = Direction::new(v).unwrap();
        let md = yang_transform(&d);
        let (mut a, mut b) = ([0.0; 2], [0.0; 2]);
        recompose_direction(&yin, &yang, &d, &mut a).unwrap();
        recompose_direction(&yang, &yin, &md, &mut b).unwrap();
        for c in 0..2 {
            prop_assert!((a[c] - b[c]).abs() < 1e-9);
        }
    }

    #[test]
    fn recompose_is_linear(yin in image(4, 12, 1), yang in image(4, 12, 1), s in -3.0f64..3.0) {
        let out = GridSpec::equirect(8).unwrap();
        let base = recompose_yinyang(&yin, &yang, out).unwrap();
        let scaled = recompose_yinyang(&yin.map(|x| s * x), &yang.map(|x| s * x), out).unwrap();
        for (x, y) in base.data().iter().zip(scaled.data()) {
            prop_assert!(y.is_finite());
            prop_assert!((s * x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn inverse_depths_are_arithmetic(near in 0.1f64..10.0, ratio in 1.01f64..1000.0, d in 2usize..128) {
        let c = depth_candidates(near, near * ratio, d).unwrap();
        let v = c.values();
        prop_assert_eq!(v[0], near);
        prop_assert!((v[d - 1] - near * ratio).abs() <= 1e-9 * near * ratio);
        let step = 1.0 / v[1] - 1.0 / v[0];
        for k in 0..d - 1 {
            prop_assert!(v[k + 1] > v[k]);
            prop_assert!(((1.0 / v[k + 1] - 1.0 / v[k]) - step).abs() <= 1e-12);
        }
    }

    #[test]
    fn blend_is_symmetric_and_guarded(a in stack(2, 6, 3, 2), b in stack(2, 6, 3, 2)) {
        let ab = blend_warped(&a, &b).unwrap();
        let ba = blend_warped(&b, &a).unwrap();
        prop_assert!(ab.features().iter().all(|x| x.is_finite()));
        for (x, y) in ab.features().iter().zip(ba.features()) {
            prop_assert!((x - y).abs() < 1e-15);
        }
        prop_assert_eq!(ab.masks(), ba.masks());
    }

    #[test]
    fn cost_volume_is_bilinear(
        f in image(2, 6, 4), g in image(2, 6, 4),
        w1 in stack(2, 6, 4, 3), w2 in stack(2, 6, 4, 3),
        a in -2.0f64..2.0, b in -2.0f64..2.0,
    ) {
        let grid = GridSpec::yin(2).unwrap();
        let cands = DepthCandidates::new(1.0, 10.0, 3).unwrap();
        let cv = |feat: &FieldImage, w: &WarpedStack| cost_volume(feat, w, &grid, &cands).unwrap();
        let fg = FieldImage::new(2, 6, 4, f.data().iter().zip(g.data()).map(|(x, y)| a * x + b * y).collect()).unwrap();
        let left = cv(&fg, &w1);
        let (cf, cg) = (cv(&f, &w1), cv(&g, &w1));
        for i in 0..left.scores().len() {
            prop_assert!((left.scores()[i] - (a * cf.scores()[i] + b * cg.scores()[i])).abs() < 1e-12);
        }
        // Second argument: combine two stacks sharing the first one's mask.
        let combined: Vec<f64> = w1.features().iter().zip(w2.features()).map(|(x, y)| a * x + b * y).collect();
        let w12 = WarpedStack::new(2, 6, 4, 3, combined, w1.masks().to_vec()).unwrap();
        let w2m = WarpedStack::new(2, 6, 4, 3, w2.features().to_vec(), w1.masks().to_vec()).unwrap();
        let right = cv(&f, &w12);
        let (c1, c2) = (cv(&f, &w1), cv(&f, &w2m));
        for i in 0..right.scores().len() {
            prop_assert!((right.scores()[i] - (a * c1.scores()[i] + b * c2.scores()[i])).abs() < 1e-12);
        }
    }

    #[test]
    fn identity_warp_has_no_displacement(p in pose(), yang in prop::bool::ANY) {
        let grid = if yang { GridSpec::yang(6) } else { GridSpec::yin(6) }.unwrap();
        let cands = DepthCandidates::new(0.5, 50.0, 4).unwrap();
        let coords = warp_coordinates(&grid, &grid, &p, &p, &cands).unwrap();
        for (i, c) in coords.iter().enumerate() {
            let px = i % grid.pixel_count();
            let (u, v) = (px % grid.width, px / grid.width);
            prop_assert!(c.inside);
            prop_assert!((c.u - (u as f64 + 0.5)).abs() < 1e-6 && (c.v - (v as f64 + 0.5)).abs() < 1e-6);
        }
    }

    #[test]
    fn pfm_round_trip_is_bit_exact(img in image(3, 5, 3)) {
        // f32 storage: round values to f32 first
        let img = img.map(|x| x as f32 as f64);
        let back = decode_pfm(&encode_pfm(&img).unwrap()).unwrap();
        prop_assert_eq!(back, img);
    }

    #[test]
    fn png_quantizes_to_eight_bits(img in image(3, 4, 3)) {
        let back = decode_png(&encode_png(&img).unwrap()).unwrap();
        for (x, y) in img.data().iter().zip(back.data()) {
            prop_assert!((x - y).abs() <= 0.5 / 255.0 + 1e-12);
        }
    }

    #[test]
    fn cloud_round_trip_is_bit_exact(c in cloud(30)) {
        let bytes = encode_cloud(&c).unwrap();
        let once = decode_cloud(&bytes).unwrap();
        prop_assert_eq!(encode_cloud(&once).unwrap(), bytes);
    }

    #[test]
    fn pose_text_round_trip(p in pose()) {
        let text = format_poses(&[PoseRecord::new("cam", p)]).unwrap();
        let back = parse_poses(&text).unwrap();
        prop_assert_eq!(back.len(), 1);
        prop_assert_eq!(back[0].pose, p);
    }

    #[test]
    fn psnr_and_ssim_are_symmetric(a in image(12, 12, 3), b in image(12, 12, 3)) {
        prop_assert_eq!(psnr(&a, &b).unwrap(), psnr(&b, &a).unwrap());
        prop_assert!((ssim(&a, &b).unwrap() - ssim(&b, &a).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn pixel_aligned_cloud_is_equivariant(depth in image(2, 6, 1), q in rotation(), s in prop::array::uniform3(-3.0f64..3.0)) {
        let grid = GridSpec::yin(2).unwrap();
        let depth = depth.map(|d| 0.5 + 4.0 * d);
        let img = FieldImage::filled(2, 6, 3, 0.4);
        let p = Pose::new(axis_angle(Vector3::new(0.3, -1.0, 0.2), 0.7), Vector3::new(0.2, 0.1, -0.4)).unwrap();
        let s = Vector3::from(s);
        let a = pixel_aligned_cloud(&img, &depth, &grid, &p, PixelAlignedParams::default()).unwrap();
        let b = pixel_aligned_cloud(&img, &depth, &grid, &p.transformed(&q, &s), PixelAlignedParams::default()).unwrap();
        for (x, y) in a.gaussians().iter().zip(b.gaussians()) {
            prop_assert!((q * x.position + s - y.position).norm() < 1e-9);
            prop_assert!((x.scale - y.scale).norm() < 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn render_ignores_input_order(c in cloud(12), seed in any::<u64>()) {
        let grid = GridSpec::equirect(16).unwrap();
        let base = rasterize(&c, &grid, &Pose::identity()).unwrap();
        let mut g = c.gaussians().to_vec();
        // deterministic shuffle
        let mut state = seed | 1;
        for i in (1..g.len()).rev() {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            g.swap(i, (state % (i as u64 + 1)) as usize);
        }
        let shuffled = rasterize(&GaussianCloud::from_gaussians(0, g).unwrap(), &grid, &Pose::identity()).unwrap();
        for (x, y) in base.image.data().iter().zip(shuffled.image.data()) {
            prop_assert!((x - y).abs() < 1e-6);
        }
    }

    #[test]
    fn adding_a_gaussian_never_lowers_alpha(c in cloud(10), extra in gaussian()) {
        let grid = GridSpec::equirect(16).unwrap();
        let before = rasterize(&c, &grid, &Pose::identity()).unwrap();
        let mut more = c.clone();
        more.push(extra).unwrap();
        let after = rasterize(&more, &grid, &Pose::identity()).unwrap();
        for (a, b) in before.alpha.data().iter().zip(after.alpha.data()) {
            prop_assert!(*b >= a - 1e-12);
            prop_assert!((0.0..=1.0).contains(b));
        }
    }

    #[test]
    fn refinement_keeps_geometry_and_never_raises_loss(c in cloud(8), target in image(8, 16, 3)) {
        let views = vec![RefineView { image: target, pose: Pose::identity() }];
        let opts = RefineOptions { iterations: 5, ..RefineOptions::default() };
        let (out, report) = refine_colors(&c, &views, &opts).unwrap();
        for (a, b) in c.gaussians().iter().zip(out.gaussians()) {
            prop_assert_eq!(a.position, b.position);
            prop_assert_eq!(a.scale, b.scale);
            prop_assert_eq!(a.rotation, b.rotation);
            prop_assert_eq!(a.opacity.to_bits(), b.opacity.to_bits());
        }
        for w in report.loss_history.windows(2) {
            prop_assert!(w[1] <= w[0]);
        }
    }

    #[test]
    fn sweep_is_invariant_to_global_rigid_motion(q in rotation(), s in prop::array::uniform3(-5.0f64..5.0)) {
        let mk = |seed: f64| FieldImage::from_fn(16, 32, 3, |u, v, p| {
            for (c, x) in p.iter_mut().enumerate() {
                *x = 0.5 + 0.4 * (0.7 * u as f64 + 1.3 * v as f64 + seed + c as f64).sin() * (0.31 * u as f64 * (c + 1) as f64).cos();
            }
        });
        let fa = ViewFeatures::from_equirect(&mk(0.0), 6, 3).unwrap();
        let fb = ViewFeatures::from_equirect(&mk(1.0), 6, 3).unwrap();
        let p1 = Pose::new(axis_angle(Vector3::z(), 0.2), Vector3::new(-0.3, 0.0, 0.1)).unwrap();
        let p2 = Pose::from_center(Vector3::new(0.4, 0.2, 0.0));
        let s = Vector3::from(s);
        let cands = DepthCandidates::new(1.0, 100.0, 8).unwrap();
        let a = sweep_view(&fa, &fb, &p1, &p2, &cands).unwrap();
        let b = sweep_view(&fa, &fb, &p1.transformed(&q, &s), &p2.transformed(&q, &s), &cands).unwrap();
        for g in 0..2 {
            for (x, y) in a.cost[g].scores().iter().zip(b.cost[g].scores()) {
                prop_assert!((x - y).abs() < 1e-6);
            }
        }
    }
}

#[test]
fn psnr_decreases_with_noise_amplitude() {
    let base = FieldImage::from_fn(16, 16, 3, |u, v, p| p.fill(0.3 + 0.02 * ((u + v) % 7) as f64));
    let pattern: Vec<f64> = (0..base.data().len()).map(|i| ((i * 7919) % 13) as f64 / 6.0 - 1.0).collect();
    let scores: Vec<f64> = [0.01, 0.05, 0.1]
        .iter()
        .map(|a| {
            let noisy = FieldImage::new(16, 16, 3, base.data().iter().zip(&pattern).map(|(x, n)| x + a * n).collect()).unwrap();
            psnr(&noisy, &base).unwrap()
        })
        .collect();
    assert!(scores[0] > scores[1] && scores[1] > scores[2], "{scores:?}");
}
