//! Tile-based CPU splatting onto spherical grids.
//!
//! Each Gaussian is projected with the local Jacobian of the grid's
//! spherical mapping at its centre, giving a 2D pixel-space covariance.
//! Splats are sorted by camera distance and composited front to back. The
//! normalized image divides accumulated colour by accumulated alpha.

mod oracle;
mod projection;
mod yinyang;

use nalgebra::Matrix2;
use rayon::prelude::*;

pub use oracle::{oracle_render, oracle_render_with};
pub use yinyang::{render_yinyang, render_yinyang_with, YinYangRender};

use crate::error::{Error, Result};
use crate::gaussians::GaussianCloud;
use crate::image::FieldImage;
use crate::pose::Pose;
use crate::sphere_geom::{GridFamily, GridSpec};
use projection::AngularLayout;

#[derive(Debug, Clone, PartialEq)]
pub struct RasterConfig {
    pub background: [f64; 3],
    /// Pixels with accumulated alpha below this take the background colour.
    pub alpha_threshold: f64,
    pub tile_size: usize,
    /// Frustum culling and tile binning. Disabling it evaluates every splat
    /// at every pixel.
    pub cull: bool,
    /// Compositing stops once transmittance falls below this.
    pub min_transmittance: f64,
    pub max_alpha: f64,
    /// Added to the diagonal of every projected covariance, in px^2.
    pub cov_regularization: f64,
    /// Gaussians closer than this to the camera centre are skipped.
    pub near: f64,
    /// Splats are truncated at this Mahalanobis radius.
    pub sigma_cutoff: f64,
}

impl Default for RasterConfig {
    fn default() -> Self {
        RasterConfig {
            background: [0.0; 3],
            alpha_threshold: 1e-3,
            tile_size: 16,
            cull: true,
            min_transmittance: 1e-4,
            max_alpha: 0.999,
            cov_regularization: 0.3,
            near: 1e-3,
            sigma_cutoff: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderOutput {
    /// Accumulated premultiplied colour, 3 channels.
    pub color: FieldImage,
    /// Accumulated opacity, 1 channel.
    pub alpha: FieldImage,
    /// `color / alpha`, or the background where alpha is below threshold.
    pub image: FieldImage,
}

impl RenderOutput {
    fn from_accumulators(
        height: usize,
        width: usize,
        color: Vec<f64>,
        alpha: Vec<f64>,
        cfg: &RasterConfig,
    ) -> Result<Self> {
        let image = normalize(&color, &alpha, cfg);
        Ok(RenderOutput {
            color: FieldImage::new(height, width, 3, color)?,
            alpha: FieldImage::new(height, width, 1, alpha)?,
            image: FieldImage::new(height, width, 3, image)?,
        })
    }
}

/// Divides accumulated colour by accumulated alpha, substituting the
/// background where alpha is below `cfg.alpha_threshold`.
pub fn normalize(color: &[f64], alpha: &[f64], cfg: &RasterConfig) -> Vec<f64> {
    let mut out = vec![0.0; color.len()];
    for (i, &a) in alpha.iter().enumerate() {
        for c in 0..3 {
            out[3 * i + c] = if a >= cfg.alpha_threshold {
                color[3 * i + c] / a
            } else {
                cfg.background[c]
            };
        }
    }
    out
}

/// A Gaussian projected into pixel space.
#[derive(Debug, Clone)]
pub(crate) struct Splat {
    pub index: usize,
    pub distance: f64,
    pub center: [f64; 2],
    /// Inverse 2D covariance `(a, b, c)` for `[[a, b], [b, c]]`.
    pub conic: [f64; 3],
    /// Half-extent of the cutoff ellipse's bounding box.
    pub extent: [f64; 2],
    pub opacity: f64,
    pub color: [f64; 3],
}

impl Splat {
    #[inline]
    pub fn alpha_at(&self, px: f64, py: f64, wrap: Option<f64>, cfg: &RasterConfig) -> Option<f64> {
        let mut du = px - self.center[0];
        if let Some(w) = wrap {
            du -= w * (du / w).round();
        }
        let dv = py - self.center[1];
        let [a, b, c] = self.conic;
        let q = a * du * du + 2.0 * b * du * dv + c * dv * dv;
        if q > cfg.sigma_cutoff * cfg.sigma_cutoff {
            return None;
        }
        Some((self.opacity * (-0.5 * q).exp()).min(cfg.max_alpha))
    }
}

pub(crate) fn layout_for(grid: &GridSpec, pose: &Pose) -> Result<(AngularLayout, Pose)> {
    match grid.family {
        GridFamily::Equirect => Ok((AngularLayout::equirect(grid.height, grid.width), *pose)),
        GridFamily::Yin => Ok((AngularLayout::yin(grid.height, grid.width), *pose)),
        GridFamily::Yang => Ok((AngularLayout::yin(grid.height, grid.width), pose.yang_pose())),
        GridFamily::CubeFace(_) => Err(Error::Unsupported(
            "rasterization onto perspective cube faces".into(),
        )),
    }
}

/// Projects every renderable Gaussian and sorts by (distance, input index).
pub(crate) fn prepare_splats(
    cloud: &GaussianCloud,
    layout: &AngularLayout,
    pose: &Pose,
    cfg: &RasterConfig,
) -> Vec<Splat> {
    let eye = pose.center();
    let rot = pose.rotation();
    let mut splats: Vec<Splat> = cloud
        .gaussians()
        .par_iter()
        .enumerate()
        .filter_map(|(index, g)| {
            let p = pose.world_to_camera(&g.position);
            let distance = p.norm();
            if !(distance >= cfg.near) {
                return None;
            }
            let (center, j) = layout.project(&p)?;
            let cov_cam = rot * g.covariance() * rot.transpose();
            let mut cov2: Matrix2<f64> = j * cov_cam * j.transpose();
            cov2[(0, 0)] += cfg.cov_regularization;
            cov2[(1, 1)] += cfg.cov_regularization;
            let (a, b, c) = (cov2[(0, 0)], 0.5 * (cov2[(0, 1)] + cov2[(1, 0)]), cov2[(1, 1)]);
            let det = a * c - b * b;
            if !(det > 0.0 && det.is_finite()) {
                return None;
            }
            let k = cfg.sigma_cutoff;
            Some(Splat {
                index,
                distance,
                center,
                conic: [c / det, -b / det, a / det],
                extent: [k * a.sqrt(), k * c.sqrt()],
                opacity: g.opacity,
                color: cloud.color(index, &eye),
            })
        })
        .collect();
    splats.sort_by(|x, y| {
        x.distance
            .total_cmp(&y.distance)
            .then(x.index.cmp(&y.index))
    });
    splats
}

/// Renders with the default configuration.
pub fn rasterize(cloud: &GaussianCloud, grid: &GridSpec, pose: &Pose) -> Result<RenderOutput> {
    rasterize_with(cloud, grid, pose, &RasterConfig::default())
}

pub fn rasterize_with(
    cloud: &GaussianCloud,
    grid: &GridSpec,
    pose: &Pose,
    cfg: &RasterConfig,
) -> Result<RenderOutput> {
    if cfg.tile_size == 0 {
        return Err(Error::InvalidArgument("tile size must be positive".into()));
    }
    let (layout, cam) = layout_for(grid, pose)?;
    let splats = prepare_splats(cloud, &layout, &cam, cfg);
    let (h, w) = (grid.height, grid.width);
    let ts = cfg.tile_size;
    let tiles_x = w.div_ceil(ts);
    let tiles_y = h.div_ceil(ts);
    let bins = bin_splats(&splats, &layout, h, w, ts, cfg.cull);

    let tiles: Vec<(Vec<f64>, Vec<f64>)> = (0..tiles_x * tiles_y)
        .into_par_iter()
        .map(|t| {
            let (tx, ty) = (t % tiles_x, t / tiles_x);
            let (u0, v0) = (tx * ts, ty * ts);
            let (u1, v1) = ((u0 + ts).min(w), (v0 + ts).min(h));
            let n = (u1 - u0) * (v1 - v0);
            let mut color = vec![0.0; 3 * n];
            let mut alpha = vec![0.0; n];
            let list = &bins[t];
            let mut i = 0;
            for v in v0..v1 {
                for u in u0..u1 {
                    let (px, py) = (u as f64 + 0.5, v as f64 + 0.5);
                    let mut acc = [0.0; 3];
                    let acc_a = composite_pixel(list, &splats, px, py, &layout, cfg, |sp, wgt| {
                        for c in 0..3 {
                            acc[c] += wgt * sp.color[c];
                        }
                    });
                    color[3 * i..3 * i + 3].copy_from_slice(&acc);
                    alpha[i] = acc_a;
                    i += 1;
                }
            }
            (color, alpha)
        })
        .collect();

    let mut color = vec![0.0; 3 * h * w];
    let mut alpha = vec![0.0; h * w];
    for (t, (tc, ta)) in tiles.iter().enumerate() {
        let (tx, ty) = (t % tiles_x, t / tiles_x);
        let (u0, v0) = (tx * ts, ty * ts);
        let (u1, v1) = ((u0 + ts).min(w), (v0 + ts).min(h));
        let tw = u1 - u0;
        for v in v0..v1 {
            let src = (v - v0) * tw;
            let dst = v * w + u0;
            alpha[dst..dst + tw].copy_from_slice(&ta[src..src + tw]);
            color[3 * dst..3 * (dst + tw)].copy_from_slice(&tc[3 * src..3 * (src + tw)]);
        }
    }
    RenderOutput::from_accumulators(h, w, color, alpha, cfg)
}

/// Front-to-back compositing of the splats in `list` at one pixel. Calls
/// `visit` with each contributing splat and its weight `T * a`; returns the
/// accumulated alpha.
#[inline]
fn composite_pixel(
    list: &[u32],
    splats: &[Splat],
    px: f64,
    py: f64,
    layout: &AngularLayout,
    cfg: &RasterConfig,
    mut visit: impl FnMut(&Splat, f64),
) -> f64 {
    let mut trans = 1.0;
    let mut acc_a = 0.0;
    for &s in list {
        let sp = &splats[s as usize];
        let Some(a) = sp.alpha_at(px, py, layout.wrap_width, cfg) else {
            continue;
        };
        let wgt = trans * a;
        visit(sp, wgt);
        acc_a += wgt;
        trans *= 1.0 - a;
        if trans < cfg.min_transmittance {
            break;
        }
    }
    acc_a
}

/// Compositing weights of a render: for every pixel, the contributing
/// Gaussians (by cloud index) with weight `T * a`, plus the accumulated
/// alpha. Uses the same splat lists and early termination as
/// [`rasterize_with`], so `color = sum(weight * gaussian colour)` matches it.
pub(crate) fn pixel_weights(
    cloud: &GaussianCloud,
    grid: &GridSpec,
    pose: &Pose,
    cfg: &RasterConfig,
) -> Result<(Vec<Vec<(u32, f64)>>, Vec<f64>)> {
    if cfg.tile_size == 0 {
        return Err(Error::InvalidArgument("tile size must be positive".into()));
    }
    let (layout, cam) = layout_for(grid, pose)?;
    let splats = prepare_splats(cloud, &layout, &cam, cfg);
    let (h, w) = (grid.height, grid.width);
    let ts = cfg.tile_size;
    let tiles_x = w.div_ceil(ts);
    let bins = bin_splats(&splats, &layout, h, w, ts, cfg.cull);
    let per_pixel: Vec<(Vec<(u32, f64)>, f64)> = (0..h * w)
        .into_par_iter()
        .map(|i| {
            let (u, v) = (i % w, i / w);
            let list = &bins[(v / ts) * tiles_x + u / ts];
            let mut contrib = Vec::new();
            let a = composite_pixel(list, &splats, u as f64 + 0.5, v as f64 + 0.5, &layout, cfg, |sp, wgt| {
                contrib.push((sp.index as u32, wgt));
            });
            (contrib, a)
        })
        .collect();
    Ok(per_pixel.into_iter().unzip())
}

/// Per-tile splat lists in depth order. With `cull` off every splat lands in
/// every tile.
fn bin_splats(
    splats: &[Splat],
    layout: &AngularLayout,
    h: usize,
    w: usize,
    ts: usize,
    cull: bool,
) -> Vec<Vec<u32>> {
    let tiles_x = w.div_ceil(ts);
    let tiles_y = h.div_ceil(ts);
    let mut bins = vec![Vec::new(); tiles_x * tiles_y];
    if !cull {
        for bin in bins.iter_mut() {
            bin.extend(0..splats.len() as u32);
        }
        return bins;
    }
    let mut cols = Vec::with_capacity(tiles_x);
    for (s, sp) in splats.iter().enumerate() {
        let [cu, cv] = sp.center;
        let [eu, ev] = sp.extent;
        // Rows whose pixel centres fall inside the vertical extent.
        let r0 = (cv - ev - 0.5).ceil().max(0.0);
        let r1 = (cv + ev - 0.5).floor().min(h as f64 - 1.0);
        if r0 > r1 {
            continue;
        }
        let (r0, r1) = (r0 as usize, r1 as usize);
        let c0 = (cu - eu - 0.5).ceil();
        let c1 = (cu + eu - 0.5).floor();
        if c0 > c1 {
            continue;
        }
        cols.clear();
        match layout.wrap_width {
            Some(_) => {
                if c1 - c0 + 1.0 >= w as f64 {
                    cols.extend(0..tiles_x);
                } else {
                    let (c0, c1) = (c0 as i64, c1 as i64);
                    let mut c = c0;
                    while c <= c1 {
                        let wrapped = c.rem_euclid(w as i64) as usize;
                        let tile = wrapped / ts;
                        if !cols.contains(&tile) {
                            cols.push(tile);
                        }
                        // jump to the first column of the next tile
                        let step = (ts - wrapped % ts) as i64;
                        c += step;
                    }
                }
            }
            None => {
                let c0 = c0.max(0.0);
                let c1 = c1.min(w as f64 - 1.0);
                if c0 > c1 {
                    continue;
                }
                cols.extend((c0 as usize / ts)..=(c1 as usize / ts));
            }
        }
        for ty in (r0 / ts)..=(r1 / ts) {
            for &tx in &cols {
                bins[ty * tiles_x + tx].push(s as u32);
            }
        }
    }
    bins
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussians::Gaussian3D;
    use nalgebra::Vector3;

    fn single(pos: Vector3<f64>, sigma: f64) -> GaussianCloud {
        GaussianCloud::from_gaussians(0, vec![Gaussian3D::isotropic(pos, sigma, 0.9, [1.0, 0.5, 0.25])])
            .unwrap()
    }

    #[test]
    fn empty_cloud_is_background() {
        let cfg = RasterConfig {
            background: [0.2, 0.4, 0.6],
            ..Default::default()
        };
        let cloud = GaussianCloud::new(0).unwrap();
        let out = rasterize_with(&cloud, &GridSpec::equirect(8).unwrap(), &Pose::identity(), &cfg).unwrap();
        assert!(out.alpha.data().iter().all(|&a| a == 0.0));
        for px in out.image.data().chunks(3) {
            assert_eq!(px, &[0.2, 0.4, 0.6]);
        }
    }

    #[test]
    fn axis_gaussian_centred_on_front_pixel() {
        let grid = GridSpec::equirect(32).unwrap();
        let out = rasterize(&single(Vector3::new(3.0, 0.0, 0.0), 0.05), &grid, &Pose::identity()).unwrap();
        let (mut best, mut bu, mut bv) = (0.0, 0, 0);
        for v in 0..32 {
            for u in 0..64 {
                let a = out.alpha.get(u, v, 0);
                if a > best {
                    (best, bu, bv) = (a, u, v);
                }
            }
        }
        // (theta, phi) = (0, 0) is the corner at (32, 16); the four adjacent
        // pixels tie, so the weighted centroid must sit there.
        let (mut su, mut sv, mut sw) = (0.0, 0.0, 0.0);
        for v in 0..32 {
            for u in 0..64 {
                let a = out.alpha.get(u, v, 0);
                su += a * (u as f64 + 0.5);
                sv += a * (v as f64 + 0.5);
                sw += a;
            }
        }
        assert!((su / sw - 32.0).abs() < 0.5 && (sv / sw - 16.0).abs() < 0.5);
        assert!((31..=32).contains(&bu) && (15..=16).contains(&bv) && best > 0.3);
    }

    #[test]
    fn division_by_alpha() {
        let cfg = RasterConfig::default();
        let img = normalize(&[0.3, 0.3, 0.3], &[0.6], &cfg);
        assert!((img[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn seam_splat_wraps() {
        let grid = GridSpec::equirect(16).unwrap();
        let out = rasterize(&single(Vector3::new(-3.0, 0.0, 0.0), 0.15), &grid, &Pose::identity()).unwrap();
        assert!(out.alpha.get(0, 8, 0) > 0.1);
        assert!(out.alpha.get(31, 8, 0) > 0.1);
        assert!((out.alpha.get(0, 8, 0) - out.alpha.get(31, 8, 0)).abs() < 1e-9);
    }

    #[test]
    fn yang_grid_equals_yin_layout_with_rotated_camera() {
        let cloud = single(Vector3::new(0.2, 0.5, 2.0), 0.2);
        let pose = Pose::from_center(Vector3::new(0.1, -0.1, 0.0));
        let a = rasterize(&cloud, &GridSpec::yang(8).unwrap(), &pose).unwrap();
        let b = rasterize(&cloud, &GridSpec::yin(8).unwrap(), &pose.yang_pose()).unwrap();
        assert_eq!(a, b);
        assert!(a.alpha.data().iter().any(|&x| x > 0.1));
    }

    #[test]
    fn cube_face_unsupported() {
        let cloud = GaussianCloud::new(0).unwrap();
        assert!(rasterize(&cloud, &GridSpec::cube_face(0, 4).unwrap(), &Pose::identity()).is_err());
    }
}
