use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;

use super::{sh, Gaussian3D, GaussianCloud};
use crate::error::{Error, Result};
use crate::image::FieldImage;
use crate::pose::Pose;
use crate::sphere_geom::{GridFamily, GridSpec};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelAlignedParams {
    pub opacity: f64,
    /// Multiplier on the pixel footprint; 1 makes neighbours abut.
    pub scale_factor: f64,
}

impl Default for PixelAlignedParams {
    fn default() -> Self {
        PixelAlignedParams {
            opacity: 1.0,
            scale_factor: 1.0,
        }
    }
}

/// Angular pitch of one pixel row, in radians.
pub fn pixel_angular_extent(grid: &GridSpec) -> Result<f64> {
    match grid.family {
        GridFamily::Equirect => Ok(PI / grid.height as f64),
        GridFamily::Yin | GridFamily::Yang => Ok(FRAC_PI_2 / grid.height as f64),
        GridFamily::CubeFace(_) => Err(Error::Unsupported(
            "pixel-aligned Gaussians on cube faces".into(),
        )),
    }
}

/// One isotropic degree-0 Gaussian per pixel, placed along the pixel's ray
/// at its depth, sized `scale_factor * depth * pixel pitch`.
pub fn pixel_aligned_cloud(
    img: &FieldImage,
    depth: &FieldImage,
    grid: &GridSpec,
    pose: &Pose,
    params: PixelAlignedParams,
) -> Result<GaussianCloud> {
    let (h, w) = (grid.height, grid.width);
    if (img.height(), img.width()) != (h, w) || (depth.height(), depth.width()) != (h, w) {
        return Err(Error::ShapeMismatch(format!(
            "image {}x{} and depth {}x{} on a {h}x{w} grid",
            img.height(),
            img.width(),
            depth.height(),
            depth.width()
        )));
    }
    if img.channels() != 3 || depth.channels() != 1 {
        return Err(Error::ShapeMismatch(format!(
            "need a 3-channel image and 1-channel depth, got {} and {}",
            img.channels(),
            depth.channels()
        )));
    }
    if let Some(i) = depth.data().iter().position(|&d| !(d > 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "depth must be positive, got {} at pixel {i}",
            depth.data()[i]
        )));
    }
    if !(params.opacity > 0.0 && params.opacity <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "opacity {} outside (0, 1]",
            params.opacity
        )));
    }
    if !(params.scale_factor > 0.0) {
        return Err(Error::InvalidArgument("scale factor must be positive".into()));
    }
    let pitch = pixel_angular_extent(grid)?;
    let center = pose.center();
    let gaussians = (0..h * w)
        .into_par_iter()
        .map(|i| {
            let (u, v) = (i % w, i / w);
            let d = depth.data()[i];
            let dir = pose.direction_to_world(&grid.direction_at(u as f64 + 0.5, v as f64 + 0.5));
            let rgb = img.pixel(u, v);
            Gaussian3D {
                position: center + dir.as_vector() * d,
                scale: nalgebra::Vector3::repeat(params.scale_factor * d * pitch),
                rotation: [1.0, 0.0, 0.0, 0.0],
                opacity: params.opacity,
                sh: rgb.iter().map(|&c| sh::dc_from_color(c)).collect(),
            }
        })
        .collect();
    GaussianCloud::from_gaussians(0, gaussians)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;

    #[test]
    fn constant_depth_puts_all_at_that_distance() {
        let grid = GridSpec::equirect(2).unwrap();
        let img = FieldImage::filled(2, 4, 3, 0.5);
        let depth = FieldImage::filled(2, 4, 1, 3.0);
        let pose = Pose::from_center(Vector3::new(1.0, 2.0, 3.0));
        let cloud = pixel_aligned_cloud(&img, &depth, &grid, &pose, Default::default()).unwrap();
        assert_eq!(cloud.len(), 8);
        for g in cloud.gaussians() {
            assert!(((g.position - pose.center()).norm() - 3.0).abs() < 1e-9);
            assert!((sh::eval_color(0, &g.sh, &Vector3::x())[0] - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn doubling_depth_doubles_distance_and_scale() {
        let grid = GridSpec::yin(2).unwrap();
        let img = FieldImage::filled(2, 6, 3, 0.2);
        let a = pixel_aligned_cloud(&img, &FieldImage::filled(2, 6, 1, 1.5), &grid, &Pose::identity(), Default::default())
            .unwrap();
        let b = pixel_aligned_cloud(&img, &FieldImage::filled(2, 6, 1, 3.0), &grid, &Pose::identity(), Default::default())
            .unwrap();
        for (x, y) in a.gaussians().iter().zip(b.gaussians()) {
            assert!((y.position - 2.0 * x.position).norm() < 1e-12);
            assert!((y.scale - 2.0 * x.scale).norm() < 1e-12);
        }
    }

    #[test]
    fn nonpositive_depth_rejected() {
        let grid = GridSpec::equirect(2).unwrap();
        let img = FieldImage::filled(2, 4, 3, 0.5);
        let mut depth = FieldImage::filled(2, 4, 1, 1.0);
        depth.set(1, 1, 0, 0.0);
        assert!(pixel_aligned_cloud(&img, &depth, &grid, &Pose::identity(), Default::default()).is_err());
    }
}
