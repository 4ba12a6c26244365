//! Colour-only refinement against reference renders.
//!
//! With positions, covariances and opacities fixed, the normalized render of
//! each pixel is an affine function of the degree-0 colour coefficients. The
//! compositing weights are computed once and the mean squared error is then
//! minimized by diagonally preconditioned gradient descent with
//! backtracking, so the loss never increases.

use rayon::prelude::*;

use super::sh::SH_C0;
use super::GaussianCloud;
use crate::error::{Error, Result};
use crate::image::FieldImage;
use crate::pose::Pose;
use crate::rasterizer::{pixel_weights, RasterConfig};
use crate::sphere_geom::GridSpec;

/// A reference equirect image and the pose it was taken from.
#[derive(Debug, Clone)]
pub struct RefineView {
    pub image: FieldImage,
    pub pose: Pose,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefineOptions {
    pub iterations: usize,
    /// Step length relative to the preconditioned (Newton-diagonal) step.
    pub learning_rate: f64,
    pub raster: RasterConfig,
}

impl Default for RefineOptions {
    fn default() -> Self {
        RefineOptions {
            iterations: 100,
            learning_rate: 0.5,
            raster: RasterConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefineReport {
    /// Loss before the first step, then after every accepted iteration.
    pub loss_history: Vec<f64>,
}

impl RefineReport {
    pub fn initial_loss(&self) -> f64 {
        self.loss_history[0]
    }
    pub fn final_loss(&self) -> f64 {
        *self.loss_history.last().expect("history starts with the initial loss")
    }
}

const MAX_BACKTRACKS: usize = 40;
const SUM_CHUNK: usize = 4096;

/// Affine map from colour coefficients to rendered pixel values.
struct LinearModel {
    gaussians: usize,
    /// Per pixel, the range of `entries` that feed it.
    rows: Vec<(usize, usize)>,
    entries: Vec<(u32, f64)>,
    /// Per Gaussian, `(pixel, coefficient)` pairs in pixel order.
    columns: Vec<Vec<(u32, f64)>>,
    /// Constant part of every pixel value (background where alpha is low).
    base: Vec<f64>,
    target: Vec<f64>,
}

impl LinearModel {
    fn build(cloud: &GaussianCloud, views: &[RefineView], cfg: &RasterConfig) -> Result<Self> {
        if views.is_empty() {
            return Err(Error::InvalidArgument("no reference views".into()));
        }
        if cloud.sh_degree() != 0 {
            return Err(Error::Unsupported(format!(
                "colour refinement of SH degree {}",
                cloud.sh_degree()
            )));
        }
        let mut rows = Vec::new();
        let mut entries = Vec::new();
        let mut base = Vec::new();
        let mut target = Vec::new();
        for (vi, view) in views.iter().enumerate() {
            let img = &view.image;
            if img.channels() != 3 || img.width() != 2 * img.height() || img.height() == 0 {
                return Err(Error::InvalidGrid(format!(
                    "reference view {vi} must be a 3-channel 2:1 equirect image, got {:?}",
                    img.shape()
                )));
            }
            let grid = GridSpec::equirect(img.height())?;
            let (weights, alpha) = pixel_weights(cloud, &grid, &view.pose, cfg)?;
            for (p, (list, a)) in weights.into_iter().zip(alpha).enumerate() {
                let start = entries.len();
                if a >= cfg.alpha_threshold {
                    entries.extend(list.into_iter().map(|(j, w)| (j, w / a * SH_C0)));
                    base.extend_from_slice(&[0.0; 3]);
                } else {
                    base.extend_from_slice(&cfg.background);
                }
                rows.push((start, entries.len()));
                target.extend_from_slice(&img.data()[3 * p..3 * p + 3]);
            }
        }
        let mut columns = vec![Vec::new(); cloud.len()];
        for (p, &(s, e)) in rows.iter().enumerate() {
            for &(j, coef) in &entries[s..e] {
                columns[j as usize].push((p as u32, coef));
            }
        }
        Ok(LinearModel {
            gaussians: cloud.len(),
            rows,
            entries,
            columns,
            base,
            target,
        })
    }

    fn values(&self) -> usize {
        self.target.len()
    }

    /// Residuals `prediction - target`, 3 per pixel.
    fn residuals(&self, x: &[f64]) -> Vec<f64> {
        let mut r = vec![0.0; self.values()];
        r.par_chunks_mut(3).enumerate().for_each(|(p, out)| {
            let (s, e) = self.rows[p];
            let mut acc = [0.0; 3];
            for &(j, coef) in &self.entries[s..e] {
                let j = j as usize;
                for c in 0..3 {
                    acc[c] += coef * x[3 * j + c];
                }
            }
            for c in 0..3 {
                out[c] = self.base[3 * p + c] + acc[c] - self.target[3 * p + c];
            }
        });
        r
    }

    /// Mean squared residual, summed in a fixed order.
    fn loss_of(&self, r: &[f64]) -> f64 {
        let partial: Vec<f64> = r
            .par_chunks(SUM_CHUNK)
            .map(|c| c.iter().map(|x| x * x).sum::<f64>())
            .collect();
        partial.iter().sum::<f64>() / self.values() as f64
    }

    fn gradient(&self, r: &[f64]) -> Vec<f64> {
        let scale = 2.0 / self.values() as f64;
        let mut g = vec![0.0; 3 * self.gaussians];
        g.par_chunks_mut(3).enumerate().for_each(|(j, out)| {
            for &(p, coef) in &self.columns[j] {
                for c in 0..3 {
                    out[c] += coef * r[3 * p as usize + c];
                }
            }
            out.iter_mut().for_each(|v| *v *= scale);
        });
        g
    }

    /// Diagonal of the (channel-shared) Hessian.
    fn hessian_diagonal(&self) -> Vec<f64> {
        let scale = 2.0 / self.values() as f64;
        self.columns
            .par_iter()
            .map(|col| scale * col.iter().map(|(_, c)| c * c).sum::<f64>())
            .collect()
    }
}

fn dc_vector(cloud: &GaussianCloud) -> Vec<f64> {
    cloud.gaussians().iter().flat_map(|g| g.sh.iter().copied()).collect()
}

/// Mean squared error of the normalized equirect renders against the
/// reference views, and its gradient with respect to the degree-0 SH
/// coefficients (laid out `[gaussian][channel]`).
pub fn color_loss_and_gradient(
    cloud: &GaussianCloud,
    views: &[RefineView],
    cfg: &RasterConfig,
) -> Result<(f64, Vec<f64>)> {
    let model = LinearModel::build(cloud, views, cfg)?;
    let r = model.residuals(&dc_vector(cloud));
    Ok((model.loss_of(&r), model.gradient(&r)))
}

/// Refines degree-0 colours only; geometry and opacity are left untouched.
pub fn refine_colors(
    cloud: &GaussianCloud,
    views: &[RefineView],
    options: &RefineOptions,
) -> Result<(GaussianCloud, RefineReport)> {
    if !(options.learning_rate > 0.0 && options.learning_rate.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "learning rate must be positive, got {}",
            options.learning_rate
        )));
    }
    let model = LinearModel::build(cloud, views, &options.raster)?;
    let hdiag = model.hessian_diagonal();
    let mut x = dc_vector(cloud);
    let mut r = model.residuals(&x);
    let mut loss = model.loss_of(&r);
    let mut history = vec![loss];
    for _ in 0..options.iterations {
        let g = model.gradient(&r);
        let step: Vec<f64> = g
            .iter()
            .enumerate()
            .map(|(i, gi)| {
                let h = hdiag[i / 3];
                if h > 0.0 {
                    -gi / h
                } else {
                    0.0
                }
            })
            .collect();
        let mut lr = options.learning_rate;
        let mut accepted = false;
        for _ in 0..MAX_BACKTRACKS {
            let trial: Vec<f64> = x.iter().zip(&step).map(|(a, s)| a + lr * s).collect();
            let tr = model.residuals(&trial);
            let tl = model.loss_of(&tr);
            if tl <= loss {
                (x, r, loss) = (trial, tr, tl);
                accepted = true;
                break;
            }
            lr *= 0.5;
        }
        history.push(loss);
        if !accepted {
            break;
        }
    }
    let mut out = cloud.clone();
    for (g, dc) in out.gaussians_mut().iter_mut().zip(x.chunks_exact(3)) {
        g.sh.copy_from_slice(dc);
    }
    Ok((
        out,
        RefineReport {
            loss_history: history,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussians::Gaussian3D;
    use crate::rasterizer::rasterize_with;
    use nalgebra::Vector3;

    fn one_pixel_scene() -> (GaussianCloud, Vec<RefineView>) {
        // Opaque, tiny Gaussian straight ahead: it covers the pixels around
        // (theta, phi) = (0, 0) and nothing else matters.
        let g = Gaussian3D::isotropic(Vector3::new(2.0, 0.0, 0.0), 0.01, 1.0, [0.1, 0.1, 0.1]);
        let cloud = GaussianCloud::from_gaussians(0, vec![g]).unwrap();
        let grid = GridSpec::equirect(8).unwrap();
        let mut target = FieldImage::zeros(8, 16, 3);
        let out = rasterize_with(&cloud, &grid, &Pose::identity(), &RasterConfig::default()).unwrap();
        for v in 0..8 {
            for u in 0..16 {
                if out.alpha.get(u, v, 0) >= 1e-3 {
                    target.pixel_mut(u, v).copy_from_slice(&[0.8, 0.4, 0.2]);
                }
            }
        }
        (cloud, vec![RefineView { image: target, pose: Pose::identity() }])
    }

    #[test]
    fn zero_iterations_is_identity() {
        let (cloud, views) = one_pixel_scene();
        let opts = RefineOptions { iterations: 0, ..Default::default() };
        let (out, report) = refine_colors(&cloud, &views, &opts).unwrap();
        assert_eq!(out, cloud);
        assert_eq!(report.loss_history.len(), 1);
    }

    #[test]
    fn single_gaussian_converges_to_target_dc() {
        let (cloud, views) = one_pixel_scene();
        let (out, report) = refine_colors(&cloud, &views, &RefineOptions::default()).unwrap();
        let sh = &out.gaussians()[0].sh;
        for (c, want) in [0.8, 0.4, 0.2].iter().enumerate() {
            assert!((sh[c] - want / SH_C0).abs() < 1e-3, "{sh:?}");
        }
        assert!(report.loss_history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn empty_views_and_higher_degree_rejected() {
        let (cloud, views) = one_pixel_scene();
        assert!(refine_colors(&cloud, &[], &RefineOptions::default()).is_err());
        let g = Gaussian3D {
            sh: vec![0.0; 12],
            ..cloud.gaussians()[0].clone()
        };
        let deg1 = GaussianCloud::from_gaussians(1, vec![g]).unwrap();
        assert!(refine_colors(&deg1, &views, &RefineOptions::default()).is_err());
    }
}
