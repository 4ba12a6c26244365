//! End-to-end reconstruction from two equirect reference views: Yin/Yang
//! decomposition, window features, sphere sweeps in both directions,
//! argmax depth, pixel-aligned clouds for all four grids, optional colour
//! refinement, two-pass rendering at the target poses and evaluation.

use crate::decompose::decompose_yinyang;
use crate::error::{Error, Result};
use crate::gaussians::{
    pixel_aligned_cloud, refine_colors, GaussianCloud, PixelAlignedParams, RefineOptions,
    RefineView,
};
use crate::image::FieldImage;
use crate::metrics::{psnr, ssim};
use crate::pose::Pose;
use crate::rasterizer::{render_yinyang_with, RasterConfig};
use crate::scene_synth::{build_scene, SceneKind};
use crate::sphere_geom::GridSpec;
use crate::sweep::{sweep_view, SweepParams, ViewFeatures, ViewSweep};

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// Yin/Yang height used for features, depth and Gaussians; defaults to
    /// half the input height.
    pub feature_height: Option<usize>,
    pub sweep: SweepParams,
    pub gaussians: PixelAlignedParams,
    /// Colour refinement steps against the reference views (0 disables).
    pub refine_iterations: usize,
    pub learning_rate: f64,
    /// Output equirect height; defaults to the input height.
    pub render_height: Option<usize>,
    pub raster: RasterConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            feature_height: None,
            sweep: SweepParams::default(),
            gaussians: PixelAlignedParams::default(),
            refine_iterations: 0,
            learning_rate: RefineOptions::default().learning_rate,
            render_height: None,
            raster: RasterConfig::default(),
        }
    }
}

/// One equirect view.
#[derive(Debug, Clone)]
pub struct View {
    pub image: FieldImage,
    pub pose: Pose,
}

/// A camera to render, with an optional reference image to score against.
#[derive(Debug, Clone)]
pub struct Target {
    pub pose: Pose,
    pub reference: Option<FieldImage>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub pose_index: usize,
    pub psnr: f64,
    pub ssim: f64,
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    /// Per reference view: Yin and Yang depth maps and cost volumes.
    pub sweeps: [ViewSweep; 2],
    pub cloud: GaussianCloud,
    pub renders: Vec<FieldImage>,
    pub evaluations: Vec<Evaluation>,
    /// Refinement loss before and after, when refinement ran.
    pub refine_loss: Option<(f64, f64)>,
}

pub fn run_pipeline(views: &[View; 2], targets: &[Target], cfg: &PipelineConfig) -> Result<PipelineOutput> {
    let in_h = views[0].image.height();
    if views[1].image.shape() != views[0].image.shape() {
        return Err(Error::ShapeMismatch("reference views differ in shape".into()));
    }
    if views[0].image.channels() != 3 {
        return Err(Error::ShapeMismatch("reference views must have 3 channels".into()));
    }
    let fh = cfg.feature_height.unwrap_or(in_h / 2);
    let candidates = cfg.sweep.candidates()?;

    let decomposed = [
        decompose_yinyang(&views[0].image, fh)?,
        decompose_yinyang(&views[1].image, fh)?,
    ];
    let features = [
        ViewFeatures::from_yinyang(&decomposed[0].0, &decomposed[0].1, cfg.sweep.window)?,
        ViewFeatures::from_yinyang(&decomposed[1].0, &decomposed[1].1, cfg.sweep.window)?,
    ];
    let sweeps = [
        sweep_view(&features[0], &features[1], &views[0].pose, &views[1].pose, &candidates)?,
        sweep_view(&features[1], &features[0], &views[1].pose, &views[0].pose, &candidates)?,
    ];

    let mut clouds = Vec::with_capacity(4);
    for (vi, sweep) in sweeps.iter().enumerate() {
        let (yin, yang) = &decomposed[vi];
        for (gi, img) in [yin, yang].into_iter().enumerate() {
            clouds.push(pixel_aligned_cloud(
                img,
                &sweep.depth[gi],
                &features[vi].grids[gi],
                &views[vi].pose,
                cfg.gaussians,
            )?);
        }
    }
    let mut cloud = GaussianCloud::unify(&clouds)?;

    let mut refine_loss = None;
    if cfg.refine_iterations > 0 {
        let refs: Vec<RefineView> = views
            .iter()
            .map(|v| RefineView {
                image: v.image.clone(),
                pose: v.pose,
            })
            .collect();
        let opts = RefineOptions {
            iterations: cfg.refine_iterations,
            learning_rate: cfg.learning_rate,
            raster: cfg.raster.clone(),
        };
        let (refined, report) = refine_colors(&cloud, &refs, &opts)?;
        refine_loss = Some((report.initial_loss(), report.final_loss()));
        cloud = refined;
    }

    let out_grid = GridSpec::equirect(cfg.render_height.unwrap_or(in_h))?;
    let mut renders = Vec::with_capacity(targets.len());
    let mut evaluations = Vec::new();
    for (i, t) in targets.iter().enumerate() {
        let img = render_yinyang_with(&cloud, &t.pose, &out_grid, &cfg.raster, None)?.image;
        if let Some(reference) = &t.reference {
            evaluations.push(Evaluation {
                pose_index: i,
                psnr: psnr(&img, reference)?,
                ssim: ssim(&img, reference)?,
            });
        }
        renders.push(img);
    }
    Ok(PipelineOutput {
        sweeps,
        cloud,
        renders,
        evaluations,
        refine_loss,
    })
}

/// Supersampling used for synthetic reference and target images.
pub const SYNTH_SUPERSAMPLE: usize = 2;

/// Runs the pipeline on a synthetic scene rendered at equirect height
/// `height`: its two reference cameras as inputs, its target cameras scored
/// against ray-cast ground truth.
pub fn run_scene(kind: SceneKind, seed: u64, height: usize, cfg: &PipelineConfig) -> Result<PipelineOutput> {
    let scene = build_scene(kind, seed);
    let grid = GridSpec::equirect(height)?;
    let out_grid = GridSpec::equirect(cfg.render_height.unwrap_or(height))?;
    let views = [0, 1].map(|i| {
        let pose = scene.reference_poses[i];
        View {
            image: scene.render_truth_supersampled(&pose, &grid, SYNTH_SUPERSAMPLE).image,
            pose,
        }
    });
    let targets: Vec<Target> = scene
        .target_poses
        .iter()
        .map(|&pose| Target {
            pose,
            reference: Some(scene.render_truth_supersampled(&pose, &out_grid, SYNTH_SUPERSAMPLE).image),
        })
        .collect();
    run_pipeline(&views, &targets, cfg)
}
