//! Cross-grid feature warping at hypothesized depths, and the masked blend
//! of the Yin- and Yang-sourced stacks.

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;

use super::DepthCandidates;
use crate::error::{Error, Result};
use crate::image::{EdgeMode, FieldImage};
use crate::pose::Pose;
use crate::sphere_geom::{Direction, GridSpec, PixelCoord};

/// Features warped into a target grid for every depth candidate, stored
/// depth-major: `[depth][row][column][channel]`, with a `[depth][pixel]` mask.
#[derive(Debug, Clone, PartialEq)]
pub struct WarpedStack {
    height: usize,
    width: usize,
    channels: usize,
    depths: usize,
    features: Vec<f64>,
    mask: Vec<f64>,
}

impl WarpedStack {
    pub fn new(
        height: usize,
        width: usize,
        channels: usize,
        depths: usize,
        features: Vec<f64>,
        mask: Vec<f64>,
    ) -> Result<Self> {
        let n = height * width * depths;
        if features.len() != n * channels || mask.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "warped stack {height}x{width}x{channels}x{depths} with {} features and {} mask values",
                features.len(),
                mask.len()
            )));
        }
        Ok(WarpedStack {
            height,
            width,
            channels,
            depths,
            features,
            mask,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }
    pub fn width(&self) -> usize {
        self.width
    }
    pub fn channels(&self) -> usize {
        self.channels
    }
    pub fn depths(&self) -> usize {
        self.depths
    }
    pub fn features(&self) -> &[f64] {
        &self.features
    }
    pub fn masks(&self) -> &[f64] {
        &self.mask
    }

    #[inline]
    fn cell(&self, u: usize, v: usize, k: usize) -> usize {
        (k * self.height + v) * self.width + u
    }

    pub fn feature(&self, u: usize, v: usize, k: usize) -> &[f64] {
        let i = self.cell(u, v, k) * self.channels;
        &self.features[i..i + self.channels]
    }

    pub fn mask(&self, u: usize, v: usize, k: usize) -> f64 {
        self.mask[self.cell(u, v, k)]
    }

    fn same_layout(&self, other: &WarpedStack) -> bool {
        (self.height, self.width, self.channels, self.depths)
            == (other.height, other.width, other.channels, other.depths)
    }
}

/// Relative motion from the target camera frame to the source camera frame.
#[derive(Debug, Clone, Copy)]
pub(crate) struct RelativeMotion {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

impl RelativeMotion {
    pub fn new(target: &Pose, source: &Pose) -> Self {
        let rotation = source.rotation() * target.rotation().transpose();
        let translation = source.rotation() * (target.translation() - source.translation());
        RelativeMotion {
            rotation,
            translation,
        }
    }

    /// Source-grid coordinates of the point at `depth` along target ray `dir`.
    #[inline]
    pub fn project(&self, dir: &Direction, depth: f64, source_grid: &GridSpec) -> PixelCoord {
        let x = self.rotation * (dir.as_vector() * depth) + self.translation;
        match Direction::new(x) {
            Some(d) => source_grid.direction_to_pixel(&d),
            None => PixelCoord {
                u: -1.0,
                v: -1.0,
                inside: false,
            },
        }
    }
}

pub(crate) fn check_yin_yang(grid: &GridSpec, role: &str) -> Result<()> {
    if grid.is_yin_yang() {
        Ok(())
    } else {
        Err(Error::InvalidGrid(format!(
            "{role} grid must be Yin or Yang, got {:?}",
            grid.family
        )))
    }
}

/// Source-grid coordinates for every target pixel and depth, `[depth][pixel]`.
pub fn warp_coordinates(
    target_grid: &GridSpec,
    source_grid: &GridSpec,
    target_pose: &Pose,
    source_pose: &Pose,
    candidates: &DepthCandidates,
) -> Result<Vec<PixelCoord>> {
    check_yin_yang(target_grid, "target")?;
    check_yin_yang(source_grid, "source")?;
    let motion = RelativeMotion::new(target_pose, source_pose);
    let np = target_grid.pixel_count();
    let mut out = Vec::with_capacity(np * candidates.len());
    for &depth in candidates.values() {
        for v in 0..target_grid.height {
            for u in 0..target_grid.width {
                let dir = target_grid.direction_at(u as f64 + 0.5, v as f64 + 0.5);
                out.push(motion.project(&dir, depth, source_grid));
            }
        }
    }
    Ok(out)
}

/// Warps source-view features on `source_grid` into the target view's
/// `target_grid` at each candidate depth. The mask is 1 where the warped
/// point falls inside the source grid and 0 elsewhere (with zero features).
pub fn warp_feature(
    src_feat: &FieldImage,
    source_grid: &GridSpec,
    target_grid: &GridSpec,
    target_pose: &Pose,
    source_pose: &Pose,
    candidates: &DepthCandidates,
) -> Result<WarpedStack> {
    check_yin_yang(target_grid, "target")?;
    check_yin_yang(source_grid, "source")?;
    if (src_feat.height(), src_feat.width()) != (source_grid.height, source_grid.width) {
        return Err(Error::ShapeMismatch(format!(
            "source features {}x{} on a {}x{} grid",
            src_feat.height(),
            src_feat.width(),
            source_grid.height,
            source_grid.width
        )));
    }
    let motion = RelativeMotion::new(target_pose, source_pose);
    let (h, w, c, d) = (
        target_grid.height,
        target_grid.width,
        src_feat.channels(),
        candidates.len(),
    );
    let mut features = vec![0.0; h * w * c * d];
    let mut mask = vec![0.0; h * w * d];
    features
        .par_chunks_mut(w * c)
        .zip(mask.par_chunks_mut(w))
        .enumerate()
        .for_each(|(row, (frow, mrow))| {
            let (k, v) = (row / h, row % h);
            let depth = candidates.values()[k];
            for u in 0..w {
                let dir = target_grid.direction_at(u as f64 + 0.5, v as f64 + 0.5);
                let p = motion.project(&dir, depth, source_grid);
                if p.inside {
                    src_feat.sample_bilinear(p.u, p.v, EdgeMode::Clamp, &mut frow[u * c..(u + 1) * c]);
                    mrow[u] = 1.0;
                }
            }
        });
    WarpedStack::new(h, w, c, d, features, mask)
}

/// Masked average of two warped stacks for one cell.
#[inline]
pub(crate) fn blend_cell(fa: &[f64], ma: f64, fb: &[f64], mb: f64, out: &mut [f64]) -> f64 {
    let m = ma + mb;
    if m > 0.0 {
        for ((o, a), b) in out.iter_mut().zip(fa).zip(fb) {
            *o = (a * ma + b * mb) / m;
        }
    } else {
        out.iter_mut().for_each(|o| *o = 0.0);
    }
    m
}

/// Blends the stacks warped from the source view's two grids. The result's
/// mask is the summed mask; cells where it is zero carry zero features.
pub fn blend_warped(a: &WarpedStack, b: &WarpedStack) -> Result<WarpedStack> {
    if !a.same_layout(b) {
        return Err(Error::ShapeMismatch("warped stacks differ in shape".into()));
    }
    let c = a.channels;
    let mut features = vec![0.0; a.features.len()];
    let mut mask = vec![0.0; a.mask.len()];
    features
        .par_chunks_mut(c.max(1))
        .zip(mask.par_iter_mut())
        .enumerate()
        .for_each(|(i, (f, m))| {
            *m = blend_cell(
                &a.features[i * c..(i + 1) * c],
                a.mask[i],
                &b.features[i * c..(i + 1) * c],
                b.mask[i],
                f,
            );
        });
    WarpedStack::new(a.height, a.width, c, a.depths, features, mask)
}
