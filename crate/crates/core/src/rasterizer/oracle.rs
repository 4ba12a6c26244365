//! Brute-force reference renderer: every splat at every pixel, no tiles, no
//! frustum culling, no early termination.

use super::{layout_for, prepare_splats, RasterConfig, RenderOutput};
use crate::error::Result;
use crate::gaussians::GaussianCloud;
use crate::pose::Pose;
use crate::sphere_geom::GridSpec;

pub fn oracle_render(cloud: &GaussianCloud, grid: &GridSpec, pose: &Pose) -> Result<RenderOutput> {
    oracle_render_with(cloud, grid, pose, &RasterConfig::default())
}

/// Uses the compositing model of `cfg` (background, cutoff, regularization,
/// alpha clamp) but ignores its culling, tiling and transmittance threshold.
pub fn oracle_render_with(
    cloud: &GaussianCloud,
    grid: &GridSpec,
    pose: &Pose,
    cfg: &RasterConfig,
) -> Result<RenderOutput> {
    let (layout, cam) = layout_for(grid, pose)?;
    let splats = prepare_splats(cloud, &layout, &cam, cfg);
    let (h, w) = (grid.height, grid.width);
    let mut color = vec![0.0; 3 * h * w];
    let mut alpha = vec![0.0; h * w];
    for v in 0..h {
        for u in 0..w {
            let (px, py) = (u as f64 + 0.5, v as f64 + 0.5);
            let i = v * w + u;
            let mut trans = 1.0;
            for sp in &splats {
                if let Some(a) = sp.alpha_at(px, py, layout.wrap_width, cfg) {
                    for c in 0..3 {
                        color[3 * i + c] += trans * a * sp.color[c];
                    }
                    alpha[i] += trans * a;
                    trans *= 1.0 - a;
                }
            }
        }
    }
    RenderOutput::from_accumulators(h, w, color, alpha, cfg)
}
