//! Two-pass rendering: a Yin pass with the camera as given, a Yang pass with
//! the camera rotation premultiplied by the Yang matrix, each normalized by
//! its own alpha, then recombined on the output grid.

use super::{rasterize_with, RasterConfig, RenderOutput};
use crate::decompose::recompose_yinyang;
use crate::error::{Error, Result};
use crate::gaussians::GaussianCloud;
use crate::image::FieldImage;
use crate::pose::Pose;
use crate::sphere_geom::GridSpec;

#[derive(Debug, Clone)]
pub struct YinYangRender {
    /// Recombined normalized image.
    pub image: FieldImage,
    /// Recombined accumulated alpha.
    pub alpha: FieldImage,
    pub yin: RenderOutput,
    /// Yang pass in the Yang-local layout.
    pub yang: RenderOutput,
}

/// Yin/Yang passes at half the output height.
pub fn render_yinyang(cloud: &GaussianCloud, pose: &Pose, out: &GridSpec) -> Result<YinYangRender> {
    render_yinyang_with(cloud, pose, out, &RasterConfig::default(), None)
}

pub fn render_yinyang_with(
    cloud: &GaussianCloud,
    pose: &Pose,
    out: &GridSpec,
    cfg: &RasterConfig,
    pass_height: Option<usize>,
) -> Result<YinYangRender> {
    let h = pass_height.unwrap_or(out.height / 2);
    if h == 0 {
        return Err(Error::InvalidArgument("pass height must be positive".into()));
    }
    let pass_grid = GridSpec::yin(h)?;
    let (yin, yang) = rayon::join(
        || rasterize_with(cloud, &pass_grid, pose, cfg),
        || rasterize_with(cloud, &pass_grid, &pose.yang_pose(), cfg),
    );
    let (yin, yang) = (yin?, yang?);
    let image = recompose_yinyang(&yin.image, &yang.image, *out)?;
    let alpha = recompose_yinyang(&yin.alpha, &yang.alpha, *out)?;
    Ok(YinYangRender {
        image,
        alpha,
        yin,
        yang,
    })
}
