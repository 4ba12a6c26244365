//! Sphere sweeping between two omnidirectional views on Yin/Yang grids:
//! depth candidates, window features, cross-grid warps, cost volumes,
//! depth extraction and segment matching.

mod candidates;
mod cost;
mod features;
mod segments;
mod warp;

pub use candidates::{depth_candidates, DepthCandidates};
pub use cost::{cost_volume, depth_from_cost, sweep_cost_volume, CostVolume};
pub use features::extract_features;
pub use segments::{match_segments, match_segments_multi, LabelMap, SegmentMatch};
pub use warp::{blend_warped, warp_coordinates, warp_feature, WarpedStack};

use crate::decompose::decompose_yinyang;
use crate::error::Result;
use crate::image::FieldImage;
use crate::pose::Pose;
use crate::sphere_geom::GridSpec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepParams {
    pub d_near: f64,
    pub d_far: f64,
    pub depths: usize,
    /// Odd feature window side.
    pub window: usize,
}

impl Default for SweepParams {
    fn default() -> Self {
        SweepParams {
            d_near: 1.0,
            d_far: 100.0,
            depths: 64,
            window: 5,
        }
    }
}

impl SweepParams {
    pub fn candidates(&self) -> Result<DepthCandidates> {
        DepthCandidates::new(self.d_near, self.d_far, self.depths)
    }
}

/// Yin and Yang feature maps of one view.
#[derive(Debug, Clone)]
pub struct ViewFeatures {
    pub grids: [GridSpec; 2],
    pub features: [FieldImage; 2],
}

impl ViewFeatures {
    /// Features of already-decomposed Yin and Yang images.
    pub fn from_yinyang(yin: &FieldImage, yang: &FieldImage, window: usize) -> Result<Self> {
        yin.ensure_same_shape(yang)?;
        let h = yin.height();
        Ok(ViewFeatures {
            grids: [GridSpec::yin(h)?, GridSpec::yang(h)?],
            features: [extract_features(yin, window)?, extract_features(yang, window)?],
        })
    }

    /// Decomposes an equirect image at `height` and extracts features.
    pub fn from_equirect(img: &FieldImage, height: usize, window: usize) -> Result<Self> {
        let (yin, yang) = decompose_yinyang(img, height)?;
        Self::from_yinyang(&yin, &yang, window)
    }

    fn sources(&self) -> [(&FieldImage, &GridSpec); 2] {
        [
            (&self.features[0], &self.grids[0]),
            (&self.features[1], &self.grids[1]),
        ]
    }
}

/// Cost volumes and depth maps of one view's Yin and Yang grids.
#[derive(Debug, Clone)]
pub struct ViewSweep {
    pub cost: [CostVolume; 2],
    pub depth: [FieldImage; 2],
}

/// Sweeps `target` against `source`: for each of the target's Yin and Yang
/// grids, the source's Yin and Yang features are warped, blended and
/// correlated, and the argmax depth is taken.
pub fn sweep_view(
    target: &ViewFeatures,
    source: &ViewFeatures,
    target_pose: &Pose,
    source_pose: &Pose,
    candidates: &DepthCandidates,
) -> Result<ViewSweep> {
    let cv = |i: usize| {
        sweep_cost_volume(
            &target.features[i],
            &target.grids[i],
            source.sources(),
            target_pose,
            source_pose,
            candidates,
        )
    };
    let cost = [cv(0)?, cv(1)?];
    let depth = [depth_from_cost(&cost[0]), depth_from_cost(&cost[1])];
    Ok(ViewSweep { cost, depth })
}
