//! Segment correspondence from cost-volume argmax depths.

use std::collections::BTreeMap;

use super::warp::RelativeMotion;
use super::CostVolume;
use crate::error::{Error, Result};
use crate::image::FieldImage;
use crate::pose::Pose;
use crate::sphere_geom::GridSpec;

/// Integer labels on a grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    pub grid: GridSpec,
    labels: Vec<u32>,
}

impl LabelMap {
    pub fn new(grid: GridSpec, labels: Vec<u32>) -> Result<Self> {
        if labels.len() != grid.pixel_count() {
            return Err(Error::ShapeMismatch(format!(
                "{} labels for a {}x{} grid",
                labels.len(),
                grid.height,
                grid.width
            )));
        }
        Ok(LabelMap { grid, labels })
    }

    /// Rounds channel 0 of `img`; negative values are rejected.
    pub fn from_field_image(grid: GridSpec, img: &FieldImage) -> Result<Self> {
        if (img.height(), img.width()) != (grid.height, grid.width) || img.channels() == 0 {
            return Err(Error::ShapeMismatch("label image does not match grid".into()));
        }
        let labels = img
            .data()
            .chunks_exact(img.channels())
            .map(|p| {
                let x = p[0].round();
                if (0.0..=u32::MAX as f64).contains(&x) {
                    Ok(x as u32)
                } else {
                    Err(Error::InvalidArgument(format!("label {} is not a valid id", p[0])))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(LabelMap { grid, labels })
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn get(&self, u: usize, v: usize) -> u32 {
        self.labels[v * self.grid.width + u]
    }

    /// Label at continuous coordinates (nearest pixel, clamped).
    fn at(&self, u: f64, v: f64) -> u32 {
        let x = (u.floor().max(0.0) as usize).min(self.grid.width - 1);
        let y = (v.floor().max(0.0) as usize).min(self.grid.height - 1);
        self.get(x, y)
    }
}

/// One row of the correspondence table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SegmentMatch {
    pub src_label: u32,
    pub dst_label: u32,
    /// Source pixels whose match landed on `dst_label`.
    pub votes: usize,
    /// Source pixels of `src_label` that found any match.
    pub total: usize,
}

/// Matches source labels to destination labels. Every pixel of the cost
/// volume's grid is sent to the destination view at its best depth and
/// votes for the label found there (the first map in `labels_dst` that
/// contains the point). Each source label takes the plurality label, with
/// ties going to the smaller id. `source_pose` is the view the cost volume
/// was computed for.
pub fn match_segments(
    cv: &CostVolume,
    source_pose: &Pose,
    dest_pose: &Pose,
    labels_src: &LabelMap,
    labels_dst: &[LabelMap],
) -> Result<Vec<SegmentMatch>> {
    match_segments_multi(&[(cv, labels_src)], source_pose, dest_pose, labels_dst)
}

/// [`match_segments`] pooling votes over several source grids of one view
/// (typically its Yin and Yang cost volumes).
pub fn match_segments_multi(
    sources: &[(&CostVolume, &LabelMap)],
    source_pose: &Pose,
    dest_pose: &Pose,
    labels_dst: &[LabelMap],
) -> Result<Vec<SegmentMatch>> {
    if labels_dst.is_empty() {
        return Err(Error::InvalidArgument("no destination label maps".into()));
    }
    let motion = RelativeMotion::new(source_pose, dest_pose);
    let mut votes: BTreeMap<u32, BTreeMap<u32, usize>> = BTreeMap::new();
    for (cv, labels) in sources {
        if labels.grid != cv.grid {
            return Err(Error::ShapeMismatch(
                "source labels are not on the cost volume grid".into(),
            ));
        }
        if labels.labels.is_empty() {
            return Err(Error::EmptyLabel("source label map has no pixels".into()));
        }
        let grid = cv.grid;
        for v in 0..grid.height {
            for u in 0..grid.width {
                let src = labels.get(u, v);
                let entry = votes.entry(src).or_default();
                let depth = cv.candidates.values()[cv.best_index(u, v)];
                let dir = grid.direction_at(u as f64 + 0.5, v as f64 + 0.5);
                for dst in labels_dst {
                    let p = motion.project(&dir, depth, &dst.grid);
                    if p.inside {
                        *entry.entry(dst.at(p.u, p.v)).or_default() += 1;
                        break;
                    }
                }
            }
        }
    }
    votes
        .into_iter()
        .map(|(src_label, counts)| {
            let total = counts.values().sum();
            // BTreeMap iterates ascending, so strict '>' keeps the smaller id.
            let mut best: Option<(u32, usize)> = None;
            for (&label, &n) in &counts {
                if best.map_or(true, |(_, b)| n > b) {
                    best = Some((label, n));
                }
            }
            let (dst_label, votes) = best.ok_or_else(|| {
                Error::EmptyLabel(format!("source label {src_label} found no match"))
            })?;
            Ok(SegmentMatch {
                src_label,
                dst_label,
                votes,
                total,
            })
        })
        .collect()
}
