use rayon::prelude::*;

use super::warp::{blend_cell, check_yin_yang, RelativeMotion, WarpedStack};
use super::DepthCandidates;
use crate::error::{Error, Result};
use crate::image::{EdgeMode, FieldImage};
use crate::pose::Pose;
use crate::sphere_geom::GridSpec;

/// Per-pixel, per-depth correlation scores, stored `[row][column][depth]`,
/// with the summed warp mask alongside.
#[derive(Debug, Clone, PartialEq)]
pub struct CostVolume {
    pub grid: GridSpec,
    pub candidates: DepthCandidates,
    scores: Vec<f64>,
    mask: Vec<f64>,
}

impl CostVolume {
    pub fn new(
        grid: GridSpec,
        candidates: DepthCandidates,
        scores: Vec<f64>,
        mask: Vec<f64>,
    ) -> Result<Self> {
        let n = grid.pixel_count() * candidates.len();
        if scores.len() != n || mask.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "cost volume needs {n} cells, got {} scores and {} mask values",
                scores.len(),
                mask.len()
            )));
        }
        if let Some(i) = scores.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(CostVolume {
            grid,
            candidates,
            scores,
            mask,
        })
    }

    pub fn depths(&self) -> usize {
        self.candidates.len()
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn score(&self, u: usize, v: usize, k: usize) -> f64 {
        self.scores[(v * self.grid.width + u) * self.depths() + k]
    }

    pub fn mask(&self, u: usize, v: usize, k: usize) -> f64 {
        self.mask[(v * self.grid.width + u) * self.depths() + k]
    }

    pub fn pixel_scores(&self, u: usize, v: usize) -> &[f64] {
        let d = self.depths();
        let i = (v * self.grid.width + u) * d;
        &self.scores[i..i + d]
    }

    /// Index of the best candidate at a pixel; ties go to the nearer depth.
    pub fn best_index(&self, u: usize, v: usize) -> usize {
        argmax_first(self.pixel_scores(u, v))
    }

    /// Scores as an `H x W x D` raster (for PFM output).
    pub fn to_field_image(&self) -> FieldImage {
        FieldImage::new(self.grid.height, self.grid.width, self.depths(), self.scores.clone())
            .expect("scores are finite by construction")
    }
}

fn argmax_first(xs: &[f64]) -> usize {
    let mut best = 0;
    for (k, &x) in xs.iter().enumerate().skip(1) {
        if x > xs[best] {
            best = k;
        }
    }
    best
}

#[inline]
fn correlation(a: &[f64], b: &[f64], norm: f64) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / norm
}

/// Scaled dot product between target features and a (blended) warped stack.
pub fn cost_volume(
    target_feat: &FieldImage,
    warped: &WarpedStack,
    grid: &GridSpec,
    candidates: &DepthCandidates,
) -> Result<CostVolume> {
    let (h, w, c) = target_feat.shape();
    if (warped.height(), warped.width(), warped.channels()) != (h, w, c)
        || (grid.height, grid.width) != (h, w)
        || warped.depths() != candidates.len()
    {
        return Err(Error::ShapeMismatch(format!(
            "features {h}x{w}x{c}, warped {}x{}x{}x{}, grid {}x{}, {} candidates",
            warped.height(),
            warped.width(),
            warped.channels(),
            warped.depths(),
            grid.height,
            grid.width,
            candidates.len()
        )));
    }
    let d = candidates.len();
    let norm = (c as f64).sqrt();
    let mut scores = vec![0.0; h * w * d];
    let mut mask = vec![0.0; h * w * d];
    scores
        .par_chunks_mut(d)
        .zip(mask.par_chunks_mut(d))
        .enumerate()
        .for_each(|(p, (s, m))| {
            let (u, v) = (p % w, p / w);
            let f1 = target_feat.pixel(u, v);
            for k in 0..d {
                s[k] = correlation(f1, warped.feature(u, v, k), norm);
                m[k] = warped.mask(u, v, k);
            }
        });
    CostVolume::new(*grid, candidates.clone(), scores, mask)
}

/// Per-pixel depth of the best-scoring candidate (nearest on ties).
pub fn depth_from_cost(cv: &CostVolume) -> FieldImage {
    let values = cv.candidates.values();
    let data = cv
        .scores
        .chunks_exact(cv.depths())
        .map(|s| values[argmax_first(s)])
        .collect();
    FieldImage::new(cv.grid.height, cv.grid.width, 1, data).expect("finite depths")
}

/// Warp, blend and correlate in one pass without materializing the
/// `H x W x F x D` stacks. `sources` are the source view's Yin and Yang
/// features with their grids. Produces exactly the cost volume of
/// `warp_feature` + `blend_warped` + `cost_volume`.
pub fn sweep_cost_volume(
    target_feat: &FieldImage,
    target_grid: &GridSpec,
    sources: [(&FieldImage, &GridSpec); 2],
    target_pose: &Pose,
    source_pose: &Pose,
    candidates: &DepthCandidates,
) -> Result<CostVolume> {
    check_yin_yang(target_grid, "target")?;
    let (h, w, c) = target_feat.shape();
    if (target_grid.height, target_grid.width) != (h, w) {
        return Err(Error::ShapeMismatch("target features do not match grid".into()));
    }
    for (feat, grid) in &sources {
        check_yin_yang(grid, "source")?;
        if (feat.height(), feat.width()) != (grid.height, grid.width) || feat.channels() != c {
            return Err(Error::ShapeMismatch("source features do not match".into()));
        }
    }
    let motion = RelativeMotion::new(target_pose, source_pose);
    let d = candidates.len();
    let norm = (c as f64).sqrt();
    let mut scores = vec![0.0; h * w * d];
    let mut mask = vec![0.0; h * w * d];
    scores
        .par_chunks_mut(w * d)
        .zip(mask.par_chunks_mut(w * d))
        .enumerate()
        .for_each(|(v, (srow, mrow))| {
            let mut fa = vec![0.0; c];
            let mut fb = vec![0.0; c];
            let mut blended = vec![0.0; c];
            for u in 0..w {
                let dir = target_grid.direction_at(u as f64 + 0.5, v as f64 + 0.5);
                let f1 = target_feat.pixel(u, v);
                for (k, &depth) in candidates.values().iter().enumerate() {
                    let sample = |(feat, grid): (&FieldImage, &GridSpec), buf: &mut [f64]| {
                        let p = motion.project(&dir, depth, grid);
                        if p.inside {
                            feat.sample_bilinear(p.u, p.v, EdgeMode::Clamp, buf);
                            1.0
                        } else {
                            buf.iter_mut().for_each(|x| *x = 0.0);
                            0.0
                        }
                    };
                    let ma = sample(sources[0], &mut fa);
                    let mb = sample(sources[1], &mut fb);
                    let m = blend_cell(&fa, ma, &fb, mb, &mut blended);
                    srow[u * d + k] = correlation(f1, &blended, norm);
                    mrow[u * d + k] = m;
                }
            }
        });
    CostVolume::new(*target_grid, candidates.clone(), scores, mask)
}
