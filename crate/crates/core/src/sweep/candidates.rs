use crate::error::{Error, Result};

/// Depth hypotheses evenly spaced in inverse depth from `d_near` to `d_far`.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthCandidates {
    d_near: f64,
    d_far: f64,
    values: Vec<f64>,
}

impl DepthCandidates {
    pub fn new(d_near: f64, d_far: f64, count: usize) -> Result<Self> {
        if !(d_near > 0.0 && d_near < d_far && d_far.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "need 0 < d_near < d_far, got {d_near} and {d_far}"
            )));
        }
        if count < 2 {
            return Err(Error::InvalidArgument(format!(
                "need at least 2 depth candidates, got {count}"
            )));
        }
        let (inv_near, inv_far) = (1.0 / d_near, 1.0 / d_far);
        let last = (count - 1) as f64;
        let mut values: Vec<f64> = (0..count)
            .map(|k| 1.0 / (inv_near + k as f64 / last * (inv_far - inv_near)))
            .collect();
        values[0] = d_near;
        values[count - 1] = d_far;
        Ok(DepthCandidates {
            d_near,
            d_far,
            values,
        })
    }

    pub fn d_near(&self) -> f64 {
        self.d_near
    }
    pub fn d_far(&self) -> f64 {
        self.d_far
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn len(&self) -> usize {
        self.values.len()
    }
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Index of the candidate closest to `depth` in inverse depth.
    pub fn nearest_index(&self, depth: f64) -> usize {
        let inv = 1.0 / depth;
        let (inv_near, inv_far) = (1.0 / self.d_near, 1.0 / self.d_far);
        let t = (inv - inv_near) / (inv_far - inv_near) * (self.len() - 1) as f64;
        t.round().clamp(0.0, (self.len() - 1) as f64) as usize
    }
}

/// Convenience wrapper matching the free-function form.
pub fn depth_candidates(d_near: f64, d_far: f64, count: usize) -> Result<DepthCandidates> {
    DepthCandidates::new(d_near, d_far, count)
}
