//! Deterministic window descriptors standing in for a learned encoder.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::FieldImage;

/// Descriptors with a norm at or below this are reported as zero.
const ZERO_NORM: f64 = 1e-9;

/// Per-pixel descriptor over a `window x window` neighbourhood of the
/// luminance: mean-subtracted intensities, then horizontal and vertical
/// central-difference gradients, L2-normalized. `F = 3 * window^2`.
/// Borders clamp.
pub fn extract_features(img: &FieldImage, window: usize) -> Result<FieldImage> {
    if window == 0 || window % 2 == 0 {
        return Err(Error::InvalidArgument(format!(
            "window must be odd and positive, got {window}"
        )));
    }
    let (h, w) = (img.height(), img.width());
    if window > h || window > w {
        return Err(Error::InvalidArgument(format!(
            "window {window} exceeds {h}x{w} image"
        )));
    }
    let gray = img.to_gray();
    let at = |u: isize, v: isize| -> f64 {
        let u = u.clamp(0, w as isize - 1) as usize;
        let v = v.clamp(0, h as isize - 1) as usize;
        gray.get(u, v, 0)
    };
    let mut gx = vec![0.0; h * w];
    let mut gy = vec![0.0; h * w];
    for v in 0..h as isize {
        for u in 0..w as isize {
            let i = v as usize * w + u as usize;
            gx[i] = 0.5 * (at(u + 1, v) - at(u - 1, v));
            gy[i] = 0.5 * (at(u, v + 1) - at(u, v - 1));
        }
    }
    let n = window * window;
    let f = 3 * n;
    let r = (window / 2) as isize;
    let mut out = FieldImage::zeros(h, w, f);
    out.data_mut()
        .par_chunks_mut(w * f)
        .enumerate()
        .for_each(|(v, row)| {
            let v = v as isize;
            for u in 0..w as isize {
                let desc = &mut row[u as usize * f..(u as usize + 1) * f];
                let mut k = 0;
                for dv in -r..=r {
                    for du in -r..=r {
                        let uu = (u + du).clamp(0, w as isize - 1) as usize;
                        let vv = (v + dv).clamp(0, h as isize - 1) as usize;
                        desc[k] = gray.get(uu, vv, 0);
                        desc[n + k] = gx[vv * w + uu];
                        desc[2 * n + k] = gy[vv * w + uu];
                        k += 1;
                    }
                }
                let mean = desc[..n].iter().sum::<f64>() / n as f64;
                desc[..n].iter_mut().for_each(|x| *x -= mean);
                let norm = desc.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm <= ZERO_NORM {
                    desc.iter_mut().for_each(|x| *x = 0.0);
                } else {
                    desc.iter_mut().for_each(|x| *x /= norm);
                }
            }
        });
    Ok(out)
}
