//! Image quality metrics.

use crate::error::{Error, Result};
use crate::image::FieldImage;

/// Returned by [`psnr`] for (near) identical images.
pub const PSNR_IDENTICAL: f64 = f64::INFINITY;
/// Cap used when printing PSNR tables.
pub const PSNR_DISPLAY_CAP: f64 = 99.0;

const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const SSIM_K1: f64 = 0.01;
const SSIM_K2: f64 = 0.03;

pub fn mse(a: &FieldImage, b: &FieldImage) -> Result<f64> {
    a.ensure_same_shape(b)?;
    if a.data().is_empty() {
        return Err(Error::InvalidArgument("empty image".into()));
    }
    let sum: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    Ok(sum / a.data().len() as f64)
}

/// Peak signal-to-noise ratio in dB for images in `[0, 1]`.
pub fn psnr(a: &FieldImage, b: &FieldImage) -> Result<f64> {
    let m = mse(a, b)?;
    if m < 1e-12 {
        Ok(PSNR_IDENTICAL)
    } else {
        Ok(-10.0 * m.log10())
    }
}

fn gaussian_window() -> Vec<f64> {
    let r = (SSIM_WINDOW / 2) as f64;
    let g: Vec<f64> = (0..SSIM_WINDOW)
        .map(|i| {
            let x = i as f64 - r;
            (-x * x / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp()
        })
        .collect();
    let s: f64 = g.iter().sum();
    g.into_iter().map(|x| x / s).collect()
}

/// Separable 'valid' filtering with the SSIM window.
fn filter_valid(data: &[f64], h: usize, w: usize, k: &[f64]) -> (Vec<f64>, usize, usize) {
    let n = k.len();
    let ow = w - n + 1;
    let oh = h - n + 1;
    let mut tmp = vec![0.0; h * ow];
    for y in 0..h {
        for x in 0..ow {
            tmp[y * ow + x] = (0..n).map(|i| k[i] * data[y * w + x + i]).sum();
        }
    }
    let mut out = vec![0.0; oh * ow];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = (0..n).map(|i| k[i] * tmp[(y + i) * ow + x]).sum();
        }
    }
    (out, oh, ow)
}

/// Mean SSIM on luminance with an 11x11 Gaussian window (sigma 1.5),
/// K1 = 0.01, K2 = 0.03 and unit dynamic range.
pub fn ssim(a: &FieldImage, b: &FieldImage) -> Result<f64> {
    a.ensure_same_shape(b)?;
    let (h, w) = (a.height(), a.width());
    if h < SSIM_WINDOW || w < SSIM_WINDOW {
        return Err(Error::InvalidArgument(format!(
            "image {h}x{w} smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} SSIM window"
        )));
    }
    let x = a.to_gray();
    let y = b.to_gray();
    let (x, y) = (x.data(), y.data());
    let k = gaussian_window();
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(y).map(|(p, q)| p * q).collect();
    let (mx, ..) = filter_valid(x, h, w, &k);
    let (my, ..) = filter_valid(y, h, w, &k);
    let (exx, ..) = filter_valid(&xx, h, w, &k);
    let (eyy, ..) = filter_valid(&yy, h, w, &k);
    let (exy, ..) = filter_valid(&xy, h, w, &k);
    let c1 = SSIM_K1 * SSIM_K1;
    let c2 = SSIM_K2 * SSIM_K2;
    let n = mx.len();
    let total: f64 = (0..n)
        .map(|i| {
            let (ux, uy) = (mx[i], my[i]);
            let vx = exx[i] - ux * ux;
            let vy = eyy[i] - uy * uy;
            let cxy = exy[i] - ux * uy;
            ((2.0 * ux * uy + c1) * (2.0 * cxy + c2)) / ((ux * ux + uy * uy + c1) * (vx + vy + c2))
        })
        .sum();
    Ok(total / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pattern(h: usize, w: usize) -> FieldImage {
        FieldImage::from_fn(h, w, 3, |u, v, p| {
            let t = ((u * 7 + v * 13) % 17) as f64 / 16.0;
            p.copy_from_slice(&[t, 1.0 - t, 0.5 * t]);
        })
    }

    #[test]
    fn psnr_examples() {
        let a = FieldImage::filled(8, 8, 3, 0.5);
        assert_eq!(psnr(&a, &a).unwrap(), PSNR_IDENTICAL);
        let b = FieldImage::filled(8, 8, 3, 0.0);
        let c = FieldImage::filled(8, 8, 3, 1.0);
        assert_eq!(psnr(&b, &c).unwrap(), 0.0);
        assert!(psnr(&a, &FieldImage::filled(8, 8, 1, 0.5)).is_err());
    }

    #[test]
    fn ssim_identical_and_negative() {
        let a = pattern(24, 32);
        assert!((ssim(&a, &a).unwrap() - 1.0).abs() < 1e-9);
        let neg = a.map(|x| 1.0 - x);
        assert!(ssim(&a, &neg).unwrap() < 0.0);
        assert!(ssim(&FieldImage::zeros(10, 20, 1), &FieldImage::zeros(10, 20, 1)).is_err());
    }

    #[test]
    fn ssim_of_two_constants() {
        let a = FieldImage::filled(16, 16, 1, 0.0);
        let b = FieldImage::filled(16, 16, 1, 1.0);
        let c1 = SSIM_K1 * SSIM_K1;
        let expected = c1 / (1.0 + c1);
        assert!((ssim(&a, &b).unwrap() - expected).abs() < 1e-9);
    }

    #[test]
    fn symmetry() {
        let a = pattern(16, 20);
        let b = a.map(|x| (x * 0.8 + 0.1).sin().abs());
        assert!((ssim(&a, &b).unwrap() - ssim(&b, &a).unwrap()).abs() < 1e-9);
        assert_eq!(psnr(&a, &b).unwrap(), psnr(&b, &a).unwrap());
    }
}
