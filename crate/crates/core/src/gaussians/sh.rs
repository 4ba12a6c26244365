//! Real spherical harmonics up to degree 3, in the ordering and sign
//! convention used by common Gaussian splatting checkpoints.

use nalgebra::Vector3;

pub const SH_C0: f64 = 0.282_094_791_773_878_14;
const SH_C1: f64 = 0.488_602_511_902_919_9;
const SH_C2: [f64; 5] = [
    1.092_548_430_592_079_2,
    -1.092_548_430_592_079_2,
    0.315_391_565_252_520_05,
    -1.092_548_430_592_079_2,
    0.546_274_215_296_039_6,
];
const SH_C3: [f64; 7] = [
    -0.590_043_589_926_643_5,
    2.890_611_442_640_554,
    -0.457_045_799_464_465_8,
    0.373_176_332_590_115_4,
    -0.457_045_799_464_465_8,
    1.445_305_721_320_277,
    -0.590_043_589_926_643_5,
];

pub const MAX_SH_DEGREE: u32 = 3;

pub const fn coeffs_per_channel(degree: u32) -> usize {
    ((degree + 1) * (degree + 1)) as usize
}

/// Basis values for `degree` at unit direction `d`, written into `out`
/// (length `coeffs_per_channel(degree)`).
pub fn basis(degree: u32, d: &Vector3<f64>, out: &mut [f64]) {
    out[0] = SH_C0;
    if degree == 0 {
        return;
    }
    let (x, y, z) = (d.x, d.y, d.z);
    out[1] = -SH_C1 * y;
    out[2] = SH_C1 * z;
    out[3] = -SH_C1 * x;
    if degree == 1 {
        return;
    }
    let (xx, yy, zz) = (x * x, y * y, z * z);
    out[4] = SH_C2[0] * x * y;
    out[5] = SH_C2[1] * y * z;
    out[6] = SH_C2[2] * (2.0 * zz - xx - yy);
    out[7] = SH_C2[3] * x * z;
    out[8] = SH_C2[4] * (xx - yy);
    if degree == 2 {
        return;
    }
    out[9] = SH_C3[0] * y * (3.0 * xx - yy);
    out[10] = SH_C3[1] * x * y * z;
    out[11] = SH_C3[2] * y * (4.0 * zz - xx - yy);
    out[12] = SH_C3[3] * z * (2.0 * zz - 3.0 * xx - 3.0 * yy);
    out[13] = SH_C3[4] * x * (4.0 * zz - xx - yy);
    out[14] = SH_C3[5] * z * (xx - yy);
    out[15] = SH_C3[6] * x * (xx - 3.0 * yy);
}

/// RGB colour of coefficients `sh` (layout `[coeff][channel]`) seen along `d`.
pub fn eval_color(degree: u32, sh: &[f64], d: &Vector3<f64>) -> [f64; 3] {
    let mut b = [0.0; 16];
    let n = coeffs_per_channel(degree);
    basis(degree, d, &mut b[..n]);
    let mut rgb = [0.0; 3];
    for (k, bk) in b[..n].iter().enumerate() {
        for (c, out) in rgb.iter_mut().enumerate() {
            *out += bk * sh[k * 3 + c];
        }
    }
    rgb
}

pub fn dc_from_color(c: f64) -> f64 {
    c / SH_C0
}
