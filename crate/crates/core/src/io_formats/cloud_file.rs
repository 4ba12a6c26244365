use std::path::Path;

use nalgebra::Vector3;

use super::{read_bytes, write_bytes};
use crate::error::{Error, Result};
use crate::gaussians::{sh, Gaussian3D, GaussianCloud};

pub const CLOUD_MAGIC: [u8; 4] = *b"YYGC";
const HEADER_LEN: usize = 16;
const QUAT_TOLERANCE: f64 = 1e-3;

fn floats_per_gaussian(degree: u32) -> usize {
    11 + 3 * sh::coeffs_per_channel(degree)
}

pub fn encode_cloud(cloud: &GaussianCloud) -> Result<Vec<u8>> {
    let per = floats_per_gaussian(cloud.sh_degree());
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * per * cloud.len());
    out.extend_from_slice(&CLOUD_MAGIC);
    out.extend_from_slice(&(cloud.len() as u64).to_le_bytes());
    out.extend_from_slice(&cloud.sh_degree().to_le_bytes());
    for (i, g) in cloud.gaussians().iter().enumerate() {
        let values = g
            .position
            .iter()
            .chain(g.scale.iter())
            .chain(g.rotation.iter())
            .chain(std::iter::once(&g.opacity))
            .chain(g.sh.iter());
        for &x in values {
            let f = x as f32;
            if !f.is_finite() {
                return Err(Error::InvalidGaussian {
                    index: i,
                    message: "value not representable as f32".into(),
                });
            }
            out.extend_from_slice(&f.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn decode_cloud(bytes: &[u8]) -> Result<GaussianCloud> {
    if bytes.len() < HEADER_LEN || bytes[..4] != CLOUD_MAGIC {
        return Err(Error::BadMagic);
    }
    let count = u64::from_le_bytes(bytes[4..12].try_into().unwrap()) as usize;
    let degree = u32::from_le_bytes(bytes[12..16].try_into().unwrap());
    if degree > sh::MAX_SH_DEGREE {
        return Err(Error::Unsupported(format!("SH degree {degree}")));
    }
    let per = floats_per_gaussian(degree);
    let body = &bytes[HEADER_LEN..];
    if Some(body.len()) != count.checked_mul(4 * per) {
        return Err(Error::Parse {
            location: "cloud body".into(),
            message: format!("{} bytes for {count} Gaussians of degree {degree}", body.len()),
        });
    }
    let floats: Vec<f64> = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    let mut gaussians = Vec::with_capacity(count);
    for (index, f) in floats.chunks_exact(per).enumerate() {
        let mut rotation = [f[6], f[7], f[8], f[9]];
        let n = rotation.iter().map(|q| q * q).sum::<f64>().sqrt();
        if !((n - 1.0).abs() <= QUAT_TOLERANCE) {
            return Err(Error::InvalidGaussian {
                index,
                message: format!("quaternion norm {n} outside tolerance"),
            });
        }
        if (n - 1.0).abs() > 1e-6 {
            rotation.iter_mut().for_each(|q| *q /= n);
        }
        gaussians.push(Gaussian3D {
            position: Vector3::new(f[0], f[1], f[2]),
            scale: Vector3::new(f[3], f[4], f[5]),
            rotation,
            opacity: f[10],
            sh: f[11..].to_vec(),
        });
    }
    GaussianCloud::from_gaussians(degree, gaussians)
}

pub fn read_cloud(path: impl AsRef<Path>) -> Result<GaussianCloud> {
    decode_cloud(&read_bytes(path.as_ref())?)
}

pub fn write_cloud(cloud: &GaussianCloud, path: impl AsRef<Path>) -> Result<()> {
    write_bytes(path.as_ref(), &encode_cloud(cloud)?)
}
