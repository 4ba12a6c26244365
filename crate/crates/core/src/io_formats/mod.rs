//! File formats: PNG and PFM rasters, pose lists, binary Gaussian clouds.
//!
//! * PFM follows the usual layout (`Pf` grey, `PF` RGB, rows bottom to top,
//!   little-endian with scale `-1.0`). Rasters with any other channel count
//!   use the `PM` extension whose size line carries a third field, the
//!   channel count; cost volumes are written this way.
//! * Pose files hold one camera per line: a name followed by twelve numbers,
//!   the world-to-camera rotation row-major then the camera centre.
//! * Cloud files start with the magic `YYGC`, a little-endian `u64` count
//!   and a `u32` SH degree, followed per Gaussian by position(3), scale(3),
//!   quaternion `wxyz`(4), opacity(1) and `3 (L+1)^2` SH coefficients, all
//!   little-endian `f32`.

mod cloud_file;
mod pfm;
mod png_io;
mod pose_file;

use std::path::Path;

pub use cloud_file::{decode_cloud, encode_cloud, read_cloud, write_cloud, CLOUD_MAGIC};
pub use pfm::{decode_pfm, encode_pfm, read_pfm, write_pfm};
pub use png_io::{decode_png, encode_png, read_png, write_png};
pub use pose_file::{format_poses, parse_poses, read_pose_file, write_pose_file, PoseRecord};

use crate::error::{Error, Result};
use crate::image::FieldImage;

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Reads a PNG or PFM file, detected from its leading bytes.
pub fn read_image(path: impl AsRef<Path>) -> Result<FieldImage> {
    let path = path.as_ref();
    let bytes = read_bytes(path)?;
    if bytes.starts_with(b"\x89PNG") {
        decode_png(&bytes)
    } else if bytes.first() == Some(&b'P') {
        decode_pfm(&bytes)
    } else {
        Err(Error::MalformedHeader(format!(
            "{}: neither PNG nor PFM",
            path.display()
        )))
    }
}

/// Writes PNG when the extension is `.png`, PFM otherwise.
pub fn write_image(img: &FieldImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let is_png = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("png"));
    if is_png {
        write_png(img, path)
    } else {
        write_pfm(img, path)
    }
}
