use std::io::Cursor;
use std::path::Path;

use super::{read_bytes, write_bytes};
use crate::error::{Error, Result};
use crate::image::FieldImage;

fn png_err(e: impl std::fmt::Display) -> Error {
    Error::Png(e.to_string())
}

/// Decodes an 8-bit (or expanded / stripped to 8-bit) grey, RGB or RGBA PNG
/// into values `byte / 255`.
pub fn decode_png(bytes: &[u8]) -> Result<FieldImage> {
    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::EXPAND | png::Transformations::STRIP_16);
    let mut reader = decoder.read_info().map_err(png_err)?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::Png("image too large".into()))?;
    let mut buf = vec![0u8; size];
    let info = reader.next_frame(&mut buf).map_err(png_err)?;
    let channels = match info.color_type {
        png::ColorType::Grayscale => 1,
        png::ColorType::Rgb => 3,
        png::ColorType::Rgba => 4,
        other => {
            return Err(Error::Unsupported(format!("PNG colour type {other:?}")));
        }
    };
    let (w, h) = (info.width as usize, info.height as usize);
    let data = buf[..info.buffer_size()]
        .chunks_exact(info.line_size)
        .flat_map(|line| line[..w * channels].iter())
        .map(|&b| b as f64 / 255.0)
        .collect();
    FieldImage::new(h, w, channels, data)
}

/// Encodes 1, 3 or 4 channels as 8-bit PNG; values are clamped to `[0, 1]`.
pub fn encode_png(img: &FieldImage) -> Result<Vec<u8>> {
    let color = match img.channels() {
        1 => png::ColorType::Grayscale,
        3 => png::ColorType::Rgb,
        4 => png::ColorType::Rgba,
        c => {
            return Err(Error::ShapeMismatch(format!("PNG cannot store {c} channels")));
        }
    };
    img.check_finite()?;
    let bytes: Vec<u8> = img
        .data()
        .iter()
        .map(|&x| (x.clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect();
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, img.width() as u32, img.height() as u32);
        enc.set_color(color);
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc.write_header().map_err(png_err)?;
        writer.write_image_data(&bytes).map_err(png_err)?;
    }
    Ok(out)
}

pub fn read_png(path: impl AsRef<Path>) -> Result<FieldImage> {
    decode_png(&read_bytes(path.as_ref())?)
}

pub fn write_png(img: &FieldImage, path: impl AsRef<Path>) -> Result<()> {
    write_bytes(path.as_ref(), &encode_png(img)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn byte_values_scale_to_unit_range() {
        let img = FieldImage::filled(2, 3, 3, 128.0 / 255.0);
        let back = decode_png(&encode_png(&img).unwrap()).unwrap();
        assert_eq!(back.shape(), (2, 3, 3));
        assert!(back.data().iter().all(|&x| (x - 128.0 / 255.0).abs() < 1e-9));
    }

    #[test]
    fn grey_and_rgba() {
        for c in [1, 4] {
            let img = FieldImage::from_fn(3, 5, c, |u, v, p| {
                p.iter_mut().for_each(|x| *x = ((u + v) * 20) as f64 / 255.0)
            });
            let back = decode_png(&encode_png(&img).unwrap()).unwrap();
            for (a, b) in img.data().iter().zip(back.data()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn bad_channel_count() {
        assert!(encode_png(&FieldImage::zeros(2, 2, 2)).is_err());
    }
}
