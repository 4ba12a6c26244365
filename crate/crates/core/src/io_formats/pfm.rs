use std::path::Path;

use super::{read_bytes, write_bytes};
use crate::error::{Error, Result};
use crate::image::FieldImage;

pub fn encode_pfm(img: &FieldImage) -> Result<Vec<u8>> {
    let (h, w, c) = img.shape();
    if c == 0 {
        return Err(Error::InvalidArgument("cannot write a zero-channel PFM".into()));
    }
    let header = match c {
        1 => format!("Pf\n{w} {h}\n-1.0\n"),
        3 => format!("PF\n{w} {h}\n-1.0\n"),
        _ => format!("PM\n{w} {h} {c}\n-1.0\n"),
    };
    let mut out = Vec::with_capacity(header.len() + 4 * img.data().len());
    out.extend_from_slice(header.as_bytes());
    for v in (0..h).rev() {
        for u in 0..w {
            for (ch, &x) in img.pixel(u, v).iter().enumerate() {
                let f = x as f32;
                if !f.is_finite() {
                    return Err(Error::NonFinite(img.index(u, v, ch)));
                }
                out.extend_from_slice(&f.to_le_bytes());
            }
        }
    }
    Ok(out)
}

fn next_line<'a>(bytes: &'a [u8], pos: &mut usize) -> Result<&'a str> {
    let rest = &bytes[*pos..];
    let end = rest
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::MalformedHeader("PFM header ends early".into()))?;
    *pos += end + 1;
    std::str::from_utf8(&rest[..end])
        .map(str::trim)
        .map_err(|_| Error::MalformedHeader("PFM header is not text".into()))
}

pub fn decode_pfm(bytes: &[u8]) -> Result<FieldImage> {
    let mut pos = 0;
    let magic = next_line(bytes, &mut pos)?;
    let fixed_channels = match magic {
        "Pf" => Some(1),
        "PF" => Some(3),
        "PM" => None,
        other => {
            return Err(Error::MalformedHeader(format!("unknown PFM magic {other:?}")));
        }
    };
    let dims: Vec<usize> = next_line(bytes, &mut pos)?
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::MalformedHeader("PFM size line".into()))?;
    let (w, h, c) = match (fixed_channels, dims.as_slice()) {
        (Some(c), [w, h]) => (*w, *h, c),
        (None, [w, h, c]) if *c > 0 => (*w, *h, *c),
        _ => return Err(Error::MalformedHeader("PFM size line".into())),
    };
    let scale: f32 = next_line(bytes, &mut pos)?
        .parse()
        .map_err(|_| Error::MalformedHeader("PFM scale line".into()))?;
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::MalformedHeader("PFM scale must be nonzero".into()));
    }
    let little = scale < 0.0;
    let n = w * h * c;
    let body = &bytes[pos..];
    if body.len() != 4 * n {
        return Err(Error::Parse {
            location: "PFM body".into(),
            message: format!("expected {} bytes, found {}", 4 * n, body.len()),
        });
    }
    let mut data = vec![0.0f64; n];
    for (i, chunk) in body.chunks_exact(4).enumerate() {
        let b = [chunk[0], chunk[1], chunk[2], chunk[3]];
        let x = if little {
            f32::from_le_bytes(b)
        } else {
            f32::from_be_bytes(b)
        };
        // file rows run bottom to top
        let file_row = i / (w * c);
        let rem = i % (w * c);
        let v = h - 1 - file_row;
        data[v * w * c + rem] = x as f64;
    }
    FieldImage::new(h, w, c, data)
}

pub fn read_pfm(path: impl AsRef<Path>) -> Result<FieldImage> {
    decode_pfm(&read_bytes(path.as_ref())?)
}

pub fn write_pfm(img: &FieldImage, path: impl AsRef<Path>) -> Result<()> {
    write_bytes(path.as_ref(), &encode_pfm(img)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truncated_header() {
        let err = decode_pfm(b"PF\n4 ").unwrap_err();
        assert!(err.to_string().contains("malformed header"), "{err}");
        assert!(decode_pfm(b"P7\n1 1\n-1.0\n\0\0\0\0").is_err());
    }

    #[test]
    fn orientation_and_big_endian() {
        // 1x2 grey, big endian: file rows bottom first.
        let mut bytes = b"Pf\n1 2\n1.0\n".to_vec();
        bytes.extend_from_slice(&2.0f32.to_be_bytes());
        bytes.extend_from_slice(&7.0f32.to_be_bytes());
        let img = decode_pfm(&bytes).unwrap();
        assert_eq!(img.get(0, 0, 0), 7.0);
        assert_eq!(img.get(0, 1, 0), 2.0);
    }

    #[test]
    fn multichannel_extension_round_trip() {
        let img = FieldImage::from_fn(3, 2, 5, |u, v, p| {
            for (c, x) in p.iter_mut().enumerate() {
                *x = (u + 10 * v + 100 * c) as f64;
            }
        });
        let bytes = encode_pfm(&img).unwrap();
        assert!(bytes.starts_with(b"PM\n2 3 5\n-1.0\n"));
        assert_eq!(decode_pfm(&bytes).unwrap(), img);
    }

    #[test]
    fn non_finite_rejected_on_write() {
        let img = FieldImage::filled(1, 1, 1, 1e300);
        assert!(matches!(encode_pfm(&img), Err(Error::NonFinite(0))));
    }

    #[test]
    fn short_body_rejected() {
        let mut bytes = b"Pf\n2 1\n-1.0\n".to_vec();
        bytes.extend_from_slice(&1.0f32.to_le_bytes());
        assert!(decode_pfm(&bytes).is_err());
    }
}
