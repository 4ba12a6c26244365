//! Equirect <-> Yin/Yang resampling.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::{EdgeMode, FieldImage};
use crate::sphere_geom::{
    yang_transform, yin_boundary_distance, yin_contains, Direction, GridFamily, GridSpec,
};

/// Smallest equirect height accepted by [`decompose_yinyang`].
pub const MIN_EQUIRECT_HEIGHT: usize = 2;

fn equirect_grid_of(img: &FieldImage) -> Result<GridSpec> {
    if img.channels() == 0 {
        return Err(Error::InvalidArgument("image has no channels".into()));
    }
    if img.height() < MIN_EQUIRECT_HEIGHT || img.width() != 2 * img.height() {
        return Err(Error::InvalidGrid(format!(
            "equirect input must be 2:1 and at least {}x{}, got {}x{}",
            MIN_EQUIRECT_HEIGHT,
            2 * MIN_EQUIRECT_HEIGHT,
            img.height(),
            img.width()
        )));
    }
    GridSpec::equirect(img.height())
}

/// Resamples `img` onto `target` by looking up every target pixel direction
/// in the equirect source.
pub fn resample_equirect(img: &FieldImage, target: GridSpec, nearest: bool) -> Result<FieldImage> {
    let src = equirect_grid_of(img)?;
    let c = img.channels();
    let mut out = FieldImage::zeros(target.height, target.width, c);
    let row_len = target.width * c;
    out.data_mut()
        .par_chunks_mut(row_len)
        .enumerate()
        .for_each(|(v, row)| {
            for u in 0..target.width {
                let d = target.direction_at(u as f64 + 0.5, v as f64 + 0.5);
                let p = src.direction_to_pixel(&d);
                let px = &mut row[u * c..(u + 1) * c];
                if nearest {
                    img.sample_nearest(p.u, p.v, EdgeMode::WrapHorizontal, px);
                } else {
                    img.sample_bilinear(p.u, p.v, EdgeMode::WrapHorizontal, px);
                }
            }
        });
    Ok(out)
}

/// Splits an equirect image into Yin and Yang images of height `out_height`
/// (width `3 * out_height`).
pub fn decompose_yinyang(img: &FieldImage, out_height: usize) -> Result<(FieldImage, FieldImage)> {
    equirect_grid_of(img)?;
    if out_height == 0 {
        return Err(Error::InvalidArgument("output height must be positive".into()));
    }
    let yin = resample_equirect(img, GridSpec::yin(out_height)?, false)?;
    let yang = resample_equirect(img, GridSpec::yang(out_height)?, false)?;
    Ok((yin, yang))
}

/// Same as [`decompose_yinyang`] with nearest sampling, for label maps.
pub fn decompose_labels(img: &FieldImage, out_height: usize) -> Result<(FieldImage, FieldImage)> {
    equirect_grid_of(img)?;
    let yin = resample_equirect(img, GridSpec::yin(out_height)?, true)?;
    let yang = resample_equirect(img, GridSpec::yang(out_height)?, true)?;
    Ok((yin, yang))
}

/// Blend weights `(w_yin, w_yang)` at world direction `d`. Each is the
/// angular distance to that patch's boundary, normalized to sum to one; a
/// direction covered by one patch only gets weight exactly 1 there.
pub fn blend_weights(d: &Direction) -> Result<(f64, f64)> {
    let s_yin = d.to_spherical();
    let s_yang = yang_transform(d).to_spherical();
    match (yin_contains(s_yin), yin_contains(s_yang)) {
        (true, false) => Ok((1.0, 0.0)),
        (false, true) => Ok((0.0, 1.0)),
        (true, true) => {
            let a = yin_boundary_distance(s_yin);
            let b = yin_boundary_distance(s_yang);
            let sum = a + b;
            if sum > 0.0 {
                Ok((a / sum, b / sum))
            } else {
                // corner shared by both boundaries
                Ok((0.5, 0.5))
            }
        }
        (false, false) => Err(Error::Internal(format!(
            "direction {:?} covered by neither Yin nor Yang",
            d.as_vector()
        ))),
    }
}

fn check_pair(yin: &FieldImage, yang: &FieldImage) -> Result<usize> {
    yin.ensure_same_shape(yang)?;
    if yin.width() != 3 * yin.height() || yin.height() == 0 {
        return Err(Error::InvalidGrid(format!(
            "Yin/Yang images must be H x 3H, got {}x{}",
            yin.height(),
            yin.width()
        )));
    }
    Ok(yin.height())
}

/// Blended value of the Yin/Yang pair along world direction `d`.
pub fn recompose_direction(
    yin: &FieldImage,
    yang: &FieldImage,
    d: &Direction,
    out: &mut [f64],
) -> Result<()> {
    let h = check_pair(yin, yang)?;
    let mut scratch = vec![0.0; 2 * yin.channels()];
    recompose_unchecked(yin, yang, GridSpec::yin(h)?, GridSpec::yang(h)?, d, out, &mut scratch)
}

fn recompose_unchecked(
    yin: &FieldImage,
    yang: &FieldImage,
    yin_grid: GridSpec,
    yang_grid: GridSpec,
    d: &Direction,
    out: &mut [f64],
    scratch: &mut [f64],
) -> Result<()> {
    let c = yin.channels();
    let (wa, wb) = blend_weights(d)?;
    let (sa, sb) = scratch.split_at_mut(c);
    if wa > 0.0 {
        let p = yin_grid.direction_to_pixel(d);
        yin.sample_bilinear(p.u, p.v, EdgeMode::Clamp, sa);
    }
    if wb > 0.0 {
        let p = yang_grid.direction_to_pixel(d);
        yang.sample_bilinear(p.u, p.v, EdgeMode::Clamp, sb);
    }
    for ch in 0..c {
        out[ch] = if wb == 0.0 {
            sa[ch]
        } else if wa == 0.0 {
            sb[ch]
        } else {
            sa[ch] + (sb[ch] - sa[ch]) * wb
        };
    }
    Ok(())
}

/// Recombines Yin and Yang rasters onto `out` (normally an equirect grid).
pub fn recompose_yinyang(yin: &FieldImage, yang: &FieldImage, out: GridSpec) -> Result<FieldImage> {
    let h = check_pair(yin, yang)?;
    if matches!(out.family, GridFamily::CubeFace(_)) {
        return Err(Error::InvalidGrid("cannot recompose onto a cube face".into()));
    }
    let (yin_grid, yang_grid) = (GridSpec::yin(h)?, GridSpec::yang(h)?);
    let c = yin.channels();
    let mut img = FieldImage::zeros(out.height, out.width, c);
    img.data_mut()
        .par_chunks_mut(out.width * c)
        .enumerate()
        .try_for_each(|(v, row)| {
            let mut scratch = vec![0.0; 2 * c];
            for u in 0..out.width {
                let d = out.direction_at(u as f64 + 0.5, v as f64 + 0.5);
                let px = &mut row[u * c..(u + 1) * c];
                recompose_unchecked(yin, yang, yin_grid, yang_grid, &d, px, &mut scratch)?;
            }
            Ok::<(), Error>(())
        })?;
    Ok(img)
}
