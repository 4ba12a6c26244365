use crate::error::{Error, Result};

/// Dense `height x width x channels` raster, row-major with interleaved
/// channels. Used for images, feature maps, masks, depth and alpha maps.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldImage {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f64>,
}

/// How bilinear sampling treats the left and right edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeMode {
    Clamp,
    /// Horizontal wrap (equirect azimuth); rows still clamp.
    WrapHorizontal,
}

impl FieldImage {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != height * width * channels {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {height}x{width}x{channels} image",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(FieldImage {
            height,
            width,
            channels,
            data,
        })
    }

    pub fn zeros(height: usize, width: usize, channels: usize) -> Self {
        Self::filled(height, width, channels, 0.0)
    }

    pub fn filled(height: usize, width: usize, channels: usize, value: f64) -> Self {
        FieldImage {
            height,
            width,
            channels,
            data: vec![value; height * width * channels],
        }
    }

    /// Builds an image by evaluating `f(u, v, out)` for each pixel.
    pub fn from_fn(
        height: usize,
        width: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, &mut [f64]),
    ) -> Self {
        let mut img = Self::zeros(height, width, channels);
        for v in 0..height {
            for u in 0..width {
                f(u, v, img.pixel_mut(u, v));
            }
        }
        img
    }

    pub fn height(&self) -> usize {
        self.height
    }
    pub fn width(&self) -> usize {
        self.width
    }
    pub fn channels(&self) -> usize {
        self.channels
    }
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.height, self.width, self.channels)
    }
    pub fn data(&self) -> &[f64] {
        &self.data
    }
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }
    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn index(&self, u: usize, v: usize, c: usize) -> usize {
        (v * self.width + u) * self.channels + c
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize, c: usize) -> f64 {
        self.data[self.index(u, v, c)]
    }

    #[inline]
    pub fn set(&mut self, u: usize, v: usize, c: usize, value: f64) {
        let i = self.index(u, v, c);
        self.data[i] = value;
    }

    #[inline]
    pub fn pixel(&self, u: usize, v: usize) -> &[f64] {
        let i = self.index(u, v, 0);
        &self.data[i..i + self.channels]
    }

    #[inline]
    pub fn pixel_mut(&mut self, u: usize, v: usize) -> &mut [f64] {
        let i = self.index(u, v, 0);
        let c = self.channels;
        &mut self.data[i..i + c]
    }

    pub fn same_shape(&self, other: &FieldImage) -> bool {
        self.shape() == other.shape()
    }

    pub fn ensure_same_shape(&self, other: &FieldImage) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::ShapeMismatch(format!(
                "{:?} vs {:?}",
                self.shape(),
                other.shape()
            )))
        }
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.data.iter().position(|x| !x.is_finite()) {
            Some(i) => Err(Error::NonFinite(i)),
            None => Ok(()),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> FieldImage {
        FieldImage {
            data: self.data.iter().map(|&x| f(x)).collect(),
            ..*self
        }
    }

    /// Single-channel luminance (0.299 R + 0.587 G + 0.114 B); one-channel
    /// images are returned unchanged, other channel counts are averaged.
    pub fn to_gray(&self) -> FieldImage {
        let c = self.channels;
        let data = self
            .data
            .chunks_exact(c)
            .map(|p| match c {
                1 => p[0],
                3 | 4 => 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2],
                _ => p.iter().sum::<f64>() / c as f64,
            })
            .collect();
        FieldImage {
            height: self.height,
            width: self.width,
            channels: 1,
            data,
        }
    }

    /// Bilinear sample at continuous coordinates `(u, v)`; pixel centres sit
    /// at half-integers. Interpolation uses nested lerps so constant regions
    /// are reproduced exactly.
    pub fn sample_bilinear(&self, u: f64, v: f64, edge: EdgeMode, out: &mut [f64]) {
        let (w, h) = (self.width as isize, self.height as isize);
        let x = u - 0.5;
        let y = v - 0.5;
        let x0f = x.floor();
        let y0f = y.floor();
        let tx = x - x0f;
        let ty = y - y0f;
        let (x0, y0) = (x0f as isize, y0f as isize);
        let fix_x = |i: isize| -> usize {
            match edge {
                EdgeMode::Clamp => i.clamp(0, w - 1) as usize,
                EdgeMode::WrapHorizontal => i.rem_euclid(w) as usize,
            }
        };
        let fix_y = |i: isize| -> usize { i.clamp(0, h - 1) as usize };
        let (xa, xb) = (fix_x(x0), fix_x(x0 + 1));
        let (ya, yb) = (fix_y(y0), fix_y(y0 + 1));
        for (c, o) in out.iter_mut().enumerate().take(self.channels) {
            let p00 = self.get(xa, ya, c);
            let p10 = self.get(xb, ya, c);
            let p01 = self.get(xa, yb, c);
            let p11 = self.get(xb, yb, c);
            let top = p00 + (p10 - p00) * tx;
            let bot = p01 + (p11 - p01) * tx;
            *o = top + (bot - top) * ty;
        }
    }

    /// Nearest-pixel sample, for label maps.
    pub fn sample_nearest(&self, u: f64, v: f64, edge: EdgeMode, out: &mut [f64]) {
        let (w, h) = (self.width as isize, self.height as isize);
        let x = u.floor() as isize;
        let y = (v.floor() as isize).clamp(0, h - 1) as usize;
        let x = match edge {
            EdgeMode::Clamp => x.clamp(0, w - 1),
            EdgeMode::WrapHorizontal => x.rem_euclid(w),
        } as usize;
        out[..self.channels].copy_from_slice(self.pixel(x, y));
    }

    /// Extracts one channel as a single-channel image.
    pub fn channel(&self, c: usize) -> FieldImage {
        let data = self
            .data
            .chunks_exact(self.channels)
            .map(|p| p[c])
            .collect();
        FieldImage {
            height: self.height,
            width: self.width,
            channels: 1,
            data,
        }
    }
}
