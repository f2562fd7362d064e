//! Sampled images, bilinear interpolation with zero padding, warping by
//! group elements and the discrete L² geometry used by the metric.
//!
//! Samples are stored channel-major, then row-major: the sample of channel
//! `c` at pixel `(x, y)` lives at `c * width * height + y * width + x`.
//! Pixel cells have unit area, so inner products are plain sums.

pub mod io;

use crate::error::{Error, Result};
use crate::groups::{Params, TransformGroup};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct Image<T> {
    width: usize,
    height: usize,
    channels: usize,
    samples: Vec<T>,
}

impl<T: Real> Image<T> {
    /// Builds an image from channel-major, row-major samples.
    pub fn new(width: usize, height: usize, channels: usize, samples: Vec<T>) -> Result<Self> {
        if width == 0 || height == 0 || channels == 0 {
            return Err(Error::DimensionMismatch {
                expected: "non-empty image".into(),
                found: format!("{channels}x{width}x{height}"),
            });
        }
        if samples.len() != width * height * channels {
            return Err(Error::DimensionMismatch {
                expected: format!("{} samples", width * height * channels),
                found: format!("{} samples", samples.len()),
            });
        }
        if let Some(pos) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::format("image", format!("non-finite sample at index {pos}")));
        }
        Ok(Self {
            width,
            height,
            channels,
            samples,
        })
    }

    /// Single-channel image from rows (`rows[y][x]`).
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != width) {
            return Err(Error::DimensionMismatch {
                expected: format!("rows of length {width}"),
                found: "ragged rows".into(),
            });
        }
        Self::new(width, height, 1, rows.concat())
    }

    pub fn zeros(width: usize, height: usize, channels: usize) -> Self {
        assert!(width > 0 && height > 0 && channels > 0, "empty image");
        Self {
            width,
            height,
            channels,
            samples: vec![T::zero(); width * height * channels],
        }
    }

    /// Single-channel image whose sample at `(x, y)` is `f(x, y)`.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut samples = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                samples.push(f(x, y));
            }
        }
        Self::new(width, height, 1, samples).expect("from_fn produced non-finite samples")
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<T> {
        self.samples
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }

    pub fn get(&self, channel: usize, x: usize, y: usize) -> T {
        self.samples[self.index(channel, x, y)]
    }

    fn index(&self, channel: usize, x: usize, y: usize) -> usize {
        channel * self.width * self.height + y * self.width + x
    }

    fn plane(&self, channel: usize) -> &[T] {
        let n = self.width * self.height;
        &self.samples[channel * n..(channel + 1) * n]
    }

    /// Center of the transformation frame, in pixel coordinates.
    pub fn center(&self) -> (T, T) {
        let half = T::lit(0.5);
        (
            T::from_usize_lossy(self.width - 1) * half,
            T::from_usize_lossy(self.height - 1) * half,
        )
    }

    /// Bilinear interpolation of channel 0 at a real pixel position.
    pub fn interpolate(&self, x: T, y: T) -> T {
        self.interpolate_channel(0, x, y)
    }

    /// Bilinear interpolation of one channel; samples outside the grid read
    /// as zero.
    pub fn interpolate_channel(&self, channel: usize, x: T, y: T) -> T {
        bilinear(self.plane(channel), self.width, self.height, x, y)
    }

    pub fn l2_norm(&self) -> T {
        self.samples.iter().map(|&s| s * s).sum::<T>().sqrt()
    }

    pub fn inner_product(&self, other: &Self) -> Result<T> {
        if !self.same_shape(other) {
            return Err(Error::DimensionMismatch {
                expected: self.shape_string(),
                found: other.shape_string(),
            });
        }
        Ok(self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(&a, &b)| a * b)
            .sum())
    }

    pub(crate) fn shape_string(&self) -> String {
        format!("{}x{}x{}", self.channels, self.width, self.height)
    }

    /// `(self - other) * factor`, sample-wise. Shapes must agree.
    pub(crate) fn scaled_difference(&self, other: &Self, factor: T) -> Self {
        debug_assert!(self.same_shape(other));
        Self {
            width: self.width,
            height: self.height,
            channels: self.channels,
            samples: self
                .samples
                .iter()
                .zip(&other.samples)
                .map(|(&a, &b)| (a - b) * factor)
                .collect(),
        }
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        let samples: Vec<T> = self.samples.iter().map(|&s| f(s)).collect();
        Self::new(self.width, self.height, self.channels, samples).expect("map produced non-finite samples")
    }

    /// Resamples the image by `params`: output `(x, y)` reads the input at
    /// `τ⁻¹(x, y)` in the centered frame. The identity is returned unchanged.
    pub fn warp(&self, group: &TransformGroup<T>, params: &Params<T>) -> Result<Self> {
        let sim = group.similarity(params)?;
        if sim.is_identity() {
            return Ok(self.clone());
        }
        let inv = sim.inverse();
        let (cx, cy) = self.center();
        // τ⁻¹ in pixel coordinates: source = origin + x·ex + y·ey.
        let at = |u: T, v: T| {
            let (su, sv) = inv.apply((u - cx, v - cy));
            (su + cx, sv + cy)
        };
        let origin = at(T::zero(), T::zero());
        let ex = {
            let p = at(T::one(), T::zero());
            (p.0 - origin.0, p.1 - origin.1)
        };
        let ey = {
            let p = at(T::zero(), T::one());
            (p.0 - origin.0, p.1 - origin.1)
        };
        let n = self.width * self.height;
        let mut samples = vec![T::zero(); n * self.channels];
        for y in 0..self.height {
            let fy = T::from_usize_lossy(y);
            let (row_x, row_y) = (origin.0 + fy * ey.0, origin.1 + fy * ey.1);
            for x in 0..self.width {
                let fx = T::from_usize_lossy(x);
                let (sx, sy) = (row_x + fx * ex.0, row_y + fx * ex.1);
                for c in 0..self.channels {
                    samples[c * n + y * self.width + x] =
                        bilinear(self.plane(c), self.width, self.height, sx, sy);
                }
            }
        }
        Ok(Self {
            width: self.width,
            height: self.height,
            channels: self.channels,
            samples,
        })
    }
}

fn bilinear<T: Real>(plane: &[T], width: usize, height: usize, x: T, y: T) -> T {
    let one = T::one();
    // Everything at or beyond one pixel outside the grid reads zero padding.
    if !(x > -one && y > -one && x < T::from_usize_lossy(width) && y < T::from_usize_lossy(height)) {
        return T::zero();
    }
    // x + 1 > 0, so truncation is floor.
    let ix = (x + one).to_i64().unwrap_or(0) - 1;
    let iy = (y + one).to_i64().unwrap_or(0) - 1;
    let fx = x - T::from_i32_lossy(ix as i32);
    let fy = y - T::from_i32_lossy(iy as i32);
    let at = |i: i64, j: i64| -> T {
        if i < 0 || j < 0 || i >= width as i64 || j >= height as i64 {
            T::zero()
        } else {
            plane[j as usize * width + i as usize]
        }
    };
    (one - fx) * (one - fy) * at(ix, iy)
        + fx * (one - fy) * at(ix + 1, iy)
        + (one - fx) * fy * at(ix, iy + 1)
        + fx * fy * at(ix + 1, iy + 1)
}
