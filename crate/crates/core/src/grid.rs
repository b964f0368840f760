//! Dense grid containers shared by every module.
//!
//! All grids are row-major. [`Image`] interleaves channels per pixel
//! (`(y * width + x) * channels + c`); [`FloatMap`] and [`BitMask`] are single
//! channel. Values are `f32` because that is the interchange precision (PFM);
//! numerically sensitive reductions upcast to `f64` internally.

use crate::error::{Error, Result};

/// Multi-channel image with values in `[0, 1]`.
///
/// `channels` is 1 (grayscale) or 3 (RGB). Construction clamps to `[0, 1]`
/// and rejects non-finite values.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f32>,
}

impl Image {
    pub fn new(height: usize, width: usize, channels: usize, mut data: Vec<f32>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidParameter(format!(
                "image dimensions must be positive, got {height}x{width}"
            )));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidParameter(format!(
                "image must have 1 or 3 channels, got {channels}"
            )));
        }
        if data.len() != height * width * channels {
            return Err(Error::ShapeMismatch(format!(
                "image data length {} does not match {height}x{width}x{channels}",
                data.len()
            )));
        }
        for v in &mut data {
            if !v.is_finite() {
                return Err(Error::InvalidData(
                    "image values must be finite".to_string(),
                ));
            }
            *v = v.clamp(0.0, 1.0);
        }
        Ok(Image {
            height,
            width,
            channels,
            data,
        })
    }

    /// Builds an image by evaluating `f(y, x, c)`; the result is clamped.
    pub fn from_fn(
        height: usize,
        width: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f32,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(height * width * channels);
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    data.push(f(y, x, c));
                }
            }
        }
        Image::new(height, width, channels, data)
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

    #[inline]
    pub fn get(&self, y: usize, x: usize, c: usize) -> f32 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    /// One interleaved row (`width * channels` values).
    pub fn row(&self, y: usize) -> &[f32] {
        let stride = self.width * self.channels;
        &self.data[y * stride..(y + 1) * stride]
    }

    pub fn same_shape(&self, other: &Image) -> bool {
        self.height == other.height && self.width == other.width && self.channels == other.channels
    }
}

/// Single-channel floating grid (disparity, depth, confidence, plane, ...).
///
/// All values are finite; range semantics are up to the producing operation.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatMap {
    height: usize,
    width: usize,
    data: Vec<f32>,
}

impl FloatMap {
    pub fn new(height: usize, width: usize, data: Vec<f32>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidParameter(format!(
                "map dimensions must be positive, got {height}x{width}"
            )));
        }
        if data.len() != height * width {
            return Err(Error::ShapeMismatch(format!(
                "map data length {} does not match {height}x{width}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("map values must be finite".to_string()));
        }
        Ok(FloatMap {
            height,
            width,
            data,
        })
    }

    pub fn constant(height: usize, width: usize, value: f32) -> Result<Self> {
        FloatMap::new(height, width, vec![value; height * width])
    }

    pub fn from_fn(
        height: usize,
        width: usize,
        mut f: impl FnMut(usize, usize) -> f32,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(height * width);
        for y in 0..height {
            for x in 0..width {
                data.push(f(y, x));
            }
        }
        FloatMap::new(height, width, data)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize) -> f32 {
        self.data[y * self.width + x]
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn row(&self, y: usize) -> &[f32] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    pub fn max_value(&self) -> f32 {
        self.data.iter().copied().fold(f32::NEG_INFINITY, f32::max)
    }

    pub fn same_shape(&self, other: &FloatMap) -> bool {
        self.height == other.height && self.width == other.width
    }
}

/// Binary per-pixel mask; stored as `u8` with values 0 or 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitMask {
    height: usize,
    width: usize,
    data: Vec<u8>,
}

impl BitMask {
    pub fn new(height: usize, width: usize, data: Vec<u8>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidParameter(format!(
                "mask dimensions must be positive, got {height}x{width}"
            )));
        }
        if data.len() != height * width {
            return Err(Error::ShapeMismatch(format!(
                "mask data length {} does not match {height}x{width}",
                data.len()
            )));
        }
        if data.iter().any(|&v| v > 1) {
            return Err(Error::InvalidData(
                "mask values must be 0 or 1".to_string(),
            ));
        }
        Ok(BitMask {
            height,
            width,
            data,
        })
    }

    pub fn ones(height: usize, width: usize) -> Result<Self> {
        BitMask::new(height, width, vec![1; height * width])
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize) -> bool {
        self.data[y * self.width + x] == 1
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn count_ones(&self) -> usize {
        self.data.iter().filter(|&&v| v == 1).count()
    }

    /// Mask as a 0.0/1.0 float map (PFM interchange form).
    pub fn to_float_map(&self) -> FloatMap {
        FloatMap::new(
            self.height,
            self.width,
            self.data.iter().map(|&v| v as f32).collect(),
        )
        .expect("mask dimensions are valid")
    }

    /// Strict inverse of [`BitMask::to_float_map`]: values must be exactly 0.0 or 1.0.
    pub fn from_float_map(map: &FloatMap) -> Result<Self> {
        let data = map
            .data()
            .iter()
            .map(|&v| {
                if v == 0.0 {
                    Ok(0u8)
                } else if v == 1.0 {
                    Ok(1u8)
                } else {
                    Err(Error::InvalidData(format!(
                        "mask values must be exactly 0.0 or 1.0, got {v}"
                    )))
                }
            })
            .collect::<Result<Vec<u8>>>()?;
        BitMask::new(map.height(), map.width(), data)
    }

    pub fn same_shape(&self, other: &BitMask) -> bool {
        self.height == other.height && self.width == other.width
    }
}
