//! Plane-major feature maps and a small fixed (seeded) convolutional
//! extractor used by the perceptual and deep-correlation losses.
//!
//! The extractor is not trained; it is a deterministic random projection
//! with enough structure (stride-2 convolutions + ELU) to expose
//! multi-scale image statistics. Two runs with the same seed produce
//! bitwise-identical features.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::Image;
use crate::math::elu;

/// Dense feature grid; one contiguous `height * width` plane per channel.
#[derive(Clone, Debug)]
pub struct FeatureMap {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f32>,
}

impl FeatureMap {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        if height == 0 || width == 0 || channels == 0 {
            return Err(Error::InvalidParameter(
                "feature map dimensions must be positive".into(),
            ));
        }
        if data.len() != height * width * channels {
            return Err(Error::ShapeMismatch(format!(
                "feature data length {} does not match {}x{}x{}",
                data.len(),
                height,
                width,
                channels
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("feature map contains non-finite values".into()));
        }
        Ok(FeatureMap {
            height,
            width,
            channels,
            data,
        })
    }

    /// Converts an interleaved image into a plane-major feature map.
    pub fn from_image(img: &Image) -> Self {
        let (h, w, c) = (img.height(), img.width(), img.channels());
        let mut data = vec![0.0f32; h * w * c];
        for ch in 0..c {
            for y in 0..h {
                for x in 0..w {
                    data[(ch * h + y) * w + x] = img.get(y, x, ch);
                }
            }
        }
        FeatureMap {
            height: h,
            width: w,
            channels: c,
            data,
        }
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

    pub fn get(&self, y: usize, x: usize, c: usize) -> f32 {
        debug_assert!(y < self.height && x < self.width && c < self.channels);
        self.data[(c * self.height + y) * self.width + x]
    }

    pub fn plane(&self, c: usize) -> &[f32] {
        let n = self.height * self.width;
        &self.data[c * n..(c + 1) * n]
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn same_shape(&self, other: &FeatureMap) -> bool {
        self.height == other.height
            && self.width == other.width
            && self.channels == other.channels
    }
}

struct ConvLayer {
    in_ch: usize,
    out_ch: usize,
    /// `[out][in][ky][kx]`, flattened; 3x3 kernels.
    weights: Vec<f32>,
}

impl ConvLayer {
    fn seeded(in_ch: usize, out_ch: usize, rng: &mut ChaCha8Rng) -> Self {
        let fan_in = (in_ch * 9) as f64;
        let bound = (1.0 / fan_in).sqrt();
        let weights = (0..out_ch * in_ch * 9)
            .map(|_| rng.gen_range(-bound..bound) as f32)
            .collect();
        ConvLayer {
            in_ch,
            out_ch,
            weights,
        }
    }

    /// 3x3 convolution, stride 2, zero padding 1, ELU activation.
    /// Output size is `ceil(n / 2)` per spatial dimension.
    fn apply(&self, input: &FeatureMap) -> FeatureMap {
        let (h, w) = (input.height, input.width);
        let (oh, ow) = (h.div_ceil(2), w.div_ceil(2));
        let mut data = vec![0.0f32; oh * ow * self.out_ch];
        for oc in 0..self.out_ch {
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut acc = 0.0f64;
                    for ic in 0..self.in_ch {
                        let plane = input.plane(ic);
                        for ky in 0..3usize {
                            let sy = (2 * oy + ky) as isize - 1;
                            if sy < 0 || sy >= h as isize {
                                continue;
                            }
                            for kx in 0..3usize {
                                let sx = (2 * ox + kx) as isize - 1;
                                if sx < 0 || sx >= w as isize {
                                    continue;
                                }
                                let wgt = self.weights
                                    [((oc * self.in_ch + ic) * 3 + ky) * 3 + kx];
                                acc += wgt as f64 * plane[sy as usize * w + sx as usize] as f64;
                            }
                        }
                    }
                    data[(oc * oh + oy) * ow + ox] = elu(acc) as f32;
                }
            }
        }
        FeatureMap {
            height: oh,
            width: ow,
            channels: self.out_ch,
            data,
        }
    }
}

/// Fixed three-level feature pyramid: stride-2 ELU convolutions with
/// seeded weights (8, 16, and 32 output channels). [`ConvExtractor::run`]
/// returns the per-level features coarsest-last.
pub struct ConvExtractor {
    layers: Vec<ConvLayer>,
}

pub const EXTRACTOR_CHANNELS: [usize; 3] = [8, 16, 32];

impl ConvExtractor {
    pub fn seeded(input_channels: usize, seed: u64) -> Result<Self> {
        if input_channels == 0 {
            return Err(Error::InvalidParameter(
                "extractor needs at least one input channel".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layers = Vec::new();
        let mut in_ch = input_channels;
        for &out_ch in &EXTRACTOR_CHANNELS {
            layers.push(ConvLayer::seeded(in_ch, out_ch, &mut rng));
            in_ch = out_ch;
        }
        Ok(ConvExtractor { layers })
    }

    pub fn input_channels(&self) -> usize {
        self.layers[0].in_ch
    }

    /// Feature pyramid for one image, one map per layer.
    pub fn run(&self, img: &Image) -> Result<Vec<FeatureMap>> {
        if img.channels() != self.input_channels() {
            return Err(Error::ShapeMismatch(format!(
                "extractor expects {} channels, image has {}",
                self.input_channels(),
                img.channels()
            )));
        }
        let mut current = FeatureMap::from_image(img);
        let mut levels = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            current = layer.apply(&current);
            levels.push(current.clone());
        }
        Ok(levels)
    }
}
