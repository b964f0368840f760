//! Deterministic synthetic scenes for tests and benches.
//!
//! [`AnalyticScene`] is a band-limited sinusoid mixture evaluated at
//! arbitrary real coordinates, so a stereo pair with known disparity can be
//! produced without resampling error: the right view is the same function
//! sampled at `x + d`. All generators are seeded and reproducible.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::distill::StereoSample;
use crate::grid::{FloatMap, Image};

const TERMS: usize = 6;

struct Term {
    amp: f64,
    fx: f64,
    fy: f64,
    px: f64,
    py: f64,
}

/// Smooth analytic image function with values in `[0.05, 0.95]`.
pub struct AnalyticScene {
    channels: usize,
    terms: Vec<Vec<Term>>,
}

impl AnalyticScene {
    pub fn new(channels: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let terms = (0..channels)
            .map(|_| {
                (0..TERMS)
                    .map(|_| Term {
                        amp: rng.gen_range(0.3..1.0) * 0.45 / TERMS as f64,
                        fx: rng.gen_range(0.08..0.9),
                        fy: rng.gen_range(0.08..0.9),
                        px: rng.gen_range(0.0..std::f64::consts::TAU),
                        py: rng.gen_range(0.0..std::f64::consts::TAU),
                    })
                    .collect()
            })
            .collect();
        AnalyticScene { channels, terms }
    }

    pub fn eval(&self, x: f64, y: f64, c: usize) -> f32 {
        let mut v = 0.5;
        for t in &self.terms[c] {
            v += t.amp * (t.fx * x + t.px).sin() * (t.fy * y + t.py).sin();
        }
        v as f32
    }

    /// Samples the scene on an `h x w` grid shifted right by `x_offset`.
    pub fn image(&self, height: usize, width: usize, x_offset: f64) -> Image {
        Image::from_fn(height, width, self.channels, |y, x, c| {
            self.eval(x as f64 + x_offset, y as f64, c)
        })
        .expect("analytic scene stays within [0, 1]")
    }
}

/// Textured image with smooth spatial structure.
pub fn smooth_image(height: usize, width: usize, channels: usize, seed: u64) -> Image {
    AnalyticScene::new(channels, seed).image(height, width, 0.0)
}

/// Independent uniform noise image (no spatial structure).
pub fn random_image(height: usize, width: usize, channels: usize, seed: u64) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Image::from_fn(height, width, channels, |_, _, _| rng.gen_range(0.0..1.0))
        .expect("uniform values are valid")
}

/// Uniform random map in `[lo, hi)`.
pub fn random_map(height: usize, width: usize, lo: f32, hi: f32, seed: u64) -> FloatMap {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    FloatMap::from_fn(height, width, |_, _| rng.gen_range(lo..hi))
        .expect("uniform values are valid")
}

/// Adds uniform noise in `[-amplitude, amplitude]` to a map.
pub fn perturbed_map(map: &FloatMap, amplitude: f32, seed: u64) -> FloatMap {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    FloatMap::new(
        map.height(),
        map.width(),
        map.data()
            .iter()
            .map(|&v| v + rng.gen_range(-amplitude..amplitude))
            .collect(),
    )
    .expect("perturbation keeps values finite")
}

/// Geometrically consistent stereo pair with constant disparity:
/// `I_R(x) = I_L(x + d)` exactly (both views sample one analytic scene).
pub fn constant_disparity_sample(
    height: usize,
    width: usize,
    disparity: f32,
    seed: u64,
) -> StereoSample {
    let scene = AnalyticScene::new(3, seed);
    let left = scene.image(height, width, 0.0);
    let right = scene.image(height, width, disparity as f64);
    let d = FloatMap::constant(height, width, disparity).unwrap();
    StereoSample::new(left, right, d.clone(), d).expect("fixture shapes agree")
}
