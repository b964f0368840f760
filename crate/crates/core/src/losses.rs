//! Loss terms for the two training stages and their weighted combinators.
//!
//! Every loss is a pure reduction returning `f64`. Reductions run in a
//! fixed row-major pairwise order, so results are bitwise reproducible
//! across runs and thread counts.

use crate::error::{Error, Result};
use crate::grid::{BitMask, FloatMap, Image};
use crate::math::pairwise_sum_by;

pub use crate::features::{ConvExtractor, FeatureMap, EXTRACTOR_CHANNELS};

pub const DEFAULT_ALPHA_P: f64 = 0.01;
pub const DEFAULT_ALPHA_DS: f64 = 0.0004;
pub const DEFAULT_ALPHA_DM: f64 = 0.25;
pub const DEFAULT_ALPHA_DC: f64 = 0.01;

/// Coefficients of the stage-1 and stage-2 weighted sums.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossWeights {
    pub alpha_p: f64,
    pub alpha_ds: f64,
    pub alpha_dm: f64,
    pub alpha_dc: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            alpha_p: DEFAULT_ALPHA_P,
            alpha_ds: DEFAULT_ALPHA_DS,
            alpha_dm: DEFAULT_ALPHA_DM,
            alpha_dc: DEFAULT_ALPHA_DC,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        let all = [
            ("alpha_p", self.alpha_p),
            ("alpha_ds", self.alpha_ds),
            ("alpha_dm", self.alpha_dm),
            ("alpha_dc", self.alpha_dc),
        ];
        for (name, v) in all {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be a non-negative finite number, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Masked photometric L1: mean of `|pred - target|` over valid pixels and
/// channels. An empty mask gives 0.
pub fn loss_l1(pred: &Image, target: &Image, valid: &BitMask) -> Result<f64> {
    if !pred.same_shape(target) {
        return Err(Error::ShapeMismatch(format!(
            "pred is {}x{}x{}, target is {}x{}x{}",
            pred.height(),
            pred.width(),
            pred.channels(),
            target.height(),
            target.width(),
            target.channels()
        )));
    }
    if valid.height() != pred.height() || valid.width() != pred.width() {
        return Err(Error::ShapeMismatch(format!(
            "mask is {}x{}, images are {}x{}",
            valid.height(),
            valid.width(),
            pred.height(),
            pred.width()
        )));
    }
    let count = valid.count_ones();
    if count == 0 {
        return Ok(0.0);
    }
    let (w, c) = (pred.width(), pred.channels());
    let total = pairwise_sum_by(0, pred.height() * w, &|p| {
        if !valid.get(p / w, p % w) {
            return 0.0;
        }
        let (y, x) = (p / w, p % w);
        let mut acc = 0.0;
        for ch in 0..c {
            acc += (pred.get(y, x, ch) as f64 - target.get(y, x, ch) as f64).abs();
        }
        acc
    });
    Ok(total / (count * c) as f64)
}

fn level_mean_abs_diff(a: &FeatureMap, b: &FeatureMap) -> f64 {
    let (da, db) = (a.data(), b.data());
    pairwise_sum_by(0, da.len(), &|i| (da[i] as f64 - db[i] as f64).abs()) / da.len() as f64
}

/// Perceptual loss: mean over pyramid levels of the mean absolute feature
/// difference at that level.
pub fn loss_perceptual(pred: &[FeatureMap], target: &[FeatureMap]) -> Result<f64> {
    if pred.len() != target.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} prediction levels vs {} target levels",
            pred.len(),
            target.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::InvalidParameter(
            "perceptual loss needs at least one feature level".into(),
        ));
    }
    let mut acc = 0.0;
    for (i, (a, b)) in pred.iter().zip(target).enumerate() {
        if !a.same_shape(b) {
            return Err(Error::ShapeMismatch(format!(
                "level {i}: {}x{}x{} vs {}x{}x{}",
                a.height(),
                a.width(),
                a.channels(),
                b.height(),
                b.width(),
                b.channels()
            )));
        }
        acc += level_mean_abs_diff(a, b);
    }
    Ok(acc / pred.len() as f64)
}

/// Edge-aware first-order smoothness on the mean-normalized disparity:
/// the x term averages `|∂x d̂| e^{-|∂x I|}` over all forward x
/// differences, the y term does the same vertically, and the loss is
/// their sum. Image gradients are channel-meaned.
pub fn loss_smoothness(disp: &FloatMap, guide: &Image) -> Result<f64> {
    if disp.height() != guide.height() || disp.width() != guide.width() {
        return Err(Error::ShapeMismatch(format!(
            "disparity is {}x{}, guide is {}x{}",
            disp.height(),
            disp.width(),
            guide.height(),
            guide.width()
        )));
    }
    let (h, w, c) = (guide.height(), guide.width(), guide.channels());
    let mean = pairwise_sum_by(0, h * w, &|p| disp.data()[p] as f64) / (h * w) as f64;
    let scale = if mean.abs() < 1e-12 { 1.0 } else { mean };
    let d = |y: usize, x: usize| disp.get(y, x) as f64 / scale;

    let grad_img = |y0: usize, x0: usize, y1: usize, x1: usize| -> f64 {
        let mut acc = 0.0;
        for ch in 0..c {
            acc += (guide.get(y1, x1, ch) as f64 - guide.get(y0, x0, ch) as f64).abs();
        }
        acc / c as f64
    };

    let mut total = 0.0;
    if w > 1 {
        let n = h * (w - 1);
        total += pairwise_sum_by(0, n, &|p| {
            let (y, x) = (p / (w - 1), p % (w - 1));
            (d(y, x + 1) - d(y, x)).abs() * (-grad_img(y, x, y, x + 1)).exp()
        }) / n as f64;
    }
    if h > 1 {
        let n = (h - 1) * w;
        total += pairwise_sum_by(0, n, &|p| {
            let (y, x) = (p / w, p % w);
            (d(y + 1, x) - d(y, x)).abs() * (-grad_img(y, x, y + 1, x)).exp()
        }) / n as f64;
    }
    Ok(total)
}

/// Cosine auto-correlation over a `k x k` neighborhood.
///
/// The output has `k*k` channels, one per offset, enumerated row-major
/// from `(-r, -r)` to `(r, r)` with `r = k/2`. Channel `o` at pixel `p`
/// is `<f(p), f(p+o)> / (|f(p)| * |f(p+o)| + 1e-8)`; offsets falling
/// outside the map give 0.
pub fn autocorr(feats: &FeatureMap, k: usize) -> Result<FeatureMap> {
    if k == 0 || k % 2 == 0 {
        return Err(Error::InvalidParameter(format!(
            "autocorrelation window must be odd and positive, got {k}"
        )));
    }
    let (h, w, c) = (feats.height(), feats.width(), feats.channels());
    let r = (k / 2) as isize;
    let norm = |y: usize, x: usize| -> f64 {
        let mut acc = 0.0;
        for ch in 0..c {
            let v = feats.get(y, x, ch) as f64;
            acc += v * v;
        }
        acc.sqrt()
    };
    let mut data = vec![0.0f32; h * w * k * k];
    let mut chan = 0usize;
    for dy in -r..=r {
        for dx in -r..=r {
            for y in 0..h {
                for x in 0..w {
                    let (qy, qx) = (y as isize + dy, x as isize + dx);
                    if qy < 0 || qy >= h as isize || qx < 0 || qx >= w as isize {
                        continue;
                    }
                    let (qy, qx) = (qy as usize, qx as usize);
                    let mut dot = 0.0;
                    for ch in 0..c {
                        dot += feats.get(y, x, ch) as f64 * feats.get(qy, qx, ch) as f64;
                    }
                    let denom = norm(y, x) * norm(qy, qx) + 1e-8;
                    data[(chan * h + y) * w + x] = (dot / denom) as f32;
                }
            }
            chan += 1;
        }
    }
    FeatureMap::new(h, w, k * k, data)
}

/// Deep auto-correlation difference: mean absolute difference between the
/// two cosine auto-correlation tensors. Channel counts of the inputs may
/// differ; spatial shapes must match.
pub fn loss_deep_corr(feats_disp: &FeatureMap, feats_img: &FeatureMap, k: usize) -> Result<f64> {
    if feats_disp.height() != feats_img.height() || feats_disp.width() != feats_img.width() {
        return Err(Error::ShapeMismatch(format!(
            "feature maps are {}x{} and {}x{}",
            feats_disp.height(),
            feats_disp.width(),
            feats_img.height(),
            feats_img.width()
        )));
    }
    let a = autocorr(feats_disp, k)?;
    let b = autocorr(feats_img, k)?;
    Ok(level_mean_abs_diff(&a, &b))
}

/// Distilled matting loss: mean over *all* pixels of
/// `mask * |disp - matted|`, normalized by `max(disp)`.
pub fn loss_distilled_matting(disp: &FloatMap, matted: &FloatMap, mask: &BitMask) -> Result<f64> {
    if !disp.same_shape(matted) {
        return Err(Error::ShapeMismatch(format!(
            "disp is {}x{}, matted is {}x{}",
            disp.height(),
            disp.width(),
            matted.height(),
            matted.width()
        )));
    }
    if mask.height() != disp.height() || mask.width() != disp.width() {
        return Err(Error::ShapeMismatch(format!(
            "mask is {}x{}, maps are {}x{}",
            mask.height(),
            mask.width(),
            disp.height(),
            disp.width()
        )));
    }
    let peak = disp.max_value() as f64;
    if !(peak > 0.0) {
        return Err(Error::InvalidData(format!(
            "max(disp) must be positive to normalize the matting loss, got {peak}"
        )));
    }
    let (n, w) = (disp.data().len(), disp.width());
    let total = pairwise_sum_by(0, n, &|p| {
        if mask.get(p / w, p % w) {
            (disp.data()[p] as f64 - matted.data()[p] as f64).abs()
        } else {
            0.0
        }
    });
    Ok(total / n as f64 / peak)
}

/// Stage-1 combinator: `l1 + alpha_p * lp + alpha_ds * lds`.
pub fn stage1_total(l1: f64, lp: f64, lds: f64, weights: &LossWeights) -> f64 {
    l1 + weights.alpha_p * lp + weights.alpha_ds * lds
}

/// Stage-2 combinator: `ls1 + lm + alpha_dm * ldm + alpha_dc * ldc`.
/// The mirror term `lm` is supplied externally (pass 0 when unused).
pub fn stage2_total(ls1: f64, lm: f64, ldm: f64, ldc: f64, weights: &LossWeights) -> f64 {
    ls1 + lm + weights.alpha_dm * ldm + weights.alpha_dc * ldc
}

/// Bidirectional mean of per-view totals.
pub fn combine_views(left: f64, right: f64) -> f64 {
    (left + right) / 2.0
}
