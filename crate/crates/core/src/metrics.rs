//! Standard depth-evaluation metrics (Eigen protocol): capped valid set,
//! optional median scaling, and the usual error/accuracy measures.

use crate::error::{Error, Result};
use crate::grid::FloatMap;
use crate::math::pairwise_sum_by;

/// Predictions are clamped to `[PRED_FLOOR, cap]` before any metric is
/// computed, keeping the log metrics finite.
pub const PRED_FLOOR: f64 = 1e-3;

pub const DEFAULT_CAP: f64 = 80.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricReport {
    pub abs_rel: f64,
    pub sq_rel: f64,
    pub rmse: f64,
    pub rmse_log: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub delta3: f64,
    pub n_valid: usize,
}

impl MetricReport {
    /// Metric values in report order, paired with their names.
    pub fn fields(&self) -> [(&'static str, f64); 7] {
        [
            ("abs_rel", self.abs_rel),
            ("sq_rel", self.sq_rel),
            ("rmse", self.rmse),
            ("rmse_log", self.rmse_log),
            ("delta1", self.delta1),
            ("delta2", self.delta2),
            ("delta3", self.delta3),
        ]
    }
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// Evaluates depth predictions against ground truth.
///
/// Valid pixels are those with `0 < gt <= cap`. With `median_scale` the
/// prediction is first multiplied by `median(gt) / median(pred)` over the
/// valid set; it is then clamped to `[PRED_FLOOR, cap]`.
pub fn eval_depth(
    pred: &FloatMap,
    gt: &FloatMap,
    cap: f64,
    median_scale: bool,
) -> Result<MetricReport> {
    if !pred.same_shape(gt) {
        return Err(Error::ShapeMismatch(format!(
            "pred is {}x{}, gt is {}x{}",
            pred.height(),
            pred.width(),
            gt.height(),
            gt.width()
        )));
    }
    if !(cap > 0.0) || !cap.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "cap must be a positive distance, got {cap}"
        )));
    }
    let mut pairs: Vec<(f64, f64)> = Vec::new();
    for (&p, &g) in pred.data().iter().zip(gt.data()) {
        let g = g as f64;
        if g > 0.0 && g <= cap {
            pairs.push((p as f64, g));
        }
    }
    if pairs.is_empty() {
        return Err(Error::EmptyValidSet(format!(
            "no ground-truth pixels in (0, {cap}]"
        )));
    }

    let scale = if median_scale {
        let mut ps: Vec<f64> = pairs.iter().map(|&(p, _)| p).collect();
        let mut gs: Vec<f64> = pairs.iter().map(|&(_, g)| g).collect();
        ps.sort_by(|a, b| a.partial_cmp(b).unwrap());
        gs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mp = median(&ps);
        if !(mp > 0.0) {
            return Err(Error::InvalidData(format!(
                "median scaling needs a positive prediction median, got {mp}"
            )));
        }
        median(&gs) / mp
    } else {
        1.0
    };

    let n = pairs.len();
    let at = |i: usize| -> (f64, f64) {
        let (p, g) = pairs[i];
        ((p * scale).clamp(PRED_FLOOR, cap), g)
    };
    let mean = |f: &dyn Fn(f64, f64) -> f64| -> f64 {
        pairwise_sum_by(0, n, &|i| {
            let (p, g) = at(i);
            f(p, g)
        }) / n as f64
    };

    let abs_rel = mean(&|p, g| (p - g).abs() / g);
    let sq_rel = mean(&|p, g| (p - g) * (p - g) / g);
    let rmse = mean(&|p, g| (p - g) * (p - g)).sqrt();
    let rmse_log = mean(&|p, g| {
        let d = p.ln() - g.ln();
        d * d
    })
    .sqrt();
    let ratio_below = |t: f64| mean(&|p, g| f64::from((p / g).max(g / p) < t));
    let delta1 = ratio_below(1.25);
    let delta2 = ratio_below(1.25 * 1.25);
    let delta3 = ratio_below(1.25 * 1.25 * 1.25);

    Ok(MetricReport {
        abs_rel,
        sq_rel,
        rmse,
        rmse_log,
        delta1,
        delta2,
        delta3,
        n_valid: n,
    })
}

fn check_camera(focal: f64, baseline: f64) -> Result<()> {
    if !(focal > 0.0) || !focal.is_finite() || !(baseline > 0.0) || !baseline.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "focal and baseline must be positive, got focal={focal} baseline={baseline}"
        )));
    }
    Ok(())
}

/// `depth = focal * baseline / disp`; non-positive disparities map to
/// depth 0 (invalid).
pub fn disparity_to_depth(disp: &FloatMap, focal: f64, baseline: f64) -> Result<FloatMap> {
    check_camera(focal, baseline)?;
    let fb = focal * baseline;
    FloatMap::new(
        disp.height(),
        disp.width(),
        disp.data()
            .iter()
            .map(|&v| if v > 0.0 { (fb / v as f64) as f32 } else { 0.0 })
            .collect(),
    )
}

/// Inverse of [`disparity_to_depth`]: same reciprocal law, with
/// non-positive depths mapping to disparity 0.
pub fn depth_to_disparity(depth: &FloatMap, focal: f64, baseline: f64) -> Result<FloatMap> {
    disparity_to_depth(depth, focal, baseline)
}
