//! Disparity probability volumes and the exponential plane schedule.
//!
//! A volume holds `n_planes` single-channel grids (plane-major). Logit
//! volumes become probability volumes through a channel-wise softmax; the
//! right-view volume is obtained by shifting each plane left by its own
//! disparity before the softmax. View synthesis blends the plane-shifted
//! input image with the probabilities; disparity extraction is the
//! per-pixel expectation over the schedule.

use crate::error::{Error, Result};
use crate::grid::{FloatMap, Image};
use crate::par::{self, Exec};
use crate::warp::{sample_row, WarpSign};

pub const DEFAULT_D_MIN: f64 = 2.0;
pub const DEFAULT_D_MAX: f64 = 300.0;
/// Default plane-segment count N (the volume then has N + 1 planes).
pub const DEFAULT_N: usize = 48;

/// Exponential disparity quantization:
/// `d_n = d_max * exp(ln(d_max / d_min) * (n / N - 1))` for `n = 0..=N`.
///
/// The sequence is geometric from `d_0 = d_min` to `d_N = d_max`, spending
/// more planes on small disparities (far depths).
#[derive(Debug, Clone, PartialEq)]
pub struct QuantSchedule {
    d_min: f64,
    d_max: f64,
    disparities: Vec<f64>,
}

impl QuantSchedule {
    pub fn new(d_min: f64, d_max: f64, n: usize) -> Result<Self> {
        if !(d_min.is_finite() && d_max.is_finite()) || d_min <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "quantization requires finite 0 < d_min < d_max, got d_min={d_min}"
            )));
        }
        if d_max <= d_min {
            return Err(Error::InvalidParameter(format!(
                "quantization requires d_max > d_min, got d_min={d_min}, d_max={d_max}"
            )));
        }
        if n == 0 {
            return Err(Error::InvalidParameter(
                "quantization requires at least one segment (n >= 1)".to_string(),
            ));
        }
        let log_ratio = (d_max / d_min).ln();
        let disparities = (0..=n)
            .map(|i| d_max * (log_ratio * (i as f64 / n as f64 - 1.0)).exp())
            .collect();
        Ok(QuantSchedule {
            d_min,
            d_max,
            disparities,
        })
    }

    /// Schedule over explicit plane disparities (testing and custom sweeps).
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter(
                "schedule needs at least one disparity".to_string(),
            ));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidParameter(
                "schedule disparities must be finite and non-negative".to_string(),
            ));
        }
        let d_min = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let d_max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Ok(QuantSchedule {
            d_min,
            d_max,
            disparities: values,
        })
    }

    pub fn d_min(&self) -> f64 {
        self.d_min
    }

    pub fn d_max(&self) -> f64 {
        self.d_max
    }

    /// Number of planes (N + 1 for the exponential constructor).
    pub fn n_planes(&self) -> usize {
        self.disparities.len()
    }

    pub fn disparities(&self) -> &[f64] {
        &self.disparities
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VolumeKind {
    Logits,
    Probabilities,
}

/// Plane-major stack of `n_planes` grids of shape `height x width`.
#[derive(Debug, Clone, PartialEq)]
pub struct DisparityVolume {
    n_planes: usize,
    height: usize,
    width: usize,
    kind: VolumeKind,
    data: Vec<f32>,
}

impl DisparityVolume {
    pub fn new(
        n_planes: usize,
        height: usize,
        width: usize,
        kind: VolumeKind,
        data: Vec<f32>,
    ) -> Result<Self> {
        if n_planes == 0 || height == 0 || width == 0 {
            return Err(Error::InvalidParameter(format!(
                "volume dimensions must be positive, got {n_planes} planes of {height}x{width}"
            )));
        }
        if data.len() != n_planes * height * width {
            return Err(Error::ShapeMismatch(format!(
                "volume data length {} does not match {n_planes}x{height}x{width}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidData(
                "volume values must be finite".to_string(),
            ));
        }
        let vol = DisparityVolume {
            n_planes,
            height,
            width,
            kind,
            data,
        };
        if kind == VolumeKind::Probabilities {
            vol.check_probabilities()?;
        }
        Ok(vol)
    }

    /// Stacks per-plane maps (all one shape) into a volume.
    pub fn from_planes(kind: VolumeKind, planes: &[FloatMap]) -> Result<Self> {
        let first = planes.first().ok_or_else(|| {
            Error::InvalidParameter("volume needs at least one plane".to_string())
        })?;
        let (h, w) = (first.height(), first.width());
        let mut data = Vec::with_capacity(planes.len() * h * w);
        for (i, p) in planes.iter().enumerate() {
            if !p.same_shape(first) {
                return Err(Error::ShapeMismatch(format!(
                    "plane {i} is {}x{}, plane 0 is {h}x{w}",
                    p.height(),
                    p.width()
                )));
            }
            data.extend_from_slice(p.data());
        }
        DisparityVolume::new(planes.len(), h, w, kind, data)
    }

    fn from_raw(n_planes: usize, height: usize, width: usize, kind: VolumeKind, data: Vec<f32>) -> Self {
        debug_assert_eq!(data.len(), n_planes * height * width);
        DisparityVolume {
            n_planes,
            height,
            width,
            kind,
            data,
        }
    }

    fn check_probabilities(&self) -> Result<()> {
        let hw = self.height * self.width;
        for p in 0..hw {
            let mut sum = 0.0f64;
            for n in 0..self.n_planes {
                let v = self.data[n * hw + p];
                if v < 0.0 {
                    return Err(Error::InvalidData(format!(
                        "probability volume holds negative value {v}"
                    )));
                }
                sum += v as f64;
            }
            if (sum - 1.0).abs() > 1e-5 {
                return Err(Error::InvalidData(format!(
                    "probability volume channel sum {sum} deviates from 1 by more than 1e-5"
                )));
            }
        }
        Ok(())
    }

    pub fn n_planes(&self) -> usize {
        self.n_planes
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn kind(&self) -> VolumeKind {
        self.kind
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    /// Plane `n` as a contiguous `height * width` slice.
    pub fn plane(&self, n: usize) -> &[f32] {
        let hw = self.height * self.width;
        &self.data[n * hw..(n + 1) * hw]
    }

    #[inline]
    pub fn get(&self, n: usize, y: usize, x: usize) -> f32 {
        self.data[(n * self.height + y) * self.width + x]
    }

    pub fn to_planes(&self) -> Vec<FloatMap> {
        (0..self.n_planes)
            .map(|n| {
                FloatMap::new(self.height, self.width, self.plane(n).to_vec())
                    .expect("volume planes are valid maps")
            })
            .collect()
    }
}

fn check_plane_count(vol: &DisparityVolume, sched: &QuantSchedule) -> Result<()> {
    if vol.n_planes() != sched.n_planes() {
        return Err(Error::ShapeMismatch(format!(
            "volume has {} planes, schedule has {}",
            vol.n_planes(),
            sched.n_planes()
        )));
    }
    Ok(())
}

fn expect_kind(vol: &DisparityVolume, kind: VolumeKind, op: &str) -> Result<()> {
    if vol.kind() != kind {
        return Err(Error::InvalidParameter(format!(
            "{op} expects a {kind:?} volume, got {:?}",
            vol.kind()
        )));
    }
    Ok(())
}

fn softmax_with(exec: Exec, vol: &DisparityVolume) -> Result<DisparityVolume> {
    expect_kind(vol, VolumeKind::Logits, "softmax_volume")?;
    let (np, h, w) = (vol.n_planes(), vol.height(), vol.width());
    let hw = h * w;

    // Per-pixel max then exp-sum, subtracted for stability.
    let mut maxv = vec![0.0f64; hw];
    par::fill_rows(exec, &mut maxv, w, |y, row| {
        for (x, m) in row.iter_mut().enumerate() {
            let p = y * w + x;
            let mut best = f64::NEG_INFINITY;
            for n in 0..np {
                best = best.max(vol.data[n * hw + p] as f64);
            }
            *m = best;
        }
    });
    let mut sumexp = vec![0.0f64; hw];
    {
        let maxv = &maxv;
        par::fill_rows(exec, &mut sumexp, w, |y, row| {
            for (x, s) in row.iter_mut().enumerate() {
                let p = y * w + x;
                let mut acc = 0.0f64;
                for n in 0..np {
                    acc += (vol.data[n * hw + p] as f64 - maxv[p]).exp();
                }
                *s = acc;
            }
        });
    }
    let mut out = vec![0.0f32; np * hw];
    {
        let (maxv, sumexp) = (&maxv, &sumexp);
        par::fill_rows(exec, &mut out, w, |row_idx, row| {
            let n = row_idx / h;
            let y = row_idx % h;
            for (x, o) in row.iter_mut().enumerate() {
                let p = y * w + x;
                let e = (vol.data[n * hw + p] as f64 - maxv[p]).exp();
                *o = (e / sumexp[p]) as f32;
            }
        });
    }
    Ok(DisparityVolume::from_raw(np, h, w, VolumeKind::Probabilities, out))
}

/// Channel-wise softmax over planes (max-subtracted for stability).
pub fn softmax_volume(vol: &DisparityVolume) -> Result<DisparityVolume> {
    softmax_with(Exec::default(), vol)
}

fn project_with(
    exec: Exec,
    logits: &DisparityVolume,
    sched: &QuantSchedule,
) -> Result<DisparityVolume> {
    expect_kind(logits, VolumeKind::Logits, "project_logits_to_right")?;
    check_plane_count(logits, sched)?;
    let (np, h, w) = (logits.n_planes(), logits.height(), logits.width());
    let hw = h * w;
    // Shift each logit plane left by its own disparity (sample at x + d_n);
    // out-of-bounds samples contribute logit 0, and the softmax afterwards
    // renormalizes over all planes.
    let mut shifted = vec![0.0f32; np * hw];
    par::fill_rows(exec, &mut shifted, w, |row_idx, row| {
        let n = row_idx / h;
        let y = row_idx % h;
        let d = sched.disparities()[n];
        let src = &logits.plane(n)[y * w..(y + 1) * w];
        for (x, o) in row.iter_mut().enumerate() {
            let xs = WarpSign::Right.apply(x, d);
            *o = sample_row(src, w, 1, xs, 0).unwrap_or(0.0) as f32;
        }
    });
    softmax_with(
        exec,
        &DisparityVolume::from_raw(np, h, w, VolumeKind::Logits, shifted),
    )
}

/// Right-view probability volume: plane `n` of the logits shifted left by
/// `d_n`, then softmaxed.
pub fn project_logits_to_right(
    logits: &DisparityVolume,
    sched: &QuantSchedule,
) -> Result<DisparityVolume> {
    project_with(Exec::default(), logits, sched)
}

fn synthesize_with(
    exec: Exec,
    img_left: &Image,
    probs_right: &DisparityVolume,
    sched: &QuantSchedule,
) -> Result<Image> {
    expect_kind(probs_right, VolumeKind::Probabilities, "synthesize_right")?;
    check_plane_count(probs_right, sched)?;
    let (h, w, c) = (img_left.height(), img_left.width(), img_left.channels());
    if probs_right.height() != h || probs_right.width() != w {
        return Err(Error::ShapeMismatch(format!(
            "volume is {}x{}, image is {h}x{w}",
            probs_right.height(),
            probs_right.width()
        )));
    }
    let stride = w * c;
    let mut out = vec![0.0f32; h * stride];
    par::fill_rows(exec, &mut out, stride, |y, row| {
        let src = img_left.row(y);
        let mut acc = vec![0.0f64; stride];
        for n in 0..probs_right.n_planes() {
            let d = sched.disparities()[n];
            let prow = &probs_right.plane(n)[y * w..(y + 1) * w];
            for x in 0..w {
                let xs = WarpSign::Right.apply(x, d);
                let p = prow[x] as f64;
                for ch in 0..c {
                    if let Some(v) = sample_row(src, w, c, xs, ch) {
                        acc[x * c + ch] += p * v;
                    }
                }
            }
        }
        for (o, a) in row.iter_mut().zip(&acc) {
            *o = a.clamp(0.0, 1.0) as f32;
        }
    });
    Image::new(h, w, c, out)
}

/// View synthesis: blends the plane-shifted left image with the right-view
/// probabilities; out-of-bounds shifts contribute zero. Output is clamped
/// to `[0, 1]`.
pub fn synthesize_right(
    img_left: &Image,
    probs_right: &DisparityVolume,
    sched: &QuantSchedule,
) -> Result<Image> {
    synthesize_with(Exec::default(), img_left, probs_right, sched)
}

/// Sequential twin of [`synthesize_right`].
pub fn synthesize_right_seq(
    img_left: &Image,
    probs_right: &DisparityVolume,
    sched: &QuantSchedule,
) -> Result<Image> {
    synthesize_with(Exec::Sequential, img_left, probs_right, sched)
}

fn extract_with(
    exec: Exec,
    probs: &DisparityVolume,
    sched: &QuantSchedule,
) -> Result<FloatMap> {
    expect_kind(probs, VolumeKind::Probabilities, "extract_disparity")?;
    check_plane_count(probs, sched)?;
    let (h, w) = (probs.height(), probs.width());
    let hw = h * w;
    let mut out = vec![0.0f32; hw];
    par::fill_rows(exec, &mut out, w, |y, row| {
        for (x, o) in row.iter_mut().enumerate() {
            let p = y * w + x;
            let mut acc = 0.0f64;
            for n in 0..probs.n_planes() {
                acc += sched.disparities()[n] * probs.data[n * hw + p] as f64;
            }
            // The expectation lies in [d_min, d_max] mathematically; the
            // clamp only trims float round-off.
            *o = acc.clamp(sched.d_min(), sched.d_max()) as f32;
        }
    });
    FloatMap::new(h, w, out)
}

/// Disparity as the per-pixel expectation of the schedule under the
/// probability volume (Eq. 2); always within `[d_min, d_max]`.
pub fn extract_disparity(probs: &DisparityVolume, sched: &QuantSchedule) -> Result<FloatMap> {
    extract_with(Exec::default(), probs, sched)
}

/// Average of two aligned disparity maps (flip post-processing).
pub fn postprocess_flip(a: &FloatMap, b: &FloatMap) -> Result<FloatMap> {
    if !a.same_shape(b) {
        return Err(Error::ShapeMismatch(format!(
            "maps are {}x{} and {}x{}",
            a.height(),
            a.width(),
            b.height(),
            b.width()
        )));
    }
    let data = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| ((x as f64 + y as f64) * 0.5) as f32)
        .collect();
    FloatMap::new(a.height(), a.width(), data)
}
