//! Neural positional encoding: a two-layer ELU MLP evaluated on absolute
//! pixel coordinates, plus a finite-difference check of its analytic
//! parameter Jacobian.
//!
//! Coordinates are taken in the *original* image frame (before cropping)
//! and normalized to `[-1, 1]` per axis; an axis of size 1 maps to 0.

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::features::FeatureMap;
use crate::grid::FloatMap;
use crate::io::{atomic_write, load_floatmap, save_floatmap};
use crate::math::{elu, elu_prime};
use crate::par::{map_indexed, Exec};

/// Central finite-difference step used by [`npe_jacobian_check`].
pub const FD_STEP: f64 = 1e-5;

/// Weights of `F(p) = elu(w2 * elu(w1 * p + b1) + b2)`.
///
/// Stored in f64 for the forward pass; (de)serialization goes through
/// 32-bit PFM, so seeded parameters are generated as f32 values to keep
/// the roundtrip lossless.
#[derive(Clone, Debug, PartialEq)]
pub struct NpeParams {
    hidden: usize,
    out: usize,
    /// `hidden x 2`, row-major.
    w1: Vec<f64>,
    b1: Vec<f64>,
    /// `out x hidden`, row-major.
    w2: Vec<f64>,
    b2: Vec<f64>,
}

impl NpeParams {
    pub fn new(
        hidden: usize,
        out: usize,
        w1: Vec<f64>,
        b1: Vec<f64>,
        w2: Vec<f64>,
        b2: Vec<f64>,
    ) -> Result<Self> {
        if hidden == 0 || out == 0 {
            return Err(Error::InvalidParameter(
                "hidden and output widths must be positive".into(),
            ));
        }
        let shapes = [
            ("w1", w1.len(), hidden * 2),
            ("b1", b1.len(), hidden),
            ("w2", w2.len(), out * hidden),
            ("b2", b2.len(), out),
        ];
        for (name, got, want) in shapes {
            if got != want {
                return Err(Error::ShapeMismatch(format!(
                    "{name} has {got} entries, expected {want}"
                )));
            }
        }
        if w1
            .iter()
            .chain(&b1)
            .chain(&w2)
            .chain(&b2)
            .any(|v| !v.is_finite())
        {
            return Err(Error::InvalidData("NPE parameters must be finite".into()));
        }
        Ok(NpeParams {
            hidden,
            out,
            w1,
            b1,
            w2,
            b2,
        })
    }

    /// Uniform `[-0.5, 0.5]` parameters (drawn as f32 so PFM storage is
    /// exact), in the order w1, b1, w2, b2.
    pub fn seeded(hidden: usize, out: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = |n: usize| -> Vec<f64> {
            (0..n)
                .map(|_| rng.gen_range(-0.5f32..0.5f32) as f64)
                .collect()
        };
        let w1 = draw(hidden * 2);
        let b1 = draw(hidden);
        let w2 = draw(out * hidden);
        let b2 = draw(out);
        NpeParams::new(hidden, out, w1, b1, w2, b2)
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn out(&self) -> usize {
        self.out
    }

    fn flat(&self) -> Vec<f32> {
        self.w1
            .iter()
            .chain(&self.b1)
            .chain(&self.w2)
            .chain(&self.b2)
            .map(|&v| v as f32)
            .collect()
    }

    fn param_count(hidden: usize, out: usize) -> usize {
        hidden * 2 + hidden + out * hidden + out
    }

    /// Writes the parameters as a one-row PFM at `path` and the layer
    /// sizes as `<path>.hdr`.
    pub fn save(&self, path: &Path) -> Result<()> {
        let flat = self.flat();
        let map = FloatMap::new(1, flat.len(), flat)?;
        save_floatmap(path, &map)?;
        let mut hdr = String::new();
        writeln!(hdr, "hidden {}", self.hidden).unwrap();
        writeln!(hdr, "out {}", self.out).unwrap();
        atomic_write(header_path(path), hdr.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let hdr_path = header_path(path);
        let text = std::fs::read_to_string(&hdr_path).map_err(|e| Error::io(&hdr_path, e))?;
        let mut hidden = None;
        let mut out = None;
        for line in text.lines() {
            match line.split_whitespace().collect::<Vec<_>>()[..] {
                ["hidden", v] => hidden = v.parse::<usize>().ok(),
                ["out", v] => out = v.parse::<usize>().ok(),
                [] => {}
                _ => {
                    return Err(Error::format(
                        &hdr_path,
                        format!("unrecognized header line: {line:?}"),
                    ))
                }
            }
        }
        let (hidden, out) = match (hidden, out) {
            (Some(h), Some(o)) => (h, o),
            _ => {
                return Err(Error::format(
                    &hdr_path,
                    "header must define hidden and out".to_string(),
                ))
            }
        };
        let map = load_floatmap(path)?;
        let flat = map.data();
        if map.height() != 1 || flat.len() != Self::param_count(hidden, out) {
            return Err(Error::format(
                path,
                format!(
                    "expected a 1x{} parameter row for hidden={hidden} out={out}, got {}x{}",
                    Self::param_count(hidden, out),
                    map.height(),
                    map.width()
                ),
            ));
        }
        let vals: Vec<f64> = flat.iter().map(|&v| v as f64).collect();
        let (a, b) = (hidden * 2, hidden * 2 + hidden);
        let c = b + out * hidden;
        NpeParams::new(
            hidden,
            out,
            vals[..a].to_vec(),
            vals[a..b].to_vec(),
            vals[b..c].to_vec(),
            vals[c..].to_vec(),
        )
    }
}

fn header_path(path: &Path) -> std::path::PathBuf {
    let mut os = path.as_os_str().to_os_string();
    os.push(".hdr");
    os.into()
}

/// Placement of a patch inside its original (pre-crop) image.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PatchOrigin {
    pub x0: usize,
    pub y0: usize,
    pub patch_h: usize,
    pub patch_w: usize,
    pub full_h: usize,
    pub full_w: usize,
}

impl PatchOrigin {
    pub fn new(
        x0: usize,
        y0: usize,
        patch_h: usize,
        patch_w: usize,
        full_h: usize,
        full_w: usize,
    ) -> Result<Self> {
        if patch_h == 0 || patch_w == 0 {
            return Err(Error::InvalidParameter(
                "patch dimensions must be positive".into(),
            ));
        }
        if x0 + patch_w > full_w || y0 + patch_h > full_h {
            return Err(Error::InvalidParameter(format!(
                "patch {patch_h}x{patch_w} at ({x0},{y0}) leaves the {full_h}x{full_w} image"
            )));
        }
        Ok(PatchOrigin {
            x0,
            y0,
            patch_h,
            patch_w,
            full_h,
            full_w,
        })
    }

    /// Covers the whole image.
    pub fn full(height: usize, width: usize) -> Result<Self> {
        PatchOrigin::new(0, 0, height, width, height, width)
    }
}

fn norm_coord(i: usize, size: usize) -> f64 {
    if size <= 1 {
        0.0
    } else {
        2.0 * (i as f64 / (size - 1) as f64) - 1.0
    }
}

/// Forward pass at one normalized coordinate, all channels, in f64.
fn forward_at(params: &NpeParams, px: f64, py: f64) -> Vec<f64> {
    let hidden = params.hidden;
    let mut act = vec![0.0f64; hidden];
    for h in 0..hidden {
        let z = params.w1[h * 2] * px + params.w1[h * 2 + 1] * py + params.b1[h];
        act[h] = elu(z);
    }
    (0..params.out)
        .map(|o| {
            let mut z = params.b2[o];
            for h in 0..hidden {
                z += params.w2[o * hidden + h] * act[h];
            }
            elu(z)
        })
        .collect()
}

/// Evaluates `F(p)` on every pixel of the patch; `p` is the absolute
/// coordinate `(x0 + x, y0 + y)` normalized over the full image.
pub fn npe_forward(params: &NpeParams, origin: &PatchOrigin) -> Result<FeatureMap> {
    let (ph, pw) = (origin.patch_h, origin.patch_w);
    let per_pixel = map_indexed(Exec::default(), ph * pw, |p| {
        let (y, x) = (p / pw, p % pw);
        let px = norm_coord(origin.x0 + x, origin.full_w);
        let py = norm_coord(origin.y0 + y, origin.full_h);
        forward_at(params, px, py)
    });
    let mut data = vec![0.0f32; ph * pw * params.out];
    for (p, vals) in per_pixel.iter().enumerate() {
        for (c, &v) in vals.iter().enumerate() {
            data[c * ph * pw + p] = v as f32;
        }
    }
    FeatureMap::new(ph, pw, params.out, data)
}

/// Outcome of a Jacobian verification run.
#[derive(Clone, Copy, Debug)]
pub struct JacobianReport {
    /// Worst relative disagreement between analytic and central-difference
    /// derivatives, with denominator `max(|analytic|, |numeric|, 1e-6)`.
    pub max_rel_err: f64,
    pub probes: usize,
    pub comparisons: usize,
}

#[derive(Clone, Copy)]
enum Slot {
    W1(usize),
    B1(usize),
    W2(usize),
    B2(usize),
}

fn perturbed(params: &NpeParams, slot: Slot, delta: f64) -> NpeParams {
    let mut p = params.clone();
    match slot {
        Slot::W1(i) => p.w1[i] += delta,
        Slot::B1(i) => p.b1[i] += delta,
        Slot::W2(i) => p.w2[i] += delta,
        Slot::B2(i) => p.b2[i] += delta,
    }
    p
}

/// Compares the analytic parameter Jacobian of Eq. 4 against central
/// finite differences (step [`FD_STEP`]) at `probe_count` seeded random
/// pixels of the patch. Every parameter is checked against every output
/// channel.
pub fn npe_jacobian_check(
    params: &NpeParams,
    origin: &PatchOrigin,
    probe_count: usize,
    seed: u64,
) -> Result<JacobianReport> {
    if probe_count == 0 {
        return Err(Error::InvalidParameter("probe_count must be ≥ 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (hidden, out) = (params.hidden, params.out);
    let mut max_rel = 0.0f64;
    let mut comparisons = 0usize;

    for _ in 0..probe_count {
        let x = origin.x0 + rng.gen_range(0..origin.patch_w);
        let y = origin.y0 + rng.gen_range(0..origin.patch_h);
        let px = norm_coord(x, origin.full_w);
        let py = norm_coord(y, origin.full_h);

        // Shared intermediates of the analytic derivatives.
        let z1: Vec<f64> = (0..hidden)
            .map(|h| params.w1[h * 2] * px + params.w1[h * 2 + 1] * py + params.b1[h])
            .collect();
        let act: Vec<f64> = z1.iter().map(|&z| elu(z)).collect();
        let z2: Vec<f64> = (0..out)
            .map(|o| {
                params.b2[o]
                    + (0..hidden)
                        .map(|h| params.w2[o * hidden + h] * act[h])
                        .sum::<f64>()
            })
            .collect();

        let mut slots = Vec::new();
        for i in 0..hidden * 2 {
            slots.push(Slot::W1(i));
        }
        for i in 0..hidden {
            slots.push(Slot::B1(i));
        }
        for i in 0..out * hidden {
            slots.push(Slot::W2(i));
        }
        for i in 0..out {
            slots.push(Slot::B2(i));
        }

        for slot in slots {
            let plus = forward_at(&perturbed(params, slot, FD_STEP), px, py);
            let minus = forward_at(&perturbed(params, slot, -FD_STEP), px, py);
            for o in 0..out {
                let analytic = match slot {
                    Slot::W1(i) => {
                        let (h, k) = (i / 2, i % 2);
                        let coord = if k == 0 { px } else { py };
                        elu_prime(z2[o]) * params.w2[o * hidden + h] * elu_prime(z1[h]) * coord
                    }
                    Slot::B1(h) => {
                        elu_prime(z2[o]) * params.w2[o * hidden + h] * elu_prime(z1[h])
                    }
                    Slot::W2(i) => {
                        if i / hidden == o {
                            elu_prime(z2[o]) * act[i % hidden]
                        } else {
                            0.0
                        }
                    }
                    Slot::B2(i) => {
                        if i == o {
                            elu_prime(z2[o])
                        } else {
                            0.0
                        }
                    }
                };
                let numeric = (plus[o] - minus[o]) / (2.0 * FD_STEP);
                let denom = analytic.abs().max(numeric.abs()).max(1e-6);
                max_rel = max_rel.max((analytic - numeric).abs() / denom);
                comparisons += 1;
            }
        }
    }
    Ok(JacobianReport {
        max_rel_err: max_rel,
        probes: probe_count,
        comparisons,
    })
}
