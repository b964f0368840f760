//! Closed-form matting Laplacian, data-term solve, and local mean scaling.
//!
//! For every (2r+1)x(2r+1) guide window `w_k` with mean color `mu_k` and
//! covariance `S_k`, pixel pairs `(i, j)` in the window contribute
//!
//! ```text
//! delta_ij - (1 / |w_k|) * (1 + (I_i - mu_k)^T (S_k + (eps / |w_k|) Id)^-1 (I_j - mu_k))
//! ```
//!
//! summed over all windows. The resulting Laplacian is symmetric, PSD, and
//! has zero row sums. `solve_matted` then minimizes
//! `x^T L x + lambda * sum_i conf_i (x_i - target_i)^2` by solving
//! `(L + lambda diag(conf)) x = lambda diag(conf) target` with
//! Jacobi-preconditioned CG.
//!
//! Assembly is data-parallel over pixels; each matrix row sums its window
//! contributions in a fixed order, so results do not depend on scheduling.

mod cg;
mod sparse;

pub use sparse::SparseSystem;

use crate::error::{Error, Result};
use crate::grid::{FloatMap, Image};
use crate::par::{self, Exec};

#[derive(Debug, Clone, PartialEq)]
pub struct MattingParams {
    /// Guide window radius; 1 gives the classic 3x3 windows.
    pub window_radius: usize,
    /// Covariance regularizer `eps`.
    pub eps: f64,
    /// Data-term weight `lambda`.
    pub lambda: f64,
    /// CG stops when `||r|| <= cg_tol * ||rhs||`.
    pub cg_tol: f64,
    pub cg_max_iter: usize,
}

impl Default for MattingParams {
    fn default() -> Self {
        MattingParams {
            window_radius: 1,
            eps: 1e-7,
            lambda: 100.0,
            cg_tol: 1e-8,
            cg_max_iter: 2000,
        }
    }
}

impl MattingParams {
    pub fn validate(&self) -> Result<()> {
        if self.window_radius == 0 {
            return Err(Error::InvalidParameter(
                "matting window radius must be at least 1".to_string(),
            ));
        }
        if !(self.eps.is_finite() && self.eps > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "matting eps must be positive, got {}",
                self.eps
            )));
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "matting lambda must be non-negative, got {}",
                self.lambda
            )));
        }
        if !(self.cg_tol.is_finite() && self.cg_tol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "cg tolerance must be positive, got {}",
                self.cg_tol
            )));
        }
        if self.cg_max_iter == 0 {
            return Err(Error::InvalidParameter(
                "cg iteration cap must be at least 1".to_string(),
            ));
        }
        Ok(())
    }
}

/// Per-window statistics: mean color and regularized inverse covariance.
/// Only the leading `channels x channels` block is meaningful.
#[derive(Clone, Copy)]
struct WinStat {
    mu: [f64; 3],
    inv: [[f64; 3]; 3],
}

/// Inverse of a symmetric positive-definite 3x3 matrix via cofactors; the
/// result is mirrored so it is bitwise symmetric.
fn invert3(m: [[f64; 3]; 3]) -> Option<[[f64; 3]; 3]> {
    let c00 = m[1][1] * m[2][2] - m[1][2] * m[2][1];
    let c01 = m[1][2] * m[2][0] - m[1][0] * m[2][2];
    let c02 = m[1][0] * m[2][1] - m[1][1] * m[2][0];
    let det = m[0][0] * c00 + m[0][1] * c01 + m[0][2] * c02;
    if !(det > 0.0) || !det.is_finite() {
        return None;
    }
    let mut inv = [[0.0; 3]; 3];
    inv[0][0] = c00 / det;
    inv[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) / det;
    inv[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) / det;
    inv[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / det;
    inv[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) / det;
    inv[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / det;
    inv[1][0] = inv[0][1];
    inv[2][0] = inv[0][2];
    inv[2][1] = inv[1][2];
    Some(inv)
}

fn window_stats(guide: &Image, params: &MattingParams, exec: Exec) -> Result<Vec<WinStat>> {
    let (h, w, ch) = (guide.height(), guide.width(), guide.channels());
    let r = params.window_radius;
    let side = 2 * r + 1;
    let count = (side * side) as f64;
    let cw = w - 2 * r;
    let chh = h - 2 * r;
    let reg = params.eps / count;

    let stats = par::map_indexed(exec, chh * cw, |ci| {
        let cy = ci / cw + r;
        let cx = ci % cw + r;
        let mut sum = [0.0f64; 3];
        let mut sumsq = [[0.0f64; 3]; 3];
        for yy in cy - r..=cy + r {
            for xx in cx - r..=cx + r {
                let mut px = [0.0f64; 3];
                for a in 0..ch {
                    px[a] = guide.get(yy, xx, a) as f64;
                }
                for a in 0..ch {
                    sum[a] += px[a];
                    for b in a..ch {
                        sumsq[a][b] += px[a] * px[b];
                    }
                }
            }
        }
        let mut mu = [0.0f64; 3];
        for a in 0..ch {
            mu[a] = sum[a] / count;
        }
        let mut cov = [[0.0f64; 3]; 3];
        for a in 0..ch {
            for b in a..ch {
                let v = sumsq[a][b] / count - mu[a] * mu[b];
                cov[a][b] = v;
                cov[b][a] = v;
            }
            cov[a][a] += reg;
        }
        let inv = if ch == 1 {
            let mut inv = [[0.0f64; 3]; 3];
            if cov[0][0] > 0.0 {
                inv[0][0] = 1.0 / cov[0][0];
                Some(inv)
            } else {
                None
            }
        } else {
            invert3(cov)
        };
        inv.map(|inv| WinStat { mu, inv })
    });

    stats
        .into_iter()
        .collect::<Option<Vec<WinStat>>>()
        .ok_or_else(|| {
            Error::InvalidData(
                "window covariance is not positive definite (eps too small?)".to_string(),
            )
        })
}

fn build_laplacian_with(
    exec: Exec,
    guide: &Image,
    params: &MattingParams,
) -> Result<SparseSystem> {
    params.validate()?;
    let (h, w, ch) = (guide.height(), guide.width(), guide.channels());
    let r = params.window_radius;
    if h < 2 * r + 1 || w < 2 * r + 1 {
        return Err(Error::InvalidParameter(format!(
            "guide {h}x{w} is smaller than the {s}x{s} matting window",
            s = 2 * r + 1
        )));
    }
    let side = 2 * r + 1;
    let count = (side * side) as f64;
    let cw = w - 2 * r;
    let stats = window_stats(guide, params, exec)?;

    let ri = r as isize;
    let rows: Vec<Vec<(u32, f64)>> = par::map_indexed(exec, h * w, |i| {
        let y = (i / w) as isize;
        let x = (i % w) as isize;
        let mut pi = [0.0f64; 3];
        for a in 0..ch {
            pi[a] = guide.get(y as usize, x as usize, a) as f64;
        }
        let mut row: Vec<(u32, f64)> = Vec::with_capacity((4 * r + 1) * (4 * r + 1));
        for yy in (y - 2 * ri).max(0)..=(y + 2 * ri).min(h as isize - 1) {
            // Window centers containing both i and j, clipped to interior.
            let cy_lo = (y.max(yy) - ri).max(ri);
            let cy_hi = (y.min(yy) + ri).min(h as isize - 1 - ri);
            if cy_lo > cy_hi {
                continue;
            }
            for xx in (x - 2 * ri).max(0)..=(x + 2 * ri).min(w as isize - 1) {
                let cx_lo = (x.max(xx) - ri).max(ri);
                let cx_hi = (x.min(xx) + ri).min(w as isize - 1 - ri);
                if cx_lo > cx_hi {
                    continue;
                }
                let mut pj = [0.0f64; 3];
                for a in 0..ch {
                    pj[a] = guide.get(yy as usize, xx as usize, a) as f64;
                }
                let delta = (yy == y && xx == x) as u8 as f64;
                let mut val = 0.0f64;
                for cy in cy_lo..=cy_hi {
                    for cx in cx_lo..=cx_hi {
                        let stat =
                            &stats[(cy - ri) as usize * cw + (cx - ri) as usize];
                        let mut q = 0.0f64;
                        for a in 0..ch {
                            let da = pi[a] - stat.mu[a];
                            for b in 0..ch {
                                q += da * stat.inv[a][b] * (pj[b] - stat.mu[b]);
                            }
                        }
                        val += delta - (1.0 + q) / count;
                    }
                }
                row.push(((yy as usize * w + xx as usize) as u32, val));
            }
        }
        row
    });

    Ok(SparseSystem::from_rows(rows, vec![0.0; h * w]))
}

/// Assembles the matting Laplacian of `guide` as a sparse system with a
/// zero right-hand side (the data term enters in [`solve_matted`]).
pub fn build_laplacian(guide: &Image, params: &MattingParams) -> Result<SparseSystem> {
    build_laplacian_with(Exec::default(), guide, params)
}

/// Sequential twin of [`build_laplacian`].
pub fn build_laplacian_seq(guide: &Image, params: &MattingParams) -> Result<SparseSystem> {
    build_laplacian_with(Exec::Sequential, guide, params)
}

fn solve_matted_with(
    exec: Exec,
    system: &SparseSystem,
    target: &FloatMap,
    confidence: &FloatMap,
    params: &MattingParams,
) -> Result<FloatMap> {
    params.validate()?;
    let (h, w) = (target.height(), target.width());
    if h * w != system.dim() {
        return Err(Error::ShapeMismatch(format!(
            "target {h}x{w} does not match system dimension {}",
            system.dim()
        )));
    }
    if !confidence.same_shape(target) {
        return Err(Error::ShapeMismatch(format!(
            "confidence is {}x{}, target is {h}x{w}",
            confidence.height(),
            confidence.width()
        )));
    }
    if confidence.data().iter().any(|&c| c < 0.0) {
        return Err(Error::InvalidData(
            "confidence values must be non-negative".to_string(),
        ));
    }

    let lc: Vec<f64> = confidence
        .data()
        .iter()
        .map(|&c| params.lambda * c as f64)
        .collect();
    let b: Vec<f64> = lc
        .iter()
        .zip(target.data())
        .map(|(&lci, &t)| lci * t as f64)
        .collect();
    let mut diag = system.diagonal();
    for (d, lci) in diag.iter_mut().zip(&lc) {
        *d += lci;
    }
    let apply = |x: &[f64], y: &mut [f64]| {
        system.matvec_into(exec, x, y);
        for i in 0..x.len() {
            y[i] += lc[i] * x[i];
        }
    };
    let sol = cg::solve(apply, &diag, &b, params.cg_tol, params.cg_max_iter)?;
    log::debug!(
        "matting solve on {h}x{w}: {} cg iterations, residual {:.3e}",
        sol.iterations,
        sol.residual
    );
    FloatMap::new(h, w, sol.x.iter().map(|&v| v as f32).collect())
}

/// Solves `(L + lambda diag(conf)) x = lambda diag(conf) target`.
///
/// On iteration-cap failure the error carries the final residual.
pub fn solve_matted(
    system: &SparseSystem,
    target: &FloatMap,
    confidence: &FloatMap,
    params: &MattingParams,
) -> Result<FloatMap> {
    solve_matted_with(Exec::default(), system, target, confidence, params)
}

/// Sequential twin of [`solve_matted`].
pub fn solve_matted_seq(
    system: &SparseSystem,
    target: &FloatMap,
    confidence: &FloatMap,
    params: &MattingParams,
) -> Result<FloatMap> {
    solve_matted_with(Exec::Sequential, system, target, confidence, params)
}

const MEAN_SCALE_RADIUS: usize = 2;
const MEAN_SCALE_GUARD: f64 = 1e-8;

/// Rescales `matted` so its 5x5 local means match `reference`:
/// `out = matted * mean5(reference) / (mean5(matted) + 1e-8)`.
/// Border windows shrink to the valid intersection.
pub fn local_mean_scale(matted: &FloatMap, reference: &FloatMap) -> Result<FloatMap> {
    local_mean_scale_with(Exec::default(), matted, reference)
}

fn local_mean_scale_with(
    exec: Exec,
    matted: &FloatMap,
    reference: &FloatMap,
) -> Result<FloatMap> {
    if !matted.same_shape(reference) {
        return Err(Error::ShapeMismatch(format!(
            "matted is {}x{}, reference is {}x{}",
            matted.height(),
            matted.width(),
            reference.height(),
            reference.width()
        )));
    }
    let (h, w) = (matted.height(), matted.width());
    let r = MEAN_SCALE_RADIUS;
    let mut out = vec![0.0f32; h * w];
    par::fill_rows(exec, &mut out, w, |y, orow| {
        let y_lo = y.saturating_sub(r);
        let y_hi = (y + r).min(h - 1);
        for (x, o) in orow.iter_mut().enumerate() {
            let x_lo = x.saturating_sub(r);
            let x_hi = (x + r).min(w - 1);
            let mut sum_m = 0.0f64;
            let mut sum_r = 0.0f64;
            let mut cnt = 0.0f64;
            for yy in y_lo..=y_hi {
                for xx in x_lo..=x_hi {
                    sum_m += matted.get(yy, xx) as f64;
                    sum_r += reference.get(yy, xx) as f64;
                    cnt += 1.0;
                }
            }
            let mean_m = sum_m / cnt;
            let mean_r = sum_r / cnt;
            *o = (matted.get(y, x) as f64 * mean_r / (mean_m + MEAN_SCALE_GUARD)) as f32;
        }
    });
    FloatMap::new(h, w, out)
}
