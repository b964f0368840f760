//! Jacobi-preconditioned conjugate gradient.
//!
//! Inner products use the fixed pairwise order from [`crate::math`] and the
//! iteration itself is sequential, so a solve is bitwise reproducible; only
//! the caller-supplied operator may parallelize internally (per-element,
//! order-free).

use crate::error::{Error, Result};
use crate::math::pairwise_dot;

#[derive(Debug)]
pub(crate) struct CgSolution {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

/// Solves `A x = b` for symmetric positive semi-definite `A` given the
/// operator `apply(x, out)` and the diagonal of `A` for preconditioning.
/// Convergence: `||r||_2 <= tol * ||b||_2`.
pub(crate) fn solve(
    apply: impl Fn(&[f64], &mut [f64]),
    diag: &[f64],
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<CgSolution> {
    let n = b.len();
    let b_norm = pairwise_dot(b, b).sqrt();
    if b_norm == 0.0 {
        return Ok(CgSolution {
            x: vec![0.0; n],
            iterations: 0,
            residual: 0.0,
        });
    }
    let target = tol * b_norm;
    // Non-positive diagonal entries (possible only in degenerate corners)
    // fall back to an identity preconditioner element.
    let inv_m: Vec<f64> = diag
        .iter()
        .map(|&d| if d > f64::MIN_POSITIVE { 1.0 / d } else { 1.0 })
        .collect();

    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_m).map(|(ri, mi)| ri * mi).collect();
    let mut p = z.clone();
    let mut rz = pairwise_dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut residual = b_norm;

    for iter in 1..=max_iter {
        apply(&p, &mut ap);
        let p_ap = pairwise_dot(&p, &ap);
        if !(p_ap > 0.0) {
            // Search direction with non-positive curvature: the operator is
            // not PSD (or we hit exact stagnation); report non-convergence.
            return Err(Error::SolverDidNotConverge {
                residual,
                tolerance: tol,
                iterations: iter - 1,
            });
        }
        let alpha = rz / p_ap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        residual = pairwise_dot(&r, &r).sqrt();
        if residual <= target {
            return Ok(CgSolution {
                x,
                iterations: iter,
                residual,
            });
        }
        for i in 0..n {
            z[i] = r[i] * inv_m[i];
        }
        let rz_next = pairwise_dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::SolverDidNotConverge {
        residual,
        tolerance: tol,
        iterations: max_iter,
    })
}
