//! Small numeric helpers: ELU and deterministic reductions.
//!
//! All loss and solver reductions go through [`pairwise_sum_by`] so the
//! summation tree depends only on the element count, never on thread
//! scheduling. Terms are visited in row-major index order.

/// Exponential linear unit: `z` for `z >= 0`, `e^z - 1` otherwise.
#[inline]
pub fn elu(z: f64) -> f64 {
    if z >= 0.0 {
        z
    } else {
        z.exp() - 1.0
    }
}

/// Derivative of [`elu`]; the kink at 0 takes the linear branch.
#[inline]
pub fn elu_prime(z: f64) -> f64 {
    if z >= 0.0 {
        1.0
    } else {
        z.exp()
    }
}

const PAIRWISE_LEAF: usize = 64;

/// Pairwise (cascade) sum of `f(lo), ..., f(hi - 1)`.
///
/// Splits at the midpoint down to a fixed leaf size that is summed
/// left-to-right, giving a reduction order that is a pure function of
/// `hi - lo`.
pub fn pairwise_sum_by<F: Fn(usize) -> f64>(lo: usize, hi: usize, f: &F) -> f64 {
    debug_assert!(lo <= hi);
    let n = hi - lo;
    if n <= PAIRWISE_LEAF {
        let mut acc = 0.0;
        for i in lo..hi {
            acc += f(i);
        }
        acc
    } else {
        let mid = lo + n / 2;
        pairwise_sum_by(lo, mid, f) + pairwise_sum_by(mid, hi, f)
    }
}

/// Pairwise sum of a slice.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    pairwise_sum_by(0, v.len(), &|i| v[i])
}

/// Pairwise dot product of two equally long slices.
pub fn pairwise_dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    pairwise_sum_by(0, a.len(), &|i| a[i] * b[i])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn elu_branches() {
        assert_eq!(elu(2.5), 2.5);
        assert_eq!(elu(0.0), 0.0);
        assert!((elu(-1.0) - ((-1.0f64).exp() - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn elu_is_continuous_at_zero() {
        let eps = 1e-9;
        assert!((elu(eps) - elu(-eps)).abs() < 1e-8);
        assert!((elu_prime(eps) - elu_prime(-eps)).abs() < 1e-8);
    }

    #[test]
    fn pairwise_matches_naive_on_small_input() {
        let v: Vec<f64> = (0..10).map(|i| i as f64 * 0.1).collect();
        let naive: f64 = v.iter().sum();
        assert!((pairwise_sum(&v) - naive).abs() < 1e-12);
    }

    #[test]
    fn pairwise_is_length_deterministic() {
        let v: Vec<f64> = (0..1000).map(|i| ((i * 37) % 97) as f64 * 1e-3).collect();
        let a = pairwise_sum(&v);
        let b = pairwise_sum(&v);
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn pairwise_dot_matches_naive() {
        let a: Vec<f64> = (0..200).map(|i| (i as f64).sin()).collect();
        let b: Vec<f64> = (0..200).map(|i| (i as f64).cos()).collect();
        let naive: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        assert!((pairwise_dot(&a, &b) - naive).abs() < 1e-10);
    }

    proptest::proptest! {
        #[test]
        fn pairwise_sum_tracks_naive(v in proptest::collection::vec(-1e3f64..1e3, 0..400)) {
            let naive: f64 = v.iter().sum();
            let scale: f64 = v.iter().map(|x| x.abs()).sum::<f64>() + 1.0;
            proptest::prop_assert!((pairwise_sum(&v) - naive).abs() <= 1e-10 * scale);
        }

        #[test]
        fn pairwise_sum_is_range_shift_invariant(
            v in proptest::collection::vec(-1e3f64..1e3, 1..200),
            pad in 0usize..50,
        ) {
            // The tree depends only on the element count, not where the
            // range sits, so a shifted window over padded data is bitwise
            // identical.
            let mut padded = vec![0.0; pad];
            padded.extend_from_slice(&v);
            let direct = pairwise_sum(&v);
            let shifted = pairwise_sum_by(pad, pad + v.len(), &|i| padded[i]);
            proptest::prop_assert_eq!(direct.to_bits(), shifted.to_bits());
        }
    }
}
