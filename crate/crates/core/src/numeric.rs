//! Small deterministic numeric helpers shared across modules.

use num_complex::Complex64;

const PAIRWISE_LEAF: usize = 64;

/// Pairwise (tree) summation. The reduction order depends only on the
/// slice length, so results are bit-stable for a given input.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= PAIRWISE_LEAF {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

pub fn pairwise_sum_complex(values: &[Complex64]) -> Complex64 {
    if values.len() <= PAIRWISE_LEAF {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum_complex(&values[..mid]) + pairwise_sum_complex(&values[mid..])
}

/// Pairwise sum of `f(0) + ... + f(len - 1)` without materializing the terms.
pub fn pairwise_sum_by<F>(len: usize, f: &F) -> Complex64
where
    F: Fn(usize) -> Complex64,
{
    fn rec<F: Fn(usize) -> Complex64>(lo: usize, hi: usize, f: &F) -> Complex64 {
        if hi - lo <= PAIRWISE_LEAF {
            return (lo..hi).map(f).sum();
        }
        let mid = lo + (hi - lo) / 2;
        rec(lo, mid, f) + rec(mid, hi, f)
    }
    rec(0, len, f)
}

/// Harmonic number `H_k = 1 + 1/2 + ... + 1/k`, with `H_0 = 0`.
pub fn harmonic(k: usize) -> f64 {
    // smallest terms first
    (1..=k).rev().map(|r| 1.0 / r as f64).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_small_values() {
        assert_eq!(harmonic(0), 0.0);
        assert_eq!(harmonic(1), 1.0);
        assert!((harmonic(2) - 1.5).abs() < 1e-15);
        assert!((harmonic(4) - 25.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn harmonic_matches_asymptotic_expansion() {
        let k = 1usize << 16;
        let kf = k as f64;
        let euler_gamma = 0.577_215_664_901_532_9;
        let approx = kf.ln() + euler_gamma + 1.0 / (2.0 * kf) - 1.0 / (12.0 * kf * kf);
        assert!((harmonic(k) - approx).abs() < 1e-12);
    }

    #[test]
    fn pairwise_sum_agrees_with_naive_on_integers() {
        let v: Vec<f64> = (0..10_000).map(|x| x as f64).collect();
        assert_eq!(pairwise_sum(&v), 49_995_000.0);
        let total = pairwise_sum_by(10_000, &|x| Complex64::new(x as f64, 1.0));
        assert_eq!(total, Complex64::new(49_995_000.0, 10_000.0));
    }
}
