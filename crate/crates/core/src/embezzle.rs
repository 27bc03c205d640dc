//! Embezzlement by permutations.
//!
//! `μ_R` has coordinates `1/√(r χ_R)`, `r = 1..R`, where `χ_R` is the R-th
//! harmonic number. For a unit vector `φ ∈ C^d`, a permutation of
//! `[d] × [R]` maps `φ ⊗ μ_R` close to `e_0 ⊗ μ_R`; with an extra phase
//! register `θ_T` the same holds for complex `φ`.
//!
//! Index conventions (0-based): `(j, r) ↦ j R + r` and
//! `(t, j, r) ↦ (t d + j) R + r`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numeric::{harmonic, pairwise_sum_by};
use crate::permutation::Permutation;

/// Largest permutation size materialized by this module.
pub const DEFAULT_SIZE_CAP: usize = 1 << 26;
const NORM_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct EmbezzleResult {
    pub permutation: Permutation,
    pub overlap: Complex64,
    pub guaranteed_bound: f64,
}

/// Coordinates `1/√(r χ_R)`, `r = 1..R`.
pub fn mu_state(r: usize) -> Result<Vec<f64>> {
    if r == 0 {
        return Err(Error::InvalidArgument("embezzlement state needs R >= 1".into()));
    }
    let chi = harmonic(r);
    Ok((1..=r).map(|k| 1.0 / (k as f64 * chi).sqrt()).collect())
}

/// Coordinates `ω^t / √T`, `t = 1..T`, with `ω = e^{2πi/T}`.
pub fn theta_state(t: usize) -> Result<Vec<Complex64>> {
    if t == 0 {
        return Err(Error::InvalidArgument("phase state needs T >= 1".into()));
    }
    let norm = 1.0 / (t as f64).sqrt();
    Ok((1..=t).map(|k| Complex64::from_polar(norm, TAU * (k % t) as f64 / t as f64)).collect())
}

/// `χ_{⌊R/d⌋} / χ_R`.
pub fn harmonic_ratio(d: usize, r: usize) -> f64 {
    harmonic(r / d) / harmonic(r)
}

/// Lower bound on the real overlap: `max(χ_{⌊R/d⌋}/χ_R, (ln R - ln d)/(ln R + 1))`.
pub fn real_bound(d: usize, r: usize) -> f64 {
    let log_bound = ((r as f64).ln() - (d as f64).ln()) / ((r as f64).ln() + 1.0);
    harmonic_ratio(d, r).max(log_bound)
}

/// Lower bound on the real part of the complex overlap: `χ_{⌊R/d⌋}/χ_R - 2π/T`.
pub fn complex_bound(d: usize, t: usize, r: usize) -> f64 {
    harmonic_ratio(d, r) - TAU / t as f64
}

fn check_unit(phi: &[Complex64]) -> Result<()> {
    if phi.is_empty() {
        return Err(Error::InvalidArgument("empty target vector".into()));
    }
    if phi.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite("target vector has non-finite coordinates".into()));
    }
    let norm = phi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > NORM_TOL {
        return Err(Error::InvalidArgument(format!("target vector has norm {norm}, expected 1")));
    }
    Ok(())
}

fn checked_size(factors: &[usize]) -> Result<usize> {
    factors
        .iter()
        .try_fold(1usize, |acc, &f| acc.checked_mul(f))
        .filter(|&s| s <= DEFAULT_SIZE_CAP)
        .ok_or_else(|| {
            Error::TooLarge(format!("permutation size {factors:?} exceeds {DEFAULT_SIZE_CAP} entries"))
        })
}

fn real_coordinates(phi: &[Complex64]) -> Result<Vec<f64>> {
    phi.iter()
        .map(|z| {
            if z.im != 0.0 || z.re < 0.0 {
                Err(Error::InvalidArgument(
                    "negative or complex coordinate: use complex path".into(),
                ))
            } else {
                Ok(z.re)
            }
        })
        .collect()
}

struct Head {
    value: f64,
    index: usize,
    block: usize,
}

impl PartialEq for Head {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Head {}

impl PartialOrd for Head {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Head {
    // larger value first, then smaller index
    fn cmp(&self, other: &Self) -> Ordering {
        self.value.total_cmp(&other.value).then_with(|| other.index.cmp(&self.index))
    }
}

/// `sorted[x]` = position of `x = jR + r` when the values `b_j μ_r` are
/// sorted decreasingly, ties by ascending index. Each block is already
/// decreasing in `r`, so this is a d-way merge.
fn sort_positions(b: &[f64], mu: &[f64]) -> Vec<u32> {
    let r_len = mu.len();
    let mut positions = vec![0u32; b.len() * r_len];
    let mut heap: BinaryHeap<Head> = b
        .iter()
        .enumerate()
        .map(|(j, &bj)| Head { value: bj * mu[0], index: j * r_len, block: j })
        .collect();
    let mut next = 0u32;
    while let Some(head) = heap.pop() {
        positions[head.index] = next;
        next += 1;
        let r = head.index - head.block * r_len + 1;
        if r < r_len {
            heap.push(Head { value: b[head.block] * mu[r], index: head.index + 1, block: head.block });
        }
    }
    positions
}

/// Permutation of `[dR]` sorting the coordinates of `φ ⊗ μ_R` decreasingly.
pub fn sort_permutation(phi: &[Complex64], r: usize) -> Result<Permutation> {
    check_unit(phi)?;
    let b = real_coordinates(phi)?;
    checked_size(&[b.len(), r])?;
    let mu = mu_state(r)?;
    Permutation::new(sort_positions(&b, &mu))
}

/// Sorting embezzlement for nonnegative `φ`: the overlap is
/// `⟨e_0 ⊗ μ_R | P_π (φ ⊗ μ_R)⟩ = Σ_{s<R} μ_s (sorted)_s`.
pub fn embezzle_real(phi: &[Complex64], r: usize) -> Result<EmbezzleResult> {
    check_unit(phi)?;
    let b = real_coordinates(phi)?;
    checked_size(&[b.len(), r])?;
    let mu = mu_state(r)?;
    let positions = sort_positions(&b, &mu);
    let mut sorted = vec![0.0; r];
    for (x, &p) in positions.iter().enumerate() {
        let p = p as usize;
        if p < r {
            sorted[p] = b[x / r] * mu[x % r];
        }
    }
    let overlap = pairwise_sum_by(r, &|s| Complex64::from(mu[s] * sorted[s]));
    let result = EmbezzleResult {
        permutation: Permutation::new(positions)?,
        overlap,
        guaranteed_bound: real_bound(b.len(), r),
    };
    Ok(result)
}

/// Writes `φ_j = b_j e^{2πi θ_j}` and returns `r_j = round(θ_j T) mod T`.
pub fn phase_shifts(phi: &[Complex64], t: usize) -> Vec<usize> {
    phi.iter()
        .map(|z| {
            if z.norm() == 0.0 {
                return 0;
            }
            let theta = (z.arg() / TAU).rem_euclid(1.0);
            ((theta * t as f64).round() as usize) % t
        })
        .collect()
}

/// `Q̃ = Σ_j Q^{r_j} ⊗ |j⟩⟨j|` on `[T] × [d]` (index `t d + j`), where
/// `Q|t⟩ = |t + 1 mod T⟩`.
pub fn phase_permutation(phi: &[Complex64], t: usize) -> Result<Permutation> {
    check_unit(phi)?;
    if t < 2 {
        return Err(Error::InvalidArgument("phase permutation needs T >= 2".into()));
    }
    let d = phi.len();
    checked_size(&[t, d])?;
    let shifts = phase_shifts(phi, t);
    let images = (0..t * d)
        .map(|x| {
            let (s, j) = (x / d, x % d);
            (((s + shifts[j]) % t) * d + j) as u32
        })
        .collect();
    Permutation::new(images)
}

/// Permutation of `[T] × [d] × [R]` applying the phase shifts and then
/// sorting by modulus. The overlap is
/// `(⟨θ_T| ⊗ ⟨e_0| ⊗ ⟨μ_R|) P_π (|θ_T⟩ ⊗ |φ⟩ ⊗ |μ_R⟩)`.
pub fn embezzle_complex(phi: &[Complex64], t: usize, r: usize) -> Result<EmbezzleResult> {
    check_unit(phi)?;
    if t < 2 {
        return Err(Error::InvalidArgument("complex embezzlement needs T >= 2".into()));
    }
    let d = phi.len();
    let size = checked_size(&[t, d, r])?;
    let mu = mu_state(r)?;
    let theta = theta_state(t)?;
    let b: Vec<f64> = phi.iter().map(|z| z.norm()).collect();
    let shifts = phase_shifts(phi, t);
    let positions = sort_positions(&b, &mu);
    let dr = d * r;
    let images: Vec<u32> = (0..size)
        .map(|x| {
            let (s, p) = (x / dr, x % dr);
            let j = p / r;
            (((s + shifts[j]) % t) * dr + positions[p] as usize) as u32
        })
        .collect();

    // only images landing in the e_0 block of the target contribute
    let overlap = pairwise_sum_by(size, &|x| {
        let y = images[x] as usize;
        let (ty, py) = (y / dr, y % dr);
        if py >= r {
            return Complex64::new(0.0, 0.0);
        }
        let (s, p) = (x / dr, x % dr);
        let source = theta[s] * phi[p / r] * mu[p % r];
        (theta[ty] * mu[py]).conj() * source
    });
    Ok(EmbezzleResult {
        permutation: Permutation::new(images)?,
        overlap,
        guaranteed_bound: complex_bound(d, t, r),
    })
}
