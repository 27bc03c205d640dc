use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bijection of `{0, …, d-1}`. As an operator, `P_π |x⟩ = |π(x)⟩`.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct Permutation {
    images: Vec<u32>,
}

impl Permutation {
    pub fn new(images: Vec<u32>) -> Result<Self> {
        let d = images.len();
        if d == 0 {
            return Err(Error::InvalidArgument("permutation of an empty set".into()));
        }
        if u32::try_from(d).is_err() {
            return Err(Error::TooLarge(format!("permutation of size {d}")));
        }
        let mut seen = vec![false; d];
        for &x in &images {
            let x = x as usize;
            if x >= d || std::mem::replace(&mut seen[x], true) {
                return Err(Error::InvalidArgument(format!(
                    "not a bijection of 0..{d}: {}",
                    preview(&images)
                )));
            }
        }
        Ok(Self { images })
    }

    pub fn identity(d: usize) -> Self {
        Self { images: (0..d as u32).collect() }
    }

    /// `x ↦ x + t mod d`.
    pub fn rotation(d: usize, t: i64) -> Self {
        let shift = t.rem_euclid(d as i64) as usize;
        Self { images: (0..d).map(|x| ((x + shift) % d) as u32).collect() }
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn images(&self) -> &[u32] {
        &self.images
    }

    pub fn apply(&self, x: usize) -> usize {
        self.images[x] as usize
    }

    pub fn is_identity(&self) -> bool {
        self.images.iter().enumerate().all(|(x, &y)| x == y as usize)
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0u32; self.images.len()];
        for (x, &y) in self.images.iter().enumerate() {
            inv[y as usize] = x as u32;
        }
        Self { images: inv }
    }

    /// `self ∘ other`, i.e. `x ↦ self(other(x))`.
    pub fn compose(&self, other: &Permutation) -> Result<Self> {
        if self.len() != other.len() {
            return Err(Error::Dimension(format!(
                "cannot compose permutations of sizes {} and {}",
                self.len(),
                other.len()
            )));
        }
        Ok(Self { images: other.images.iter().map(|&x| self.images[x as usize]).collect() })
    }

    /// `P_π v`: the entry at `x` moves to `π(x)`.
    pub fn permute(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if v.len() != self.len() {
            return Err(Error::Dimension(format!(
                "vector of length {} for a permutation of {}",
                v.len(),
                self.len()
            )));
        }
        let mut out = vec![Complex64::new(0.0, 0.0); v.len()];
        for (x, &y) in self.images.iter().enumerate() {
            out[y as usize] = v[x];
        }
        Ok(out)
    }
}

fn preview(images: &[u32]) -> String {
    if images.len() <= 16 {
        format!("{images:?}")
    } else {
        format!("{:?}…", &images[..16])
    }
}

impl TryFrom<Vec<u32>> for Permutation {
    type Error = Error;

    fn try_from(images: Vec<u32>) -> Result<Self> {
        Permutation::new(images)
    }
}

impl From<Permutation> for Vec<u32> {
    fn from(p: Permutation) -> Self {
        p.images
    }
}

impl fmt::Debug for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Permutation{}", preview(&self.images))
    }
}
