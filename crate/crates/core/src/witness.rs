//! Elements of the dual cone: sign matrices, twisted Gram matrices, and the
//! approximation of an arbitrary dual element by twisted Gram matrices.
//!
//! A twisted Gram matrix has `W_ii = ⟨ψ_i|ψ_i⟩` and, for parties with
//! common source α, `W_ij = ⟨P_{π_i^α} ψ_i | P_{π_j^α} ψ_j⟩`. Every α-block
//! is a Gram matrix, hence PSD.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::embezzle;
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, HermitianMatrix};
use crate::network::Network;
use crate::numeric::pairwise_sum_by;
use crate::permutation::Permutation;

/// Eigenvalues below this (relative) are dropped when factoring blocks.
const CLIP_TOL: f64 = 1e-9;

/// `ε(α)` per source, each of unit modulus.
#[derive(Clone, Debug, PartialEq)]
pub struct SignAssignment {
    values: Vec<Complex64>,
}

impl SignAssignment {
    pub fn new(values: Vec<Complex64>) -> Result<Self> {
        if let Some(z) = values.iter().find(|z| !((z.norm() - 1.0).abs() <= 1e-12)) {
            return Err(Error::InvalidArgument(format!("sign {z} does not have modulus 1")));
        }
        Ok(Self { values })
    }

    pub fn from_signs(signs: &[f64]) -> Result<Self> {
        Self::new(signs.iter().map(|&s| Complex64::new(s, 0.0)).collect())
    }

    /// All `2^m` real assignments, the k-th having `ε(α) = -1` iff bit α of k is set.
    pub fn all_real(m: usize) -> impl Iterator<Item = SignAssignment> {
        (0..1u64 << m).map(move |k| SignAssignment {
            values: (0..m).map(|a| Complex64::new(if k >> a & 1 == 1 { -1.0 } else { 1.0 }, 0.0)).collect(),
        })
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }
}

/// Vectors `ψ_i ∈ C^d` and permutations `π_i^α` keyed by (party, source).
#[derive(Clone, Debug, PartialEq)]
pub struct TwistedGramSpec {
    d: usize,
    vectors: Vec<Vec<Complex64>>,
    perms: BTreeMap<(usize, usize), Permutation>,
}

impl TwistedGramSpec {
    pub fn new(
        net: &Network,
        d: usize,
        vectors: Vec<Vec<Complex64>>,
        perms: BTreeMap<(usize, usize), Permutation>,
    ) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidArgument("twisted Gram dimension must be positive".into()));
        }
        if vectors.len() != net.n_parties() {
            return Err(Error::Dimension(format!(
                "{} vectors for {} parties",
                vectors.len(),
                net.n_parties()
            )));
        }
        for (i, v) in vectors.iter().enumerate() {
            if v.len() != d {
                return Err(Error::Dimension(format!(
                    "vector of party '{}' has length {}, expected {d}",
                    net.party_name(i),
                    v.len()
                )));
            }
            if v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::NonFinite(format!("vector of party '{}'", net.party_name(i))));
            }
        }
        for (&(i, alpha), p) in &perms {
            if i >= net.n_parties() || alpha >= net.n_sources() || !net.is_adjacent(alpha, i) {
                return Err(Error::InvalidArgument(format!(
                    "permutation given for a non-adjacent pair ({i}, {alpha})"
                )));
            }
            if p.len() != d {
                return Err(Error::Dimension(format!(
                    "permutation for '{}|{}' has size {}, expected {d}",
                    net.party_name(i),
                    net.source(alpha).name,
                    p.len()
                )));
            }
        }
        for (alpha, s) in net.sources().iter().enumerate() {
            for &i in &s.parties {
                if !perms.contains_key(&(i, alpha)) {
                    return Err(Error::InvalidArgument(format!(
                        "missing permutation for '{}|{}'",
                        net.party_name(i),
                        s.name
                    )));
                }
            }
        }
        Ok(Self { d, vectors, perms })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn vectors(&self) -> &[Vec<Complex64>] {
        &self.vectors
    }

    pub fn perm(&self, party: usize, source: usize) -> &Permutation {
        &self.perms[&(party, source)]
    }

    pub fn perms(&self) -> &BTreeMap<(usize, usize), Permutation> {
        &self.perms
    }
}

/// `Γ_ε`: diagonal 1, `ε(α)` above and `conj(ε(α))` below the diagonal on
/// the pair of source α, 0 elsewhere.
pub fn build_sign_matrix(net: &Network, eps: &SignAssignment) -> Result<HermitianMatrix> {
    net.require_bipartite("sign matrix undefined")?;
    if eps.values.len() != net.n_sources() {
        return Err(Error::Dimension(format!(
            "{} signs for {} sources",
            eps.values.len(),
            net.n_sources()
        )));
    }
    let n = net.n_parties();
    let mut g = CMatrix::identity(n, n);
    for (alpha, s) in net.sources().iter().enumerate() {
        let (i, j) = (s.parties[0], s.parties[1]);
        g[(i, j)] = eps.values[alpha];
        g[(j, i)] = eps.values[alpha].conj();
    }
    Ok(HermitianMatrix::hermitian_part(g))
}

/// A `d = 2` twisted Gram spec reproducing a real sign matrix:
/// `ψ_i = (e_0 - e_1)/√2`, identity on the lower endpoint of each source and
/// the swap on the upper one when `ε(α) = -1` (the swap negates `ψ_i`).
pub fn sign_matrix_spec(net: &Network, eps: &SignAssignment) -> Result<TwistedGramSpec> {
    net.require_bipartite("sign matrix undefined")?;
    if eps.values.len() != net.n_sources() {
        return Err(Error::Dimension(format!(
            "{} signs for {} sources",
            eps.values.len(),
            net.n_sources()
        )));
    }
    let h = 1.0 / 2f64.sqrt();
    let psi = vec![Complex64::new(h, 0.0), Complex64::new(-h, 0.0)];
    let mut perms = BTreeMap::new();
    for (alpha, s) in net.sources().iter().enumerate() {
        let e = eps.values[alpha];
        let flip = if e == Complex64::new(-1.0, 0.0) {
            true
        } else if e == Complex64::new(1.0, 0.0) {
            false
        } else {
            return Err(Error::Unsupported(format!("sign {e} is not ±1")));
        };
        perms.insert((s.parties[0], alpha), Permutation::identity(2));
        perms.insert((s.parties[1], alpha), if flip { Permutation::rotation(2, 1) } else { Permutation::identity(2) });
    }
    TwistedGramSpec::new(net, 2, vec![psi; net.n_parties()], perms)
}

/// The twisted Gram matrix of `spec`; zero on pairs without a common source.
pub fn build_twisted_gram(net: &Network, spec: &TwistedGramSpec) -> Result<HermitianMatrix> {
    net.require_ndcs("ambiguous block")?;
    if spec.vectors.len() != net.n_parties() {
        return Err(Error::Dimension("twisted Gram spec was built for a different network".into()));
    }
    let n = net.n_parties();
    let mut w = CMatrix::zeros(n, n);
    for i in 0..n {
        let v = &spec.vectors[i];
        w[(i, i)] = pairwise_sum_by(v.len(), &|x| Complex64::from(v[x].norm_sqr()));
    }
    for (alpha, s) in net.sources().iter().enumerate() {
        for (a, &i) in s.parties.iter().enumerate() {
            for &j in &s.parties[a + 1..] {
                let wij = twisted_entry(spec, i, j, alpha);
                w[(i, j)] = wij;
                w[(j, i)] = wij.conj();
            }
        }
    }
    Ok(HermitianMatrix::hermitian_part(w))
}

/// `Σ_x conj(ψ_i[x]) ψ_j[π_j^{-1}(π_i(x))]`.
fn twisted_entry(spec: &TwistedGramSpec, i: usize, j: usize, alpha: usize) -> Complex64 {
    let pi = spec.perm(i, alpha);
    let pj_inv = spec.perm(j, alpha).inverse();
    let (vi, vj) = (&spec.vectors[i], &spec.vectors[j]);
    pairwise_sum_by(spec.d, &|x| vi[x].conj() * vj[pj_inv.apply(pi.apply(x))])
}

/// Every α-block of `w` PSD at `tol`. False on a dimension mismatch.
pub fn is_in_dual_cone(net: &Network, w: &HermitianMatrix, tol: f64) -> bool {
    w.n() == net.n_parties()
        && net.sources().iter().all(|s| w.principal_submatrix(&s.parties).is_psd(tol))
}

/// Output of [`approximate_dual_by_twisted_gram`].
#[derive(Clone, Debug)]
pub struct DualApproximation {
    pub spec: TwistedGramSpec,
    pub approx: HermitianMatrix,
    /// `max |approx_ij - w_ij|` over common-source pairs.
    pub max_block_error: f64,
    /// A bound on `max_block_error` derived from the embezzlement guarantee
    /// and the Gram factorization error.
    pub error_bound: f64,
    /// Common Gram dimension (largest block size).
    pub gram_dim: usize,
}

/// Approximates a dual element by a twisted Gram matrix of dimension
/// `T · d_g · R`.
///
/// Each α-block of `w` is factored as a Gram matrix of vectors `φ_i^α` in
/// `C^{d_g}`. With `ψ_i = √(w_ii) θ_T ⊗ e_0 ⊗ μ_R`, the permutation
/// `π_i^α` is the inverse of the complex embezzling permutation for the
/// normalized `φ_i^α`, so that `P_{π_i^α} ψ_i ≈ √(w_ii) θ_T ⊗ φ̂_i^α ⊗ μ_R`.
pub fn approximate_dual_by_twisted_gram(
    net: &Network,
    w: &HermitianMatrix,
    t: usize,
    r: usize,
) -> Result<DualApproximation> {
    net.require_ndcs("ambiguous block")?;
    if w.n() != net.n_parties() {
        return Err(Error::Dimension(format!(
            "matrix is {}x{} but the network has {} parties",
            w.n(),
            w.n(),
            net.n_parties()
        )));
    }
    if !is_in_dual_cone(net, w, 1e-9) {
        return Err(Error::InvalidArgument("not a dual element: some source block is not PSD".into()));
    }
    if t < 2 || r < 2 {
        return Err(Error::InvalidArgument("T and R must be at least 2".into()));
    }
    let gram_dim = net.sources().iter().map(|s| s.parties.len()).max().unwrap_or(1);
    let size = [t, gram_dim, r]
        .iter()
        .try_fold(1usize, |acc, &f| acc.checked_mul(f))
        .filter(|&s| s <= embezzle::DEFAULT_SIZE_CAP)
        .ok_or_else(|| Error::TooLarge(format!("T·d·R = {t}·{gram_dim}·{r} is too large")))?;

    let diag = w.diag_real();
    let theta = embezzle::theta_state(t)?;
    let mu = embezzle::mu_state(r)?;
    // ψ_i = √w_ii θ ⊗ e_0 ⊗ μ
    let vectors: Vec<Vec<Complex64>> = diag
        .iter()
        .map(|&wii| {
            let scale = wii.max(0.0).sqrt();
            (0..size)
                .map(|x| {
                    let (s, p) = (x / (gram_dim * r), x % (gram_dim * r));
                    if p < r { theta[s] * (scale * mu[p]) } else { Complex64::new(0.0, 0.0) }
                })
                .collect()
        })
        .collect();

    let bound = embezzle::complex_bound(gram_dim, t, r);
    let fidelity_gap = (2.0 * (1.0 - bound).max(0.0)).sqrt();
    let mut perms = BTreeMap::new();
    let mut factor_error: f64 = 0.0;
    for (alpha, s) in net.sources().iter().enumerate() {
        let block = w.principal_submatrix(&s.parties);
        let k = s.parties.len();
        let units = gram_units(&block, gram_dim);
        for a in 0..k {
            for b in (a + 1)..k {
                let (i, j) = (s.parties[a], s.parties[b]);
                let gram: Complex64 = units[a].iter().zip(&units[b]).map(|(x, y)| x.conj() * y).sum();
                let ideal = gram * (diag[i].max(0.0) * diag[j].max(0.0)).sqrt();
                factor_error = factor_error.max((ideal - w.get(i, j)).norm());
            }
        }
        for (a, &i) in s.parties.iter().enumerate() {
            let e = embezzle::embezzle_complex(&units[a], t, r)?;
            perms.insert((i, alpha), e.permutation.inverse());
        }
    }

    let spec = TwistedGramSpec::new(net, size, vectors, perms)?;
    let approx = build_twisted_gram(net, &spec)?;
    let mut max_block_error: f64 = 0.0;
    let mut embezzle_error: f64 = 0.0;
    for s in net.sources() {
        for (a, &i) in s.parties.iter().enumerate() {
            for &j in &s.parties[a + 1..] {
                max_block_error = max_block_error.max((approx.get(i, j) - w.get(i, j)).norm());
                let weight = (diag[i].max(0.0) * diag[j].max(0.0)).sqrt();
                embezzle_error = embezzle_error.max(2.0 * fidelity_gap * weight);
            }
        }
    }
    Ok(DualApproximation {
        spec,
        approx,
        max_block_error,
        error_bound: embezzle_error + factor_error + 1e-12 * w.max_abs().max(1.0),
        gram_dim,
    })
}

/// Unit Gram vectors `φ_a ∈ C^dim` of a PSD block, `⟨φ_a, φ_b⟩ √(B_aa B_bb) ≈ B_ab`.
/// A party with a vanishing vector gets `e_0`.
fn gram_units(block: &HermitianMatrix, dim: usize) -> Vec<Vec<Complex64>> {
    let k = block.n();
    let e = block.eigen();
    let scale = e.eigenvalues.iter().fold(1.0f64, |m, l| m.max(l.abs()));
    // largest eigenvalue first
    let kept: Vec<usize> = (0..k).rev().filter(|&c| e.eigenvalues[c] > CLIP_TOL * scale).collect();
    (0..k)
        .map(|a| {
            let mut x = vec![Complex64::new(0.0, 0.0); dim];
            for (slot, &c) in kept.iter().enumerate() {
                // conjugated so that ⟨x_a, x_b⟩ = Σ_c λ_c v_ac conj(v_bc) = B_ab
                x[slot] = (e.eigenvectors[(a, c)] * e.eigenvalues[c].sqrt()).conj();
            }
            let norm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm > 0.0 {
                x.iter_mut().for_each(|z| *z /= norm);
            } else {
                x[0] = Complex64::new(1.0, 0.0);
            }
            x
        })
        .collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VectorJson {
    pub re: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<f64>>,
}

impl VectorJson {
    pub fn to_vector(&self) -> Result<Vec<Complex64>> {
        if self.im.as_ref().is_some_and(|im| im.len() != self.re.len()) {
            return Err(Error::Parse("mismatched re/im lengths".into()));
        }
        let im = self.im.clone().unwrap_or_else(|| vec![0.0; self.re.len()]);
        Ok(self.re.iter().zip(im).map(|(&a, b)| Complex64::new(a, b)).collect())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwistedGramSpecJson {
    pub d: usize,
    pub vectors: BTreeMap<String, VectorJson>,
    /// Keyed `"party|source"`.
    pub perms: BTreeMap<String, Permutation>,
}

/// Resolves a `"party|source"` key.
pub(crate) fn pair_key(net: &Network, key: &str) -> Result<(usize, usize)> {
    let (party, source) = key
        .split_once('|')
        .ok_or_else(|| Error::Parse(format!("permutation key '{key}' is not of the form party|source")))?;
    let i = net.party_index(party).ok_or_else(|| Error::Parse(format!("unknown party '{party}' in '{key}'")))?;
    let alpha = net
        .source_index(source)
        .ok_or_else(|| Error::Parse(format!("unknown source '{source}' in '{key}'")))?;
    Ok((i, alpha))
}

impl TwistedGramSpecJson {
    pub fn into_spec(self, net: &Network) -> Result<TwistedGramSpec> {
        for name in self.vectors.keys() {
            if net.party_index(name).is_none() {
                return Err(Error::Parse(format!("unknown party '{name}' in vectors")));
            }
        }
        let mut vectors = Vec::with_capacity(net.n_parties());
        for name in net.party_names() {
            let v = self
                .vectors
                .get(name)
                .ok_or_else(|| Error::Parse(format!("missing vector for party '{name}'")))?;
            vectors.push(v.to_vector().map_err(|e| Error::Parse(format!("vector of party '{name}': {e}")))?);
        }
        let mut perms = BTreeMap::new();
        for (key, p) in self.perms {
            perms.insert(pair_key(net, &key)?, p);
        }
        TwistedGramSpec::new(net, self.d, vectors, perms)
    }

    pub fn from_spec(net: &Network, spec: &TwistedGramSpec) -> Self {
        let vectors = net
            .party_names()
            .iter()
            .zip(&spec.vectors)
            .map(|(name, v)| {
                let json = VectorJson { re: v.iter().map(|z| z.re).collect(), im: Some(v.iter().map(|z| z.im).collect()) };
                (name.clone(), json)
            })
            .collect();
        let perms = spec
            .perms
            .iter()
            .map(|(&(i, alpha), p)| (format!("{}|{}", net.party_name(i), net.source(alpha).name), p.clone()))
            .collect();
        Self { d: spec.d, vectors, perms }
    }
}

pub fn parse_twisted_gram_spec(text: &str, net: &Network) -> Result<TwistedGramSpec> {
    let json: TwistedGramSpecJson = serde_json::from_str(text)?;
    json.into_spec(net)
}
