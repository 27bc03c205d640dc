//! Non-fanout inflations and the compressions that turn an inflated
//! covariance matrix into a Schur product `C ∘ W`.
//!
//! Party copy `(i, k)` has index `i d + k`; source copy `(α, k)` has index
//! `α d + k` and is adjacent to party copy `(i, π_i^α⁻¹(k))`. Equivalently,
//! party copy `(i, k)` receives source copy `(α, π_i^α(k))`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, HermitianMatrix};
use crate::network::Network;
use crate::permutation::Permutation;
use crate::simulate::{ClassicalModel, OutputFunctions, PartyResponse, SourceDistribution};
use crate::witness::{pair_key, SignAssignment, TwistedGramSpec};

const ENTRY_TOL: f64 = 1e-9;
const PARALLEL_TOL: f64 = 1e-8;

/// Order `d` and a permutation of `{0, …, d-1}` per adjacent (party, source).
#[derive(Clone, Debug, PartialEq)]
pub struct InflationSpec {
    d: usize,
    perms: BTreeMap<(usize, usize), Permutation>,
}

impl InflationSpec {
    /// Checks sizes and adjacency; completeness is checked where a full
    /// spec is needed.
    pub fn new(net: &Network, d: usize, perms: BTreeMap<(usize, usize), Permutation>) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidArgument("inflation order must be positive".into()));
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
        Ok(Self { d, perms })
    }

    /// Every adjacent pair gets the identity.
    pub fn identity(net: &Network, d: usize) -> Result<Self> {
        let mut perms = BTreeMap::new();
        for (alpha, s) in net.sources().iter().enumerate() {
            for &i in &s.parties {
                perms.insert((i, alpha), Permutation::identity(d));
            }
        }
        Self::new(net, d, perms)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn perms(&self) -> &BTreeMap<(usize, usize), Permutation> {
        &self.perms
    }

    pub fn perm(&self, party: usize, source: usize) -> Option<&Permutation> {
        self.perms.get(&(party, source))
    }

    fn require_complete(&self, net: &Network) -> Result<()> {
        for (alpha, s) in net.sources().iter().enumerate() {
            for &i in &s.parties {
                match self.perms.get(&(i, alpha)) {
                    Some(p) if p.len() == self.d => {}
                    _ => {
                        return Err(Error::InvalidArgument(format!(
                            "incomplete spec: no permutation for '{}|{}'",
                            net.party_name(i),
                            s.name
                        )))
                    }
                }
            }
        }
        Ok(())
    }

    /// Twisted Gram spec with these permutations and the given vectors.
    pub fn twisted_gram_spec(&self, net: &Network, vectors: Vec<Vec<Complex64>>) -> Result<TwistedGramSpec> {
        self.require_complete(net)?;
        TwistedGramSpec::new(net, self.d, vectors, self.perms.clone())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct InflatedNetwork {
    base: Network,
    spec: InflationSpec,
    network: Network,
}

impl InflatedNetwork {
    pub fn base(&self) -> &Network {
        &self.base
    }

    pub fn spec(&self) -> &InflationSpec {
        &self.spec
    }

    /// The inflation as an ordinary network over `n d` parties and `m d` sources.
    pub fn network(&self) -> &Network {
        &self.network
    }

    pub fn party_copy(&self, i: usize, k: usize) -> usize {
        i * self.spec.d + k
    }

    pub fn source_copy(&self, alpha: usize, k: usize) -> usize {
        alpha * self.spec.d + k
    }

    /// Same source distributions and responses on every copy. Slot and input
    /// orders carry over because copy indices are monotone in the base index.
    pub fn lift_model(&self, model: &ClassicalModel) -> Result<ClassicalModel> {
        let d = self.spec.d;
        let sources: Vec<SourceDistribution> =
            model.sources().iter().flat_map(|s| std::iter::repeat_n(s.clone(), d)).collect();
        let responses: Vec<PartyResponse> =
            model.responses().iter().flat_map(|r| std::iter::repeat_n(r.clone(), d)).collect();
        ClassicalModel::new(&self.network, sources, responses)
    }

    pub fn lift_functions(&self, f: &OutputFunctions) -> OutputFunctions {
        let d = self.spec.d;
        OutputFunctions { values: f.values.iter().flat_map(|v| std::iter::repeat_n(v.clone(), d)).collect() }
    }
}

/// Builds the inflated network. Party copies are named `A1[1]`, … and
/// source copies `alpha[1]`, … (copy numbers from 1).
pub fn build_inflation(net: &Network, spec: &InflationSpec) -> Result<InflatedNetwork> {
    spec.require_complete(net)?;
    let d = spec.d;
    let names: Vec<String> = net
        .party_names()
        .iter()
        .flat_map(|name| (1..=d).map(move |k| format!("{name}[{k}]")))
        .collect();
    let mut sources = Vec::with_capacity(net.n_sources() * d);
    for (alpha, s) in net.sources().iter().enumerate() {
        for k in 0..d {
            let parties = s
                .parties
                .iter()
                .map(|&i| i * d + spec.perms[&(i, alpha)].inverse().apply(k))
                .collect();
            sources.push((format!("{}[{}]", s.name, k + 1), parties));
        }
    }
    let network = Network::new(names, sources)?;
    Ok(InflatedNetwork { base: net.clone(), spec: spec.clone(), network })
}

/// `d = 2`: identity everywhere except the swap on the higher-index endpoint
/// of each source with `ε(α) = -1`.
pub fn sign_inflation(net: &Network, eps: &SignAssignment) -> Result<InflationSpec> {
    net.require_bipartite("sign inflation needs bipartite sources")?;
    if eps.values().len() != net.n_sources() {
        return Err(Error::Dimension(format!(
            "{} signs for {} sources",
            eps.values().len(),
            net.n_sources()
        )));
    }
    let mut shifts = Vec::with_capacity(net.n_sources());
    for &e in eps.values() {
        if e == Complex64::new(1.0, 0.0) {
            shifts.push(0);
        } else if e == Complex64::new(-1.0, 0.0) {
            shifts.push(1);
        } else {
            return Err(Error::Unsupported(format!("sign {e} is not ±1")));
        }
    }
    shift_inflation(net, &shifts, 2)
}

/// Source copy `k` of `α = {i < j}` is adjacent to `(i, k)` and
/// `(j, k + t_α mod d)`: identity on `i`, `x ↦ x - t_α` on `j`.
pub fn shift_inflation(net: &Network, shifts: &[usize], d: usize) -> Result<InflationSpec> {
    net.require_bipartite("shift inflation needs bipartite sources")?;
    if shifts.len() != net.n_sources() {
        return Err(Error::Dimension(format!(
            "{} shifts for {} sources",
            shifts.len(),
            net.n_sources()
        )));
    }
    if d == 0 {
        return Err(Error::InvalidArgument("inflation order must be positive".into()));
    }
    if let Some(t) = shifts.iter().find(|&&t| t >= d) {
        return Err(Error::InvalidArgument(format!("shift {t} is not below d = {d}")));
    }
    let mut perms = BTreeMap::new();
    for (alpha, s) in net.sources().iter().enumerate() {
        perms.insert((s.parties[0], alpha), Permutation::identity(d));
        perms.insert((s.parties[1], alpha), Permutation::rotation(d, -(shifts[alpha] as i64)));
    }
    InflationSpec::new(net, d, perms)
}

/// Assembles the inflated covariance:
/// block `(i, i)` is `var_i I_d`, block `(i, j)` with common source α is
/// `c_ij P†_{π_i^α} P_{π_j^α}` (entry `[k, l] = c_ij [π_i(k) = π_j(l)]`), and
/// all other blocks vanish.
pub fn inflated_covariance(
    net: &Network,
    c: &HermitianMatrix,
    spec: &InflationSpec,
    variances: &[f64],
) -> Result<HermitianMatrix> {
    net.require_ndcs("ambiguous block")?;
    spec.require_complete(net)?;
    let n = net.n_parties();
    if c.n() != n || variances.len() != n {
        return Err(Error::Dimension(format!(
            "covariance is {}x{} and {} variances are given for {n} parties",
            c.n(),
            c.n(),
            variances.len()
        )));
    }
    for i in 0..n {
        let cii = c.get(i, i).re;
        if (cii - variances[i]).abs() > ENTRY_TOL * cii.abs().max(1.0) {
            return Err(Error::InvalidArgument(format!(
                "entry ({}, {}) = {cii} differs from the variance {}",
                i + 1,
                i + 1,
                variances[i]
            )));
        }
        for j in 0..n {
            if i != j && !net.connected(i, j) && c.get(i, j).norm() > ENTRY_TOL {
                return Err(Error::InvalidArgument(format!(
                    "entry ({}, {}) = {:.3e} is nonzero but parties '{}' and '{}' share no source",
                    i + 1,
                    j + 1,
                    c.get(i, j).norm(),
                    net.party_name(i),
                    net.party_name(j)
                )));
            }
        }
    }
    let d = spec.d;
    let mut out = CMatrix::zeros(n * d, n * d);
    for i in 0..n {
        for k in 0..d {
            out[(i * d + k, i * d + k)] = Complex64::new(variances[i], 0.0);
        }
    }
    for (alpha, s) in net.sources().iter().enumerate() {
        for &i in &s.parties {
            for &j in &s.parties {
                if i == j {
                    continue;
                }
                let (pi, pj) = (&spec.perms[&(i, alpha)], &spec.perms[&(j, alpha)]);
                // (i, k) and (j, l) share a source copy iff π_i(k) = π_j(l)
                let pj_inv = pj.inverse();
                for k in 0..d {
                    let l = pj_inv.apply(pi.apply(k));
                    out[(i * d + k, j * d + l)] = c.get(i, j);
                }
            }
        }
    }
    Ok(HermitianMatrix::hermitian_part(out))
}

fn check_blocks(m: &HermitianMatrix, n: usize, d: usize) -> Result<()> {
    if d == 0 || n.checked_mul(d) != Some(m.n()) {
        return Err(Error::Dimension(format!(
            "inflated matrix of size {} is not {n} blocks of size {d}",
            m.n()
        )));
    }
    Ok(())
}

/// `(F C̃ F†)` restricted to slot `component` of each party block, where
/// `F[a, b] = ω^{-ab}/√d`, `ω = e^{2πi/d}`.
pub fn fourier_extract(infl_cov: &HermitianMatrix, n: usize, d: usize, component: usize) -> Result<HermitianMatrix> {
    check_blocks(infl_cov, n, d)?;
    if component >= d {
        return Err(Error::InvalidArgument(format!("component {component} is not below d = {d}")));
    }
    // column i of V is conj(F[component, ·]) placed in party block i
    let norm = 1.0 / (d as f64).sqrt();
    let mut v = CMatrix::zeros(n * d, n);
    for i in 0..n {
        for k in 0..d {
            let phase = std::f64::consts::TAU * ((component * k) % d) as f64 / d as f64;
            v[(i * d + k, i)] = Complex64::from_polar(norm, phase);
        }
    }
    infl_cov.conjugate(&v)
}

/// Hadamard compression of a `d = 2` inflation: the second slot after
/// conjugating each party block by `H = [[1, 1], [1, -1]]/√2`.
pub fn hadamard_extract(infl_cov: &HermitianMatrix, n: usize) -> Result<HermitianMatrix> {
    if infl_cov.n() % 2 != 0 {
        return Err(Error::Dimension(format!("odd inflated dimension {}", infl_cov.n())));
    }
    fourier_extract(infl_cov, n, 2, 1)
}

/// `‖ψ‖ U` with `U` unitary and first column `ψ/‖ψ‖`; zero for `ψ = 0`.
/// The remaining columns come from Gram–Schmidt over the standard basis.
pub fn completion_matrix(psi: &[Complex64]) -> CMatrix {
    let d = psi.len();
    let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return CMatrix::zeros(d, d);
    }
    let mut columns: Vec<Vec<Complex64>> = vec![psi.iter().map(|z| z / norm).collect()];
    for e in 0..d {
        if columns.len() == d {
            break;
        }
        let mut v = vec![Complex64::new(0.0, 0.0); d];
        v[e] = Complex64::new(1.0, 0.0);
        for q in &columns {
            let proj: Complex64 = q.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            for (x, a) in v.iter_mut().zip(q) {
                *x -= proj * a;
            }
        }
        let len = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if len > PARALLEL_TOL {
            columns.push(v.into_iter().map(|z| z / len).collect());
        }
    }
    CMatrix::from_fn(d, d, |a, b| columns[b][a] * norm)
}

/// `(R_i† C̃_ij R_j)[0, 0]` for all party pairs.
pub fn compress_by_vectors(infl_cov: &HermitianMatrix, vectors: &[Vec<Complex64>]) -> Result<HermitianMatrix> {
    let n = vectors.len();
    let d = vectors.first().map_or(0, Vec::len);
    check_blocks(infl_cov, n, d)?;
    if let Some(v) = vectors.iter().find(|v| v.len() != d) {
        return Err(Error::Dimension(format!("vector of length {} where {d} was expected", v.len())));
    }
    let rs: Vec<CMatrix> = vectors.iter().map(|v| completion_matrix(v)).collect();
    let full = infl_cov.as_matrix();
    let mut out = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let block = full.view((i * d, j * d), (d, d));
            let compressed = rs[i].adjoint() * block * &rs[j];
            out[(i, j)] = compressed[(0, 0)];
            out[(j, i)] = compressed[(0, 0)].conj();
        }
    }
    Ok(HermitianMatrix::hermitian_part(out))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InflationSpecJson {
    pub d: usize,
    /// Keyed `"party|source"`.
    pub perms: BTreeMap<String, Permutation>,
}

impl InflationSpecJson {
    pub fn into_spec(self, net: &Network) -> Result<InflationSpec> {
        let mut perms = BTreeMap::new();
        for (key, p) in self.perms {
            perms.insert(pair_key(net, &key)?, p);
        }
        InflationSpec::new(net, self.d, perms)
    }

    pub fn from_spec(net: &Network, spec: &InflationSpec) -> Self {
        let perms = spec
            .perms
            .iter()
            .map(|(&(i, alpha), p)| (format!("{}|{}", net.party_name(i), net.source(alpha).name), p.clone()))
            .collect();
        Self { d: spec.d, perms }
    }
}

pub fn parse_inflation_spec(text: &str, net: &Network) -> Result<InflationSpec> {
    let json: InflationSpecJson = serde_json::from_str(text)?;
    json.into_spec(net)
}
