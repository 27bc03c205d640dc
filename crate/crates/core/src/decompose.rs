//! Membership in the cone of network-compatible decomposable matrices.
//!
//! A PSD matrix `M` is decomposable over a network when `M = Σ_α M_α` with
//! each `M_α` PSD and supported on the α-block (rows and columns of the
//! parties adjacent to source α). The dual cone consists of the Hermitian
//! matrices whose α-blocks are all PSD; any such `W` with `Re tr(W† M) < 0`
//! certifies that `M` is not decomposable.
//!
//! Two routes are provided:
//!
//! * [`fast_check_bipartite`]: for networks whose sources all have two
//!   parties, `M` is decomposable iff its comparison matrix is PSD.
//!   [`bipartite_certificate`] turns that test into an explicit
//!   decomposition or witness.
//! * [`decompose`]: a general cyclic block-projection solver. Each sweep
//!   replaces every term by the PSD projection of the α-block of
//!   `M - Σ_{β≠α} M_β`, which is exact block-coordinate descent on
//!   `‖M - Σ_α M_α‖²_F`. The residual `M - Σ_α M_α` converges to the
//!   projection of `M` onto the polar cone, so its negation is a candidate
//!   witness when `M` is not decomposable.
//!
//! Every returned certificate is re-verified before it is handed out.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::MatrixJson;
use crate::linalg::{CMatrix, HermitianMatrix};
use crate::network::Network;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    pub max_sweeps: usize,
    /// Relative to `max(1, ‖M‖_F)`.
    pub feasibility_tol: f64,
    /// Relative residual decrease per sweep below which the solver is
    /// considered stalled.
    pub stall_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { max_sweeps: 20_000, feasibility_tol: 1e-7, stall_tol: 1e-12 }
    }
}

impl SolverOptions {
    fn validate(&self) -> Result<()> {
        if self.max_sweeps == 0 || !(self.feasibility_tol > 0.0) || !(self.stall_tol > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "solver options must be positive, got {self:?}"
            )));
        }
        Ok(())
    }
}

/// `target = Σ_α terms[α]` up to `residual_norm` (Frobenius).
/// `terms[α]` is a full `n × n` matrix supported on the α-block.
#[derive(Clone, Debug)]
pub struct Decomposition {
    pub target: HermitianMatrix,
    pub terms: Vec<HermitianMatrix>,
    pub residual_norm: f64,
}

/// A dual-cone element with (when used as a certificate) negative inner
/// product against the target.
#[derive(Clone, Debug)]
pub struct DualWitness {
    pub w: HermitianMatrix,
    /// `Re tr(w† M)`.
    pub inner_product: f64,
}

#[derive(Clone, Debug)]
pub enum Outcome {
    Feasible(Decomposition),
    Infeasible(DualWitness),
    Undecided,
}

impl Outcome {
    pub fn status(&self) -> &'static str {
        match self {
            Outcome::Feasible(_) => "feasible",
            Outcome::Infeasible(_) => "infeasible",
            Outcome::Undecided => "undecided",
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct SolverDiagnostics {
    pub sweeps: usize,
    pub residual_norm: f64,
    /// Most negative normalized witness inner product seen.
    pub best_inner_product: Option<f64>,
    /// Residual norm after each sweep.
    pub residual_history: Vec<f64>,
    pub message: String,
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    pub outcome: Outcome,
    pub diagnostics: SolverDiagnostics,
}

/// Result of a verification: `ok` plus the reasons it failed.
#[derive(Clone, Debug, PartialEq)]
pub struct Verification {
    pub ok: bool,
    pub reasons: Vec<String>,
}

impl Verification {
    fn from_reasons(reasons: Vec<String>) -> Self {
        Self { ok: reasons.is_empty(), reasons }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FastVerdict {
    Feasible,
    Infeasible,
}

/// Comparison-matrix test for networks whose sources are all bipartite.
///
/// Returns `Infeasible` straight away when `m` is not PSD at `tol` or has an
/// entry above `tol · max(1, ‖m‖_F)` on a pair without a common source.
pub fn fast_check_bipartite(net: &Network, m: &HermitianMatrix, tol: f64) -> Result<FastVerdict> {
    net.require_bipartite("fast path unavailable")?;
    check_dim(net, m)?;
    if off_support_entry(net, m, tol).is_some() || !m.is_psd(tol) {
        return Ok(FastVerdict::Infeasible);
    }
    Ok(if m.comparison_matrix().is_psd(tol) { FastVerdict::Feasible } else { FastVerdict::Infeasible })
}

/// Explicit certificate for the bipartite comparison-matrix test.
///
/// Feasible case: on each connected component of the nonzero pattern, a
/// nonnegative eigenvector `v` of the smallest eigenvalue of the comparison
/// matrix gives rank-one edge terms
/// `[[|m_ij| v_j / v_i, m_ij], [conj(m_ij), |m_ij| v_i / v_j]]`; the diagonal
/// remainder goes to the party's first source.
///
/// Infeasible case: with `u` the entrywise modulus of that eigenvector, the
/// witness `w_ii = u_i²`, `w_ij = -u_i u_j m_ij / |m_ij|` has rank-one
/// PSD α-blocks and `Re tr(w† m) = u^T M̂ u < 0`.
///
/// Returns `Undecided` when the constructed certificate fails verification
/// at `tol` (near-boundary inputs).
pub fn bipartite_certificate(net: &Network, m: &HermitianMatrix, tol: f64) -> Result<Outcome> {
    net.require_bipartite("fast path unavailable")?;
    check_dim(net, m)?;
    let scale = m.frobenius_norm().max(1.0);
    if let Some(w) = off_support_witness(net, m, tol) {
        return Ok(Outcome::Infeasible(w));
    }
    if let Some(w) = negative_eigen_witness(m, tol) {
        return Ok(Outcome::Infeasible(w));
    }

    let n = m.n();
    let threshold = tol * scale;
    let comparison = m.comparison_matrix();
    // components of the graph of entries above threshold
    let mut component = vec![usize::MAX; n];
    let mut components: Vec<Vec<usize>> = Vec::new();
    for start in 0..n {
        if component[start] != usize::MAX {
            continue;
        }
        let id = components.len();
        let mut members = vec![start];
        component[start] = id;
        let mut k = 0;
        while k < members.len() {
            let i = members[k];
            for j in 0..n {
                if component[j] == usize::MAX && m.get(i, j).norm() > threshold {
                    component[j] = id;
                    members.push(j);
                }
            }
            k += 1;
        }
        members.sort_unstable();
        components.push(members);
    }

    let mut weights = vec![0.0; n];
    let mut negative: Option<(f64, Vec<usize>)> = None;
    for members in &components {
        let sub = comparison.principal_submatrix(members);
        let e = sub.eigen();
        let lambda = e.eigenvalues[0];
        for (a, &i) in members.iter().enumerate() {
            weights[i] = e.eigenvectors[(a, 0)].norm();
        }
        if lambda < 0.0 && negative.as_ref().is_none_or(|(l, _)| lambda < *l) {
            negative = Some((lambda, members.clone()));
        }
    }

    if let Some((lambda, members)) = negative {
        if !comparison.is_psd(tol) || lambda < -threshold {
            let mut w = CMatrix::zeros(n, n);
            for &i in &members {
                w[(i, i)] = (weights[i] * weights[i]).into();
                for &j in &members {
                    let mij = m.get(i, j);
                    if i != j && mij.norm() > 0.0 {
                        w[(i, j)] = -(mij / mij.norm()) * (weights[i] * weights[j]);
                    }
                }
            }
            let witness = normalized_witness(HermitianMatrix::hermitian_part(w), m);
            if verify_witness(net, m, &witness, tol).ok {
                return Ok(Outcome::Infeasible(witness));
            }
            return Ok(Outcome::Undecided);
        }
    }

    let mut terms = vec![CMatrix::zeros(n, n); net.n_sources()];
    let mut used = vec![0.0; n];
    for (alpha, source) in net.sources().iter().enumerate() {
        let (i, j) = (source.parties[0], source.parties[1]);
        let mij = m.get(i, j);
        let a = mij.norm();
        if a <= threshold || weights[i] <= 0.0 || weights[j] <= 0.0 {
            continue;
        }
        let di = a * weights[j] / weights[i];
        let dj = a * weights[i] / weights[j];
        terms[alpha][(i, i)] += Complex64::from(di);
        terms[alpha][(j, j)] += Complex64::from(dj);
        terms[alpha][(i, j)] = mij;
        terms[alpha][(j, i)] = mij.conj();
        used[i] += di;
        used[j] += dj;
    }
    for i in 0..n {
        let alpha = net.sources_of(i)[0];
        terms[alpha][(i, i)] += Complex64::from(m.get(i, i).re - used[i]);
    }
    let terms: Vec<HermitianMatrix> = terms.into_iter().map(HermitianMatrix::hermitian_part).collect();
    let residual_norm = residual(m, &terms).frobenius_norm();
    let d = Decomposition { target: m.clone(), terms, residual_norm };
    if verify_decomposition(net, m, &d, tol).ok {
        Ok(Outcome::Feasible(d))
    } else {
        Ok(Outcome::Undecided)
    }
}

/// Cyclic block-projection solver. See the module documentation.
pub fn decompose(net: &Network, m: &HermitianMatrix, opts: &SolverOptions) -> Result<SolveReport> {
    opts.validate()?;
    check_dim(net, m)?;
    let tol = opts.feasibility_tol;
    let scale = m.frobenius_norm().max(1.0);
    let mut diagnostics = SolverDiagnostics::default();

    if let Some(w) = off_support_witness(net, m, tol) {
        diagnostics.best_inner_product = Some(w.inner_product);
        diagnostics.message = "nonzero entry on a pair without a common source".into();
        return Ok(SolveReport { outcome: Outcome::Infeasible(w), diagnostics });
    }
    if let Some(w) = negative_eigen_witness(m, tol) {
        diagnostics.best_inner_product = Some(w.inner_product);
        diagnostics.message = "target is not positive semidefinite".into();
        return Ok(SolveReport { outcome: Outcome::Infeasible(w), diagnostics });
    }

    // The cone is invariant under positive diagonal congruence; sweeping on
    // the unit-diagonal version converges much faster on badly scaled input.
    // Diagonals below a relative floor are treated as the floor so rounding
    // noise next to a vanishing variance is not blown up.
    let max_diag = m.diag_real().iter().fold(0.0f64, |a, &b| a.max(b));
    let floor = 1e-12 * max_diag;
    let weights: Vec<f64> = m
        .diag_real()
        .iter()
        .map(|&x| if max_diag > 0.0 { 1.0 / x.max(floor).sqrt() } else { 1.0 })
        .collect();
    let scaled = diagonal_congruence(m, &weights);
    let scaled_tol = tol * scale / m.diag_real().iter().fold(f64::MIN_POSITIVE, |a, &b| a.max(b));
    let mut solver = BlockSolver::new(net, &scaled, m, weights);
    let witness_every = 16;
    let extrapolate_every = 8;
    let mut anchor = solver.terms.clone();
    let mut previous = solver.residual_norm();
    diagnostics.residual_norm = previous;
    if m.max_abs() == 0.0 {
        let d = solver.decomposition();
        diagnostics.message = "zero target".into();
        return Ok(SolveReport { outcome: Outcome::Feasible(d), diagnostics });
    }

    for sweep in 1..=opts.max_sweeps {
        solver.sweep();
        if sweep % extrapolate_every == 0 {
            solver.extrapolate(&anchor);
            anchor.clone_from(&solver.terms);
        }
        let r = solver.residual_norm();
        diagnostics.sweeps = sweep;
        diagnostics.residual_norm = r;
        diagnostics.residual_history.push(r);

        if r <= scaled_tol {
            let d = solver.decomposition();
            let check = verify_decomposition(net, m, &d, tol);
            if check.ok {
                diagnostics.message = format!("converged after {sweep} sweeps");
                return Ok(SolveReport { outcome: Outcome::Feasible(d), diagnostics });
            }
        }

        let stalled = previous - r <= opts.stall_tol * previous;
        let last = sweep == opts.max_sweeps;
        if stalled || last || sweep % witness_every == 0 {
            if let Some(w) = solver.witness_candidate() {
                let best = diagnostics.best_inner_product.get_or_insert(w.inner_product);
                *best = best.min(w.inner_product);
                if w.inner_product < -tol * scale && verify_witness(net, m, &w, tol).ok {
                    diagnostics.message = format!("separated after {sweep} sweeps");
                    return Ok(SolveReport { outcome: Outcome::Infeasible(w), diagnostics });
                }
            }
        }
        if stalled {
            diagnostics.message = format!("stalled after {sweep} sweeps at residual {r:.3e}");
            break;
        }
        previous = r;
        if sweep == opts.max_sweeps {
            diagnostics.message = format!("sweep limit {} reached at residual {r:.3e}", opts.max_sweeps);
        }
    }

    let weights = solver.weights.clone();
    if let Some(d) = reduced_phase(net, &scaled, m, weights, scaled_tol, opts, &mut diagnostics) {
        if verify_decomposition(net, m, &d, tol).ok {
            return Ok(SolveReport { outcome: Outcome::Feasible(d), diagnostics });
        }
    }
    Ok(SolveReport { outcome: Outcome::Undecided, diagnostics })
}

/// Facial reduction for singular targets. Every kernel vector `v` of the
/// target satisfies `Σ_α v_α† M_α v_α = 0`, so `M_α v_α = 0` for each term;
/// terms are confined to the complement of the kernel restricted to their
/// block. On the cone boundary this restores an interior solution and with
/// it linear convergence of the sweeps.
fn reduced_phase(
    net: &Network,
    scaled: &HermitianMatrix,
    original: &HermitianMatrix,
    weights: Vec<f64>,
    scaled_tol: f64,
    opts: &SolverOptions,
    diagnostics: &mut SolverDiagnostics,
) -> Option<Decomposition> {
    let n = scaled.n();
    let threshold = 0.25 * scaled_tol / (n as f64).sqrt();
    let e = scaled.eigen();
    let kernel: Vec<usize> = (0..n).filter(|&k| e.eigenvalues[k].abs() <= threshold).collect();
    if kernel.is_empty() || kernel.len() == n {
        return None;
    }
    let mut reduced = scaled.as_matrix().clone();
    let mut dropped = 0.0;
    for &k in &kernel {
        let v = e.eigenvectors.column(k);
        reduced -= (&v * v.adjoint()) * Complex64::from(e.eigenvalues[k]);
        dropped += e.eigenvalues[k] * e.eigenvalues[k];
    }
    let reduced = HermitianMatrix::hermitian_part(reduced);
    let budget = scaled_tol - dropped.sqrt();

    let faces = (0..net.n_sources())
        .map(|alpha| {
            let block = net.block(alpha);
            let k = block.len();
            let restricted = CMatrix::from_fn(k, kernel.len(), |a, c| e.eigenvectors[(block[a], kernel[c])]);
            let span = HermitianMatrix::hermitian_part(&restricted * restricted.adjoint()).eigen();
            let keep: Vec<usize> = (0..k).filter(|&c| span.eigenvalues[c] <= 1e-10).collect();
            (keep.len() < k).then(|| CMatrix::from_fn(k, keep.len(), |a, c| span.eigenvectors[(a, keep[c])]))
        })
        .collect();

    let mut solver = BlockSolver::new(net, &reduced, original, weights);
    solver.faces = faces;
    let mut anchor = solver.terms.clone();
    let mut previous = solver.residual_norm();
    for sweep in 1..=opts.max_sweeps {
        solver.sweep();
        if sweep % 8 == 0 {
            solver.extrapolate(&anchor);
            anchor.clone_from(&solver.terms);
        }
        let r = solver.residual_norm();
        if r <= budget {
            diagnostics.message = format!(
                "converged after {sweep} sweeps on the face orthogonal to a {}-dimensional kernel",
                kernel.len()
            );
            return Some(solver.decomposition());
        }
        if previous - r <= opts.stall_tol * previous {
            return None;
        }
        previous = r;
    }
    None
}

/// Checks support, per-term PSD at `tol` and
/// `‖m - Σ terms‖_F <= tol · max(1, ‖m‖_F)`.
pub fn verify_decomposition(net: &Network, m: &HermitianMatrix, d: &Decomposition, tol: f64) -> Verification {
    let mut reasons = Vec::new();
    if d.terms.len() > net.n_sources() {
        reasons.push(format!(
            "{} terms for a network with {} sources",
            d.terms.len(),
            net.n_sources()
        ));
        return Verification::from_reasons(reasons);
    }
    if m.n() != net.n_parties() {
        reasons.push(format!("target is {}x{}, network has {} parties", m.n(), m.n(), net.n_parties()));
        return Verification::from_reasons(reasons);
    }
    let scale = m.frobenius_norm().max(1.0);
    let n = m.n();
    let mut sum = HermitianMatrix::zeros(n);
    for (alpha, term) in d.terms.iter().enumerate() {
        let name = &net.source(alpha).name;
        if term.n() != n {
            reasons.push(format!("term '{name}' has dimension {}", term.n()));
            continue;
        }
        for i in 0..n {
            for j in 0..n {
                let inside = net.is_adjacent(alpha, i) && net.is_adjacent(alpha, j);
                if !inside && term.get(i, j).norm() > tol * scale {
                    reasons.push(format!(
                        "support violation: term '{name}' has entry ({}, {}) = {:.3e}",
                        i + 1,
                        j + 1,
                        term.get(i, j).norm()
                    ));
                }
            }
        }
        if !term.is_psd(tol) {
            reasons.push(format!(
                "term '{name}' is not PSD (min eigenvalue {:.3e})",
                term.min_eigenvalue()
            ));
        }
        sum += term;
    }
    let r = (m - &sum).frobenius_norm();
    if r > tol * scale {
        reasons.push(format!("residual {r:.3e} exceeds {:.3e}", tol * scale));
    }
    Verification::from_reasons(reasons)
}

/// Every α-block of `w` PSD at `tol` and
/// `Re tr(w† m) < -tol · max(1, ‖m‖_F ‖w‖_F)`.
pub fn verify_witness(net: &Network, m: &HermitianMatrix, w: &DualWitness, tol: f64) -> Verification {
    let mut reasons = Vec::new();
    if w.w.n() != m.n() || m.n() != net.n_parties() {
        reasons.push(format!(
            "dimension mismatch: witness {}, target {}, parties {}",
            w.w.n(),
            m.n(),
            net.n_parties()
        ));
        return Verification::from_reasons(reasons);
    }
    for (alpha, source) in net.sources().iter().enumerate() {
        let block = w.w.principal_submatrix(&source.parties);
        if !block.is_psd(tol) {
            reasons.push(format!(
                "block of source '{}' is not PSD (min eigenvalue {:.3e})",
                net.source(alpha).name,
                block.min_eigenvalue()
            ));
        }
    }
    let inner = w.w.inner_product(m).expect("dimensions checked");
    let bound = -tol * (m.frobenius_norm() * w.w.frobenius_norm()).max(1.0);
    if !(inner < bound) {
        reasons.push(format!("inner product {inner:.3e} is not below {bound:.3e}"));
    }
    Verification::from_reasons(reasons)
}

/// `m - Σ terms`.
pub fn residual(m: &HermitianMatrix, terms: &[HermitianMatrix]) -> HermitianMatrix {
    let mut r = m.clone();
    for t in terms {
        r -= t;
    }
    r
}

fn check_dim(net: &Network, m: &HermitianMatrix) -> Result<()> {
    if m.n() != net.n_parties() {
        return Err(Error::Dimension(format!(
            "matrix is {}x{} but the network has {} parties",
            m.n(),
            m.n(),
            net.n_parties()
        )));
    }
    Ok(())
}

/// Largest entry on a pair without a common source, if above `tol · max(1, ‖m‖_F)`.
fn off_support_entry(net: &Network, m: &HermitianMatrix, tol: f64) -> Option<(usize, usize)> {
    let threshold = tol * m.frobenius_norm().max(1.0);
    let n = m.n();
    let mut best: Option<(usize, usize, f64)> = None;
    for i in 0..n {
        for j in (i + 1)..n {
            let a = m.get(i, j).norm();
            if a > threshold && !net.connected(i, j) && best.is_none_or(|(_, _, b)| a > b) {
                best = Some((i, j, a));
            }
        }
    }
    best.map(|(i, j, _)| (i, j))
}

/// Phase-matched unit mass on an off-support pair: all α-blocks are zero and
/// the inner product is `-√2 |m_ij|` after normalization.
fn off_support_witness(net: &Network, m: &HermitianMatrix, tol: f64) -> Option<DualWitness> {
    let (i, j) = off_support_entry(net, m, tol)?;
    let n = m.n();
    let mij = m.get(i, j);
    let phase = mij / mij.norm();
    let mut w = CMatrix::zeros(n, n);
    w[(i, j)] = -phase;
    w[(j, i)] = -phase.conj();
    Some(normalized_witness(HermitianMatrix::hermitian_part(w), m))
}

/// `v v†` for an eigenvector of a negative eigenvalue below `-tol · max(1, ‖m‖₂)`.
fn negative_eigen_witness(m: &HermitianMatrix, tol: f64) -> Option<DualWitness> {
    let e = m.eigen();
    let lambda = *e.eigenvalues.first()?;
    let scale = e.eigenvalues.iter().map(|l| l.abs()).fold(1.0, f64::max);
    if lambda >= -tol * scale {
        return None;
    }
    let v = e.eigenvectors.column(0);
    let w = HermitianMatrix::hermitian_part(&v * v.adjoint());
    Some(normalized_witness(w, m))
}

fn normalized_witness(w: HermitianMatrix, m: &HermitianMatrix) -> DualWitness {
    let norm = w.frobenius_norm();
    let w = if norm > 0.0 { w.scale(1.0 / norm) } else { w };
    let inner_product = w.inner_product(m).expect("same dimension");
    DualWitness { w, inner_product }
}

/// `D m D` with `D = diag(weights)`.
fn diagonal_congruence(m: &HermitianMatrix, weights: &[f64]) -> HermitianMatrix {
    let n = m.n();
    HermitianMatrix::hermitian_part(CMatrix::from_fn(n, n, |i, j| m.get(i, j) * (weights[i] * weights[j])))
}

struct BlockSolver<'a> {
    net: &'a Network,
    /// Equilibrated target `D M D`.
    target: &'a HermitianMatrix,
    original: &'a HermitianMatrix,
    weights: Vec<f64>,
    /// `terms[α]` is the α-block of `M_α` (size `|α| × |α|`).
    terms: Vec<HermitianMatrix>,
    sum: CMatrix,
    /// Optional orthonormal basis per block; terms are kept of the form
    /// `Q X Q†` with `X` PSD.
    faces: Vec<Option<CMatrix>>,
}

impl<'a> BlockSolver<'a> {
    fn new(
        net: &'a Network,
        target: &'a HermitianMatrix,
        original: &'a HermitianMatrix,
        weights: Vec<f64>,
    ) -> Self {
        let n = target.n();
        let terms = net.sources().iter().map(|s| HermitianMatrix::zeros(s.parties.len())).collect();
        let faces = vec![None; net.n_sources()];
        Self { net, target, original, weights, terms, sum: CMatrix::zeros(n, n), faces }
    }

    fn project(&self, alpha: usize, h: &HermitianMatrix) -> HermitianMatrix {
        match &self.faces[alpha] {
            None => h.psd_project(),
            Some(q) if q.ncols() == 0 => HermitianMatrix::zeros(h.n()),
            Some(q) => {
                let inner = HermitianMatrix::hermitian_part(q.adjoint() * h.as_matrix() * q).psd_project();
                HermitianMatrix::hermitian_part(q * inner.as_matrix() * q.adjoint())
            }
        }
    }

    fn sweep(&mut self) {
        for alpha in 0..self.terms.len() {
            let block = self.net.block(alpha);
            let k = block.len();
            let old = &self.terms[alpha];
            let local = CMatrix::from_fn(k, k, |a, b| {
                let (i, j) = (block[a], block[b]);
                self.target.get(i, j) - self.sum[(i, j)] + old.get(a, b)
            });
            let new = self.project(alpha, &HermitianMatrix::hermitian_part(local));
            for a in 0..k {
                for b in 0..k {
                    self.sum[(block[a], block[b])] += new.get(a, b) - old.get(a, b);
                }
            }
            self.terms[alpha] = new;
        }
        // keeps rounding from accumulating in the running sum
        self.rebuild_sum();
    }

    /// Line search along `terms - anchor` with growing steps; each trial is
    /// projected blockwise onto the PSD cone and kept only if it lowers the
    /// residual.
    fn extrapolate(&mut self, anchor: &[HermitianMatrix]) {
        let mut best = self.residual_norm();
        let base = self.terms.clone();
        let mut step = 1.0;
        while step <= 256.0 {
            let trial: Vec<HermitianMatrix> = base
                .iter()
                .zip(anchor)
                .enumerate()
                .map(|(alpha, (t, a))| self.project(alpha, &(t + &(t - a).scale(step))))
                .collect();
            let saved = std::mem::replace(&mut self.terms, trial);
            self.rebuild_sum();
            let r = self.residual_norm();
            if r < best {
                best = r;
                step *= 2.0;
            } else {
                self.terms = saved;
                self.rebuild_sum();
                break;
            }
        }
    }

    fn rebuild_sum(&mut self) {
        self.sum.fill(Complex64::new(0.0, 0.0));
        for (alpha, t) in self.terms.iter().enumerate() {
            let block = self.net.block(alpha);
            for (a, &i) in block.iter().enumerate() {
                for (b, &j) in block.iter().enumerate() {
                    self.sum[(i, j)] += t.get(a, b);
                }
            }
        }
    }

    fn residual_norm(&self) -> f64 {
        (self.target.as_matrix() - &self.sum).norm()
    }

    /// Terms mapped back to the original scaling.
    fn decomposition(&self) -> Decomposition {
        let n = self.target.n();
        let inverse: Vec<f64> = self.weights.iter().map(|w| 1.0 / w).collect();
        let terms: Vec<HermitianMatrix> = self
            .terms
            .iter()
            .enumerate()
            .map(|(alpha, t)| {
                let full = HermitianMatrix::embed(t, self.net.block(alpha), n);
                diagonal_congruence(&full, &inverse)
            })
            .collect();
        let residual_norm = residual(self.original, &terms).frobenius_norm();
        Decomposition { target: self.original.clone(), terms, residual_norm }
    }

    /// `Σ M_α - M` restricted to the block union, with each party's diagonal
    /// raised by the largest PSD deficit among its blocks, mapped back to the
    /// original scaling and normalized.
    fn witness_candidate(&self) -> Option<DualWitness> {
        let n = self.target.n();
        let mut w = CMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                if self.net.connected(i, j) {
                    w[(i, j)] = self.sum[(i, j)] - self.target.get(i, j);
                }
            }
        }
        let w = HermitianMatrix::hermitian_part(w);
        if w.frobenius_norm() == 0.0 {
            return None;
        }
        let mut lift = vec![0.0f64; n];
        for source in self.net.sources() {
            let deficit = (-w.principal_submatrix(&source.parties).min_eigenvalue()).max(0.0);
            for &i in &source.parties {
                lift[i] = lift[i].max(deficit);
            }
        }
        let mut repaired = w.into_matrix();
        for (i, l) in lift.iter().enumerate() {
            repaired[(i, i)] += Complex64::from(*l);
        }
        let repaired = diagonal_congruence(&HermitianMatrix::hermitian_part(repaired), &self.weights);
        Some(normalized_witness(repaired, self.original))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecompositionJson {
    pub target: MatrixJson,
    pub terms: serde_json::Map<String, serde_json::Value>,
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WitnessJson {
    pub w: MatrixJson,
    pub inner_product: f64,
}

impl Decomposition {
    pub fn to_json(&self, net: &Network) -> DecompositionJson {
        let terms = self
            .terms
            .iter()
            .enumerate()
            .map(|(alpha, t)| {
                let value = serde_json::to_value(MatrixJson::from_matrix(t)).expect("serializable");
                (net.source(alpha).name.clone(), value)
            })
            .collect();
        DecompositionJson {
            target: MatrixJson::from_matrix(&self.target),
            terms,
            residual: self.residual_norm,
        }
    }

    /// Terms are keyed by source name; sources without a term get a zero term.
    pub fn from_json(json: &DecompositionJson, net: &Network) -> Result<Self> {
        let target = json.target.to_matrix()?;
        check_dim(net, &target)?;
        let n = target.n();
        let mut terms = vec![HermitianMatrix::zeros(n); net.n_sources()];
        for (name, value) in &json.terms {
            let alpha = net
                .source_index(name)
                .ok_or_else(|| Error::Parse(format!("unknown source '{name}' in decomposition")))?;
            let mj: MatrixJson = serde_json::from_value(value.clone())?;
            let term = mj.to_matrix()?;
            if term.n() != n {
                return Err(Error::Dimension(format!("term '{name}' has dimension {}", term.n())));
            }
            terms[alpha] = term;
        }
        Ok(Self { target, terms, residual_norm: json.residual })
    }
}

impl DualWitness {
    pub fn to_json(&self) -> WitnessJson {
        WitnessJson { w: MatrixJson::from_matrix(&self.w), inner_product: self.inner_product }
    }

    pub fn from_json(json: &WitnessJson) -> Result<Self> {
        Ok(Self { w: json.w.to_matrix()?, inner_product: json.inner_product })
    }
}

pub fn parse_decomposition(text: &str, net: &Network) -> Result<Decomposition> {
    let json: DecompositionJson = serde_json::from_str(text)?;
    Decomposition::from_json(&json, net)
}

pub fn parse_witness(text: &str) -> Result<DualWitness> {
    let json: WitnessJson = serde_json::from_str(text)?;
    DualWitness::from_json(&json)
}
