//! Dense Hermitian matrices.
//!
//! [`HermitianMatrix`] is the carrier for covariance matrices, decomposition
//! terms, sign matrices, twisted Gram matrices and dual witnesses. Real
//! symmetric matrices are the special case with zero imaginary part.
//!
//! All eigen-based operations go through [`HermitianMatrix::eigen`], which
//! uses a fixed (non-randomized) tridiagonal QR algorithm, so results are
//! deterministic for a fixed input.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Absolute tolerance on `|m_ij - conj(m_ji)|` accepted by [`HermitianMatrix::new`].
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Default relative PSD tolerance.
pub const DEFAULT_PSD_TOL: f64 = 1e-8;

#[derive(Clone, PartialEq)]
pub struct HermitianMatrix {
    data: CMatrix,
}

/// Eigenvalues in ascending order with matching orthonormal eigenvector columns.
#[derive(Clone, Debug)]
pub struct EigenResult {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

impl EigenResult {
    /// `V diag(f(λ)) V†`.
    pub fn reconstruct_with<F: Fn(f64) -> f64>(&self, f: F) -> HermitianMatrix {
        let n = self.eigenvalues.len();
        let v = &self.eigenvectors;
        let mut out = CMatrix::zeros(n, n);
        for (k, &lambda) in self.eigenvalues.iter().enumerate() {
            let s = f(lambda);
            if s == 0.0 {
                continue;
            }
            for j in 0..n {
                let vj = v[(j, k)].conj() * s;
                for i in 0..n {
                    out[(i, j)] += v[(i, k)] * vj;
                }
            }
        }
        HermitianMatrix::hermitian_part(out)
    }
}

impl HermitianMatrix {
    /// Validates squareness, finiteness and Hermiticity (within [`HERMITIAN_TOL`]),
    /// then symmetrizes exactly.
    pub fn new(m: CMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::Dimension(format!(
                "expected a square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let n = m.nrows();
        for j in 0..n {
            for i in 0..n {
                let z = m[(i, j)];
                if !z.re.is_finite() || !z.im.is_finite() {
                    return Err(Error::NonFinite(format!("matrix entry ({i}, {j})")));
                }
            }
        }
        for i in 0..n {
            for j in i..n {
                let deviation = (m[(i, j)] - m[(j, i)].conj()).norm();
                if deviation > HERMITIAN_TOL {
                    return Err(Error::NotHermitian { i, j, deviation });
                }
            }
        }
        Ok(Self::hermitian_part(m))
    }

    /// `(m + m†) / 2` without any tolerance check. Panics if `m` is not square.
    pub fn hermitian_part(m: CMatrix) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "hermitian_part needs a square matrix");
        let n = m.nrows();
        let mut data = m;
        for i in 0..n {
            data[(i, i)] = Complex64::new(data[(i, i)].re, 0.0);
            for j in (i + 1)..n {
                let avg = (data[(i, j)] + data[(j, i)].conj()) * 0.5;
                data[(i, j)] = avg;
                data[(j, i)] = avg.conj();
            }
        }
        Self { data }
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Dimension("rows must all have length n".into()));
        }
        Self::new(CMatrix::from_fn(n, n, |i, j| Complex64::new(rows[i][j], 0.0)))
    }

    pub fn from_parts(re: &[Vec<f64>], im: Option<&[Vec<f64>]>) -> Result<Self> {
        let n = re.len();
        if re.iter().any(|r| r.len() != n) {
            return Err(Error::Dimension("`re` must be n x n".into()));
        }
        if let Some(im) = im {
            if im.len() != n || im.iter().any(|r| r.len() != n) {
                return Err(Error::Dimension("`im` must have the same shape as `re`".into()));
            }
        }
        Self::new(CMatrix::from_fn(n, n, |i, j| {
            Complex64::new(re[i][j], im.map_or(0.0, |im| im[i][j]))
        }))
    }

    pub fn zeros(n: usize) -> Self {
        Self { data: CMatrix::zeros(n, n) }
    }

    pub fn identity(n: usize) -> Self {
        Self { data: CMatrix::identity(n, n) }
    }

    /// The all-ones matrix `J`.
    pub fn ones(n: usize) -> Self {
        Self { data: CMatrix::from_element(n, n, Complex64::new(1.0, 0.0)) }
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let n = values.len();
        let mut data = CMatrix::zeros(n, n);
        for (i, &v) in values.iter().enumerate() {
            data[(i, i)] = Complex64::new(v, 0.0);
        }
        Self { data }
    }

    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[(i, j)]
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.data
    }

    pub fn into_matrix(self) -> CMatrix {
        self.data
    }

    pub fn diag_real(&self) -> Vec<f64> {
        (0..self.n()).map(|i| self.data[(i, i)].re).collect()
    }

    pub fn re_rows(&self) -> Vec<Vec<f64>> {
        let n = self.n();
        (0..n).map(|i| (0..n).map(|j| self.data[(i, j)].re).collect()).collect()
    }

    pub fn im_rows(&self) -> Vec<Vec<f64>> {
        let n = self.n();
        (0..n).map(|i| (0..n).map(|j| self.data[(i, j)].im).collect()).collect()
    }

    /// True when every imaginary part is at most `tol` in magnitude.
    pub fn is_real(&self, tol: f64) -> bool {
        self.data.iter().all(|z| z.im.abs() <= tol)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Spectral norm (largest eigenvalue magnitude).
    pub fn spectral_norm(&self) -> f64 {
        let e = self.eigen();
        e.eigenvalues.iter().map(|l| l.abs()).fold(0.0, f64::max)
    }

    /// Hilbert–Schmidt inner product `Re tr(self† other)`.
    pub fn inner_product(&self, other: &HermitianMatrix) -> Result<f64> {
        self.check_same_dim(other)?;
        Ok(self
            .data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| (a.conj() * b).re)
            .sum())
    }

    pub fn eigen(&self) -> EigenResult {
        let n = self.n();
        if n == 0 {
            return EigenResult { eigenvalues: vec![], eigenvectors: CMatrix::zeros(0, 0) };
        }
        if n == 1 {
            return EigenResult {
                eigenvalues: vec![self.data[(0, 0)].re],
                eigenvectors: CMatrix::identity(1, 1),
            };
        }
        let eig = SymmetricEigen::new(self.data.clone());
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let eigenvectors = CMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
        EigenResult { eigenvalues, eigenvectors }
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigen().eigenvalues.first().copied().unwrap_or(0.0)
    }

    /// `min_eigenvalue >= -tol * max(1, ‖m‖₂)`.
    pub fn is_psd(&self, tol: f64) -> bool {
        let e = self.eigen();
        let Some(&min) = e.eigenvalues.first() else {
            return true;
        };
        let scale = e.eigenvalues.iter().map(|l| l.abs()).fold(1.0, f64::max);
        min >= -tol * scale
    }

    /// Frobenius-nearest PSD matrix: clip negative eigenvalues to zero.
    pub fn psd_project(&self) -> HermitianMatrix {
        self.eigen().reconstruct_with(|l| l.max(0.0))
    }

    /// A factor `L` (n×n) with `L L† = psd_project(self)`; column `k` of
    /// `L` is `√max(λ_k, 0)` times the `k`-th eigenvector.
    pub fn psd_factor(&self) -> CMatrix {
        let e = self.eigen();
        let n = self.n();
        CMatrix::from_fn(n, n, |i, k| e.eigenvectors[(i, k)] * e.eigenvalues[k].max(0.0).sqrt())
    }

    /// Comparison matrix: same diagonal, off-diagonal entries `-|m_ij|`.
    pub fn comparison_matrix(&self) -> HermitianMatrix {
        let n = self.n();
        let data = CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::new(self.data[(i, i)].re, 0.0)
            } else {
                Complex64::new(-self.data[(i, j)].norm(), 0.0)
            }
        });
        HermitianMatrix { data }
    }

    /// Entrywise (Schur/Hadamard) product.
    pub fn schur_product(&self, other: &HermitianMatrix) -> Result<HermitianMatrix> {
        self.check_same_dim(other)?;
        Ok(HermitianMatrix::hermitian_part(self.data.component_mul(&other.data)))
    }

    /// `t† · self · t` for an `n × k` matrix `t`.
    pub fn conjugate(&self, t: &CMatrix) -> Result<HermitianMatrix> {
        if t.nrows() != self.n() {
            return Err(Error::Dimension(format!(
                "conjugating matrix has {} rows, expected {}",
                t.nrows(),
                self.n()
            )));
        }
        let product = t.adjoint() * &self.data * t;
        Ok(HermitianMatrix::hermitian_part(product))
    }

    /// Principal submatrix on `indices` (in the given order).
    pub fn principal_submatrix(&self, indices: &[usize]) -> HermitianMatrix {
        let k = indices.len();
        let data = CMatrix::from_fn(k, k, |a, b| self.data[(indices[a], indices[b])]);
        HermitianMatrix { data }
    }

    /// Embeds a `k × k` block at `indices` of an otherwise zero `n × n` matrix.
    pub fn embed(block: &HermitianMatrix, indices: &[usize], n: usize) -> HermitianMatrix {
        assert_eq!(block.n(), indices.len(), "block size must match index count");
        let mut data = CMatrix::zeros(n, n);
        for (a, &i) in indices.iter().enumerate() {
            for (b, &j) in indices.iter().enumerate() {
                data[(i, j)] = block.data[(a, b)];
            }
        }
        HermitianMatrix { data }
    }

    pub fn scale(&self, s: f64) -> HermitianMatrix {
        HermitianMatrix { data: &self.data * Complex64::new(s, 0.0) }
    }

    fn check_same_dim(&self, other: &HermitianMatrix) -> Result<()> {
        if self.n() != other.n() {
            return Err(Error::Dimension(format!("{} vs {}", self.n(), other.n())));
        }
        Ok(())
    }
}

impl fmt::Debug for HermitianMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "HermitianMatrix({}x{}) [", self.n(), self.n())?;
        for i in 0..self.n() {
            write!(f, "  ")?;
            for j in 0..self.n() {
                let z = self.data[(i, j)];
                if z.im == 0.0 {
                    write!(f, "{:>10.6} ", z.re)?;
                } else {
                    write!(f, "{:>10.6}{:+.6}i ", z.re, z.im)?;
                }
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Add for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn add(self, rhs: &HermitianMatrix) -> HermitianMatrix {
        HermitianMatrix { data: &self.data + &rhs.data }
    }
}

impl Sub for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn sub(self, rhs: &HermitianMatrix) -> HermitianMatrix {
        HermitianMatrix { data: &self.data - &rhs.data }
    }
}

impl AddAssign<&HermitianMatrix> for HermitianMatrix {
    fn add_assign(&mut self, rhs: &HermitianMatrix) {
        self.data += &rhs.data;
    }
}

impl SubAssign<&HermitianMatrix> for HermitianMatrix {
    fn sub_assign(&mut self, rhs: &HermitianMatrix) {
        self.data -= &rhs.data;
    }
}

impl Neg for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn neg(self) -> HermitianMatrix {
        HermitianMatrix { data: -&self.data }
    }
}

impl Mul<f64> for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn mul(self, s: f64) -> HermitianMatrix {
        self.scale(s)
    }
}

/// The normalized 2×2 Hadamard matrix.
pub fn hadamard2() -> CMatrix {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_row_slice(
        2,
        2,
        &[h, h, h, -h].map(|x| Complex64::new(x, 0.0)),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn real(rows: &[&[f64]]) -> HermitianMatrix {
        HermitianMatrix::from_real_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>())
            .unwrap()
    }

    fn assert_close(a: &HermitianMatrix, b: &HermitianMatrix, tol: f64) {
        assert_eq!(a.n(), b.n());
        let diff = (a - b).max_abs();
        assert!(diff <= tol, "matrices differ by {diff:e}:\n{a:?}\n{b:?}");
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn construction_rejects_non_hermitian_and_symmetrizes_within_tolerance() {
        let bad = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(2.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)]);
        assert!(matches!(HermitianMatrix::new(bad), Err(Error::NotHermitian { .. })));

        let nearly = CMatrix::from_row_slice(
            2,
            2,
            &[c(1.0, 1e-14), c(2.0, 0.5), c(2.0 + 1e-13, -0.5), c(1.0, 0.0)],
        );
        let m = HermitianMatrix::new(nearly).unwrap();
        assert_eq!(m.get(0, 0).im, 0.0);
        assert_eq!(m.get(0, 1), m.get(1, 0).conj());

        let rect = CMatrix::zeros(2, 3);
        assert!(matches!(HermitianMatrix::new(rect), Err(Error::Dimension(_))));
    }

    #[test]
    fn schur_product_examples() {
        let m = real(&[&[1.0, 2.0, 3.0], &[2.0, 5.0, -1.0], &[3.0, -1.0, 7.0]]);
        assert_close(
            &HermitianMatrix::identity(3).schur_product(&m).unwrap(),
            &HermitianMatrix::diagonal(&[1.0, 5.0, 7.0]),
            0.0,
        );
        assert_close(&HermitianMatrix::ones(3).schur_product(&m).unwrap(), &m, 0.0);

        let a = real(&[&[1.0, 1.0, 0.0], &[1.0, 2.0, 1.0], &[0.0, 1.0, 1.0]]);
        let b = real(&[&[1.0, 1.0, 0.0], &[1.0, 1.0, -1.0], &[0.0, -1.0, 1.0]]);
        let expected = real(&[&[1.0, 1.0, 0.0], &[1.0, 2.0, -1.0], &[0.0, -1.0, 1.0]]);
        assert_close(&a.schur_product(&b).unwrap(), &expected, 0.0);

        assert!(matches!(a.schur_product(&HermitianMatrix::identity(2)), Err(Error::Dimension(_))));
    }

    #[test]
    fn min_eigenvalue_examples() {
        assert!((HermitianMatrix::identity(3).min_eigenvalue() - 1.0).abs() < 1e-12);
        assert!(HermitianMatrix::ones(3).min_eigenvalue().abs() < 1e-12);
        let laplacian = real(&[&[1.0, -1.0, 0.0], &[-1.0, 2.0, -1.0], &[0.0, -1.0, 1.0]]);
        assert!(laplacian.min_eigenvalue().abs() < 1e-12);
        let e = laplacian.eigen();
        for (got, want) in e.eigenvalues.iter().zip([0.0, 1.0, 3.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn is_psd_examples() {
        assert!(HermitianMatrix::identity(3).is_psd(0.0));
        assert!(!real(&[&[1.0, 2.0], &[2.0, 1.0]]).is_psd(1e-9));
        let two_i_minus_j = &HermitianMatrix::identity(3).scale(2.0) - &HermitianMatrix::ones(3);
        assert!(!two_i_minus_j.is_psd(1e-9));
        assert!(HermitianMatrix::zeros(0).is_psd(0.0));
    }

    #[test]
    fn psd_project_examples() {
        let p = real(&[&[2.0, 1.0], &[1.0, 2.0]]);
        assert_close(&p.psd_project(), &p, 1e-10);
        assert_close(
            &HermitianMatrix::diagonal(&[1.0, -1.0]).psd_project(),
            &HermitianMatrix::diagonal(&[1.0, 0.0]),
            1e-12,
        );
        assert_close(
            &real(&[&[0.0, 1.0], &[1.0, 0.0]]).psd_project(),
            &real(&[&[0.5, 0.5], &[0.5, 0.5]]),
            1e-12,
        );
    }

    #[test]
    fn comparison_matrix_examples() {
        let id = HermitianMatrix::identity(3);
        assert_close(&id.comparison_matrix(), &id, 0.0);
        let m = real(&[&[1.0, 1.0, 0.0], &[1.0, 2.0, 1.0], &[0.0, 1.0, 1.0]]);
        let expected = real(&[&[1.0, -1.0, 0.0], &[-1.0, 2.0, -1.0], &[0.0, -1.0, 1.0]]);
        assert_close(&m.comparison_matrix(), &expected, 0.0);
        let z = HermitianMatrix::new(CMatrix::from_row_slice(
            2,
            2,
            &[c(2.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(2.0, 0.0)],
        ))
        .unwrap();
        assert_close(&z.comparison_matrix(), &real(&[&[2.0, -1.0], &[-1.0, 2.0]]), 1e-15);
    }

    #[test]
    fn conjugate_examples() {
        let m = real(&[&[3.0, 1.0], &[1.0, 2.0]]);
        assert_close(&m.conjugate(&CMatrix::identity(2, 2)).unwrap(), &m, 0.0);

        let v = CMatrix::from_column_slice(3, 1, &[c(0.6, 0.0), c(0.0, 0.8), c(0.0, 0.0)]);
        let one = HermitianMatrix::identity(3).conjugate(&v).unwrap();
        assert_eq!(one.n(), 1);
        assert!((one.get(0, 0).re - 1.0).abs() < 1e-15);

        let j = HermitianMatrix::ones(2);
        assert_close(
            &j.conjugate(&hadamard2()).unwrap(),
            &HermitianMatrix::diagonal(&[2.0, 0.0]),
            1e-15,
        );
        assert!(matches!(j.conjugate(&CMatrix::identity(3, 3)), Err(Error::Dimension(_))));
    }

    #[test]
    fn eigen_of_complex_matrix_reconstructs() {
        let m = HermitianMatrix::new(CMatrix::from_row_slice(
            3,
            3,
            &[
                c(2.0, 0.0), c(1.0, 1.0), c(0.0, -0.5),
                c(1.0, -1.0), c(3.0, 0.0), c(0.25, 0.0),
                c(0.0, 0.5), c(0.25, 0.0), c(-1.0, 0.0),
            ],
        ))
        .unwrap();
        let e = m.eigen();
        assert!(e.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        let back = e.reconstruct_with(|l| l);
        assert!((&m - &back).frobenius_norm() <= 1e-10 * m.frobenius_norm().max(1.0));
        let gram = e.eigenvectors.adjoint() * &e.eigenvectors;
        assert!((gram - CMatrix::identity(3, 3)).norm() < 1e-10);
    }

    fn hermitian_strategy(max_n: usize) -> impl Strategy<Value = HermitianMatrix> {
        (1..=max_n).prop_flat_map(|n| {
            prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n * n).prop_map(move |v| {
                let raw = CMatrix::from_fn(n, n, |i, j| {
                    let (re, im) = v[i * n + j];
                    Complex64::new(re, im)
                });
                HermitianMatrix::hermitian_part(raw)
            })
        })
    }

    fn psd_from(m: &HermitianMatrix) -> HermitianMatrix {
        HermitianMatrix::hermitian_part(m.as_matrix() * m.as_matrix().adjoint())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn eigen_reconstruction_and_orthonormality(m in hermitian_strategy(7)) {
            let e = m.eigen();
            let back = e.reconstruct_with(|l| l);
            prop_assert!((&m - &back).frobenius_norm() <= 1e-10 * m.frobenius_norm().max(1.0));
            let n = m.n();
            let gram = e.eigenvectors.adjoint() * &e.eigenvectors;
            prop_assert!((gram - CMatrix::identity(n, n)).norm() <= 1e-10);
        }

        #[test]
        fn psd_projection_is_nearest(m in hermitian_strategy(5), seeds in prop::collection::vec(hermitian_strategy(5), 100)) {
            let p = m.psd_project();
            prop_assert!(p.is_psd(1e-10));
            let best = (&m - &p).frobenius_norm();
            for s in seeds.iter().filter(|s| s.n() == m.n()) {
                let candidate = psd_from(s);
                prop_assert!(best <= (&m - &candidate).frobenius_norm() + 1e-12);
            }
            // a few PSD candidates of the right size regardless of sampling luck
            for s in seeds.iter().take(20) {
                let n = m.n();
                let k = s.n().min(n);
                let mut raw = CMatrix::zeros(n, n);
                raw.view_mut((0, 0), (k, k)).copy_from(&s.as_matrix().view((0, 0), (k, k)));
                let candidate = psd_from(&HermitianMatrix::hermitian_part(raw));
                prop_assert!(best <= (&m - &candidate).frobenius_norm() + 1e-12);
            }
        }

        #[test]
        fn comparison_matrix_idempotent_on_z_pattern(m in hermitian_strategy(6)) {
            let once = m.comparison_matrix();
            let twice = once.comparison_matrix();
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn schur_product_of_psd_is_psd(a in hermitian_strategy(6), b in hermitian_strategy(6)) {
            let n = a.n().min(b.n());
            let idx: Vec<usize> = (0..n).collect();
            let pa = psd_from(&a.principal_submatrix(&idx));
            let pb = psd_from(&b.principal_submatrix(&idx));
            prop_assert!(pa.schur_product(&pb).unwrap().is_psd(1e-9));
        }

        #[test]
        fn conjugate_preserves_psd(a in hermitian_strategy(6), t in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 36)) {
            let n = a.n();
            let k = 1 + (t.len() % n.max(1)).min(5);
            let tm = CMatrix::from_fn(n, k, |i, j| {
                let (re, im) = t[(i * k + j) % t.len()];
                Complex64::new(re, im)
            });
            let p = psd_from(&a);
            prop_assert!(p.conjugate(&tm).unwrap().is_psd(1e-9));
        }
    }
}
