//! Dense complex matrix kernel.
//!
//! `ComplexMatrix` wraps a column-major `nalgebra::DMatrix<Complex64>`; the
//! row-major view used by the file formats is exposed through
//! [`ComplexMatrix::row_major`] and [`ComplexMatrix::from_row_major`].

use std::ops::{Add, Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Relative Hermiticity tolerance accepted by [`hermitian_eig`].
pub const HERMITIAN_TOL: f64 = 1e-8;
/// Eigenvalues above `-PSD_CLAMP` are treated as zero by the PSD functions.
pub const PSD_CLAMP: f64 = 1e-10;
/// Eigenvalues below `-PSD_REJECT` make a matrix non-PSD.
pub const PSD_REJECT: f64 = 1e-8;
/// Default positivity repair amplitude for Cholesky factorization.
pub const CHOLESKY_REPAIR: f64 = 1e-5;

pub const fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    inner: DMatrix<Complex64>,
}

impl ComplexMatrix {
    /// Builds a matrix from row-major entries, rejecting non-finite values.
    pub fn from_row_major(rows: usize, cols: usize, entries: Vec<Complex64>) -> Result<Self> {
        if rows * cols != entries.len() {
            return Err(Error::InvalidMatrix(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                entries.len()
            )));
        }
        if entries
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::InvalidMatrix("non-finite entry".into()));
        }
        Ok(Self {
            inner: DMatrix::from_row_slice(rows, cols, &entries),
        })
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> Complex64) -> Self {
        Self {
            inner: DMatrix::from_fn(rows, cols, f),
        }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            inner: DMatrix::zeros(rows, cols),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            inner: DMatrix::identity(n, n),
        }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self::from_fn(n, n, |i, j| {
            if i == j {
                c64(diag[i], 0.0)
            } else {
                c64(0.0, 0.0)
            }
        })
    }

    /// |v⟩⟨v|
    pub fn outer(v: &[Complex64]) -> Self {
        let n = v.len();
        Self::from_fn(n, n, |i, j| v[i] * v[j].conj())
    }

    pub fn from_nalgebra(inner: DMatrix<Complex64>) -> Self {
        Self { inner }
    }

    pub fn as_nalgebra(&self) -> &DMatrix<Complex64> {
        &self.inner
    }

    pub fn into_nalgebra(self) -> DMatrix<Complex64> {
        self.inner
    }

    pub fn rows(&self) -> usize {
        self.inner.nrows()
    }

    pub fn cols(&self) -> usize {
        self.inner.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.inner[(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, value: Complex64) {
        self.inner[(i, j)] = value;
    }

    pub fn row_major(&self) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.rows() * self.cols());
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                out.push(self.inner[(i, j)]);
            }
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        Self {
            inner: self.inner.adjoint(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            inner: self.inner.map(|z| z * s),
        }
    }

    pub fn scale_complex(&self, s: Complex64) -> Self {
        Self {
            inner: &self.inner * s,
        }
    }

    pub fn trace(&self) -> Complex64 {
        self.inner.trace()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.inner.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Tr(A B) for square matrices without forming the product.
    pub fn trace_product(&self, other: &Self) -> Complex64 {
        let n = self.rows();
        let mut acc = c64(0.0, 0.0);
        for i in 0..n {
            for k in 0..n {
                acc += self.inner[(i, k)] * other.inner[(k, i)];
            }
        }
        acc
    }

    /// ‖M − M†‖_F
    pub fn hermitian_asymmetry(&self) -> f64 {
        let n = self.rows();
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += (self.inner[(i, j)] - self.inner[(j, i)].conj()).norm_sqr();
            }
        }
        acc.sqrt()
    }

    /// (M + M†)/2
    pub fn hermitize(&self) -> Self {
        Self {
            inner: (&self.inner + self.inner.adjoint()) * c64(0.5, 0.0),
        }
    }

    pub fn kron(&self, other: &Self) -> Self {
        Self {
            inner: self.inner.kronecker(&other.inner),
        }
    }

    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }

    pub fn is_lower_triangular(&self, tol: f64) -> bool {
        self.first_upper_violation(tol).is_none()
    }

    pub(crate) fn first_upper_violation(&self, tol: f64) -> Option<(usize, usize)> {
        for i in 0..self.rows() {
            if self.inner[(i, i)].im.abs() > tol {
                return Some((i, i));
            }
            for j in i + 1..self.cols() {
                if self.inner[(i, j)].norm() > tol {
                    return Some((i, j));
                }
            }
        }
        None
    }

    pub fn mat_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        (0..self.rows())
            .map(|i| (0..self.cols()).map(|j| self.inner[(i, j)] * v[j]).sum())
            .collect()
    }

    /// ⟨v|M|v⟩
    pub fn expectation(&self, v: &[Complex64]) -> Complex64 {
        let mv = self.mat_vec(v);
        v.iter().zip(&mv).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows()).map(|i| self.inner[(i, j)]).collect()
    }
}

impl<'a> Mul<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &'a ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix {
            inner: &self.inner * &rhs.inner,
        }
    }
}

impl<'a> Add<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &'a ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix {
            inner: &self.inner + &rhs.inner,
        }
    }
}

impl<'a> Sub<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &'a ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix {
            inner: &self.inner - &rhs.inner,
        }
    }
}

/// Spectral decomposition M = V diag(λ) V† with ascending eigenvalues.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    pub eigenvalues: Vec<f64>,
    /// Unitary matrix whose columns are the eigenvectors.
    pub eigenvectors: ComplexMatrix,
}

impl HermitianEig {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// V diag(f(λ)) V†
    pub fn map(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let values: Vec<f64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        self.assemble(&values)
    }

    /// V diag(values) V†
    pub fn assemble(&self, values: &[f64]) -> ComplexMatrix {
        let v = self.eigenvectors.as_nalgebra();
        let mut scaled = v.clone();
        for (j, &lam) in values.iter().enumerate() {
            scaled.column_mut(j).scale_mut(lam);
        }
        ComplexMatrix::from_nalgebra(scaled * v.adjoint())
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.assemble(&self.eigenvalues)
    }

    pub fn eigenvector(&self, k: usize) -> Vec<Complex64> {
        self.eigenvectors.column(k)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
pub fn hermitian_eig(m: &ComplexMatrix) -> Result<HermitianEig> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: m.rows(),
            got: m.cols(),
        });
    }
    let norm = m.frobenius_norm();
    let asym = m.hermitian_asymmetry();
    if asym > HERMITIAN_TOL * norm {
        return Err(Error::NotHermitian { asymmetry: asym });
    }
    let n = m.rows();
    let eig = m
        .hermitize()
        .into_nalgebra()
        .try_symmetric_eigen(f64::EPSILON, 0)
        .ok_or(Error::NoConvergence)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok(HermitianEig {
        eigenvalues,
        eigenvectors: ComplexMatrix::from_nalgebra(vectors),
    })
}

/// Principal square root of a PSD matrix.
pub fn matrix_sqrt_psd(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = hermitian_eig(m)?;
    sqrt_from_eig(&eig)
}

pub(crate) fn sqrt_from_eig(eig: &HermitianEig) -> Result<ComplexMatrix> {
    let min = eig.min_eigenvalue();
    if min < -PSD_REJECT {
        return Err(Error::NotPsd { eigenvalue: min });
    }
    Ok(eig.map(|l| l.max(0.0).sqrt()))
}

/// Lower-triangular C with C C† = (ρ + εI)/(1 + εd) and real nonnegative diagonal.
pub fn cholesky_factor(rho: &ComplexMatrix, eps: f64) -> Result<ComplexMatrix> {
    if !rho.is_square() {
        return Err(Error::DimensionMismatch {
            expected: rho.rows(),
            got: rho.cols(),
        });
    }
    if rho.hermitian_asymmetry() > HERMITIAN_TOL * rho.frobenius_norm().max(1.0) {
        return Err(Error::NotHermitian {
            asymmetry: rho.hermitian_asymmetry(),
        });
    }
    let tr = rho.trace();
    if (tr.re - 1.0).abs() > 1e-8 || tr.im.abs() > 1e-8 {
        return Err(Error::InvalidState(format!("trace {tr} != 1")));
    }
    let d = rho.rows();
    let repaired = repair(rho, eps);
    let chol = nalgebra::Cholesky::new(repaired.into_nalgebra()).ok_or_else(|| {
        Error::FactorizationFailure(format!(
            "repaired matrix not positive definite (eps = {eps:e})"
        ))
    })?;
    let mut l = chol.unpack();
    for i in 0..d {
        l[(i, i)] = c64(l[(i, i)].re.max(0.0), 0.0);
        for j in i + 1..d {
            l[(i, j)] = c64(0.0, 0.0);
        }
    }
    Ok(ComplexMatrix::from_nalgebra(l))
}

/// The uniform-mixture positivity repair (ρ + εI)/(1 + εd), hermitized.
pub fn repair(rho: &ComplexMatrix, eps: f64) -> ComplexMatrix {
    let d = rho.rows();
    let mut out = rho.hermitize();
    for i in 0..d {
        let z = out.get(i, i);
        out.set(i, i, z + eps);
    }
    out.scale(1.0 / (1.0 + eps * d as f64))
}

/// Moore-Penrose pseudo-inverse of a real symmetric matrix.
///
/// Eigenvalues below `rel_tol * λ_max` are treated as zero.
pub fn symmetric_pinv(m: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let eig = m.clone().symmetric_eigen();
    let lmax = eig.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let cutoff = rel_tol * lmax;
    let inv = eig
        .eigenvalues
        .map(|l| if l.abs() > cutoff { 1.0 / l } else { 0.0 });
    let v = &eig.eigenvectors;
    let mut scaled = v.clone();
    for (j, &s) in inv.iter().enumerate() {
        scaled.column_mut(j).scale_mut(s);
    }
    scaled * v.transpose()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedStream;

    fn random_matrix(n: usize, rng: &mut SeedStream) -> ComplexMatrix {
        ComplexMatrix::from_fn(n, n, |_, _| c64(rng.normal(), rng.normal()))
    }

    fn random_hermitian(n: usize, rng: &mut SeedStream) -> ComplexMatrix {
        random_matrix(n, rng).hermitize()
    }

    fn random_psd(n: usize, rng: &mut SeedStream) -> ComplexMatrix {
        let a = random_matrix(n, rng);
        &a * &a.adjoint()
    }

    #[test]
    fn diagonal_eig_sorted() {
        let m = ComplexMatrix::from_real_diagonal(&[2.0, 1.0]);
        let e = hermitian_eig(&m).unwrap();
        assert_eq!(e.eigenvalues, vec![1.0, 2.0]);
        // eigenvector for 1 is e_1, for 2 is e_0
        assert!((e.eigenvectors.get(1, 0).norm() - 1.0).abs() < 1e-14);
        assert!((e.eigenvectors.get(0, 1).norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn pauli_x_spectrum() {
        let sx = ComplexMatrix::from_row_major(
            2,
            2,
            vec![c64(0., 0.), c64(1., 0.), c64(1., 0.), c64(0., 0.)],
        )
        .unwrap();
        let e = hermitian_eig(&sx).unwrap();
        assert!((e.eigenvalues[0] + 1.0).abs() < 1e-14);
        assert!((e.eigenvalues[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn random_hermitian_reconstructs() {
        let mut rng = SeedStream::new(3);
        for &n in &[2, 9, 16, 64] {
            for _ in 0..20 {
                let m = random_hermitian(n, &mut rng);
                let e = hermitian_eig(&m).unwrap();
                let resid = (&e.reconstruct() - &m).frobenius_norm();
                assert!(resid <= 1e-10 * m.frobenius_norm(), "n={n} resid={resid:e}");
                let v = &e.eigenvectors;
                let orth = (&(&v.adjoint() * v) - &ComplexMatrix::identity(n)).frobenius_norm();
                assert!(orth < 1e-10);
                let sum: f64 = e.eigenvalues.iter().sum();
                assert!((sum - m.trace().re).abs() < 1e-10 * (1.0 + m.frobenius_norm()));
                assert!(e.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
            }
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = ComplexMatrix::from_row_major(
            2,
            2,
            vec![c64(1., 0.), c64(1., 0.), c64(0., 0.), c64(1., 0.)],
        )
        .unwrap();
        assert!(matches!(hermitian_eig(&m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn rejects_non_finite() {
        let r = ComplexMatrix::from_row_major(1, 1, vec![c64(f64::NAN, 0.0)]);
        assert!(r.is_err());
        let r = ComplexMatrix::from_row_major(2, 1, vec![c64(1.0, 0.0)]);
        assert!(r.is_err());
    }

    #[test]
    fn sqrt_examples() {
        let i3 = ComplexMatrix::identity(3);
        assert!((&matrix_sqrt_psd(&i3).unwrap() - &i3).frobenius_norm() < 1e-14);
        let m = ComplexMatrix::from_real_diagonal(&[4.0, 9.0]);
        let r = matrix_sqrt_psd(&m).unwrap();
        assert!((&r - &ComplexMatrix::from_real_diagonal(&[2.0, 3.0])).frobenius_norm() < 1e-14);
        let neg = ComplexMatrix::from_real_diagonal(&[1.0, -1e-6]);
        assert!(matches!(matrix_sqrt_psd(&neg), Err(Error::NotPsd { .. })));
        // tiny negative roundoff is clamped
        let near = ComplexMatrix::from_real_diagonal(&[1.0, -1e-11]);
        assert!(matrix_sqrt_psd(&near).is_ok());
    }

    #[test]
    fn sqrt_squares_back() {
        let mut rng = SeedStream::new(9);
        for _ in 0..50 {
            let m = random_psd(9, &mut rng);
            let r = matrix_sqrt_psd(&m).unwrap();
            let err = (&(&r * &r) - &m).frobenius_norm();
            assert!(err <= 1e-9 * (1.0 + m.frobenius_norm()), "err={err:e}");
            assert!(hermitian_eig(&r).unwrap().min_eigenvalue() > -1e-10);
        }
    }

    #[test]
    fn cholesky_maximally_mixed_no_repair() {
        let m = ComplexMatrix::identity(2).scale(0.5);
        let c = cholesky_factor(&m, 0.0).unwrap();
        let expect = ComplexMatrix::identity(2).scale(1.0 / 2f64.sqrt());
        assert!((&c - &expect).frobenius_norm() < 1e-15);
    }

    #[test]
    fn cholesky_pure_state_repaired() {
        let m = ComplexMatrix::from_real_diagonal(&[1.0, 0.0]);
        let c = cholesky_factor(&m, 1e-5).unwrap();
        let expect =
            ComplexMatrix::from_real_diagonal(&[1.0 + 1e-5, 1e-5]).scale(1.0 / (1.0 + 2e-5));
        assert!((&(&c * &c.adjoint()) - &expect).frobenius_norm() < 1e-12);
        assert!(c.is_lower_triangular(0.0));
        // unrepaired rank-deficient input fails
        assert!(matches!(
            cholesky_factor(&m, 0.0),
            Err(Error::FactorizationFailure(_))
        ));
    }

    #[test]
    fn cholesky_rejects_bad_trace() {
        let m = ComplexMatrix::identity(2);
        assert!(matches!(
            cholesky_factor(&m, 1e-5),
            Err(Error::InvalidState(_))
        ));
    }

    #[test]
    fn pinv_of_singular() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let p = symmetric_pinv(&m, 1e-12);
        let back = &m * &p * &m;
        assert!((back - &m).norm() < 1e-12);
    }
}
