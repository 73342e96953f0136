//! Informationally complete operator sets and finite-statistics simulation.
//!
//! Every Hermitian operator is also kept in real coordinates
//! `(X_aa ; Re X_ab ; Im X_ab)` for `a < b` (row-major pair order), so Born
//! values and operator sums reduce to real matrix-vector products.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c64, hermitian_eig, symmetric_pinv, ComplexMatrix};
use crate::rng::SeedStream;
use crate::states::{haar_random_ket, pauli_matrices, DensityMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BasisKind {
    SqrtPovm,
    SicPovm,
    Pauli,
}

impl BasisKind {
    pub fn is_povm(self) -> bool {
        !matches!(self, BasisKind::Pauli)
    }

    pub fn name(self) -> &'static str {
        match self {
            BasisKind::SqrtPovm => "sqrt-povm",
            BasisKind::SicPovm => "sic-povm",
            BasisKind::Pauli => "pauli",
        }
    }
}

impl std::str::FromStr for BasisKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sqrt-povm" => Ok(BasisKind::SqrtPovm),
            "sic-povm" => Ok(BasisKind::SicPovm),
            "pauli" => Ok(BasisKind::Pauli),
            other => Err(Error::Format(format!("unknown basis kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FrequencyKind {
    Probability,
    MeanValue,
}

/// Observed frequencies (POVM) or noisy mean values (Pauli).
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyVector {
    values: Vec<f64>,
    kind: FrequencyKind,
}

impl FrequencyVector {
    pub fn new(values: Vec<f64>, kind: FrequencyKind) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NotAProbability("non-finite entry".into()));
        }
        if kind == FrequencyKind::Probability {
            if let Some(v) = values.iter().find(|&&v| v < 0.0) {
                return Err(Error::NotAProbability(format!("negative entry {v}")));
            }
            let sum: f64 = values.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::NotAProbability(format!("entries sum to {sum}")));
            }
        }
        Ok(Self { values, kind })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn kind(&self) -> FrequencyKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Ordered operator set with its Gram matrix G_ij = Tr(π_i π_j).
#[derive(Debug, Clone)]
pub struct MeasurementBasis {
    dim: usize,
    kind: BasisKind,
    operators: Vec<ComplexMatrix>,
    /// d² × m, column i holds the coordinates of π_i.
    coords: DMatrix<f64>,
    gram: DMatrix<f64>,
    gram_inverse: DMatrix<f64>,
}

/// Number of real coordinates of a d×d Hermitian matrix.
pub fn coord_len(d: usize) -> usize {
    d * d
}

/// `(X_aa ; Re X_ab ; Im X_ab)` for `a < b`.
pub fn hermitian_coords(x: &ComplexMatrix) -> Vec<f64> {
    let d = x.rows();
    let mut out = Vec::with_capacity(d * d);
    for a in 0..d {
        out.push(x.get(a, a).re);
    }
    let mut im = Vec::with_capacity(d * (d - 1) / 2);
    for a in 0..d {
        for b in a + 1..d {
            let z = x.get(a, b);
            out.push(z.re);
            im.push(z.im);
        }
    }
    out.extend(im);
    out
}

/// Inverse of [`hermitian_coords`].
pub fn from_hermitian_coords(d: usize, coords: &[f64]) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(d, d);
    for (a, &x) in coords[..d].iter().enumerate() {
        m.set(a, a, c64(x, 0.0));
    }
    let half = d * (d - 1) / 2;
    let mut k = 0;
    for a in 0..d {
        for b in a + 1..d {
            let z = c64(coords[d + k], coords[d + half + k]);
            m.set(a, b, z);
            m.set(b, a, z.conj());
            k += 1;
        }
    }
    m
}

/// Multiplicity of each coordinate in the Hilbert-Schmidt inner product.
fn coord_weight(d: usize, k: usize) -> f64 {
    if k < d {
        1.0
    } else {
        2.0
    }
}

impl MeasurementBasis {
    fn from_operators(dim: usize, kind: BasisKind, operators: Vec<ComplexMatrix>) -> Self {
        let m = operators.len();
        let n = coord_len(dim);
        let mut coords = DMatrix::zeros(n, m);
        for (i, op) in operators.iter().enumerate() {
            for (k, v) in hermitian_coords(op).into_iter().enumerate() {
                coords[(k, i)] = v;
            }
        }
        let mut weighted = coords.clone();
        for k in 0..n {
            weighted.row_mut(k).scale_mut(coord_weight(dim, k));
        }
        let gram = coords.transpose() * &weighted;
        let gram = (&gram + gram.transpose()) * 0.5;
        let gram_inverse = symmetric_pinv(&gram, 1e-12);
        Self {
            dim,
            kind,
            operators,
            coords,
            gram,
            gram_inverse,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }

    pub fn operators(&self) -> &[ComplexMatrix] {
        &self.operators
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn gram_inverse(&self) -> &DMatrix<f64> {
        &self.gram_inverse
    }

    pub fn frequency_kind(&self) -> FrequencyKind {
        if self.kind.is_povm() {
            FrequencyKind::Probability
        } else {
            FrequencyKind::MeanValue
        }
    }

    /// Index of the identity operator, whose value is fixed by normalization.
    pub fn identity_index(&self) -> Option<usize> {
        match self.kind {
            BasisKind::Pauli => Some(0),
            _ => None,
        }
    }

    /// Tr(π_i X) for every i, X Hermitian.
    pub fn traces(&self, x: &ComplexMatrix) -> Vec<f64> {
        let mut c = hermitian_coords(x);
        for (k, v) in c.iter_mut().enumerate() {
            *v *= coord_weight(self.dim, k);
        }
        let out = self.coords.tr_mul(&DVector::from_vec(c));
        out.iter().copied().collect()
    }

    /// Σ_i w_i π_i
    pub fn combine(&self, weights: &[f64]) -> ComplexMatrix {
        let c = &self.coords * DVector::from_column_slice(weights);
        from_hermitian_coords(self.dim, c.as_slice())
    }

    /// G⁻¹ f: expansion coefficients of the linear-inversion estimate.
    pub fn dual_coefficients(&self, f: &[f64]) -> Vec<f64> {
        let c = &self.gram_inverse * DVector::from_column_slice(f);
        c.iter().copied().collect()
    }

    /// Spectral norm of the Gram matrix (Lipschitz constant of the Born map squared).
    pub fn gram_spectral_norm(&self) -> f64 {
        self.gram
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .fold(0.0f64, |a, &b| a.max(b.abs()))
    }
}

/// Square-root POVM built from d² Haar random kets.
pub fn sqrt_povm(d: usize, rng: &mut SeedStream) -> Result<MeasurementBasis> {
    const ATTEMPTS: usize = 5;
    if d < 2 {
        return Err(Error::InvalidArgument(format!("dimension {d} < 2")));
    }
    for _ in 0..ATTEMPTS {
        let kets: Vec<_> = (0..d * d)
            .map(|_| haar_random_ket(d, rng))
            .collect::<Result<_>>()?;
        let projectors: Vec<ComplexMatrix> = kets.iter().map(|k| ComplexMatrix::outer(k)).collect();
        let mut frame = ComplexMatrix::zeros(d, d);
        for p in &projectors {
            frame = &frame + p;
        }
        let eig = hermitian_eig(&frame)?;
        if eig.min_eigenvalue() <= 1e-10 * eig.max_eigenvalue() {
            continue;
        }
        let inv_sqrt = eig.map(|l| l.sqrt().recip());
        let operators = projectors
            .iter()
            .map(|p| (&(&inv_sqrt * p) * &inv_sqrt).hermitize())
            .collect();
        return Ok(MeasurementBasis::from_operators(
            d,
            BasisKind::SqrtPovm,
            operators,
        ));
    }
    Err(Error::SingularFrame { attempts: ATTEMPTS })
}

/// Tetrahedral Bloch vectors of the single-qubit SIC-POVM.
pub fn tetrahedron() -> [[f64; 3]; 4] {
    let r2 = 2f64.sqrt();
    [
        [0.0, 0.0, 1.0],
        [2.0 * r2 / 3.0, 0.0, -1.0 / 3.0],
        [-r2 / 3.0, (2.0f64 / 3.0).sqrt(), -1.0 / 3.0],
        [-r2 / 3.0, -(2.0f64 / 3.0).sqrt(), -1.0 / 3.0],
    ]
}

fn tensor_powers(l: usize, local: &[ComplexMatrix; 4]) -> Vec<ComplexMatrix> {
    let mut ops = vec![ComplexMatrix::identity(1)];
    for _ in 0..l {
        ops = ops
            .iter()
            .flat_map(|op| local.iter().map(move |f| op.kron(f)))
            .collect();
    }
    ops
}

fn check_qubits(l: usize) -> Result<()> {
    if !(1..=6).contains(&l) {
        return Err(Error::InvalidArgument(format!(
            "qubit count {l} outside 1..=6"
        )));
    }
    Ok(())
}

/// Tensor product of local SIC-POVMs (σ0 + s_a·σ)/4, qubit 0 most significant.
pub fn sic_povm(l: usize) -> Result<MeasurementBasis> {
    check_qubits(l)?;
    let p = pauli_matrices();
    let local = tetrahedron().map(|s| {
        let m = &(&(&p[0] + &p[1].scale(s[0])) + &p[2].scale(s[1])) + &p[3].scale(s[2]);
        m.scale(0.25)
    });
    Ok(MeasurementBasis::from_operators(
        1 << l,
        BasisKind::SicPovm,
        tensor_powers(l, &local),
    ))
}

/// All 4^L tensor products of {σ0, σx, σy, σz}.
pub fn pauli_basis(l: usize) -> Result<MeasurementBasis> {
    check_qubits(l)?;
    Ok(MeasurementBasis::from_operators(
        1 << l,
        BasisKind::Pauli,
        tensor_powers(l, &pauli_matrices()),
    ))
}

/// Ideal values Tr(ρ π_i).
pub fn born_values(rho: &DensityMatrix, basis: &MeasurementBasis) -> Result<FrequencyVector> {
    if rho.dim() != basis.dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            got: rho.dim(),
        });
    }
    let mut values = basis.traces(rho.matrix());
    let kind = basis.frequency_kind();
    if kind == FrequencyKind::Probability {
        for v in &mut values {
            // roundoff below zero
            *v = v.max(0.0);
        }
    }
    FrequencyVector::new(values, kind)
}

/// Frequencies n_i/N of one multinomial draw of `shots` trials.
///
/// Counts are drawn by sequential binomial decomposition, exact for any N.
pub fn sample_direct(
    p: &FrequencyVector,
    shots: u64,
    rng: &mut SeedStream,
) -> Result<FrequencyVector> {
    if p.kind() != FrequencyKind::Probability {
        return Err(Error::NotAProbability(
            "mean values cannot be sampled directly".into(),
        ));
    }
    if shots == 0 {
        return Err(Error::InvalidArgument(
            "shot count must be at least 1".into(),
        ));
    }
    let counts = multinomial(p.values(), shots, rng);
    let values = counts.iter().map(|&c| c as f64 / shots as f64).collect();
    FrequencyVector::new(values, FrequencyKind::Probability)
}

pub fn multinomial(p: &[f64], shots: u64, rng: &mut SeedStream) -> Vec<u64> {
    let mut counts = vec![0u64; p.len()];
    let mut remaining_shots = shots;
    let mut remaining_mass: f64 = p.iter().sum();
    for (i, &pi) in p.iter().enumerate() {
        if remaining_shots == 0 {
            break;
        }
        if i + 1 == p.len() {
            counts[i] = remaining_shots;
            break;
        }
        let q = if remaining_mass > 0.0 {
            (pi / remaining_mass).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let draw = if q >= 1.0 {
            remaining_shots
        } else if q <= 0.0 {
            0
        } else {
            Binomial::new(remaining_shots, q)
                .expect("valid binomial parameters")
                .sample(rng.rng())
        };
        counts[i] = draw;
        remaining_shots -= draw;
        remaining_mass -= pi;
    }
    counts
}

/// Standard deviation of the Gaussian shot-noise surrogate for N trials.
pub fn indirect_noise_std(shots: u64) -> f64 {
    1.0 / (2.0 * (shots as f64).sqrt())
}

/// f = p + δp with δp ~ N(0, 1/(2√N)) i.i.d.; the `exact` component is left noiseless.
pub fn sample_indirect(
    p: &FrequencyVector,
    shots: u64,
    exact: Option<usize>,
    rng: &mut SeedStream,
) -> Result<FrequencyVector> {
    if shots == 0 {
        return Err(Error::InvalidArgument(
            "shot count must be at least 1".into(),
        ));
    }
    let std = indirect_noise_std(shots);
    let values = p
        .values()
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let noise = rng.normal() * std;
            if Some(i) == exact {
                v
            } else {
                v + noise
            }
        })
        .collect();
    FrequencyVector::new(values, FrequencyKind::MeanValue)
}

/// Draws a fixed calibration bias with i.i.d. N(0, std) entries.
///
/// The `exact` component (identity expectation) gets zero bias.
pub fn draw_calibration_bias(
    len: usize,
    std: f64,
    exact: Option<usize>,
    rng: &mut SeedStream,
) -> Vec<f64> {
    (0..len)
        .map(|i| {
            let b = rng.normal() * std;
            if Some(i) == exact {
                0.0
            } else {
                b
            }
        })
        .collect()
}

/// f' = f + bias. With `clamp`, probability vectors are clipped and renormalized
/// onto the simplex; otherwise the result is reported as mean values.
pub fn apply_calibration_bias(
    f: &FrequencyVector,
    bias: &[f64],
    clamp: bool,
) -> Result<FrequencyVector> {
    if bias.len() != f.len() {
        return Err(Error::DimensionMismatch {
            expected: f.len(),
            got: bias.len(),
        });
    }
    let mut values: Vec<f64> = f.values().iter().zip(bias).map(|(a, b)| a + b).collect();
    match (f.kind(), clamp) {
        (FrequencyKind::Probability, true) => {
            for v in &mut values {
                *v = v.max(0.0);
            }
            let sum: f64 = values.iter().sum();
            if sum <= 0.0 {
                return Err(Error::NotAProbability("bias removed all mass".into()));
            }
            for v in &mut values {
                *v /= sum;
            }
            FrequencyVector::new(values, FrequencyKind::Probability)
        }
        (FrequencyKind::Probability, false) if bias.iter().all(|&b| b == 0.0) => {
            FrequencyVector::new(values, FrequencyKind::Probability)
        }
        _ => FrequencyVector::new(values, FrequencyKind::MeanValue),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{hs_random_state, oat_state};

    fn assert_complete(basis: &MeasurementBasis) {
        let d = basis.dim();
        let mut sum = ComplexMatrix::zeros(d, d);
        for op in basis.operators() {
            assert!(op.hermitian_asymmetry() < 1e-10);
            assert!(hermitian_eig(op).unwrap().min_eigenvalue() > -1e-10);
            sum = &sum + op;
        }
        assert!((&sum - &ComplexMatrix::identity(d)).frobenius_norm() < 1e-10);
    }

    fn assert_gram_pinv(basis: &MeasurementBasis) {
        let g = basis.gram();
        let back = g * basis.gram_inverse() * g;
        assert!((back - g).norm() < 1e-8 * (1.0 + g.norm()));
    }

    #[test]
    fn coords_round_trip() {
        let mut rng = SeedStream::new(5);
        let rho = hs_random_state(5, &mut rng).unwrap();
        let c = hermitian_coords(rho.matrix());
        assert_eq!(c.len(), 25);
        let back = from_hermitian_coords(5, &c);
        assert!((&back - rho.matrix()).frobenius_norm() < 1e-15);
    }

    #[test]
    fn sqrt_povm_complete() {
        for (d, seed) in [(2, 1), (3, 2), (9, 3)] {
            let b = sqrt_povm(d, &mut SeedStream::new(seed)).unwrap();
            assert_eq!(b.len(), d * d);
            assert_complete(&b);
            assert_gram_pinv(&b);
        }
    }

    #[test]
    fn sqrt_povm_mixed_state() {
        let b = sqrt_povm(2, &mut SeedStream::new(17)).unwrap();
        let p = born_values(&DensityMatrix::maximally_mixed(2), &b).unwrap();
        for (v, op) in p.values().iter().zip(b.operators()) {
            assert!((v - op.trace().re / 2.0).abs() < 1e-14);
        }
        assert!((p.values().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sqrt_povm_gram_positive_definite() {
        let b = sqrt_povm(9, &mut SeedStream::new(21)).unwrap();
        let eig = b.gram().clone().symmetric_eigen();
        let min = eig
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        assert!(min > 0.0, "min gram eigenvalue {min}");
        assert!((b.gram() - b.gram().transpose()).norm() == 0.0);
    }

    #[test]
    fn sic_single_qubit() {
        let b = sic_povm(1).unwrap();
        let p = born_values(&DensityMatrix::maximally_mixed(2), &b).unwrap();
        for v in p.values() {
            assert!((v - 0.25).abs() < 1e-15);
        }
        for op in b.operators() {
            let e = hermitian_eig(op).unwrap();
            assert!(e.eigenvalues[0].abs() < 1e-15);
            assert!((e.eigenvalues[1] - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn sic_four_qubits_complete() {
        let b = sic_povm(4).unwrap();
        assert_eq!(b.len(), 256);
        assert_complete(&b);
        assert_gram_pinv(&b);
        let p = born_values(&DensityMatrix::maximally_mixed(16), &b).unwrap();
        for v in p.values() {
            assert!((v - 1.0 / 256.0).abs() < 1e-15);
        }
    }

    #[test]
    fn pauli_values_and_gram() {
        let b = pauli_basis(1).unwrap();
        let zero = DensityMatrix::pure(&[c64(1.0, 0.0), c64(0.0, 0.0)]).unwrap();
        let p = born_values(&zero, &b).unwrap();
        assert_eq!(p.kind(), FrequencyKind::MeanValue);
        let expect = [1.0, 0.0, 0.0, 1.0];
        for (v, e) in p.values().iter().zip(expect) {
            assert!((v - e).abs() < 1e-15);
        }
        for l in 1..=4 {
            let b = pauli_basis(l).unwrap();
            let scale = (1 << l) as f64;
            let expect = DMatrix::<f64>::identity(b.len(), b.len()) * scale;
            assert!((b.gram() - expect).norm() < 1e-12);
        }
        let b = pauli_basis(4).unwrap();
        let plus = oat_state(4, 0.0).unwrap();
        let p = born_values(&plus, &b).unwrap();
        // σx^{⊗4} has index 1·64 + 1·16 + 1·4 + 1
        assert!((p.values()[85] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn born_dimension_mismatch() {
        let b = sic_povm(2).unwrap();
        let rho = DensityMatrix::maximally_mixed(2);
        assert!(matches!(
            born_values(&rho, &b),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn oat_sic_probabilities() {
        let b = sic_povm(4).unwrap();
        let p = born_values(&oat_state(4, 0.3).unwrap(), &b).unwrap();
        assert!(p.values().iter().all(|&v| v >= 0.0));
        assert!((p.values().iter().sum::<f64>() - 1.0).abs() < 1e-10);
        // direct trace oracle
        let rho = oat_state(4, 0.3).unwrap();
        for (v, op) in p.values().iter().zip(b.operators()) {
            assert!((v - (rho.matrix() * op).trace().re).abs() < 1e-14);
        }
    }

    #[test]
    fn direct_sampling_degenerate_and_reproducible() {
        let mut p = vec![0.0; 9];
        p[0] = 1.0;
        let p = FrequencyVector::new(p, FrequencyKind::Probability).unwrap();
        let f = sample_direct(&p, 12345, &mut SeedStream::new(1)).unwrap();
        assert_eq!(f.values()[0], 1.0);
        assert!(f.values()[1..].iter().all(|&v| v == 0.0));

        let basis = sqrt_povm(9, &mut SeedStream::new(2)).unwrap();
        let rho = hs_random_state(9, &mut SeedStream::new(3)).unwrap();
        let p = born_values(&rho, &basis).unwrap();
        let a = multinomial(p.values(), 1000, &mut SeedStream::new(4));
        let b = multinomial(p.values(), 1000, &mut SeedStream::new(4));
        assert_eq!(a, b);
        assert_eq!(a.iter().sum::<u64>(), 1000);
    }

    #[test]
    fn direct_sampling_large_n() {
        let basis = sic_povm(2).unwrap();
        let rho = hs_random_state(4, &mut SeedStream::new(3)).unwrap();
        let p = born_values(&rho, &basis).unwrap();
        let f = sample_direct(&p, 100_000_000, &mut SeedStream::new(5)).unwrap();
        let err = p
            .values()
            .iter()
            .zip(f.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-3);
    }

    #[test]
    fn direct_sampling_rejects_mean_values() {
        let f = FrequencyVector::new(vec![1.0, -0.5], FrequencyKind::MeanValue).unwrap();
        assert!(matches!(
            sample_direct(&f, 10, &mut SeedStream::new(0)),
            Err(Error::NotAProbability(_))
        ));
        assert!(FrequencyVector::new(vec![0.5, 0.6], FrequencyKind::Probability).is_err());
    }

    #[test]
    fn indirect_sampling_vanishing_noise() {
        let basis = pauli_basis(2).unwrap();
        let rho = hs_random_state(4, &mut SeedStream::new(1)).unwrap();
        let p = born_values(&rho, &basis).unwrap();
        let f = sample_indirect(&p, 1_000_000_000_000, Some(0), &mut SeedStream::new(2)).unwrap();
        for (a, b) in p.values().iter().zip(f.values()) {
            assert!((a - b).abs() < 1e-4);
        }
        assert_eq!(f.values()[0], p.values()[0]);
    }

    #[test]
    fn calibration_bias_behaviour() {
        let p = FrequencyVector::new(vec![0.5, 0.5], FrequencyKind::Probability).unwrap();
        let same = apply_calibration_bias(&p, &[0.0, 0.0], false).unwrap();
        assert_eq!(same, p);
        let clamped = apply_calibration_bias(&p, &[0.7, -0.6], true).unwrap();
        assert_eq!(clamped.values(), &[1.0, 0.0]);
        let raw = apply_calibration_bias(&p, &[0.1, 0.0], false).unwrap();
        assert_eq!(raw.kind(), FrequencyKind::MeanValue);
        assert!(matches!(
            apply_calibration_bias(&p, &[0.1], false),
            Err(Error::DimensionMismatch { .. })
        ));
        // one bias draw shared across states
        let bias = draw_calibration_bias(16, 1e-4, Some(0), &mut SeedStream::new(3));
        assert_eq!(bias[0], 0.0);
        let basis = pauli_basis(2).unwrap();
        let a = born_values(
            &hs_random_state(4, &mut SeedStream::new(4)).unwrap(),
            &basis,
        )
        .unwrap();
        let b = born_values(
            &hs_random_state(4, &mut SeedStream::new(5)).unwrap(),
            &basis,
        )
        .unwrap();
        let fa = apply_calibration_bias(&a, &bias, false).unwrap();
        let fb = apply_calibration_bias(&b, &bias, false).unwrap();
        for (i, &bi) in bias.iter().enumerate() {
            let da = fa.values()[i] - a.values()[i];
            let db = fb.values()[i] - b.values()[i];
            assert!((da - bi).abs() < 1e-15 && (db - bi).abs() < 1e-15);
        }
    }
}
