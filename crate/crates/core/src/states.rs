//! Target-state generators: random ensembles, one-axis twisting, the
//! depolarizing channel and collective spin operators.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, c64, hermitian_eig, ComplexMatrix, HermitianEig};
use crate::rng::SeedStream;

const STATE_TOL: f64 = 1e-10;

/// A d×d Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    /// Validates and wraps a matrix. The stored matrix is exactly Hermitian.
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::InvalidState(format!(
                "{}x{} matrix is not square",
                matrix.rows(),
                matrix.cols()
            )));
        }
        let asym = matrix.hermitian_asymmetry();
        if asym > STATE_TOL {
            return Err(Error::InvalidState(format!("asymmetry {asym:e}")));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(Error::InvalidState(format!("trace {tr}")));
        }
        let matrix = matrix.hermitize();
        let min = hermitian_eig(&matrix)?.min_eigenvalue();
        if min < -STATE_TOL {
            return Err(Error::InvalidState(format!("eigenvalue {min:e}")));
        }
        Ok(Self { matrix })
    }

    /// Wraps a matrix that is PSD by construction, normalizing its trace.
    pub(crate) fn from_psd_unnormalized(matrix: ComplexMatrix) -> Self {
        let tr = matrix.trace().re;
        let matrix = matrix.hermitize().scale(1.0 / tr);
        Self { matrix }
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self {
            matrix: ComplexMatrix::identity(d).scale(1.0 / d as f64),
        }
    }

    /// |ψ⟩⟨ψ| for a (not necessarily normalized) nonzero ket.
    pub fn pure(ket: &[Complex64]) -> Result<Self> {
        let norm: f64 = ket.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::InvalidState("zero or non-finite ket".into()));
        }
        let v: Vec<Complex64> = ket.iter().map(|z| z / norm).collect();
        Ok(Self {
            matrix: ComplexMatrix::outer(&v).hermitize(),
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    /// Tr(ρ²)
    pub fn purity(&self) -> f64 {
        self.matrix.trace_product(&self.matrix).re
    }

    pub fn eig(&self) -> Result<HermitianEig> {
        hermitian_eig(&self.matrix)
    }

    /// Cholesky factor of the ε-repaired state, see [`linalg::cholesky_factor`].
    pub fn cholesky(&self, eps: f64) -> Result<ComplexMatrix> {
        linalg::cholesky_factor(&self.matrix, eps)
    }

    /// Tr(ρ O)
    pub fn expectation(&self, op: &ComplexMatrix) -> Complex64 {
        self.matrix.trace_product(op)
    }
}

/// Hilbert-Schmidt random mixed state AA†/Tr(AA†) with Gaussian A.
pub fn hs_random_state(d: usize, rng: &mut SeedStream) -> Result<DensityMatrix> {
    check_dim(d)?;
    let a = gaussian_matrix(d, rng);
    Ok(DensityMatrix::from_psd_unnormalized(&a * &a.adjoint()))
}

/// Haar random pure state: first column of QΛ, A = QR, Λ = diag(R_αα/|R_αα|).
pub fn haar_random_pure(d: usize, rng: &mut SeedStream) -> Result<DensityMatrix> {
    Ok(DensityMatrix::pure(&haar_random_ket(d, rng)?).expect("unit ket"))
}

pub fn haar_random_ket(d: usize, rng: &mut SeedStream) -> Result<Vec<Complex64>> {
    check_dim(d)?;
    let a = gaussian_matrix(d, rng).into_nalgebra();
    let qr = a.qr();
    let q = qr.q();
    let r00 = qr.r()[(0, 0)];
    let phase = if r00.norm() > 0.0 {
        r00 / r00.norm()
    } else {
        c64(1.0, 0.0)
    };
    Ok((0..d).map(|i| q[(i, 0)] * phase).collect())
}

fn gaussian_matrix(d: usize, rng: &mut SeedStream) -> ComplexMatrix {
    // row-major draw order keeps streams stable under storage changes
    let mut entries = Vec::with_capacity(d * d);
    for _ in 0..d * d {
        let re = rng.normal();
        let im = rng.normal();
        entries.push(c64(re, im));
    }
    ComplexMatrix::from_row_major(d, d, entries).expect("finite gaussian entries")
}

fn check_dim(d: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::InvalidArgument(format!("dimension {d} < 2")));
    }
    Ok(())
}

fn check_qubits(l: usize) -> Result<()> {
    if !(1..=6).contains(&l) {
        return Err(Error::InvalidArgument(format!(
            "qubit count {l} outside 1..=6"
        )));
    }
    Ok(())
}

/// Single-qubit Pauli matrices (σ0, σx, σy, σz).
pub fn pauli_matrices() -> [ComplexMatrix; 4] {
    let z = c64(0.0, 0.0);
    let o = c64(1.0, 0.0);
    let i = c64(0.0, 1.0);
    let m = |e: [Complex64; 4]| ComplexMatrix::from_row_major(2, 2, e.to_vec()).unwrap();
    [
        m([o, z, z, o]),
        m([z, o, o, z]),
        m([z, -i, i, z]),
        m([o, z, z, -o]),
    ]
}

/// Collective spin operators J_a = Σ_i σ_a^{(i)}/2 on L qubits.
///
/// Qubit 0 is the leftmost Kronecker factor (most significant bit).
#[derive(Debug, Clone)]
pub struct CollectiveSpinOps {
    pub qubits: usize,
    pub jx: ComplexMatrix,
    pub jy: ComplexMatrix,
    pub jz: ComplexMatrix,
}

impl CollectiveSpinOps {
    pub fn components(&self) -> [&ComplexMatrix; 3] {
        [&self.jx, &self.jy, &self.jz]
    }

    /// J_v = v_x J_x + v_y J_y + v_z J_z
    pub fn along(&self, v: [f64; 3]) -> ComplexMatrix {
        let a = self.jx.scale(v[0]);
        let b = self.jy.scale(v[1]);
        let c = self.jz.scale(v[2]);
        &(&a + &b) + &c
    }
}

pub fn collective_spin(l: usize) -> Result<CollectiveSpinOps> {
    check_qubits(l)?;
    let paulis = pauli_matrices();
    let build = |axis: usize| {
        let d = 1usize << l;
        let mut total = ComplexMatrix::zeros(d, d);
        for site in 0..l {
            let mut op = ComplexMatrix::identity(1);
            for b in 0..l {
                let factor = if b == site {
                    paulis[axis].scale(0.5)
                } else {
                    paulis[0].clone()
                };
                op = op.kron(&factor);
            }
            total = &total + &op;
        }
        total
    };
    Ok(CollectiveSpinOps {
        qubits: l,
        jx: build(1),
        jy: build(2),
        jz: build(3),
    })
}

/// Jz eigenvalue of computational basis state `x`: L/2 − popcount(x).
fn jz_eigenvalue(l: usize, x: usize) -> f64 {
    l as f64 / 2.0 - x.count_ones() as f64
}

/// e^{−itJz²}|+⟩^{⊗L} as a ket, applied as diagonal phases in the Jz eigenbasis.
pub fn oat_ket(l: usize, t: f64) -> Result<Vec<Complex64>> {
    check_qubits(l)?;
    if !(0.0..=std::f64::consts::PI).contains(&t) {
        return Err(Error::InvalidArgument(format!(
            "OAT time {t} outside [0, π]"
        )));
    }
    let d = 1usize << l;
    let amp = (d as f64).sqrt().recip();
    Ok((0..d)
        .map(|x| {
            let m = jz_eigenvalue(l, x);
            Complex64::from_polar(amp, -t * m * m)
        })
        .collect())
}

pub fn oat_state(l: usize, t: f64) -> Result<DensityMatrix> {
    DensityMatrix::pure(&oat_ket(l, t)?)
}

/// σ = (1 − p)ρ + p I/d
pub fn depolarize(rho: &DensityMatrix, p: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        return Err(Error::InvalidProbability(p));
    }
    let d = rho.dim();
    let mixed = ComplexMatrix::identity(d).scale(p / d as f64);
    let matrix = &rho.matrix().scale(1.0 - p) + &mixed;
    Ok(DensityMatrix {
        matrix: matrix.hermitize(),
    })
}
