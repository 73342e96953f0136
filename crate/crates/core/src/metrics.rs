//! Distances between states and entanglement certificates from the quantum
//! Fisher information of collective rotations.

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eig, sqrt_from_eig, ComplexMatrix, CHOLESKY_REPAIR};
use crate::states::{collective_spin, CollectiveSpinOps, DensityMatrix};

/// Eigenvalue pairs with p_k + p_l at or below this are skipped in the QFI sum.
pub const QFI_FLOOR: f64 = 1e-12;
const DEPTH_TOL: f64 = 1e-9;

fn same_dim(a: &DensityMatrix, b: &DensityMatrix) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    Ok(())
}

/// Tr[(A − B)²]
pub fn hs_distance_sq(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    same_dim(a, b)?;
    Ok(hs_distance_sq_matrices(a.matrix(), b.matrix()))
}

/// ‖A − B‖²_F for arbitrary equal-shape matrices.
pub fn hs_distance_sq_matrices(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    let diff = a - b;
    let n = diff.frobenius_norm();
    n * n
}

/// Tr√(√A B √A)
pub fn root_fidelity(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    same_dim(a, b)?;
    let sa = sqrt_from_eig(&a.eig()?)?;
    let inner = (&(&sa * b.matrix()) * &sa).hermitize();
    let eig = hermitian_eig(&inner)?;
    // rounding noise at the 1e-17 level would otherwise contribute its square root
    let floor = 1e-14 * eig.max_eigenvalue().max(0.0);
    Ok(eig
        .eigenvalues
        .iter()
        .filter(|&&l| l > floor)
        .map(|&l| l.sqrt())
        .sum())
}

/// Uhlmann fidelity F = (Tr√(√A B √A))².
pub fn fidelity(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    let f = root_fidelity(a, b)?.powi(2);
    debug_assert!((f - root_fidelity(b, a)?.powi(2)).abs() <= 1e-9);
    Ok(f)
}

/// D_B = 2 − 2√F
pub fn bures_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    Ok((2.0 - 2.0 * root_fidelity(a, b)?).clamp(0.0, 2.0))
}

/// D²_HS between the Cholesky factors of the ε-repaired states.
///
/// Bounds D_B of the repaired pair; for rank-deficient inputs the repair itself
/// moves √F by O(√ε), so the unrepaired D_B can exceed it slightly.
pub fn cholesky_distance_sq(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    same_dim(a, b)?;
    Ok(hs_distance_sq_matrices(
        &a.cholesky(CHOLESKY_REPAIR)?,
        &b.cholesky(CHOLESKY_REPAIR)?,
    ))
}

/// F_Q = 2 Σ_{k,l} (p_k − p_l)²/(p_k + p_l) |⟨k|G|l⟩|²
pub fn qfi(rho: &DensityMatrix, generator: &ComplexMatrix) -> Result<f64> {
    if generator.rows() != rho.dim() || !generator.is_square() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            got: generator.rows(),
        });
    }
    let eig = rho.eig()?;
    let u = &eig.eigenvectors;
    let g = &(&u.adjoint() * generator) * u;
    let p = &eig.eigenvalues;
    let mut total = 0.0;
    for k in 0..p.len() {
        for l in 0..p.len() {
            let s = p[k] + p[l];
            if s > QFI_FLOOR {
                let diff = p[k] - p[l];
                total += diff * diff / s * g.get(k, l).norm_sqr();
            }
        }
    }
    Ok(2.0 * total)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QfiReport {
    pub qfi: f64,
    /// qfi / L
    pub normalized: f64,
    pub direction: [f64; 3],
    /// Entanglement depth certified by qfi > (depth − 1) L.
    pub depth: usize,
}

/// Largest k + 1 with qfi > kL, between 1 and L.
pub fn entanglement_depth(qfi: f64, l: usize) -> usize {
    let k = (qfi / l as f64 - DEPTH_TOL).ceil();
    (k.max(1.0) as usize).min(l)
}

/// QFI along the axis of maximal collective-spin variance.
pub fn optimal_axis_qfi(rho: &DensityMatrix) -> Result<QfiReport> {
    let d = rho.dim();
    if !d.is_power_of_two() || d < 2 {
        return Err(Error::DimensionMismatch {
            expected: d.next_power_of_two().max(2),
            got: d,
        });
    }
    let ops = collective_spin(d.trailing_zeros() as usize)?;
    optimal_axis_qfi_with(rho, &ops)
}

/// [`optimal_axis_qfi`] with precomputed spin operators.
pub fn optimal_axis_qfi_with(rho: &DensityMatrix, ops: &CollectiveSpinOps) -> Result<QfiReport> {
    let l = ops.qubits;
    if rho.dim() != 1 << l {
        return Err(Error::DimensionMismatch {
            expected: 1 << l,
            got: rho.dim(),
        });
    }
    let c = spin_covariance(rho, ops);
    let eig = c.symmetric_eigen();
    let top = eig.eigenvalues.imax();
    let v = eig.eigenvectors.column(top);
    let mut direction = [v[0], v[1], v[2]];
    let norm = direction.iter().map(|x| x * x).sum::<f64>().sqrt();
    direction.iter_mut().for_each(|x| *x /= norm);
    // fix the sign so the largest component is positive
    let lead = (0..3)
        .max_by(|&a, &b| direction[a].abs().total_cmp(&direction[b].abs()))
        .unwrap_or(0);
    if direction[lead] < 0.0 {
        direction.iter_mut().for_each(|x| *x = -*x);
    }
    let q = qfi(rho, &ops.along(direction))?.max(0.0);
    Ok(QfiReport {
        qfi: q,
        normalized: q / l as f64,
        direction,
        depth: entanglement_depth(q, l),
    })
}

/// C_ab = Re⟨J_a J_b⟩ − ⟨J_a⟩⟨J_b⟩
pub fn spin_covariance(rho: &DensityMatrix, ops: &CollectiveSpinOps) -> Matrix3<f64> {
    let js = ops.components();
    let first: Vec<f64> = js.iter().map(|j| rho.expectation(j).re).collect();
    let mut c = Matrix3::zeros();
    for a in 0..3 {
        for b in a..3 {
            let second = rho.expectation(&(js[a] * js[b])).re;
            let v = second - first[a] * first[b];
            c[(a, b)] = v;
            c[(b, a)] = v;
        }
    }
    c
}
