//! Real vectorization of lower-triangular Cholesky factors.
//!
//! Layout for a d×d factor, length d²:
//! `[C_00 … C_{d-1,d-1}] ++ [Re C_ij for i > j] ++ [Im C_ij for i > j]`,
//! the off-diagonal entries in row-major order (1,0), (2,0), (2,1), (3,0), …

use crate::error::{Error, Result};
use crate::linalg::{c64, ComplexMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct CholeskyVector {
    d: usize,
    values: Vec<f64>,
}

/// Row-major strictly-lower index pairs.
pub fn lower_pairs(d: usize) -> impl Iterator<Item = (usize, usize)> {
    (1..d).flat_map(|i| (0..i).map(move |j| (i, j)))
}

impl CholeskyVector {
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        let len = values.len();
        let d = (len as f64).sqrt().round() as usize;
        if d == 0 || d * d != len {
            return Err(Error::BadLength { len });
        }
        Ok(Self { d, values })
    }

    pub fn zeros(d: usize) -> Self {
        Self {
            d,
            values: vec![0.0; d * d],
        }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }
}

/// Flattens a lower-triangular matrix with real diagonal.
pub fn pack_cholesky(c: &ComplexMatrix) -> Result<CholeskyVector> {
    if !c.is_square() {
        return Err(Error::ShapeMismatch(format!(
            "{}x{} factor",
            c.rows(),
            c.cols()
        )));
    }
    if let Some((row, col)) = c.first_upper_violation(0.0) {
        return Err(Error::NotLowerTriangular { row, col });
    }
    let d = c.rows();
    let mut values = Vec::with_capacity(d * d);
    values.extend((0..d).map(|i| c.get(i, i).re));
    values.extend(lower_pairs(d).map(|(i, j)| c.get(i, j).re));
    values.extend(lower_pairs(d).map(|(i, j)| c.get(i, j).im));
    Ok(CholeskyVector { d, values })
}

pub fn unpack_cholesky(v: &CholeskyVector) -> ComplexMatrix {
    let d = v.d;
    let half = d * (d - 1) / 2;
    let mut c = ComplexMatrix::zeros(d, d);
    for i in 0..d {
        c.set(i, i, c64(v.values[i], 0.0));
    }
    for (k, (i, j)) in lower_pairs(d).enumerate() {
        c.set(i, j, c64(v.values[d + k], v.values[d + half + k]));
    }
    c
}
