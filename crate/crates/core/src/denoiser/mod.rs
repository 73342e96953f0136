//! Neural post-processing of reconstructed states.
//!
//! A network maps the Cholesky vector of a noisy estimate to the Cholesky
//! vector of an improved one; [`Model::denoise`] turns the result back into a
//! state via C̄C̄†/Tr(C̄C̄†).

mod activation;
pub mod checkpoint;
pub mod cholvec;
mod cnn;
pub mod model;
pub mod train;
mod transformer;

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;

pub use activation::{gelu, gelu_grad};
pub use cholvec::{pack_cholesky, unpack_cholesky, CholeskyVector};
pub use model::{build_cnn_baseline, Architecture, Block, ModelHyper, ModelSpec};
pub use train::{train, History, TrainConfig};

use crate::error::{Error, Result};
use crate::linalg::CHOLESKY_REPAIR;
use crate::rng::SeedStream;
use crate::states::DensityMatrix;

/// Weight of the ‖output‖² term in the loss.
pub const DEFAULT_REG: f64 = 1.0;

enum Cache {
    Transformer(Box<transformer::Cache>),
    Cnn(cnn::Cache),
}

impl Cache {
    fn out(&self) -> &Array2<f64> {
        match self {
            Cache::Transformer(c) => &c.out,
            Cache::Cnn(c) => &c.out,
        }
    }
}

/// Architecture plus its flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    spec: ModelSpec,
    params: Vec<f64>,
}

impl Model {
    pub fn new(spec: ModelSpec, params: Vec<f64>) -> Result<Self> {
        spec.validate()?;
        if params.len() != spec.param_count() {
            return Err(Error::ShapeMismatch(format!(
                "{} parameters for a model of {}",
                params.len(),
                spec.param_count()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::ShapeMismatch("non-finite parameter".into()));
        }
        Ok(Self { spec, params })
    }

    pub fn init(spec: ModelSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        let params = spec.init_params(&mut SeedStream::new(seed));
        Ok(Self { spec, params })
    }

    pub fn zeros(spec: ModelSpec) -> Result<Self> {
        Self::new(spec, vec![0.0; spec.param_count()])
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    fn run(&self, x: ArrayView2<f64>) -> Cache {
        match self.spec.arch {
            Architecture::Transformer => {
                Cache::Transformer(Box::new(transformer::forward(&self.spec, &self.params, x)))
            }
            Architecture::Cnn2 | Architecture::Cnn4 => {
                Cache::Cnn(cnn::forward(&self.spec, &self.params, x))
            }
        }
    }

    fn check_batch(&self, x: &ArrayView2<f64>) -> Result<()> {
        if x.ncols() != self.spec.n() {
            return Err(Error::ShapeMismatch(format!(
                "input width {} for d = {}",
                x.ncols(),
                self.spec.d
            )));
        }
        Ok(())
    }

    /// Rows of `x` are Cholesky vectors.
    pub fn forward_batch(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_batch(&x)?;
        match self.run(x) {
            Cache::Transformer(c) => Ok(c.out),
            Cache::Cnn(c) => Ok(c.out),
        }
    }

    pub fn forward(&self, v: &CholeskyVector) -> Result<CholeskyVector> {
        let x = ArrayView2::from_shape((1, v.values().len()), v.values())
            .map_err(|e| Error::ShapeMismatch(e.to_string()))?;
        let out = self.forward_batch(x)?;
        CholeskyVector::from_values(out.into_raw_vec_and_offset().0)
    }

    /// ‖t − o‖² + reg·‖o‖² summed over rows, and its parameter gradient.
    pub fn batch_loss_grad(
        &self,
        x: ArrayView2<f64>,
        t: ArrayView2<f64>,
        reg: f64,
    ) -> Result<(f64, Vec<f64>)> {
        self.check_batch(&x)?;
        if t.dim() != x.dim() {
            return Err(Error::ShapeMismatch(
                "input and target batches differ".into(),
            ));
        }
        let cache = self.run(x);
        let o = cache.out();
        let loss = loss_sum(o.view(), t, reg);
        let dout = (o - &t) * 2.0 + o * (2.0 * reg);
        let grad = match &cache {
            Cache::Transformer(c) => {
                transformer::backward(&self.spec, &self.params, c, dout.view())
            }
            Cache::Cnn(c) => cnn::backward(&self.spec, &self.params, c, dout.view()),
        };
        Ok((loss, grad))
    }

    /// Summed loss without gradients.
    pub fn batch_loss(&self, x: ArrayView2<f64>, t: ArrayView2<f64>, reg: f64) -> Result<f64> {
        let o = self.forward_batch(x)?;
        if t.dim() != o.dim() {
            return Err(Error::ShapeMismatch(
                "input and target batches differ".into(),
            ));
        }
        Ok(loss_sum(o.view(), t, reg))
    }

    pub fn loss(&self, input: &CholeskyVector, target: &CholeskyVector, reg: f64) -> Result<f64> {
        let (x, t) = single_pair(input, target)?;
        self.batch_loss(x, t, reg)
    }

    pub fn gradient(
        &self,
        input: &CholeskyVector,
        target: &CholeskyVector,
        reg: f64,
    ) -> Result<(f64, Vec<f64>)> {
        let (x, t) = single_pair(input, target)?;
        self.batch_loss_grad(x, t, reg)
    }

    /// C̄C̄†/Tr(C̄C̄†) for C̄ the network output on the input's Cholesky vector.
    ///
    /// An all-zero output yields the maximally mixed state.
    pub fn denoise(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        Ok(self.denoise_batch(std::slice::from_ref(rho))?.remove(0))
    }

    pub fn denoise_batch(&self, states: &[DensityMatrix]) -> Result<Vec<DensityMatrix>> {
        const CHUNK: usize = 64;
        let d = self.spec.d;
        let n = self.spec.n();
        let parts: Vec<Result<Vec<DensityMatrix>>> = states
            .par_chunks(CHUNK)
            .map(|chunk| {
                let mut x = Array2::zeros((chunk.len(), n));
                for (i, rho) in chunk.iter().enumerate() {
                    if rho.dim() != d {
                        return Err(Error::DimensionMismatch {
                            expected: d,
                            got: rho.dim(),
                        });
                    }
                    let v = pack_cholesky(&rho.cholesky(CHOLESKY_REPAIR)?)?;
                    x.row_mut(i).assign(&ndarray::ArrayView1::from(v.values()));
                }
                let y = self.forward_batch(x.view())?;
                y.rows()
                    .into_iter()
                    .map(|row| {
                        Ok(state_from_cholesky(&CholeskyVector::from_values(
                            row.to_vec(),
                        )?))
                    })
                    .collect()
            })
            .collect();
        let mut out = Vec::with_capacity(states.len());
        for part in parts {
            out.extend(part?);
        }
        Ok(out)
    }
}

/// C C†/Tr(C C†), or I/d if the factor vanishes.
pub fn state_from_cholesky(v: &CholeskyVector) -> DensityMatrix {
    let c = unpack_cholesky(v);
    let rho = &c * &c.adjoint();
    let tr = rho.trace().re;
    if tr.is_finite() && tr > 1e-300 {
        DensityMatrix::from_psd_unnormalized(rho)
    } else {
        DensityMatrix::maximally_mixed(v.dim())
    }
}

fn loss_sum(o: ArrayView2<f64>, t: ArrayView2<f64>, reg: f64) -> f64 {
    o.iter()
        .zip(t.iter())
        .map(|(&oi, &ti)| (ti - oi) * (ti - oi) + reg * oi * oi)
        .sum()
}

fn single_pair<'a>(
    input: &'a CholeskyVector,
    target: &'a CholeskyVector,
) -> Result<(ArrayView2<'a, f64>, ArrayView2<'a, f64>)> {
    if input.values().len() != target.values().len() {
        return Err(Error::ShapeMismatch(
            "input and target lengths differ".into(),
        ));
    }
    let shape = (1, input.values().len());
    let x = ArrayView2::from_shape(shape, input.values()).expect("row shape");
    let t = ArrayView2::from_shape(shape, target.values()).expect("row shape");
    Ok((x, t))
}
