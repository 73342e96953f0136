//! Mini-batch Adam training with best-validation checkpointing.

use ndarray::{Array2, ArrayView1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cholvec::CholeskyVector;
use super::model::{Architecture, ModelSpec};
use super::Model;
use crate::error::{Error, Result};
use crate::rng::SeedStream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub n_train: usize,
    pub n_val: usize,
    pub batch: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub architecture: Architecture,
    pub reg_weight: f64,
    /// Rows per forward/backward pass; gradients of a batch are summed in order.
    pub micro_batch: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            n_train: 10_000,
            n_val: 1500,
            batch: 1500,
            epochs: 500,
            learning_rate: 1e-3,
            seed: 0,
            architecture: Architecture::Transformer,
            reg_weight: super::DEFAULT_REG,
            micro_batch: 64,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_train == 0 || self.n_val == 0 || self.batch == 0 || self.epochs == 0 {
            return Err(Error::Config("training counts must be at least 1".into()));
        }
        if self.micro_batch == 0 {
            return Err(Error::Config("micro_batch must be at least 1".into()));
        }
        if self.batch > self.n_train {
            return Err(Error::Config(format!(
                "batch {} exceeds n_train {}",
                self.batch, self.n_train
            )));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        Ok(())
    }
}

/// Per-sample mean losses; index 0 of `val_loss` is the untrained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct History {
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
    pub best_epoch: usize,
    pub best_val_loss: f64,
}

impl History {
    pub fn initial_val_loss(&self) -> f64 {
        self.val_loss[0]
    }
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    step: i32,
    lr: f64,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(len: usize, lr: f64) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
            step: 0,
            lr,
        }
    }

    fn update(&mut self, params: &mut [f64], grad: &[f64]) {
        self.step += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.step);
        let c2 = 1.0 - Self::BETA2.powi(self.step);
        for i in 0..params.len() {
            let g = grad[i];
            self.m[i] = Self::BETA1 * self.m[i] + (1.0 - Self::BETA1) * g;
            self.v[i] = Self::BETA2 * self.v[i] + (1.0 - Self::BETA2) * g * g;
            let mh = self.m[i] / c1;
            let vh = self.v[i] / c2;
            params[i] -= self.lr * mh / (vh.sqrt() + Self::EPS);
        }
    }
}

fn stack(rows: &[&CholeskyVector], n: usize) -> Result<Array2<f64>> {
    let mut m = Array2::zeros((rows.len(), n));
    for (i, v) in rows.iter().enumerate() {
        if v.values().len() != n {
            return Err(Error::ShapeMismatch(format!(
                "record {i} has length {} instead of {n}",
                v.values().len()
            )));
        }
        m.row_mut(i).assign(&ArrayView1::from(v.values()));
    }
    Ok(m)
}

fn gather(src: &Array2<f64>, idx: &[usize]) -> Array2<f64> {
    let mut m = Array2::zeros((idx.len(), src.ncols()));
    for (r, &i) in idx.iter().enumerate() {
        m.row_mut(r).assign(&src.row(i));
    }
    m
}

/// Summed loss and gradient over `idx`, split into micro-batches that run in
/// parallel and are reduced in index order.
fn batch_gradient(
    model: &Model,
    x: &Array2<f64>,
    t: &Array2<f64>,
    idx: &[usize],
    cfg: &TrainConfig,
) -> Result<(f64, Vec<f64>)> {
    let parts: Vec<Result<(f64, Vec<f64>)>> = idx
        .par_chunks(cfg.micro_batch)
        .map(|chunk| {
            let xb = gather(x, chunk);
            let tb = gather(t, chunk);
            model.batch_loss_grad(xb.view(), tb.view(), cfg.reg_weight)
        })
        .collect();
    let mut loss = 0.0;
    let mut grad = vec![0.0; model.param_count()];
    for part in parts {
        let (l, g) = part?;
        loss += l;
        grad.iter_mut().zip(&g).for_each(|(a, b)| *a += b);
    }
    Ok((loss, grad))
}

fn mean_loss(model: &Model, x: &Array2<f64>, t: &Array2<f64>, cfg: &TrainConfig) -> Result<f64> {
    let idx: Vec<usize> = (0..x.nrows()).collect();
    let parts: Vec<Result<f64>> = idx
        .par_chunks(cfg.micro_batch.max(64))
        .map(|chunk| {
            model.batch_loss(
                gather(x, chunk).view(),
                gather(t, chunk).view(),
                cfg.reg_weight,
            )
        })
        .collect();
    let mut total = 0.0;
    for p in parts {
        total += p?;
    }
    Ok(total / x.nrows() as f64)
}

/// Trains from `spec`'s seeded initialization on (input, target) pairs.
///
/// The first `n_train` records train, the next `n_val` validate. The returned
/// model holds the parameters of the epoch with the lowest validation loss.
pub fn train(
    dataset: &[(CholeskyVector, CholeskyVector)],
    spec: ModelSpec,
    cfg: &TrainConfig,
) -> Result<(Model, History)> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    cfg.validate()?;
    if spec.arch != cfg.architecture {
        return Err(Error::Config(format!(
            "model is {} but training config asks for {}",
            spec.arch.name(),
            cfg.architecture.name()
        )));
    }
    if dataset.len() < cfg.n_train + cfg.n_val {
        return Err(Error::InvalidArgument(format!(
            "{} records, need n_train + n_val = {}",
            dataset.len(),
            cfg.n_train + cfg.n_val
        )));
    }
    let n = spec.n();
    let split = |range: std::ops::Range<usize>| -> Result<(Array2<f64>, Array2<f64>)> {
        let ins: Vec<_> = dataset[range.clone()].iter().map(|(a, _)| a).collect();
        let outs: Vec<_> = dataset[range].iter().map(|(_, b)| b).collect();
        Ok((stack(&ins, n)?, stack(&outs, n)?))
    };
    let (xt, tt) = split(0..cfg.n_train)?;
    let (xv, tv) = split(cfg.n_train..cfg.n_train + cfg.n_val)?;

    let mut model = Model::init(spec, cfg.seed)?;
    let mut adam = Adam::new(model.param_count(), cfg.learning_rate);
    let initial = mean_loss(&model, &xv, &tv, cfg)?;
    let mut history = History {
        train_loss: Vec::with_capacity(cfg.epochs),
        val_loss: vec![initial],
        best_epoch: 0,
        best_val_loss: initial,
    };
    let mut best = model.params().to_vec();
    let mut order: Vec<usize> = (0..cfg.n_train).collect();

    for epoch in 1..=cfg.epochs {
        SeedStream::derive(cfg.seed, epoch as u64).shuffle(&mut order);
        let mut epoch_loss = 0.0;
        for idx in order.chunks(cfg.batch) {
            let (loss, mut grad) = batch_gradient(&model, &xt, &tt, idx, cfg)?;
            let scale = 1.0 / idx.len() as f64;
            grad.iter_mut().for_each(|g| *g *= scale);
            adam.update(model.params_mut(), &grad);
            epoch_loss += loss;
        }
        let train_loss = epoch_loss / cfg.n_train as f64;
        let val = mean_loss(&model, &xv, &tv, cfg)?;
        if !val.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "validation loss diverged at epoch {epoch}"
            )));
        }
        history.train_loss.push(train_loss);
        history.val_loss.push(val);
        if val < history.best_val_loss {
            history.best_val_loss = val;
            history.best_epoch = epoch;
            best.copy_from_slice(model.params());
        }
        if epoch == 1 || epoch % 10 == 0 || epoch == cfg.epochs {
            log::info!("epoch {epoch}: train {train_loss:.6e} val {val:.6e}");
        }
    }
    model.params_mut().copy_from_slice(&best);
    Ok((model, history))
}
