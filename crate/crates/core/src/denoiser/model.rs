//! Architecture descriptions and the flat parameter layout.
//!
//! All parameters of a network live in one `Vec<f64>`. The block order below
//! is also the order of the checkpoint payload.
//!
//! Transformer (n = d², hd = heads·head_dim):
//! `conv_in.weight [K, w]`, `conv_in.bias [K]`,
//! `attn.wq [n, hd]`, `attn.bq [hd]`, `attn.wk [n, hd]`, `attn.bk [hd]`,
//! `attn.wv [n, hd]`, `attn.bv [hd]`, `attn.wo [hd, n]`, `attn.bo [n]`,
//! `conv_out.weight [K, w]`, `conv_out.bias [1]`,
//! `linear.weight [n, n]` (row = output slot), `linear.bias [n]`.
//!
//! CNN layer `i` with `c_in → c_out` channels:
//! `layer{i}.weight [w, c_in, c_out]`, `layer{i}.bias [c_out]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SeedStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Architecture {
    Transformer,
    Cnn2,
    Cnn4,
}

impl Architecture {
    pub fn code(self) -> u32 {
        match self {
            Architecture::Transformer => 0,
            Architecture::Cnn2 => 1,
            Architecture::Cnn4 => 2,
        }
    }

    pub fn from_code(code: u32) -> Result<Self> {
        match code {
            0 => Ok(Architecture::Transformer),
            1 => Ok(Architecture::Cnn2),
            2 => Ok(Architecture::Cnn4),
            other => Err(Error::Format(format!("unknown architecture code {other}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Architecture::Transformer => "transformer",
            Architecture::Cnn2 => "cnn2",
            Architecture::Cnn4 => "cnn4",
        }
    }
}

/// Free hyperparameters; dimensions follow from these and d.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelHyper {
    pub kernels: usize,
    pub width: usize,
    pub heads: usize,
    /// Per-head width; `None` means d²/heads.
    pub head_dim: Option<usize>,
    pub cnn2_width: usize,
    pub cnn4_width: usize,
}

impl Default for ModelHyper {
    fn default() -> Self {
        Self {
            kernels: 64,
            width: 3,
            heads: 4,
            head_dim: None,
            cnn2_width: 33,
            cnn4_width: 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub arch: Architecture,
    pub d: usize,
    pub kernels: usize,
    pub width: usize,
    pub heads: usize,
    pub head_dim: usize,
    pub cnn_channels: usize,
    pub cnn_width: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: usize,
    /// Inputs feeding each output unit; 0 marks a bias.
    pub fan_in: usize,
}

impl Block {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

impl ModelSpec {
    pub fn transformer(d: usize, hyper: &ModelHyper) -> Result<Self> {
        let n = d * d;
        if hyper.heads == 0 {
            return Err(Error::Config("heads must be at least 1".into()));
        }
        let head_dim = hyper.head_dim.unwrap_or(n / hyper.heads);
        let spec = Self {
            arch: Architecture::Transformer,
            d,
            kernels: hyper.kernels,
            width: hyper.width,
            heads: hyper.heads,
            head_dim,
            cnn_channels: 0,
            cnn_width: 0,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.d < 2 || self.d > 64 {
            return bad("d must lie in 2..=64");
        }
        match self.arch {
            Architecture::Transformer => {
                if self.kernels == 0 || self.heads == 0 || self.head_dim == 0 {
                    return bad("kernels, heads and head_dim must be positive");
                }
                if self.width.is_multiple_of(2) {
                    return bad("kernel width must be odd");
                }
            }
            Architecture::Cnn2 | Architecture::Cnn4 => {
                if self.cnn_channels == 0 {
                    return bad("CNN channel count must be positive");
                }
                if self.cnn_width.is_multiple_of(2) {
                    return bad("CNN kernel width must be odd");
                }
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.d * self.d
    }

    pub fn hidden(&self) -> usize {
        self.heads * self.head_dim
    }

    /// Channel sequence of a CNN baseline.
    pub fn cnn_channels_seq(&self) -> Vec<usize> {
        let c = self.cnn_channels;
        match self.arch {
            Architecture::Cnn2 => vec![1, c, 1],
            Architecture::Cnn4 => vec![1, c, c, c, 1],
            Architecture::Transformer => Vec::new(),
        }
    }

    pub fn blocks(&self) -> Vec<Block> {
        let mut out = Vec::new();
        let mut offset = 0;
        let mut push = |name: String, shape: Vec<usize>, fan_in: usize| {
            let b = Block {
                name,
                shape,
                offset,
                fan_in,
            };
            offset += b.len();
            out.push(b);
        };
        match self.arch {
            Architecture::Transformer => {
                let (n, k, w, hd) = (self.n(), self.kernels, self.width, self.hidden());
                push("conv_in.weight".into(), vec![k, w], w);
                push("conv_in.bias".into(), vec![k], 0);
                for p in ["q", "k", "v"] {
                    push(format!("attn.w{p}"), vec![n, hd], n);
                    push(format!("attn.b{p}"), vec![hd], 0);
                }
                push("attn.wo".into(), vec![hd, n], hd);
                push("attn.bo".into(), vec![n], 0);
                push("conv_out.weight".into(), vec![k, w], k * w);
                push("conv_out.bias".into(), vec![1], 0);
                push("linear.weight".into(), vec![n, n], n);
                push("linear.bias".into(), vec![n], 0);
            }
            Architecture::Cnn2 | Architecture::Cnn4 => {
                let w = self.cnn_width;
                let seq = self.cnn_channels_seq();
                for (i, pair) in seq.windows(2).enumerate() {
                    push(
                        format!("layer{i}.weight"),
                        vec![w, pair[0], pair[1]],
                        w * pair[0],
                    );
                    push(format!("layer{i}.bias"), vec![pair[1]], 0);
                }
            }
        }
        out
    }

    pub fn param_count(&self) -> usize {
        self.blocks().iter().map(Block::len).sum()
    }

    pub fn block(&self, name: &str) -> Option<Block> {
        self.blocks().into_iter().find(|b| b.name == name)
    }

    /// Weights uniform in ±1/√fan_in, biases zero.
    pub fn init_params(&self, rng: &mut SeedStream) -> Vec<f64> {
        let mut params = vec![0.0; self.param_count()];
        for b in self.blocks() {
            if b.fan_in > 0 {
                let bound = 1.0 / (b.fan_in as f64).sqrt();
                for p in &mut params[b.range()] {
                    *p = rng.uniform_range(-bound, bound);
                }
            }
        }
        params
    }
}

fn cnn_count(arch: Architecture, c: usize, w: usize) -> usize {
    match arch {
        Architecture::Cnn2 => c * (2 * w + 1) + 1,
        Architecture::Cnn4 => 2 * w * c * c + (2 * w + 3) * c + 1,
        Architecture::Transformer => 0,
    }
}

/// Conv-only baseline whose parameter count is within 5% of `budget`.
///
/// The channel count is solved for; the kernel width is fixed by `hyper`.
pub fn build_cnn_baseline(
    arch: Architecture,
    d: usize,
    budget: usize,
    hyper: &ModelHyper,
) -> Result<ModelSpec> {
    let w = match arch {
        Architecture::Cnn2 => hyper.cnn2_width,
        Architecture::Cnn4 => hyper.cnn4_width,
        Architecture::Transformer => {
            return Err(Error::InvalidArgument("not a CNN architecture".into()))
        }
    };
    let mut best = (usize::MAX, 1usize);
    let mut c = 1;
    loop {
        let count = cnn_count(arch, c, w);
        let gap = count.abs_diff(budget);
        if gap < best.0 {
            best = (gap, c);
        }
        if count > budget {
            break;
        }
        c += 1;
    }
    let channels = best.1;
    let count = cnn_count(arch, channels, w);
    if count.abs_diff(budget) as f64 > 0.05 * budget as f64 {
        return Err(Error::BudgetInfeasible {
            budget,
            closest: count,
        });
    }
    let spec = ModelSpec {
        arch,
        d,
        kernels: 0,
        width: 0,
        heads: 0,
        head_dim: 0,
        cnn_channels: channels,
        cnn_width: w,
    };
    spec.validate()?;
    Ok(spec)
}
