//! Convolution-only baselines: same-padded 1-D convolutions with GELU between
//! layers and the split output activation after the last one.
//!
//! Activations use a [b, j, c] layout, i.e. (B·n) × channels matrices, so each
//! layer is one matrix product. Narrow-input layers unfold the input
//! (im2col); wide-input layers multiply first and shift-add the per-tap outputs.

use ndarray::{s, Array2, ArrayView2, Axis};

use super::activation::{gelu_array, gelu_backward, output_activation, output_activation_grad};
use super::model::ModelSpec;

#[derive(Debug, Clone, Copy)]
struct Conv {
    c_in: usize,
    c_out: usize,
    w: usize,
    weight: (usize, usize),
    bias: (usize, usize),
}

impl Conv {
    fn unfold_input(&self) -> bool {
        self.c_in <= self.c_out
    }

    /// Weight as an unfolded (w·c_in) × c_out matrix.
    fn weight_unfolded<'a>(&self, params: &'a [f64]) -> ArrayView2<'a, f64> {
        ArrayView2::from_shape(
            (self.w * self.c_in, self.c_out),
            &params[self.weight.0..self.weight.1],
        )
        .expect("weight shape")
    }

    /// Weight as a c_in × (w·c_out) matrix with tap-major columns.
    fn weight_concat(&self, params: &[f64]) -> Array2<f64> {
        let wu = self.weight_unfolded(params);
        let mut m = Array2::zeros((self.c_in, self.w * self.c_out));
        for t in 0..self.w {
            for ci in 0..self.c_in {
                for co in 0..self.c_out {
                    m[(ci, t * self.c_out + co)] = wu[(t * self.c_in + ci, co)];
                }
            }
        }
        m
    }
}

fn layers(spec: &ModelSpec) -> Vec<Conv> {
    let blocks = spec.blocks();
    spec.cnn_channels_seq()
        .windows(2)
        .enumerate()
        .map(|(i, pair)| {
            let wb = &blocks[2 * i];
            let bb = &blocks[2 * i + 1];
            Conv {
                c_in: pair[0],
                c_out: pair[1],
                w: spec.cnn_width,
                weight: (wb.range().start, wb.range().end),
                bias: (bb.range().start, bb.range().end),
            }
        })
        .collect()
}

/// Source row offset for tap t, and the output positions it reaches.
fn tap(n: usize, w: usize, t: usize) -> (isize, std::ops::Range<usize>) {
    let shift = t as isize - (w / 2) as isize;
    let lo = (-shift).max(0) as usize;
    let hi = (n as isize - shift).clamp(0, n as isize) as usize;
    (shift, lo..hi.max(lo))
}

fn im2col(x: &Array2<f64>, bsz: usize, n: usize, conv: &Conv) -> Array2<f64> {
    let ci = conv.c_in;
    let mut col = Array2::zeros((bsz * n, conv.w * ci));
    for b in 0..bsz {
        for t in 0..conv.w {
            let (shift, span) = tap(n, conv.w, t);
            for j in span {
                let src = x.row(b * n + (j as isize + shift) as usize);
                col.slice_mut(s![b * n + j, t * ci..(t + 1) * ci])
                    .assign(&src);
            }
        }
    }
    col
}

fn conv_forward(params: &[f64], x: &Array2<f64>, bsz: usize, n: usize, conv: &Conv) -> Array2<f64> {
    let bias = &params[conv.bias.0..conv.bias.1];
    let mut y = if conv.unfold_input() {
        im2col(x, bsz, n, conv).dot(&conv.weight_unfolded(params))
    } else {
        let p = x.dot(&conv.weight_concat(params));
        let co = conv.c_out;
        let mut y = Array2::zeros((bsz * n, co));
        for b in 0..bsz {
            for t in 0..conv.w {
                let (shift, span) = tap(n, conv.w, t);
                for j in span {
                    let src = p.slice(s![
                        b * n + (j as isize + shift) as usize,
                        t * co..(t + 1) * co
                    ]);
                    let mut dst = y.row_mut(b * n + j);
                    dst += &src;
                }
            }
        }
        y
    };
    for mut row in y.rows_mut() {
        row.iter_mut().zip(bias).for_each(|(v, b)| *v += b);
    }
    y
}

/// Accumulates weight and bias gradients; returns dX when `need_dx`.
#[allow(clippy::too_many_arguments)]
fn conv_backward(
    params: &[f64],
    grad: &mut [f64],
    x: &Array2<f64>,
    dy: &Array2<f64>,
    bsz: usize,
    n: usize,
    conv: &Conv,
    need_dx: bool,
) -> Option<Array2<f64>> {
    for (g, s) in grad[conv.bias.0..conv.bias.1]
        .iter_mut()
        .zip(dy.sum_axis(Axis(0)).iter())
    {
        *g += s;
    }
    let ci = conv.c_in;
    let co = conv.c_out;
    if conv.unfold_input() {
        let col = im2col(x, bsz, n, conv);
        let dw = col.t().dot(dy);
        for (g, v) in grad[conv.weight.0..conv.weight.1].iter_mut().zip(dw.iter()) {
            *g += v;
        }
        if !need_dx {
            return None;
        }
        let dcol = dy.dot(&conv.weight_unfolded(params).t());
        let mut dx = Array2::zeros((bsz * n, ci));
        for b in 0..bsz {
            for t in 0..conv.w {
                let (shift, span) = tap(n, conv.w, t);
                for j in span {
                    let src = dcol.slice(s![b * n + j, t * ci..(t + 1) * ci]);
                    let mut dst = dx.row_mut(b * n + (j as isize + shift) as usize);
                    dst += &src;
                }
            }
        }
        Some(dx)
    } else {
        let mut dp = Array2::zeros((bsz * n, conv.w * co));
        for b in 0..bsz {
            for t in 0..conv.w {
                let (shift, span) = tap(n, conv.w, t);
                for j in span {
                    let src = dy.row(b * n + j);
                    let mut dst = dp.slice_mut(s![
                        b * n + (j as isize + shift) as usize,
                        t * co..(t + 1) * co
                    ]);
                    dst += &src;
                }
            }
        }
        let dwc = x.t().dot(&dp);
        let g = &mut grad[conv.weight.0..conv.weight.1];
        for t in 0..conv.w {
            for c_i in 0..ci {
                for c_o in 0..co {
                    g[(t * ci + c_i) * co + c_o] += dwc[(c_i, t * co + c_o)];
                }
            }
        }
        need_dx.then(|| dp.dot(&conv.weight_concat(params).t()))
    }
}

pub struct Cache {
    /// Input of every layer, the first being the raw input column.
    inputs: Vec<Array2<f64>>,
    /// Pre-activation output of every layer.
    pre: Vec<Array2<f64>>,
    z: Array2<f64>,
    pub out: Array2<f64>,
}

pub fn forward(spec: &ModelSpec, params: &[f64], x: ArrayView2<f64>) -> Cache {
    let (bsz, n) = x.dim();
    let convs = layers(spec);
    let mut h = x
        .to_owned()
        .into_shape_with_order((bsz * n, 1))
        .expect("reshape");
    let mut inputs = Vec::with_capacity(convs.len());
    let mut pre = Vec::with_capacity(convs.len());
    for (i, conv) in convs.iter().enumerate() {
        let y = conv_forward(params, &h, bsz, n, conv);
        let next = if i + 1 < convs.len() {
            gelu_array(&y)
        } else {
            y.clone()
        };
        inputs.push(std::mem::replace(&mut h, next));
        pre.push(y);
    }
    let z = h.into_shape_with_order((bsz, n)).expect("reshape");
    let out = output_activation(spec.d, z.view());
    Cache {
        inputs,
        pre,
        z,
        out,
    }
}

pub fn backward(
    spec: &ModelSpec,
    params: &[f64],
    cache: &Cache,
    dout: ArrayView2<f64>,
) -> Vec<f64> {
    let (bsz, n) = cache.z.dim();
    let convs = layers(spec);
    let mut grad = vec![0.0; params.len()];
    let dz = output_activation_grad(spec.d, cache.z.view(), cache.out.view(), dout);
    let mut dy = dz.into_shape_with_order((bsz * n, 1)).expect("reshape");
    for i in (0..convs.len()).rev() {
        let dx = conv_backward(
            params,
            &mut grad,
            &cache.inputs[i],
            &dy,
            bsz,
            n,
            &convs[i],
            i > 0,
        );
        if let Some(mut dx) = dx {
            gelu_backward(&cache.pre[i - 1], &mut dx);
            dy = dx;
        }
    }
    grad
}
