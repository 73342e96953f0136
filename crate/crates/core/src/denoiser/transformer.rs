//! Convolution → GELU → multi-head self-attention → convolution → linear.
//!
//! A batch of B inputs is processed at once. Channel tokens are stacked as
//! rows of (B·K) × n matrices so the projections are single matrix products.

use std::ops::Range;

use ndarray::{s, Array2, ArrayView2, ArrayViewMut2, Axis};

use super::activation::{gelu_array, gelu_backward, output_activation, output_activation_grad};
use super::model::ModelSpec;

struct Layout {
    conv_in_w: Range<usize>,
    conv_in_b: Range<usize>,
    wq: Range<usize>,
    bq: Range<usize>,
    wk: Range<usize>,
    bk: Range<usize>,
    wv: Range<usize>,
    bv: Range<usize>,
    wo: Range<usize>,
    bo: Range<usize>,
    conv_out_w: Range<usize>,
    conv_out_b: Range<usize>,
    lin_w: Range<usize>,
    lin_b: Range<usize>,
}

impl Layout {
    fn new(spec: &ModelSpec) -> Self {
        let r = |name: &str| spec.block(name).expect("transformer block").range();
        Self {
            conv_in_w: r("conv_in.weight"),
            conv_in_b: r("conv_in.bias"),
            wq: r("attn.wq"),
            bq: r("attn.bq"),
            wk: r("attn.wk"),
            bk: r("attn.bk"),
            wv: r("attn.wv"),
            bv: r("attn.bv"),
            wo: r("attn.wo"),
            bo: r("attn.bo"),
            conv_out_w: r("conv_out.weight"),
            conv_out_b: r("conv_out.bias"),
            lin_w: r("linear.weight"),
            lin_b: r("linear.bias"),
        }
    }
}

fn view<'a>(p: &'a [f64], r: &Range<usize>, rows: usize, cols: usize) -> ArrayView2<'a, f64> {
    ArrayView2::from_shape((rows, cols), &p[r.clone()]).expect("block shape")
}

fn view_mut<'a>(
    p: &'a mut [f64],
    r: &Range<usize>,
    rows: usize,
    cols: usize,
) -> ArrayViewMut2<'a, f64> {
    ArrayViewMut2::from_shape((rows, cols), &mut p[r.clone()]).expect("block shape")
}

fn add_row_bias(m: &mut Array2<f64>, bias: &[f64]) {
    for mut row in m.rows_mut() {
        for (v, b) in row.iter_mut().zip(bias) {
            *v += b;
        }
    }
}

fn add_column_sums(dst: &mut [f64], m: &Array2<f64>) {
    for (d, s) in dst.iter_mut().zip(m.sum_axis(Axis(0)).iter()) {
        *d += s;
    }
}

/// Valid output positions for tap `t` of a same-padded width-`w` kernel.
fn tap_span(n: usize, w: usize, t: usize) -> (Range<usize>, isize) {
    let shift = t as isize - (w / 2) as isize;
    let lo = (-shift).max(0) as usize;
    let hi = (n as isize - shift).min(n as isize).max(0) as usize;
    (lo..hi.max(lo), shift)
}

pub struct Cache {
    x: Array2<f64>,
    a: Array2<f64>,
    g: Array2<f64>,
    q: Array2<f64>,
    k: Array2<f64>,
    v: Array2<f64>,
    /// Attention weights, index b·heads + head.
    p: Vec<Array2<f64>>,
    o: Array2<f64>,
    u: Array2<f64>,
    c: Array2<f64>,
    z: Array2<f64>,
    pub out: Array2<f64>,
}

pub fn forward(spec: &ModelSpec, params: &[f64], x: ArrayView2<f64>) -> Cache {
    let lay = Layout::new(spec);
    let (bsz, n) = x.dim();
    let (kk, w, heads, dh) = (spec.kernels, spec.width, spec.heads, spec.head_dim);
    let hd = spec.hidden();
    let scale = 1.0 / (dh as f64).sqrt();

    // conv_in: 1 → K channels
    let w1 = view(params, &lay.conv_in_w, kk, w);
    let b1 = &params[lay.conv_in_b.clone()];
    let mut a = Array2::zeros((bsz * kk, n));
    for b in 0..bsz {
        let xr = x.row(b);
        let xs = xr.as_slice().expect("contiguous");
        for c in 0..kk {
            let mut row = a.row_mut(b * kk + c);
            let out = row.as_slice_mut().expect("contiguous");
            out.iter_mut().for_each(|v| *v = b1[c]);
            for t in 0..w {
                let wt = w1[(c, t)];
                let (span, shift) = tap_span(n, w, t);
                for j in span {
                    out[j] += wt * xs[(j as isize + shift) as usize];
                }
            }
        }
    }
    let g = gelu_array(&a);

    let project = |wr: &Range<usize>, br: &Range<usize>| {
        let mut m = g.dot(&view(params, wr, n, hd));
        add_row_bias(&mut m, &params[br.clone()]);
        m
    };
    let q = project(&lay.wq, &lay.bq);
    let k = project(&lay.wk, &lay.bk);
    let v = project(&lay.wv, &lay.bv);

    let mut o = Array2::zeros((bsz * kk, hd));
    let mut p = Vec::with_capacity(bsz * heads);
    for b in 0..bsz {
        let rows = b * kk..(b + 1) * kk;
        for h in 0..heads {
            let cols = h * dh..(h + 1) * dh;
            let qh = q.slice(s![rows.clone(), cols.clone()]);
            let kh = k.slice(s![rows.clone(), cols.clone()]);
            let vh = v.slice(s![rows.clone(), cols.clone()]);
            let mut sm = qh.dot(&kh.t()) * scale;
            for mut row in sm.rows_mut() {
                let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                row.mapv_inplace(|e| (e - max).exp());
                let sum = row.sum();
                row.mapv_inplace(|e| e / sum);
            }
            o.slice_mut(s![rows.clone(), cols]).assign(&sm.dot(&vh));
            p.push(sm);
        }
    }
    let mut u = o.dot(&view(params, &lay.wo, hd, n));
    add_row_bias(&mut u, &params[lay.bo.clone()]);
    u += &g;

    // conv_out: K → 1 channel
    let w2 = view(params, &lay.conv_out_w, kk, w);
    let b2 = params[lay.conv_out_b.start];
    let mut c = Array2::from_elem((bsz, n), b2);
    for b in 0..bsz {
        let mut crow = c.row_mut(b);
        let cs = crow.as_slice_mut().expect("contiguous");
        for ch in 0..kk {
            let ur = u.row(b * kk + ch);
            let us = ur.as_slice().expect("contiguous");
            for t in 0..w {
                let wt = w2[(ch, t)];
                let (span, shift) = tap_span(n, w, t);
                for j in span {
                    cs[j] += wt * us[(j as isize + shift) as usize];
                }
            }
        }
    }

    let mut z = c.dot(&view(params, &lay.lin_w, n, n).t());
    add_row_bias(&mut z, &params[lay.lin_b.clone()]);
    let out = output_activation(spec.d, z.view());
    Cache {
        x: x.to_owned(),
        a,
        g,
        q,
        k,
        v,
        p,
        o,
        u,
        c,
        z,
        out,
    }
}

/// Gradient of Σ dout·out with respect to every parameter.
pub fn backward(
    spec: &ModelSpec,
    params: &[f64],
    cache: &Cache,
    dout: ArrayView2<f64>,
) -> Vec<f64> {
    let lay = Layout::new(spec);
    let (bsz, n) = cache.x.dim();
    let (kk, w, heads, dh) = (spec.kernels, spec.width, spec.heads, spec.head_dim);
    let hd = spec.hidden();
    let scale = 1.0 / (dh as f64).sqrt();
    let mut grad = vec![0.0; params.len()];

    let dz = output_activation_grad(spec.d, cache.z.view(), cache.out.view(), dout);
    view_mut(&mut grad, &lay.lin_w, n, n).assign(&dz.t().dot(&cache.c));
    add_column_sums(&mut grad[lay.lin_b.clone()], &dz);
    let dc = dz.dot(&view(params, &lay.lin_w, n, n));

    // conv_out
    let w2 = view(params, &lay.conv_out_w, kk, w);
    grad[lay.conv_out_b.start] = dc.sum();
    let mut du = Array2::<f64>::zeros((bsz * kk, n));
    {
        let mut dw2 = vec![0.0; kk * w];
        for b in 0..bsz {
            let dcr = dc.row(b);
            let dcs = dcr.as_slice().expect("contiguous");
            for ch in 0..kk {
                let ur = cache.u.row(b * kk + ch);
                let us = ur.as_slice().expect("contiguous");
                let mut dur = du.row_mut(b * kk + ch);
                let dus = dur.as_slice_mut().expect("contiguous");
                for t in 0..w {
                    let wt = w2[(ch, t)];
                    let (span, shift) = tap_span(n, w, t);
                    let mut acc = 0.0;
                    for j in span {
                        let m = (j as isize + shift) as usize;
                        acc += dcs[j] * us[m];
                        dus[m] += wt * dcs[j];
                    }
                    dw2[ch * w + t] += acc;
                }
            }
        }
        grad[lay.conv_out_w.clone()].copy_from_slice(&dw2);
    }

    // attention output projection and residual
    view_mut(&mut grad, &lay.wo, hd, n).assign(&cache.o.t().dot(&du));
    add_column_sums(&mut grad[lay.bo.clone()], &du);
    let d_o = du.dot(&view(params, &lay.wo, hd, n).t());
    let mut dg = du;

    let mut dq = Array2::<f64>::zeros((bsz * kk, hd));
    let mut dk = Array2::<f64>::zeros((bsz * kk, hd));
    let mut dv = Array2::<f64>::zeros((bsz * kk, hd));
    for b in 0..bsz {
        let rows = b * kk..(b + 1) * kk;
        for h in 0..heads {
            let cols = h * dh..(h + 1) * dh;
            let pm = &cache.p[b * heads + h];
            let doh = d_o.slice(s![rows.clone(), cols.clone()]);
            let qh = cache.q.slice(s![rows.clone(), cols.clone()]);
            let kh = cache.k.slice(s![rows.clone(), cols.clone()]);
            let vh = cache.v.slice(s![rows.clone(), cols.clone()]);
            let dp = doh.dot(&vh.t());
            dv.slice_mut(s![rows.clone(), cols.clone()])
                .assign(&pm.t().dot(&doh));
            let mut ds = dp.clone();
            for ((mut dsr, pr), dpr) in ds.rows_mut().into_iter().zip(pm.rows()).zip(dp.rows()) {
                let dot: f64 = pr.iter().zip(dpr.iter()).map(|(a, b)| a * b).sum();
                for ((e, &pv), &dpv) in dsr.iter_mut().zip(pr.iter()).zip(dpr.iter()) {
                    *e = pv * (dpv - dot) * scale;
                }
            }
            dq.slice_mut(s![rows.clone(), cols.clone()])
                .assign(&ds.dot(&kh));
            dk.slice_mut(s![rows.clone(), cols])
                .assign(&ds.t().dot(&qh));
        }
    }
    for (dm, wr, br) in [
        (&dq, &lay.wq, &lay.bq),
        (&dk, &lay.wk, &lay.bk),
        (&dv, &lay.wv, &lay.bv),
    ] {
        view_mut(&mut grad, wr, n, hd).assign(&cache.g.t().dot(dm));
        add_column_sums(&mut grad[br.clone()], dm);
        dg += &dm.dot(&view(params, wr, n, hd).t());
    }

    gelu_backward(&cache.a, &mut dg);
    let da = dg;

    // conv_in
    let mut dw1 = vec![0.0; kk * w];
    let mut db1 = vec![0.0; kk];
    for b in 0..bsz {
        let xr = cache.x.row(b);
        let xs = xr.as_slice().expect("contiguous");
        for ch in 0..kk {
            let dar = da.row(b * kk + ch);
            let das = dar.as_slice().expect("contiguous");
            db1[ch] += das.iter().sum::<f64>();
            for t in 0..w {
                let (span, shift) = tap_span(n, w, t);
                let mut acc = 0.0;
                for j in span {
                    acc += das[j] * xs[(j as isize + shift) as usize];
                }
                dw1[ch * w + t] += acc;
            }
        }
    }
    grad[lay.conv_in_w.clone()].copy_from_slice(&dw1);
    grad[lay.conv_in_b.clone()].copy_from_slice(&db1);
    grad
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tap_spans() {
        // n = 4, w = 3: tap 0 reads j − 1, valid for j ≥ 1
        assert_eq!(tap_span(4, 3, 0), (1..4, -1));
        assert_eq!(tap_span(4, 3, 1), (0..4, 0));
        assert_eq!(tap_span(4, 3, 2), (0..3, 1));
        // taps wider than the signal never touch it
        let (span, _) = tap_span(4, 11, 0);
        assert!(span.is_empty());
    }
}
