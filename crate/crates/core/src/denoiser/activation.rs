use ndarray::{Array2, ArrayView2, Zip};

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// ½y(1 + erf(y/√2))
pub fn gelu(y: f64) -> f64 {
    0.5 * y * (1.0 + libm::erf(y * std::f64::consts::FRAC_1_SQRT_2))
}

/// Φ(y) + y φ(y)
pub fn gelu_grad(y: f64) -> f64 {
    let cdf = 0.5 * (1.0 + libm::erf(y * std::f64::consts::FRAC_1_SQRT_2));
    cdf + y * FRAC_1_SQRT_2PI * (-0.5 * y * y).exp()
}

/// Rectifier on the first `d` slots (the diagonal), tanh on the rest.
pub fn output_activation(d: usize, z: ArrayView2<f64>) -> Array2<f64> {
    let mut out = z.to_owned();
    for mut row in out.rows_mut() {
        for (i, v) in row.iter_mut().enumerate() {
            *v = if i < d { v.max(0.0) } else { v.tanh() };
        }
    }
    out
}

/// Chain rule through [`output_activation`].
pub fn output_activation_grad(
    d: usize,
    z: ArrayView2<f64>,
    out: ArrayView2<f64>,
    dout: ArrayView2<f64>,
) -> Array2<f64> {
    let mut dz = dout.to_owned();
    for ((mut g, zr), or) in dz.rows_mut().into_iter().zip(z.rows()).zip(out.rows()) {
        for i in 0..g.len() {
            g[i] *= if i < d {
                if zr[i] > 0.0 {
                    1.0
                } else {
                    0.0
                }
            } else {
                1.0 - or[i] * or[i]
            };
        }
    }
    dz
}

pub fn gelu_array(a: &Array2<f64>) -> Array2<f64> {
    a.mapv(gelu)
}

/// dA = dG ∘ γ'(A)
pub fn gelu_backward(a: &Array2<f64>, dg: &mut Array2<f64>) {
    Zip::from(dg).and(a).for_each(|g, &x| *g *= gelu_grad(x));
}
