//! Classical reconstructions: linear inversion, least squares, maximum likelihood,
//! and the optimal depolarization of maximum-likelihood estimates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eig, ComplexMatrix, HermitianEig};
use crate::measurement::{FrequencyKind, FrequencyVector, MeasurementBasis};
use crate::metrics::hs_distance_sq;
use crate::states::{depolarize, DensityMatrix};

/// Eigenvalues below this count as negativity that the projection repaired.
pub const NEGATIVITY_TOL: f64 = 1e-12;
const PROBABILITY_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "LI")]
    Li,
    #[serde(rename = "LSE")]
    Lse,
    #[serde(rename = "MLE")]
    Mle,
    #[serde(rename = "MLE-depolarized")]
    MleDepolarized,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Li => "LI",
            Method::Lse => "LSE",
            Method::Mle => "MLE",
            Method::MleDepolarized => "MLE-depolarized",
        }
    }
}

/// How linear inversion repairs negative eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Projection {
    /// Closest state in Frobenius norm.
    #[default]
    Smolin,
    /// Zero the negative eigenvalues and renormalize the rest.
    Clip,
}

#[derive(Debug, Clone)]
pub struct EstimatorReport {
    pub state: DensityMatrix,
    pub method: Method,
    pub iterations: usize,
    /// ‖f − Tr(π ρ)‖₂ of the returned state.
    pub residual: f64,
    pub projected: bool,
}

fn check_len(f: &FrequencyVector, basis: &MeasurementBasis) -> Result<()> {
    if f.len() != basis.len() {
        return Err(Error::DimensionMismatch {
            expected: basis.len(),
            got: f.len(),
        });
    }
    Ok(())
}

fn residual(f: &[f64], basis: &MeasurementBasis, rho: &ComplexMatrix) -> f64 {
    objective(f, basis, rho).sqrt()
}

fn objective(f: &[f64], basis: &MeasurementBasis, rho: &ComplexMatrix) -> f64 {
    basis
        .traces(rho)
        .iter()
        .zip(f)
        .map(|(p, q)| (p - q) * (p - q))
        .sum()
}

/// Unprojected estimate fᵀ G⁻¹ π̂, hermitized and scaled to unit trace.
pub fn linear_inversion_raw(
    f: &FrequencyVector,
    basis: &MeasurementBasis,
) -> Result<ComplexMatrix> {
    check_len(f, basis)?;
    let coeffs = basis.dual_coefficients(f.values());
    let raw = basis.combine(&coeffs).hermitize();
    let tr = raw.trace().re;
    if !(tr.is_finite() && tr.abs() > 1e-12) {
        return Err(Error::InvalidState(format!(
            "reconstruction has trace {tr}"
        )));
    }
    Ok(raw.scale(1.0 / tr))
}

pub fn linear_inversion(f: &FrequencyVector, basis: &MeasurementBasis) -> Result<EstimatorReport> {
    linear_inversion_with(f, basis, Projection::Smolin)
}

pub fn linear_inversion_with(
    f: &FrequencyVector,
    basis: &MeasurementBasis,
    projection: Projection,
) -> Result<EstimatorReport> {
    let raw = linear_inversion_raw(f, basis)?;
    let eig = hermitian_eig(&raw)?;
    let projected = eig.min_eigenvalue() < -NEGATIVITY_TOL;
    let state = match projection {
        Projection::Smolin => smolin_from_eig(&eig),
        Projection::Clip => clip_from_eig(&eig)?,
    };
    Ok(EstimatorReport {
        residual: residual(f.values(), basis, state.matrix()),
        state,
        method: Method::Li,
        iterations: 0,
        projected,
    })
}

/// Closest unit-trace PSD matrix in Frobenius norm.
///
/// Inputs with trace other than one are shifted by a multiple of the identity
/// first, which leaves the minimizer unchanged.
pub fn project_to_physical(h: &ComplexMatrix) -> Result<DensityMatrix> {
    Ok(smolin_from_eig(&hermitian_eig(h)?))
}

/// Zero negative eigenvalues and renormalize the positive part.
pub fn clip_to_physical(h: &ComplexMatrix) -> Result<DensityMatrix> {
    clip_from_eig(&hermitian_eig(h)?)
}

/// Ascending eigenvalues mapped onto the probability simplex.
pub fn smolin_eigenvalues(ascending: &[f64]) -> Vec<f64> {
    let d = ascending.len();
    let shift = (ascending.iter().sum::<f64>() - 1.0) / d as f64;
    let mut mu: Vec<f64> = ascending.iter().map(|l| l - shift).collect();
    let mut acc = 0.0;
    let mut start = 0;
    while start < d {
        let remaining = (d - start) as f64;
        if mu[start] + acc / remaining >= 0.0 {
            break;
        }
        acc += mu[start];
        mu[start] = 0.0;
        start += 1;
    }
    let remaining = (d - start) as f64;
    for m in &mut mu[start..] {
        *m += acc / remaining;
    }
    mu
}

fn smolin_from_eig(eig: &HermitianEig) -> DensityMatrix {
    let mu = smolin_eigenvalues(&eig.eigenvalues);
    DensityMatrix::from_psd_unnormalized(eig.assemble(&mu))
}

fn clip_from_eig(eig: &HermitianEig) -> Result<DensityMatrix> {
    let mu: Vec<f64> = eig.eigenvalues.iter().map(|&l| l.max(0.0)).collect();
    let total: f64 = mu.iter().sum();
    if total <= 0.0 {
        return Err(Error::InvalidState("no positive eigenvalue to keep".into()));
    }
    let mu: Vec<f64> = mu.iter().map(|l| l / total).collect();
    Ok(DensityMatrix::from_psd_unnormalized(eig.assemble(&mu)))
}

/// Least-squares state by monotone accelerated projected gradient.
pub fn lse_estimate(
    f: &FrequencyVector,
    basis: &MeasurementBasis,
    tol: f64,
    max_iter: usize,
) -> Result<EstimatorReport> {
    check_len(f, basis)?;
    let fv = f.values();
    let lipschitz = 2.0 * basis.gram_spectral_norm();
    let step = 1.0 / lipschitz;
    let gradient = |x: &ComplexMatrix| -> ComplexMatrix {
        let r: Vec<f64> = basis
            .traces(x)
            .iter()
            .zip(fv)
            .map(|(p, q)| 2.0 * (p - q))
            .collect();
        basis.combine(&r)
    };

    let start = linear_inversion(f, basis)?;
    let projected = start.projected;
    let mut x = start.state.into_matrix();
    let mut obj = objective(fv, basis, &x);
    let mut y = x.clone();
    let mut t = 1.0f64;
    for iter in 1..=max_iter {
        let z = project_to_physical(&(&y - &gradient(&y).scale(step)))?.into_matrix();
        let obj_z = objective(fv, basis, &z);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        if obj_z <= obj {
            let decrease = obj - obj_z;
            let prev = std::mem::replace(&mut x, z);
            obj = obj_z;
            if decrease < tol {
                return Ok(lse_report(x, fv, basis, iter, projected));
            }
            y = &x + &(&x - &prev).scale((t - 1.0) / t_next);
            t = t_next;
        } else {
            // objective went up: drop the momentum
            y = x.clone();
            t = 1.0;
        }
    }
    Err(Error::EstimatorNoConvergence {
        iterations: max_iter,
        best: Box::new(lse_report(x, fv, basis, max_iter, projected)),
    })
}

fn lse_report(
    x: ComplexMatrix,
    f: &[f64],
    basis: &MeasurementBasis,
    iterations: usize,
    projected: bool,
) -> EstimatorReport {
    let residual = residual(f, basis, &x);
    EstimatorReport {
        state: DensityMatrix::from_psd_unnormalized(x),
        method: Method::Lse,
        iterations,
        residual,
        projected,
    }
}

/// Σ f_i log(q_i / p_i), evaluated without cancellation.
fn likelihood_gain(f: &[f64], old: &[f64], new: &[f64]) -> f64 {
    f.iter()
        .zip(old.iter().zip(new))
        .filter(|(fi, _)| **fi > 0.0)
        .map(|(fi, (p, q))| {
            let p = p.max(PROBABILITY_FLOOR);
            let q = q.max(PROBABILITY_FLOOR);
            fi * ((q - p) / p).ln_1p()
        })
        .sum()
}

pub fn log_likelihood(f: &[f64], probs: &[f64]) -> f64 {
    f.iter()
        .zip(probs)
        .filter(|(fi, _)| **fi > 0.0)
        .map(|(fi, p)| fi * p.max(PROBABILITY_FLOOR).ln())
        .sum()
}

/// Maximum-likelihood state by the diluted RρR fixed-point iteration.
///
/// Steps taken from a momentum-extrapolated point are kept only when they
/// raise the likelihood; otherwise the plain (diluted) step is used.
pub fn mle_estimate(
    f: &FrequencyVector,
    basis: &MeasurementBasis,
    tol: f64,
    max_iter: usize,
) -> Result<EstimatorReport> {
    check_len(f, basis)?;
    if !basis.kind().is_povm() || f.kind() != FrequencyKind::Probability {
        return Err(Error::InvalidArgument(
            "maximum likelihood needs a POVM and probability frequencies".into(),
        ));
    }
    let fv = f.values();
    let d = basis.dim();
    let identity = ComplexMatrix::identity(d);
    let weights_at = |probs: &[f64]| -> ComplexMatrix {
        let w: Vec<f64> = fv
            .iter()
            .zip(probs)
            .map(|(fi, p)| fi / p.max(PROBABILITY_FLOOR))
            .collect();
        basis.combine(&w)
    };
    // dilution strength; infinity is the plain RρR step
    let step = |rho: &ComplexMatrix, r: &ComplexMatrix, eps: f64| -> ComplexMatrix {
        let op = if eps.is_infinite() {
            r.clone()
        } else {
            &identity + &r.scale(eps)
        };
        let next = (&(&op * rho) * &op).hermitize();
        let tr = next.trace().re;
        next.scale(1.0 / tr)
    };

    let mut rho = ComplexMatrix::identity(d).scale(1.0 / d as f64);
    let mut prev = rho.clone();
    let mut probs = basis.traces(&rho);
    let mut eps = f64::INFINITY;
    // iterations since the last momentum restart
    let mut run = 0usize;

    for iter in 1..=max_iter {
        // extrapolated step, accepted only if it beats the current likelihood
        let mut accepted = None;
        if run > 0 {
            let beta = run as f64 / (run as f64 + 3.0);
            let y = &rho + &(&rho - &prev).scale(beta);
            if hermitian_eig(&y)?.min_eigenvalue() > 0.0 {
                let py = basis.traces(&y);
                let candidate = step(&y, &weights_at(&py), f64::INFINITY);
                let cp = basis.traces(&candidate);
                let gain = likelihood_gain(fv, &probs, &cp);
                if gain > 0.0 {
                    accepted = Some((candidate, cp, gain));
                }
            }
        }
        let (next, next_probs, gain) = match accepted {
            Some(found) => found,
            None => {
                run = 0;
                let r = weights_at(&probs);
                let mut trial_eps = eps;
                let found = loop {
                    let candidate = step(&rho, &r, trial_eps);
                    let cp = basis.traces(&candidate);
                    let gain = likelihood_gain(fv, &probs, &cp);
                    if gain >= 0.0 || trial_eps < 1e-8 {
                        break (candidate, cp, gain);
                    }
                    trial_eps = if trial_eps.is_infinite() {
                        1.0
                    } else {
                        trial_eps * 0.5
                    };
                };
                eps = if trial_eps.is_infinite() {
                    trial_eps
                } else {
                    trial_eps * 2.0
                };
                found
            }
        };
        if gain < 0.0 {
            // no dilution improves: at a stationary point
            return Ok(mle_report(rho, fv, basis, iter));
        }
        prev = std::mem::replace(&mut rho, next);
        probs = next_probs;
        run += 1;
        // the gain alone is blind to slow directions: also require R(ρ)ρ ≈ ρ
        if gain < tol {
            let r = weights_at(&probs);
            let stationarity = (&(&r * &rho) - &rho).frobenius_norm();
            if stationarity < tol.sqrt() {
                return Ok(mle_report(rho, fv, basis, iter));
            }
        }
    }
    Err(Error::EstimatorNoConvergence {
        iterations: max_iter,
        best: Box::new(mle_report(rho, fv, basis, max_iter)),
    })
}

fn mle_report(
    rho: ComplexMatrix,
    f: &[f64],
    basis: &MeasurementBasis,
    iterations: usize,
) -> EstimatorReport {
    // the iteration keeps ρ PSD up to rounding
    let state = project_to_physical(&rho).expect("Hermitian iterate");
    EstimatorReport {
        residual: residual(f, basis, state.matrix()),
        state,
        method: Method::Mle,
        iterations,
        projected: false,
    }
}

/// Accepts the best iterate when the iteration budget runs out.
pub fn best_effort(result: Result<EstimatorReport>) -> Result<EstimatorReport> {
    match result {
        Err(Error::EstimatorNoConvergence { best, .. }) => Ok(*best),
        other => other,
    }
}

/// Averaged squared distances of the (target, MLE, maximally mixed) triangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepolarizationTriangle {
    /// mean D²(τ, I/d)
    pub d0_sq: f64,
    /// mean D²(τ, ρ_MLE)
    pub d1_sq: f64,
    /// mean D²(I/d, ρ_MLE)
    pub d01_sq: f64,
}

impl DepolarizationTriangle {
    pub fn new(mle_states: &[DensityMatrix], targets: &[DensityMatrix]) -> Result<Self> {
        if mle_states.is_empty() {
            return Err(Error::EmptyInput("mle_states"));
        }
        if mle_states.len() != targets.len() {
            return Err(Error::DimensionMismatch {
                expected: targets.len(),
                got: mle_states.len(),
            });
        }
        let n = mle_states.len() as f64;
        let (mut d0, mut d1, mut d01) = (0.0, 0.0, 0.0);
        for (m, t) in mle_states.iter().zip(targets) {
            let mixed = DensityMatrix::maximally_mixed(t.dim());
            d0 += hs_distance_sq(t, &mixed)?;
            d1 += hs_distance_sq(t, m)?;
            d01 += hs_distance_sq(&mixed, m)?;
        }
        Ok(Self {
            d0_sq: d0 / n,
            d1_sq: d1 / n,
            d01_sq: d01 / n,
        })
    }

    /// Mean D² of p ρ_MLE + (1 − p) I/d to the targets.
    pub fn parabola(&self, p: f64) -> f64 {
        self.d0_sq + (self.d1_sq - self.d0_sq - self.d01_sq) * p + self.d01_sq * p * p
    }

    /// Minimizer over p ∈ [0, 1] and the minimal mean distance.
    pub fn optimum(&self) -> (f64, f64) {
        let a = self.d01_sq;
        if a <= 1e-300 {
            return (0.0, self.d0_sq);
        }
        let b = self.d1_sq - self.d0_sq - a;
        let p = -b / (2.0 * a);
        if p <= 0.0 {
            (0.0, self.d0_sq)
        } else if p >= 1.0 {
            (1.0, self.d1_sq)
        } else {
            (p, self.d0_sq - b * b / (4.0 * a))
        }
    }
}

/// Optimal global mixing weight p* of the MLE states and the resulting mean D².
pub fn optimal_depolarization(
    mle_states: &[DensityMatrix],
    targets: &[DensityMatrix],
) -> Result<(f64, f64)> {
    Ok(DepolarizationTriangle::new(mle_states, targets)?.optimum())
}

/// p ρ_MLE + (1 − p) I/d.
pub fn depolarized_estimate(report: &EstimatorReport, p: f64) -> Result<EstimatorReport> {
    let state = depolarize(&report.state, 1.0 - p)?;
    Ok(EstimatorReport {
        state,
        method: Method::MleDepolarized,
        iterations: report.iterations,
        residual: report.residual,
        projected: report.projected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c64;
    use crate::measurement::{born_values, pauli_basis, sic_povm, sqrt_povm};
    use crate::rng::SeedStream;
    use crate::states::{hs_random_state, oat_state};

    fn diag(v: &[f64]) -> ComplexMatrix {
        ComplexMatrix::from_real_diagonal(v)
    }

    #[test]
    fn round_trip_all_bases() {
        let mut rng = SeedStream::new(1);
        let bases = vec![
            sqrt_povm(3, &mut rng).unwrap(),
            sqrt_povm(9, &mut rng).unwrap(),
            sic_povm(2).unwrap(),
            pauli_basis(3).unwrap(),
        ];
        for b in &bases {
            for _ in 0..5 {
                let rho = hs_random_state(b.dim(), &mut rng).unwrap();
                let p = born_values(&rho, b).unwrap();
                let r = linear_inversion(&p, b).unwrap();
                assert!((r.state.matrix() - rho.matrix()).frobenius_norm() < 1e-10);
                assert!(!r.projected);
            }
        }
        let b = sic_povm(4).unwrap();
        let rho = oat_state(4, 1.1).unwrap();
        let r = linear_inversion(&born_values(&rho, &b).unwrap(), &b).unwrap();
        assert!((r.state.matrix() - rho.matrix()).frobenius_norm() < 1e-10);
    }

    #[test]
    fn smolin_diagonal_example() {
        let out = project_to_physical(&diag(&[1.2, -0.2])).unwrap();
        assert!((out.matrix() - &diag(&[1.0, 0.0])).frobenius_norm() < 1e-14);
    }

    #[test]
    fn smolin_matches_grid_search() {
        // brute force over diagonal 2×2 states, which contain the minimizer for diagonal input
        for h in [[1.2, -0.2], [0.7, 0.3], [1.5, -0.5], [-0.1, 1.1]] {
            let out = project_to_physical(&diag(&h)).unwrap();
            let mut best = (f64::INFINITY, 0.0);
            for i in 0..=10_000 {
                let a = i as f64 / 10_000.0;
                let dist = (a - h[0]).powi(2) + (1.0 - a - h[1]).powi(2);
                if dist < best.0 {
                    best = (dist, a);
                }
            }
            assert!((out.matrix().get(0, 0).re - best.1).abs() < 1e-4);
        }
    }

    #[test]
    fn smolin_already_physical_and_idempotent() {
        let mut rng = SeedStream::new(4);
        let rho = hs_random_state(9, &mut rng).unwrap();
        let out = project_to_physical(rho.matrix()).unwrap();
        assert!((out.matrix() - rho.matrix()).frobenius_norm() < 1e-12);
        let h = random_hermitian_unit_trace(9, &mut rng);
        let once = project_to_physical(&h).unwrap();
        let twice = project_to_physical(once.matrix()).unwrap();
        assert!((once.matrix() - twice.matrix()).frobenius_norm() < 1e-12);
        assert!((once.matrix().trace().re - 1.0).abs() < 1e-12);
    }

    fn random_hermitian_unit_trace(d: usize, rng: &mut SeedStream) -> ComplexMatrix {
        let a = ComplexMatrix::from_fn(d, d, |_, _| c64(rng.normal(), rng.normal()));
        let h = (&a + &a.adjoint()).scale(0.25);
        let shift = (1.0 - h.trace().re) / d as f64;
        &h + &ComplexMatrix::identity(d).scale(shift)
    }

    /// Projected gradient on the Frobenius objective with an independent
    /// projection: PSD cone via eigen-clipping alternated with the trace plane (Dykstra).
    fn dykstra(h: &ComplexMatrix, iters: usize) -> ComplexMatrix {
        let d = h.rows();
        let mut x = h.clone();
        let mut p = ComplexMatrix::zeros(d, d);
        let mut q = ComplexMatrix::zeros(d, d);
        for _ in 0..iters {
            let y0 = &x + &p;
            let e = hermitian_eig(&y0).unwrap();
            let y = e.map(|l| l.max(0.0));
            p = &y0 - &y;
            let x0 = &y + &q;
            let shift = (1.0 - x0.trace().re) / d as f64;
            x = &x0 + &ComplexMatrix::identity(d).scale(shift);
            q = &x0 - &x;
        }
        x
    }

    #[test]
    fn smolin_matches_dykstra_oracle() {
        let mut rng = SeedStream::new(8);
        for _ in 0..3 {
            let h = random_hermitian_unit_trace(9, &mut rng);
            let out = project_to_physical(&h).unwrap();
            let oracle = dykstra(&h, 20_000);
            assert!((out.matrix() - &oracle).frobenius_norm() < 1e-6);
        }
    }

    #[test]
    fn clip_projection() {
        let out = clip_to_physical(&diag(&[1.2, -0.2])).unwrap();
        assert!((out.matrix() - &diag(&[1.0, 0.0])).frobenius_norm() < 1e-14);
        let out = clip_to_physical(&diag(&[0.7, 0.4, -0.1])).unwrap();
        let expect = diag(&[0.7 / 1.1, 0.4 / 1.1, 0.0]);
        assert!((out.matrix() - &expect).frobenius_norm() < 1e-14);
    }

    #[test]
    fn li_projected_flag() {
        let b = pauli_basis(1).unwrap();
        let f = FrequencyVector::new(vec![1.0, 1.4, 0.0, 0.0], FrequencyKind::MeanValue).unwrap();
        let r = linear_inversion(&f, &b).unwrap();
        assert!(r.projected);
        let e = r.state.eig().unwrap();
        assert!(e.eigenvalues[0].abs() < 1e-12);
        let wrong = FrequencyVector::new(vec![1.0; 3], FrequencyKind::MeanValue).unwrap();
        assert!(matches!(
            linear_inversion(&wrong, &b),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn lse_exact_values() {
        let b = sic_povm(2).unwrap();
        let rho = hs_random_state(4, &mut SeedStream::new(2)).unwrap();
        let p = born_values(&rho, &b).unwrap();
        let r = best_effort(lse_estimate(&p, &b, 1e-16, 2000)).unwrap();
        assert!(r.residual * r.residual < 1e-12);
        assert!((r.state.matrix() - rho.matrix()).frobenius_norm() < 1e-6);
    }

    #[test]
    fn lse_unphysical_bloch_vector() {
        let b = pauli_basis(1).unwrap();
        // (1, 0.9, 0, 0) lies inside the Bloch ball; (1, 0.9, 0, 0.9) does not
        for (values, on_boundary) in [([1.0, 0.9, 0.0, 0.0], false), ([1.0, 0.9, 0.0, 0.9], true)] {
            let f = FrequencyVector::new(values.to_vec(), FrequencyKind::MeanValue).unwrap();
            let r = best_effort(lse_estimate(&f, &b, 1e-15, 5000)).unwrap();
            // fine grid over the Bloch ball in the x-z plane (y = 0 by symmetry)
            let objective_of = |x: f64, z: f64| {
                let vals = [1.0, x, 0.0, z];
                vals.iter()
                    .zip(&values)
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
            };
            let mut best = (f64::INFINITY, 0.0, 0.0);
            let n = 400;
            for i in 0..=n {
                for j in 0..=n {
                    let x = -1.0 + 2.0 * i as f64 / n as f64;
                    let z = -1.0 + 2.0 * j as f64 / n as f64;
                    if x * x + z * z <= 1.0 {
                        let o = objective_of(x, z);
                        if o < best.0 {
                            best = (o, x, z);
                        }
                    }
                }
            }
            let m = r.state.matrix();
            let bx = 2.0 * m.get(0, 1).re;
            let bz = m.get(0, 0).re - m.get(1, 1).re;
            let radius = (bx * bx + bz * bz).sqrt();
            assert_eq!(radius > 1.0 - 1e-6, on_boundary, "radius {radius}");
            assert!((bx - best.1).abs() < 0.01 && (bz - best.2).abs() < 0.01);
            assert!(objective_of(bx, bz) <= best.0 + 1e-12);
        }
    }

    #[test]
    fn lse_objective_non_increasing() {
        let mut rng = SeedStream::new(12);
        let b = sic_povm(2).unwrap();
        let rho = hs_random_state(4, &mut rng).unwrap();
        let p = born_values(&rho, &b).unwrap();
        let f = crate::measurement::sample_direct(&p, 100, &mut rng).unwrap();
        let mut last = f64::INFINITY;
        for iters in [1, 2, 5, 10, 50, 200] {
            let r = best_effort(lse_estimate(&f, &b, 0.0, iters)).unwrap();
            let obj = r.residual * r.residual;
            assert!(obj <= last + 1e-15);
            last = obj;
        }
    }

    #[test]
    fn mle_symmetric_frequencies() {
        let b = sic_povm(1).unwrap();
        let f = FrequencyVector::new(vec![0.25; 4], FrequencyKind::Probability).unwrap();
        let r = best_effort(mle_estimate(&f, &b, 1e-12, 5000)).unwrap();
        let mixed = DensityMatrix::maximally_mixed(2);
        assert!((r.state.matrix() - mixed.matrix()).frobenius_norm() < 1e-8);
    }

    #[test]
    fn mle_recovers_full_rank_state() {
        let mut rng = SeedStream::new(3);
        let b = sic_povm(2).unwrap();
        for _ in 0..3 {
            let rho = hs_random_state(4, &mut rng).unwrap();
            let p = born_values(&rho, &b).unwrap();
            let r = best_effort(mle_estimate(&p, &b, 1e-16, 20_000)).unwrap();
            let err = (r.state.matrix() - rho.matrix()).frobenius_norm();
            assert!(err < 1e-6, "err {err} after {} iterations", r.iterations);
        }
    }

    #[test]
    fn mle_likelihood_monotone_and_beats_li() {
        let mut rng = SeedStream::new(13);
        let b = sqrt_povm(3, &mut rng).unwrap();
        let rho = hs_random_state(3, &mut rng).unwrap();
        let p = born_values(&rho, &b).unwrap();
        let f = crate::measurement::sample_direct(&p, 200, &mut rng).unwrap();
        let mle = best_effort(mle_estimate(&f, &b, 1e-12, 5000)).unwrap();
        let li = linear_inversion(&f, &b).unwrap();
        let ll = |s: &DensityMatrix| log_likelihood(f.values(), &b.traces(s.matrix()));
        assert!(ll(&mle.state) >= ll(&li.state) - 1e-12);
        assert!(ll(&mle.state) >= ll(&DensityMatrix::maximally_mixed(3)));
    }

    #[test]
    fn mle_rejects_pauli() {
        let b = pauli_basis(1).unwrap();
        let f = FrequencyVector::new(vec![0.25; 4], FrequencyKind::Probability).unwrap();
        assert!(mle_estimate(&f, &b, 1e-9, 10).is_err());
    }

    #[test]
    fn depolarization_degenerate_cases() {
        let mut rng = SeedStream::new(6);
        let targets: Vec<_> = (0..5)
            .map(|_| hs_random_state(3, &mut rng).unwrap())
            .collect();
        let (p, dsq) = optimal_depolarization(&targets, &targets).unwrap();
        assert!((p - 1.0).abs() < 1e-12 && dsq.abs() < 1e-12);
        let mixed = vec![DensityMatrix::maximally_mixed(3); 5];
        let tri = DepolarizationTriangle::new(&mixed, &targets).unwrap();
        let (p, dsq) = tri.optimum();
        assert_eq!(p, 0.0);
        assert!((dsq - tri.d0_sq).abs() < 1e-15);
        assert!(matches!(
            optimal_depolarization(&[], &[]),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn parabola_matches_direct_evaluation() {
        let mut rng = SeedStream::new(7);
        let b = sqrt_povm(3, &mut rng).unwrap();
        let targets: Vec<_> = (0..6)
            .map(|_| hs_random_state(3, &mut rng).unwrap())
            .collect();
        let ests: Vec<_> = targets
            .iter()
            .map(|t| {
                let p = born_values(t, &b).unwrap();
                let f = crate::measurement::sample_direct(&p, 100, &mut rng).unwrap();
                linear_inversion(&f, &b).unwrap().state
            })
            .collect();
        let tri = DepolarizationTriangle::new(&ests, &targets).unwrap();
        for k in 0..=10 {
            let p = k as f64 / 10.0;
            let direct: f64 = ests
                .iter()
                .zip(&targets)
                .map(|(e, t)| hs_distance_sq(t, &depolarize(e, 1.0 - p).unwrap()).unwrap())
                .sum::<f64>()
                / targets.len() as f64;
            assert!((direct - tri.parabola(p)).abs() < 1e-12);
        }
        let (p_star, d_star) = tri.optimum();
        assert!((tri.parabola(p_star) - d_star).abs() < 1e-12);
    }
}
