//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs with `harness = false`. Set `ACCEPTANCE_ONLY=1,4,10` to run a subset.
//! The heavy studies (6, 7, 8, 9) use the desk profile at seed 0 and take
//! roughly 35 minutes together on one core.

use std::f64::consts::PI;
use std::time::Instant;

use tomonet::denoiser::{pack_cholesky, CholeskyVector, Model, ModelHyper, ModelSpec};
use tomonet::estimators::linear_inversion;
use tomonet::linalg::{repair, ComplexMatrix, CHOLESKY_REPAIR};
use tomonet::measurement::{born_values, pauli_basis, sic_povm, sqrt_povm, MeasurementBasis};
use tomonet::metrics::{
    bures_distance, hs_distance_sq, hs_distance_sq_matrices, optimal_axis_qfi, qfi,
};
use tomonet::pipeline::{
    run_architecture_benchmark, run_mixed_benchmark, run_oat_study, run_pstar_analysis,
    run_sampling_noise_table, Config, ExperimentResult, ModelStore, SamplingConfig,
};
use tomonet::states::{collective_spin, haar_random_pure, hs_random_state, oat_state};
use tomonet::{c64, DensityMatrix, SeedStream};

fn repaired(rho: &DensityMatrix) -> tomonet::Result<DensityMatrix> {
    DensityMatrix::new(repair(rho.matrix(), CHOLESKY_REPAIR))
}

// pinned tolerances
const ROUND_TRIP_TOL: f64 = 1e-10;
const MSE_IDENTITY_TOL: f64 = 1e-12;
const QFI_TOL: f64 = 1e-8;
const TABLE_TOL_POINTS: f64 = 3.0;
const GRADIENT_REL_TOL: f64 = 1e-4;
const GRADIENT_STEP: f64 = 1e-5;
/// Denominator floor of the relative gradient error.
const GRADIENT_FLOOR: f64 = 1e-6;
const OOD_GAIN_POINTS: f64 = 5.0;
const OOD_BAND_POINTS: f64 = 5.0;
const OOD_TARGETS: [f64; 2] = [88.7, 91.0];
/// Half-width of the window around t = π/2 for the entanglement check.
const QFI_WINDOW: f64 = PI / 10.0;
const PARABOLA_TOL: f64 = 1e-12;
const ARCH_GAP_POINTS: f64 = 3.0;
const BUDGET_TOL: f64 = 0.05;
const SEED: u64 = 0;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: String) -> Self {
        Self { pass, detail }
    }
}

type Check = fn() -> tomonet::Result<Outcome>;

fn percent(x: f64) -> f64 {
    100.0 * x
}

fn mean_root_fidelity(
    result: &ExperimentResult,
    setting: &str,
    method: &str,
) -> tomonet::Result<f64> {
    result
        .get(setting, method)
        .map(|a| a.mean_root_fidelity)
        .ok_or_else(|| {
            tomonet::Error::InvalidArgument(format!("no aggregate for {setting}/{method}"))
        })
}

fn round_trip() -> tomonet::Result<Outcome> {
    let bases: Vec<(&str, MeasurementBasis)> = vec![
        ("sqrt-POVM d=9", sqrt_povm(9, &mut SeedStream::new(SEED))?),
        ("SIC-POVM L=4", sic_povm(4)?),
        ("Pauli L=4", pauli_basis(4)?),
    ];
    let mut rng = SeedStream::new(1);
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for (name, basis) in &bases {
        let mut basis_worst: f64 = 0.0;
        for i in 0..100 {
            let rho = if i % 2 == 0 {
                hs_random_state(basis.dim(), &mut rng)?
            } else {
                haar_random_pure(basis.dim(), &mut rng)?
            };
            let est = linear_inversion(&born_values(&rho, basis)?, basis)?;
            basis_worst = basis_worst.max(hs_distance_sq(&est.state, &rho)?);
        }
        parts.push(format!("{name} max D²={basis_worst:.2e}"));
        worst = worst.max(basis_worst);
    }
    Ok(Outcome::new(worst < ROUND_TRIP_TOL, parts.join(", ")))
}

fn identity_suite() -> tomonet::Result<Outcome> {
    let mut rng = SeedStream::new(2);
    let mut worst_mse: f64 = 0.0;
    let mut violations = 0usize;
    let mut raw_violations = 0usize;
    let mut tightest = f64::INFINITY;
    for d in [2usize, 9, 16] {
        for i in 0..10_000 {
            let draw = |rng: &mut SeedStream, k: usize| {
                if k.is_multiple_of(3) {
                    haar_random_pure(d, rng)
                } else {
                    hs_random_state(d, rng)
                }
            };
            let a = draw(&mut rng, i)?;
            let b = draw(&mut rng, i / 2)?;
            let ca = a.cholesky(CHOLESKY_REPAIR)?;
            let cb = b.cholesky(CHOLESKY_REPAIR)?;
            let (va, vb) = (pack_cholesky(&ca)?, pack_cholesky(&cb)?);
            let mse: f64 = va
                .values()
                .iter()
                .zip(vb.values())
                .map(|(x, y)| (x - y).powi(2))
                .sum();
            let hs = hs_distance_sq_matrices(&ca, &cb);
            worst_mse = worst_mse.max((mse - hs).abs());
            // the factors represent the repaired states
            let db = bures_distance(&repaired(&a)?, &repaired(&b)?)?;
            if db > hs {
                violations += 1;
            }
            if bures_distance(&a, &b)? > hs {
                raw_violations += 1;
            }
            tightest = tightest.min(hs - db);
        }
    }
    Ok(Outcome::new(
        worst_mse < MSE_IDENTITY_TOL && violations == 0,
        format!(
            "30000 pairs: max |MSE − D²_HS| = {worst_mse:.2e}, Bures violations {violations}, min slack {tightest:.2e} \
             (unrepaired rank-deficient pairs exceeding the bound: {raw_violations})"
        ),
    ))
}

fn qfi_anchors() -> tomonet::Result<Outcome> {
    let coherent = optimal_axis_qfi(&oat_state(4, 0.0)?)?.qfi;
    let cat = optimal_axis_qfi(&oat_state(4, PI / 2.0)?)?.qfi;
    let ops = collective_spin(4)?;
    let mut rng = SeedStream::new(3);
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let rho = haar_random_pure(16, &mut rng)?;
        let g = if i % 2 == 0 {
            let v = [rng.normal(), rng.normal(), rng.normal()];
            let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            ops.along([v[0] / n, v[1] / n, v[2] / n])
        } else {
            ComplexMatrix::from_fn(16, 16, |_, _| c64(rng.normal(), rng.normal())).hermitize()
        };
        let mean = rho.expectation(&g).re;
        let var = rho.expectation(&(&g * &g)).re - mean * mean;
        worst = worst.max((qfi(&rho, &g)? - 4.0 * var).abs());
    }
    let pass = (coherent - 4.0).abs() < QFI_TOL && (cat - 16.0).abs() < QFI_TOL && worst < QFI_TOL;
    Ok(Outcome::new(
        pass,
        format!("coherent {coherent:.10}, cat {cat:.10}, max |QFI − 4 var| = {worst:.2e} over 100 pure states"),
    ))
}

fn table_config() -> SamplingConfig {
    SamplingConfig {
        with_nn: false,
        ..Config::desk().sampling
    }
}

fn sampling_table() -> tomonet::Result<Outcome> {
    let cfg = table_config();
    let result = run_sampling_noise_table(&cfg, SEED, &ModelStore::inline())?;
    let reference = [
        (1_000_000u64, 98.1),
        (100_000, 94.3),
        (10_000, 86.5),
        (1_000, 67.0),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (n, target) in reference {
        let ours = percent(mean_root_fidelity(
            &result,
            &format!("n_trial={n}"),
            "LI-OAT",
        )?);
        pass &= (ours - target).abs() <= TABLE_TOL_POINTS;
        parts.push(format!("N={n}: {ours:.2} (reference {target})"));
    }
    Ok(Outcome::new(pass, parts.join(", ")))
}

fn gradient_check() -> tomonet::Result<Outcome> {
    let hyper = ModelHyper {
        kernels: 2,
        heads: 1,
        ..ModelHyper::default()
    };
    let spec = ModelSpec::transformer(2, &hyper)?;
    let mut model = Model::init(spec, 5)?;
    let mut rng = SeedStream::new(6);
    for p in model.params_mut() {
        *p += 0.05 * rng.normal();
    }
    let reg = 1.0;
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let x = CholeskyVector::from_values((0..4).map(|_| rng.normal()).collect())?;
        let t = CholeskyVector::from_values((0..4).map(|_| rng.normal()).collect())?;
        let (_, grad) = model.gradient(&x, &t, reg)?;
        for (i, &g) in grad.iter().enumerate() {
            let orig = model.params()[i];
            model.params_mut()[i] = orig + GRADIENT_STEP;
            let up = model.loss(&x, &t, reg)?;
            model.params_mut()[i] = orig - GRADIENT_STEP;
            let down = model.loss(&x, &t, reg)?;
            model.params_mut()[i] = orig;
            let fd = (up - down) / (2.0 * GRADIENT_STEP);
            worst = worst.max((g - fd).abs() / g.abs().max(fd.abs()).max(GRADIENT_FLOOR));
        }
    }
    Ok(Outcome::new(
        worst < GRADIENT_REL_TOL,
        format!(
            "{} parameters × 10 inputs, max relative error {worst:.2e}",
            model.param_count()
        ),
    ))
}

fn mixed_benchmark() -> tomonet::Result<Outcome> {
    let mut cfg = Config::desk().mixed;
    cfg.n_trials = vec![1000];
    cfg.nn_trials = vec![1000];
    let result = run_mixed_benchmark(&cfg, SEED, &ModelStore::inline())?;
    let d2 = |method: &str| {
        result
            .get("n_trial=1000", method)
            .map(|a| a.mean_hs_distance_sq)
            .ok_or_else(|| tomonet::Error::InvalidArgument(format!("missing {method}")))
    };
    let (li, li_nn, mle, mle_nn) = (d2("LI")?, d2("LI-NN")?, d2("MLE")?, d2("MLE-NN")?);
    Ok(Outcome::new(
        li_nn < li && mle_nn <= mle,
        format!("mean D²_HS at N=1000: LI {li:.4e}, LI-NN {li_nn:.4e}, MLE {mle:.4e}, MLE-NN {mle_nn:.4e}"),
    ))
}

fn ood_certification() -> tomonet::Result<Outcome> {
    let cfg = Config::desk().oat;
    let result = run_oat_study(&cfg, SEED, &ModelStore::inline())?;
    let mut gain_ok = true;
    let mut qfi_ok = true;
    let mut nn_means = Vec::new();
    let mut parts = Vec::new();
    for r in 0..cfg.realizations {
        let setting = format!("realization={r}");
        let li = percent(mean_root_fidelity(&result, &setting, "LI")?);
        let nn = percent(mean_root_fidelity(&result, &setting, "NN")?);
        gain_ok &= nn - li >= OOD_GAIN_POINTS;
        nn_means.push(nn);

        let window = |method: &str| -> Vec<f64> {
            result
                .rows_for(&setting, method)
                .filter(|row| (row.param - PI / 2.0).abs() <= QFI_WINDOW)
                .filter_map(|row| row.qfi_normalized)
                .collect()
        };
        let (nn_q, li_q) = (window("NN"), window("LI"));
        let nn_peak = nn_q.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let li_peak = li_q.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let nn_avg = nn_q.iter().sum::<f64>() / nn_q.len().max(1) as f64;
        let li_avg = li_q.iter().sum::<f64>() / li_q.len().max(1) as f64;
        qfi_ok &= !nn_q.is_empty() && nn_peak > 2.0 && li_avg < nn_avg;
        parts.push(format!(
            "r{r}: LI {li:.2}, NN {nn:.2}, window QFI/L NN peak {nn_peak:.2} mean {nn_avg:.2}, LI peak {li_peak:.2} mean {li_avg:.2}"
        ));
    }
    // the two noise realizations are unordered, so take the better pairing
    let band_ok = nn_means.len() == 2 && {
        let fits = |a: f64, b: f64| {
            (a - OOD_TARGETS[0]).abs() <= OOD_BAND_POINTS
                && (b - OOD_TARGETS[1]).abs() <= OOD_BAND_POINTS
        };
        fits(nn_means[0], nn_means[1]) || fits(nn_means[1], nn_means[0])
    };
    let shots = result
        .extra
        .get("calibrated_shots")
        .copied()
        .unwrap_or(f64::NAN);
    parts.push(format!(
        "calibrated N={shots}; gain ≥ {OOD_GAIN_POINTS}: {}; QFI crossing: {}; NN within ±{OOD_BAND_POINTS} of {OOD_TARGETS:?}: {}",
        verdict(gain_ok),
        verdict(qfi_ok),
        verdict(band_ok)
    ));
    Ok(Outcome::new(gain_ok && qfi_ok && band_ok, parts.join("; ")))
}

fn pstar_analysis() -> tomonet::Result<Outcome> {
    let mut cfg = Config::desk().pstar;
    cfg.n_states = 200;
    cfg.grid_points = 1000;
    cfg.n_trials = vec![1_000, 10_000, 100_000, 1_000_000];
    let table = run_pstar_analysis(&cfg, SEED)?;
    let mut pass = table.rows.len() == 4;
    let mut parts = Vec::new();
    for r in &table.rows {
        let ok = (r.p_star - r.grid_p).abs() <= r.grid_step && r.parabola_max_dev <= PARABOLA_TOL;
        pass &= ok;
        parts.push(format!(
            "N={}: p*={:.4} grid {:.4} parabola dev {:.1e}",
            r.n_trial, r.p_star, r.grid_p, r.parabola_max_dev
        ));
    }
    Ok(Outcome::new(pass, parts.join(", ")))
}

fn architecture_benchmark() -> tomonet::Result<Outcome> {
    let cfg = Config::desk().arch;
    let result = run_architecture_benchmark(&cfg, SEED, &ModelStore::inline())?;
    let setting = format!("n_trial={}", cfg.n_trial);
    let transformer = percent(mean_root_fidelity(&result, &setting, "Transformer")?);
    let cnn2 = percent(mean_root_fidelity(&result, &setting, "Cnn2")?);
    let cnn4 = percent(mean_root_fidelity(&result, &setting, "Cnn4")?);
    let params = |k: &str| result.extra.get(k).copied().unwrap_or(f64::NAN);
    let (pt, p2, p4) = (
        params("params_transformer"),
        params("params_cnn2"),
        params("params_cnn4"),
    );
    let budget_ok = ((p2 - pt) / pt).abs() <= BUDGET_TOL && ((p4 - pt) / pt).abs() <= BUDGET_TOL;
    let gap_ok = transformer - cnn2 >= ARCH_GAP_POINTS && transformer - cnn4 >= ARCH_GAP_POINTS;
    Ok(Outcome::new(
        budget_ok && gap_ok,
        format!(
            "fidelity Transformer {transformer:.2}, Cnn2 {cnn2:.2}, Cnn4 {cnn4:.2}; params {pt} / {p2} / {p4}"
        ),
    ))
}

fn determinism() -> tomonet::Result<Outcome> {
    let cfg = table_config();
    let dirs = [tempfile::tempdir()?, tempfile::tempdir()?];
    for dir in &dirs {
        run_sampling_noise_table(&cfg, SEED, &ModelStore::inline())?.write(dir.path())?;
    }
    let mut names: Vec<_> = std::fs::read_dir(dirs[0].path())?
        .map(|e| e.map(|e| e.file_name()))
        .collect::<std::io::Result<_>>()?;
    names.sort();
    let mut identical = !names.is_empty();
    for name in &names {
        let a = std::fs::read(dirs[0].path().join(name))?;
        let b = std::fs::read(dirs[1].path().join(name))?;
        identical &= a == b;
    }
    Ok(Outcome::new(
        identical,
        format!(
            "{} CSV files compared byte for byte across two runs",
            names.len()
        ),
    ))
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn main() {
    let checks: [(u32, &str, Check); 10] = [
        (1, "linear-inversion round trip", round_trip),
        (2, "Cholesky MSE identity and Bures bound", identity_suite),
        (3, "QFI anchors", qfi_anchors),
        (4, "LI-OAT sampling-noise table", sampling_table),
        (5, "gradient correctness", gradient_check),
        (6, "NN improvement at N=1000", mixed_benchmark),
        (7, "OOD certification on OAT states", ood_certification),
        (8, "optimal depolarization p*", pstar_analysis),
        (
            9,
            "transformer vs parameter-matched CNNs",
            architecture_benchmark,
        ),
        (10, "determinism", determinism),
    ];
    let only: Option<Vec<u32>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|t| t.trim().parse().ok()).collect());
    let mut failed = 0;
    for (id, name, check) in checks {
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let start = Instant::now();
        let outcome = match std::panic::catch_unwind(check) {
            Ok(Ok(o)) => o,
            Ok(Err(e)) => Outcome::new(false, format!("error: {e}")),
            Err(_) => Outcome::new(false, "panicked".into()),
        };
        if !outcome.pass {
            failed += 1;
        }
        println!(
            "criterion {id:>2} {}: {name}: {} ({:.1}s)",
            verdict(outcome.pass),
            outcome.detail,
            start.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
