//! The benchmark studies.
//!
//! Every run is a pure function of its config and master seed: datasets are
//! seeded through [`subseed`], training is deterministic, and rows are
//! collected in generation order.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use super::config::{ArchConfig, MixedConfig, OatConfig, PstarConfig, SamplingConfig};
use super::dataset::{
    generate_dataset, DatasetRecord, Ensemble, GenerationConfig, NoiseMode, Preprocess,
};
use super::results::{write_csv, ExperimentResult, ResultRow};
use crate::denoiser::checkpoint::{self, HistorySummary, Manifest};
use crate::denoiser::{
    build_cnn_baseline, train, Architecture, History, Model, ModelHyper, ModelSpec, TrainConfig,
};
use crate::error::{Error, Result};
use crate::estimators::DepolarizationTriangle;
use crate::linalg::ComplexMatrix;
use crate::measurement::BasisKind;
use crate::metrics::hs_distance_sq_matrices;
use crate::rng::SeedStream;
use crate::states::DensityMatrix;

/// Seed for the sub-task named by `path` under `master`.
pub fn subseed(master: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(master, |s, &k| SeedStream::derive(s, k).next_u64())
}

/// Where experiments get their trained networks.
///
/// With `load_dir` set, models are read from `load_dir/NAME.bin` and a missing
/// file is an error; otherwise they are trained inline and, with `save_dir`
/// set, written there with their manifest.
#[derive(Debug, Clone, Default)]
pub struct ModelStore {
    pub load_dir: Option<PathBuf>,
    pub save_dir: Option<PathBuf>,
}

impl ModelStore {
    pub fn inline() -> Self {
        Self::default()
    }

    pub fn saving_to(dir: &Path) -> Self {
        Self {
            load_dir: None,
            save_dir: Some(dir.to_path_buf()),
        }
    }

    pub fn loading_from(dir: &Path) -> Self {
        Self {
            load_dir: Some(dir.to_path_buf()),
            save_dir: None,
        }
    }

    fn obtain(
        &self,
        name: &str,
        spec: ModelSpec,
        fit: impl FnOnce() -> Result<(Model, History, TrainConfig)>,
    ) -> Result<Model> {
        if let Some(dir) = &self.load_dir {
            let path = dir.join(format!("{name}.bin"));
            if !path.exists() {
                return Err(Error::MissingModel(path.display().to_string()));
            }
            let model = checkpoint::load(&path)?;
            if model.spec() != &spec {
                return Err(Error::Config(format!(
                    "{} holds a different architecture than configured",
                    path.display()
                )));
            }
            return Ok(model);
        }
        let (model, history, cfg) = fit()?;
        log::info!(
            "{name}: {} parameters, best validation loss {:.4e} at epoch {}",
            model.param_count(),
            history.best_val_loss,
            history.best_epoch
        );
        if let Some(dir) = &self.save_dir {
            let mut manifest = Manifest::for_model(&model);
            manifest.train = Some(cfg);
            manifest.history = Some(HistorySummary::from(&history));
            manifest
                .metrics
                .insert("best_val_loss".into(), history.best_val_loss);
            checkpoint::save(&model, &dir.join(format!("{name}.bin")), &manifest)?;
        }
        Ok(model)
    }
}

/// Trains a network of `spec` on the (input, target) pairs of `records`.
pub fn fit_model(
    records: &[DatasetRecord],
    spec: ModelSpec,
    base: &TrainConfig,
    seed: u64,
) -> Result<(Model, History, TrainConfig)> {
    let cfg = TrainConfig {
        seed,
        architecture: spec.arch,
        ..base.clone()
    };
    let pairs: Vec<_> = records.iter().map(DatasetRecord::pair).collect();
    let (model, history) = train(&pairs, spec, &cfg)?;
    Ok((model, history, cfg))
}

fn train_count(cfg: &TrainConfig) -> usize {
    cfg.n_train + cfg.n_val
}

fn transformer_spec(d: usize, hyper: &ModelHyper) -> Result<ModelSpec> {
    ModelSpec::transformer(d, hyper)
}

fn preprocessed(records: &[DatasetRecord]) -> Vec<DensityMatrix> {
    records.iter().map(|r| r.preprocessed.clone()).collect()
}

/// Rows comparing `estimates[i]` against the target of `records[i]`.
fn rows_for(
    setting: &str,
    method: &str,
    records: &[DatasetRecord],
    estimates: &[DensityMatrix],
    param: impl Fn(&DatasetRecord) -> f64 + Sync,
    with_qfi: bool,
) -> Result<Vec<ResultRow>> {
    records
        .par_iter()
        .zip(estimates.par_iter())
        .enumerate()
        .map(|(i, (r, est))| {
            ResultRow::evaluate(setting, param(r), i, method, est, &r.target, with_qfi)
        })
        .collect()
}

fn trial_param(r: &DatasetRecord) -> f64 {
    r.meta.generation.n_trial as f64
}

fn time_param(r: &DatasetRecord) -> f64 {
    r.meta.oat_time.unwrap_or(f64::NAN)
}

fn trial_setting(n: u64) -> String {
    format!("n_trial={n}")
}

/// LI, MLE, LI-NN and MLE-NN on the Hilbert-Schmidt ensemble with a random
/// sqrt-POVM, across trial counts.
pub fn run_mixed_benchmark(
    cfg: &MixedConfig,
    seed: u64,
    store: &ModelStore,
) -> Result<ExperimentResult> {
    let base = GenerationConfig {
        ensemble: Ensemble::Hs,
        d: cfg.d,
        basis: BasisKind::SqrtPovm,
        basis_seed: subseed(seed, &[1]),
        noise: NoiseMode::Direct,
        projection: cfg.projection,
        mle_tol: cfg.mle_tol,
        mle_max_iter: cfg.mle_max_iter,
        ..GenerationConfig::default()
    };
    let spec = transformer_spec(cfg.d, &cfg.model)?;
    let mut rows = Vec::new();
    for &n in &cfg.n_trials {
        let setting = trial_setting(n);
        log::info!("mixed benchmark at {setting}");
        let test = GenerationConfig {
            n_trial: n,
            count: cfg.n_test,
            seed: subseed(seed, &[2, n]),
            ..base.clone()
        };
        let mle_of = |g: &GenerationConfig| GenerationConfig {
            preprocess: Preprocess::Mle,
            ..g.clone()
        };
        let test_li = generate_dataset(&test)?;
        rows.extend(rows_for(
            &setting,
            "LI",
            &test_li,
            &preprocessed(&test_li),
            trial_param,
            false,
        )?);
        let test_mle = if cfg.with_mle {
            let t = generate_dataset(&mle_of(&test))?;
            rows.extend(rows_for(
                &setting,
                "MLE",
                &t,
                &preprocessed(&t),
                trial_param,
                false,
            )?);
            Some(t)
        } else {
            None
        };
        if !cfg.nn_trials.contains(&n) {
            continue;
        }
        let train_gen = GenerationConfig {
            n_trial: n,
            count: train_count(&cfg.train),
            seed: subseed(seed, &[3, n]),
            ..base.clone()
        };
        let li_nn = store.obtain(&format!("mixed-li-nn-{n}"), spec, || {
            fit_model(
                &generate_dataset(&train_gen)?,
                spec,
                &cfg.train,
                subseed(seed, &[4, n, cfg.train.seed]),
            )
        })?;
        let out = li_nn.denoise_batch(&preprocessed(&test_li))?;
        rows.extend(rows_for(
            &setting,
            "LI-NN",
            &test_li,
            &out,
            trial_param,
            false,
        )?);
        if let Some(test_mle) = &test_mle {
            let mle_nn = store.obtain(&format!("mixed-mle-nn-{n}"), spec, || {
                fit_model(
                    &generate_dataset(&mle_of(&train_gen))?,
                    spec,
                    &cfg.train,
                    subseed(seed, &[5, n, cfg.train.seed]),
                )
            })?;
            let out = mle_nn.denoise_batch(&preprocessed(test_mle))?;
            rows.extend(rows_for(
                &setting,
                "MLE-NN",
                test_mle,
                &out,
                trial_param,
                false,
            )?);
        }
    }
    Ok(ExperimentResult::new("mixed", rows, BTreeMap::new()))
}

fn oat_generation(
    qubits: usize,
    basis: BasisKind,
    noise: NoiseMode,
    count: usize,
) -> GenerationConfig {
    GenerationConfig {
        ensemble: Ensemble::Oat,
        d: 1 << qubits,
        basis,
        noise,
        count,
        ..GenerationConfig::default()
    }
}

fn mean_root_fidelity(records: &[DatasetRecord]) -> Result<f64> {
    let f: Vec<f64> = records
        .par_iter()
        .map(|r| crate::metrics::root_fidelity(&r.preprocessed, &r.target))
        .collect::<Result<_>>()?;
    Ok(f.iter().sum::<f64>() / f.len() as f64)
}

/// Shot count whose noise alone brings mean LI fidelity on `gen`'s states to
/// `target`, found by bisection on log10 N. Returns (N, achieved fidelity).
pub fn calibrate_shots(gen: &GenerationConfig, target: f64, range: [f64; 2]) -> Result<(u64, f64)> {
    let eval = |x: f64| -> Result<(u64, f64)> {
        let n = 10f64.powf(x).round().max(1.0) as u64;
        let g = GenerationConfig {
            n_trial: n,
            ..gen.clone()
        };
        Ok((n, mean_root_fidelity(&generate_dataset(&g)?)?))
    };
    let (mut lo, mut hi) = (range[0], range[1]);
    let (_, f_lo) = eval(lo)?;
    let (_, f_hi) = eval(hi)?;
    if !(f_lo <= target && target <= f_hi) {
        return Err(Error::InvalidArgument(format!(
            "fidelity {target} is not bracketed by [{f_lo:.4}, {f_hi:.4}] over log10 N in {range:?}"
        )));
    }
    let mut best = (0, f64::NAN);
    for _ in 0..30 {
        let mid = 0.5 * (lo + hi);
        let (n, f) = eval(mid)?;
        best = (n, f);
        if f < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if (f - target).abs() < 1e-3 {
            break;
        }
    }
    Ok(best)
}

/// Calibrated Pauli-basis OAT reconstructions under depolarization and a fixed
/// calibration bias, denoised by a network trained on shot noise alone.
pub fn run_oat_study(cfg: &OatConfig, seed: u64, store: &ModelStore) -> Result<ExperimentResult> {
    let d = 1usize << cfg.qubits;
    let base = GenerationConfig {
        projection: cfg.projection,
        ..oat_generation(
            cfg.qubits,
            BasisKind::Pauli,
            NoiseMode::Indirect,
            cfg.n_times,
        )
    };
    let calibration = GenerationConfig {
        seed: subseed(seed, &[10]),
        ..base.clone()
    };
    let (shots, cal_fidelity) =
        calibrate_shots(&calibration, cfg.target_fidelity, cfg.log10_shots_range)?;
    log::info!("calibrated shot count {shots} gives LI fidelity {cal_fidelity:.4}");
    if (cal_fidelity - cfg.target_fidelity).abs() > cfg.fidelity_tolerance {
        return Err(Error::InvalidArgument(format!(
            "calibration reached fidelity {cal_fidelity:.4}, outside {} ± {}",
            cfg.target_fidelity, cfg.fidelity_tolerance
        )));
    }
    let spec = transformer_spec(d, &cfg.model)?;
    let model = store.obtain("oat-transformer", spec, || {
        let gen = GenerationConfig {
            ensemble: Ensemble::Haar,
            n_trial: shots,
            count: train_count(&cfg.train),
            seed: subseed(seed, &[11]),
            ..base.clone()
        };
        fit_model(
            &generate_dataset(&gen)?,
            spec,
            &cfg.train,
            subseed(seed, &[12, cfg.train.seed]),
        )
    })?;
    let mut rows = Vec::new();
    for r in 0..cfg.realizations {
        let setting = format!("realization={r}");
        let gen = GenerationConfig {
            n_trial: shots,
            depolarization: cfg.depolarization,
            bias_std: cfg.bias_std,
            bias_seed: subseed(seed, &[13, r as u64]),
            seed: subseed(seed, &[14, r as u64]),
            ..base.clone()
        };
        let test = generate_dataset(&gen)?;
        let targets: Vec<_> = test.iter().map(|t| t.target.clone()).collect();
        rows.extend(rows_for(
            &setting, "target", &test, &targets, time_param, true,
        )?);
        rows.extend(rows_for(
            &setting,
            "LI",
            &test,
            &preprocessed(&test),
            time_param,
            true,
        )?);
        let out = model.denoise_batch(&preprocessed(&test))?;
        rows.extend(rows_for(&setting, "NN", &test, &out, time_param, true)?);
    }
    let extra = BTreeMap::from([
        ("calibrated_shots".to_string(), shots as f64),
        ("calibration_root_fidelity".to_string(), cal_fidelity),
        ("depolarization".to_string(), cfg.depolarization),
        ("bias_std".to_string(), cfg.bias_std),
    ]);
    Ok(ExperimentResult::new("oat", rows, extra))
}

/// LI (and optionally network) fidelities on OAT and Haar states under
/// SIC-POVM multinomial noise.
pub fn run_sampling_noise_table(
    cfg: &SamplingConfig,
    seed: u64,
    store: &ModelStore,
) -> Result<ExperimentResult> {
    let d = 1usize << cfg.qubits;
    let base = GenerationConfig {
        projection: cfg.projection,
        ..oat_generation(
            cfg.qubits,
            BasisKind::SicPovm,
            NoiseMode::Direct,
            cfg.n_times,
        )
    };
    let spec = transformer_spec(d, &cfg.model)?;
    let mut rows = Vec::new();
    for &n in &cfg.n_trials {
        let setting = trial_setting(n);
        log::info!("sampling table at {setting}");
        let oat = generate_dataset(&GenerationConfig {
            n_trial: n,
            seed: subseed(seed, &[20, n]),
            ..base.clone()
        })?;
        rows.extend(rows_for(
            &setting,
            "LI-OAT",
            &oat,
            &preprocessed(&oat),
            time_param,
            false,
        )?);
        if !cfg.with_nn {
            continue;
        }
        let haar = GenerationConfig {
            ensemble: Ensemble::Haar,
            n_trial: n,
            ..base.clone()
        };
        let model = store.obtain(&format!("table-haar-{n}"), spec, || {
            let gen = GenerationConfig {
                count: train_count(&cfg.train),
                seed: subseed(seed, &[21, n]),
                ..haar.clone()
            };
            fit_model(
                &generate_dataset(&gen)?,
                spec,
                &cfg.train,
                subseed(seed, &[22, n, cfg.train.seed]),
            )
        })?;
        let out = model.denoise_batch(&preprocessed(&oat))?;
        rows.extend(rows_for(&setting, "NN-OAT", &oat, &out, time_param, false)?);
        let test = generate_dataset(&GenerationConfig {
            count: cfg.n_haar_test,
            seed: subseed(seed, &[23, n]),
            ..haar
        })?;
        rows.extend(rows_for(
            &setting,
            "LI-Haar",
            &test,
            &preprocessed(&test),
            trial_param,
            false,
        )?);
        let out = model.denoise_batch(&preprocessed(&test))?;
        rows.extend(rows_for(
            &setting,
            "NN-Haar",
            &test,
            &out,
            trial_param,
            false,
        )?);
    }
    Ok(ExperimentResult::new("sampling", rows, BTreeMap::new()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PstarRow {
    pub n_trial: u64,
    pub p_star: f64,
    pub d_star_sq: f64,
    /// Argmin and minimum of the mean D² scanned on the p grid.
    pub grid_p: f64,
    pub grid_min: f64,
    pub grid_step: f64,
    pub d0_sq: f64,
    pub d1_sq: f64,
    pub d01_sq: f64,
    /// Largest gap between the parabola and the scanned mean D² on the grid.
    pub parabola_max_dev: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PstarCurvePoint {
    pub n_trial: u64,
    pub p: f64,
    pub parabola: f64,
    pub scanned: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PstarTable {
    pub rows: Vec<PstarRow>,
    pub curves: Vec<PstarCurvePoint>,
    /// Whether p* is non-decreasing in the trial count.
    pub monotone: bool,
}

impl PstarTable {
    /// Writes `pstar.csv` and `pstar_curves.csv`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        write_csv(&dir.join("pstar.csv"), &self.rows)?;
        write_csv(&dir.join("pstar_curves.csv"), &self.curves)
    }
}

/// Mean D²(pρ + (1-p)I/d, τ) over the pairs, computed state by state.
pub fn scan_mean_distance(mle: &[DensityMatrix], targets: &[DensityMatrix], p: f64) -> f64 {
    let d = mle[0].dim();
    let mixed = ComplexMatrix::identity(d).scale((1.0 - p) / d as f64);
    let total: f64 = mle
        .iter()
        .zip(targets)
        .map(|(m, t)| hs_distance_sq_matrices(&(&m.matrix().scale(p) + &mixed), t.matrix()))
        .sum();
    total / mle.len() as f64
}

/// Closed-form optimal depolarization of MLE states against a p-grid scan.
pub fn run_pstar_analysis(cfg: &PstarConfig, seed: u64) -> Result<PstarTable> {
    let base = GenerationConfig {
        ensemble: Ensemble::Hs,
        d: cfg.d,
        basis: BasisKind::SqrtPovm,
        basis_seed: subseed(seed, &[30]),
        noise: NoiseMode::Direct,
        preprocess: Preprocess::Mle,
        mle_tol: cfg.mle_tol,
        mle_max_iter: cfg.mle_max_iter,
        count: cfg.n_states,
        ..GenerationConfig::default()
    };
    let step = 1.0 / (cfg.grid_points - 1) as f64;
    let mut rows = Vec::new();
    let mut curves = Vec::new();
    for &n in &cfg.n_trials {
        log::info!("p* analysis at n_trial={n}");
        let data = generate_dataset(&GenerationConfig {
            n_trial: n,
            seed: subseed(seed, &[31, n]),
            ..base.clone()
        })?;
        let mle = preprocessed(&data);
        let targets: Vec<_> = data.iter().map(|r| r.target.clone()).collect();
        let tri = DepolarizationTriangle::new(&mle, &targets)?;
        let (p_star, d_star_sq) = tri.optimum();
        let scanned: Vec<(f64, f64)> = (0..cfg.grid_points)
            .into_par_iter()
            .map(|k| {
                let p = k as f64 * step;
                (p, scan_mean_distance(&mle, &targets, p))
            })
            .collect();
        let (grid_p, grid_min) =
            scanned
                .iter()
                .copied()
                .fold((f64::NAN, f64::INFINITY), |best, c| {
                    if c.1 < best.1 {
                        c
                    } else {
                        best
                    }
                });
        let parabola_max_dev = scanned
            .iter()
            .map(|&(p, v)| (tri.parabola(p) - v).abs())
            .fold(0.0, f64::max);
        curves.extend(scanned.iter().map(|&(p, v)| PstarCurvePoint {
            n_trial: n,
            p,
            parabola: tri.parabola(p),
            scanned: v,
        }));
        rows.push(PstarRow {
            n_trial: n,
            p_star,
            d_star_sq,
            grid_p,
            grid_min,
            grid_step: step,
            d0_sq: tri.d0_sq,
            d1_sq: tri.d1_sq,
            d01_sq: tri.d01_sq,
            parabola_max_dev,
        });
    }
    let mut sorted: Vec<_> = rows.iter().map(|r| (r.n_trial, r.p_star)).collect();
    sorted.sort_by_key(|r| r.0);
    let monotone = sorted.windows(2).all(|w| w[1].1 >= w[0].1);
    if !monotone {
        log::warn!("p* is not monotone in the trial count: {sorted:?}");
    }
    Ok(PstarTable {
        rows,
        curves,
        monotone,
    })
}

/// Transformer against Cnn2 and Cnn4 baselines of the same parameter budget
/// on Haar states with SIC-POVM shot noise.
pub fn run_architecture_benchmark(
    cfg: &ArchConfig,
    seed: u64,
    store: &ModelStore,
) -> Result<ExperimentResult> {
    let d = 1usize << cfg.qubits;
    let base = GenerationConfig {
        ensemble: Ensemble::Haar,
        d,
        basis: BasisKind::SicPovm,
        noise: NoiseMode::Direct,
        n_trial: cfg.n_trial,
        projection: cfg.projection,
        ..GenerationConfig::default()
    };
    let train_set = generate_dataset(&GenerationConfig {
        count: train_count(&cfg.train),
        seed: subseed(seed, &[40]),
        ..base.clone()
    })?;
    let test = generate_dataset(&GenerationConfig {
        count: cfg.n_test,
        seed: subseed(seed, &[41]),
        ..base
    })?;
    let setting = trial_setting(cfg.n_trial);
    let inputs = preprocessed(&test);
    let mut rows = rows_for(&setting, "LI", &test, &inputs, trial_param, false)?;
    let tspec = transformer_spec(d, &cfg.model)?;
    let budget = tspec.param_count();
    let mut extra = BTreeMap::from([("params_transformer".to_string(), budget as f64)]);
    let mut specs = vec![(tspec, "Transformer")];
    for (arch, label) in [(Architecture::Cnn2, "Cnn2"), (Architecture::Cnn4, "Cnn4")] {
        let spec = build_cnn_baseline(arch, d, budget, &cfg.model)?;
        extra.insert(format!("params_{}", arch.name()), spec.param_count() as f64);
        extra.insert(
            format!("channels_{}", arch.name()),
            spec.cnn_channels as f64,
        );
        specs.push((spec, label));
    }
    for (k, (spec, label)) in specs.into_iter().enumerate() {
        log::info!("architecture benchmark: training {label}");
        let model = store.obtain(&format!("arch-{}", spec.arch.name()), spec, || {
            fit_model(
                &train_set,
                spec,
                &cfg.train,
                subseed(seed, &[42, k as u64, cfg.train.seed]),
            )
        })?;
        let out = model.denoise_batch(&inputs)?;
        rows.extend(rows_for(&setting, label, &test, &out, trial_param, false)?);
    }
    Ok(ExperimentResult::new("architecture", rows, extra))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::denoiser::ModelHyper;

    fn tiny_train() -> TrainConfig {
        TrainConfig {
            n_train: 40,
            n_val: 10,
            batch: 10,
            epochs: 2,
            ..TrainConfig::default()
        }
    }

    fn tiny_model() -> ModelHyper {
        ModelHyper {
            kernels: 2,
            heads: 1,
            ..ModelHyper::default()
        }
    }

    #[test]
    fn subseeds_differ_by_path() {
        assert_ne!(subseed(1, &[2, 3]), subseed(1, &[3, 2]));
        assert_eq!(subseed(1, &[2, 3]), subseed(1, &[2, 3]));
    }

    #[test]
    fn mixed_small_run_is_complete_and_reproducible() {
        let cfg = MixedConfig {
            d: 3,
            n_trials: vec![100, 1000],
            nn_trials: vec![100],
            n_test: 6,
            with_mle: true,
            projection: crate::estimators::Projection::Smolin,
            mle_tol: 1e-8,
            mle_max_iter: 500,
            train: tiny_train(),
            model: tiny_model(),
        };
        let a = run_mixed_benchmark(&cfg, 9, &ModelStore::inline()).unwrap();
        let b = run_mixed_benchmark(&cfg, 9, &ModelStore::inline()).unwrap();
        assert_eq!(a, b);
        for (s, m) in [
            ("n_trial=100", "LI-NN"),
            ("n_trial=100", "MLE-NN"),
            ("n_trial=1000", "MLE"),
        ] {
            assert_eq!(a.get(s, m).unwrap().count, 6);
        }
        assert!(a.get("n_trial=1000", "LI-NN").is_none());
    }

    #[test]
    fn missing_models_reported() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = MixedConfig {
            d: 2,
            n_trials: vec![100],
            nn_trials: vec![100],
            n_test: 3,
            with_mle: false,
            projection: crate::estimators::Projection::Smolin,
            mle_tol: 1e-8,
            mle_max_iter: 100,
            train: tiny_train(),
            model: tiny_model(),
        };
        let err = run_mixed_benchmark(&cfg, 1, &ModelStore::loading_from(dir.path()));
        assert!(matches!(err, Err(Error::MissingModel(_))), "{err:?}");
    }

    #[test]
    fn saved_models_reload() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = SamplingConfig {
            qubits: 1,
            n_times: 4,
            n_trials: vec![200],
            with_nn: true,
            n_haar_test: 3,
            projection: crate::estimators::Projection::Clip,
            train: tiny_train(),
            model: tiny_model(),
        };
        let a = run_sampling_noise_table(&cfg, 2, &ModelStore::saving_to(dir.path())).unwrap();
        let b = run_sampling_noise_table(&cfg, 2, &ModelStore::loading_from(dir.path())).unwrap();
        assert_eq!(a, b);
        assert!(dir.path().join("table-haar-200.toml").exists());
    }

    #[test]
    fn pstar_matches_scan() {
        let cfg = PstarConfig {
            d: 3,
            n_states: 20,
            n_trials: vec![100, 10_000],
            grid_points: 201,
            mle_tol: 1e-9,
            mle_max_iter: 2000,
        };
        let t = run_pstar_analysis(&cfg, 4).unwrap();
        for r in &t.rows {
            assert!((r.p_star - r.grid_p).abs() <= r.grid_step, "{r:?}");
            assert!(r.parabola_max_dev < 1e-12);
            assert!(r.d_star_sq <= r.d0_sq.min(r.d1_sq) + 1e-15);
        }
        assert_eq!(t.curves.len(), 2 * 201);
    }
}
