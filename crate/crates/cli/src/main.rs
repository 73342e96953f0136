use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use tomonet::denoiser::checkpoint::{self, HistorySummary, Manifest};
use tomonet::denoiser::{build_cnn_baseline, Architecture, ModelSpec};
use tomonet::pipeline::experiments::fit_model;
use tomonet::pipeline::results::{ExperimentResult, ResultRow};
use tomonet::pipeline::{
    generate_dataset, load_dataset, run_architecture_benchmark, run_mixed_benchmark, run_oat_study,
    run_pstar_analysis, run_sampling_noise_table, save_dataset, Config, ModelStore, Profile,
};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ProfileArg {
    Desk,
    Paper,
}

impl From<ProfileArg> for Profile {
    fn from(p: ProfileArg) -> Self {
        match p {
            ProfileArg::Desk => Profile::Desk,
            ProfileArg::Paper => Profile::Paper,
        }
    }
}

/// Neural-network enhanced quantum state tomography experiments.
#[derive(Debug, Parser)]
#[command(name = "tomonet", version)]
struct Cli {
    /// TOML config laid over the profile defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Default sizes: `desk` for one core, `paper` for full scale.
    #[arg(long, global = true, value_enum)]
    profile: Option<ProfileArg>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate the dataset described by [generation].
    GenData {
        #[arg(long, default_value = "dataset")]
        name: String,
    },
    /// Train a network ([model], [train]) on a saved dataset.
    Train {
        /// Dataset path without extension.
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value = "model")]
        name: String,
    },
    /// Compare preprocessed and denoised states of a dataset with its targets.
    Eval {
        #[arg(long)]
        data: PathBuf,
        /// Checkpoint file (.bin).
        #[arg(long)]
        model: PathBuf,
    },
    /// LI / MLE / LI-NN / MLE-NN on the Hilbert-Schmidt ensemble.
    BenchmarkMixed {
        /// Load trained models from this directory instead of training.
        #[arg(long)]
        models: Option<PathBuf>,
    },
    /// Out-of-distribution study on one-axis-twisted states.
    BenchmarkOat {
        #[arg(long)]
        models: Option<PathBuf>,
    },
    /// Fidelity table under SIC-POVM shot noise.
    TableSampling {
        #[arg(long)]
        models: Option<PathBuf>,
    },
    /// Optimal depolarization of MLE states.
    Pstar,
    /// Transformer against parameter-matched CNN baselines.
    BenchmarkArch {
        #[arg(long)]
        models: Option<PathBuf>,
    },
    /// Print the resolved configuration.
    ShowConfig,
}

fn load_config(cli: &Cli) -> Result<Config> {
    let profile = cli.profile.map(Profile::from);
    let mut cfg = match &cli.config {
        Some(path) => Config::load(path, profile)
            .with_context(|| format!("reading config {}", path.display()))?,
        None => Config::for_profile(profile.unwrap_or_default()),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn store(models: &Option<PathBuf>, out: &Path) -> ModelStore {
    match models {
        Some(dir) => ModelStore::loading_from(dir),
        None => ModelStore::saving_to(&out.join("models")),
    }
}

fn report(result: &ExperimentResult, out: &Path) -> Result<()> {
    result.write(out)?;
    for a in &result.aggregates {
        println!(
            "{:<16} {:<12} n={:<5} fidelity {:.4} ± {:.4}  D²_HS {:.4e} ± {:.2e}",
            a.setting,
            a.method,
            a.count,
            a.mean_root_fidelity,
            a.std_root_fidelity,
            a.mean_hs_distance_sq,
            a.std_hs_distance_sq
        );
    }
    for (k, v) in &result.extra {
        println!("{k} = {v}");
    }
    println!("wrote {}/{}.csv", out.display(), result.name);
    Ok(())
}

fn model_spec(cfg: &Config) -> Result<ModelSpec> {
    let d = cfg.generation.d;
    let transformer = ModelSpec::transformer(d, &cfg.model)?;
    Ok(match cfg.train.architecture {
        Architecture::Transformer => transformer,
        arch => build_cnn_baseline(arch, d, transformer.param_count(), &cfg.model)?,
    })
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = load_config(cli)?;
    if let Command::ShowConfig = cli.command {
        print!("{}", cfg.to_toml()?);
        return Ok(());
    }
    let out = &cli.out;
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    std::fs::write(out.join("config.toml"), cfg.to_toml()?)?;
    let seed = cfg.seed;
    match &cli.command {
        Command::GenData { name } => {
            let records = generate_dataset(&cfg.generation)?;
            let path = out.join(name);
            save_dataset(&records, &path)?;
            println!(
                "wrote {} records to {}.{{toml,bin}}",
                records.len(),
                path.display()
            );
        }
        Command::Train { data, name } => {
            let records = load_dataset(data)?;
            let spec = model_spec(&cfg)?;
            if records.first().map(|r| r.target.dim()) != Some(spec.d) {
                bail!(
                    "dataset dimension does not match [generation].d = {}",
                    spec.d
                );
            }
            let (model, history, train_cfg) =
                fit_model(&records, spec, &cfg.train, cfg.train.seed)?;
            let mut manifest = Manifest::for_model(&model);
            manifest.train = Some(train_cfg);
            manifest.history = Some(HistorySummary::from(&history));
            manifest
                .metrics
                .insert("best_val_loss".into(), history.best_val_loss);
            let path = out.join("models").join(format!("{name}.bin"));
            checkpoint::save(&model, &path, &manifest)?;
            println!(
                "best validation loss {:.4e} at epoch {}; wrote {}",
                history.best_val_loss,
                history.best_epoch,
                path.display()
            );
        }
        Command::Eval { data, model } => {
            let records = load_dataset(data)?;
            if records.is_empty() {
                bail!("dataset {} is empty", data.display());
            }
            let model = checkpoint::load(model)?;
            let inputs: Vec<_> = records.iter().map(|r| r.preprocessed.clone()).collect();
            let outputs = model.denoise_batch(&inputs)?;
            let label = records[0].meta.generation.preprocess.name();
            let mut rows = Vec::with_capacity(2 * records.len());
            for (method, states) in [
                (label.to_string(), &inputs),
                (format!("{label}-NN"), &outputs),
            ] {
                for (i, (r, s)) in records.iter().zip(states.iter()).enumerate() {
                    let param = r.meta.oat_time.unwrap_or(r.meta.generation.n_trial as f64);
                    rows.push(ResultRow::evaluate(
                        "eval", param, i, &method, s, &r.target, false,
                    )?);
                }
            }
            report(
                &ExperimentResult::new("eval", rows, Default::default()),
                out,
            )?;
        }
        Command::BenchmarkMixed { models } => {
            report(
                &run_mixed_benchmark(&cfg.mixed, seed, &store(models, out))?,
                out,
            )?;
        }
        Command::BenchmarkOat { models } => {
            report(&run_oat_study(&cfg.oat, seed, &store(models, out))?, out)?;
        }
        Command::TableSampling { models } => {
            report(
                &run_sampling_noise_table(&cfg.sampling, seed, &store(models, out))?,
                out,
            )?;
        }
        Command::Pstar => {
            let table = run_pstar_analysis(&cfg.pstar, seed)?;
            table.write(out)?;
            for r in &table.rows {
                println!(
                    "n_trial={:<8} p*={:.4} D*²={:.5e}  scan argmin {:.4} min {:.5e}",
                    r.n_trial, r.p_star, r.d_star_sq, r.grid_p, r.grid_min
                );
            }
            if !table.monotone {
                println!("note: p* is not monotone in the trial count");
            }
        }
        Command::BenchmarkArch { models } => {
            report(
                &run_architecture_benchmark(&cfg.arch, seed, &store(models, out))?,
                out,
            )?;
        }
        Command::ShowConfig => unreachable!(),
    }
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    run(&cli)
}
