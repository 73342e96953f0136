//! Experiment configuration.
//!
//! A config file is TOML laid over the defaults of a profile: any key may be
//! omitted, unknown keys are rejected. `desk` is sized for a single CPU core;
//! `paper` uses the full-scale counts.

use serde::{Deserialize, Serialize};

use super::dataset::GenerationConfig;
use crate::denoiser::{ModelHyper, TrainConfig};
use crate::error::{Error, Result};
use crate::estimators::Projection;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Profile {
    #[default]
    Desk,
    Paper,
}

impl std::str::FromStr for Profile {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Profile::Desk),
            "paper" => Ok(Profile::Paper),
            other => Err(Error::Config(format!("unknown profile `{other}`"))),
        }
    }
}

/// HS-ensemble benchmark of LI, MLE and their denoised versions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixedConfig {
    pub d: usize,
    pub n_trials: Vec<u64>,
    /// Trial counts at which LI-NN / MLE-NN are trained and evaluated.
    pub nn_trials: Vec<u64>,
    pub n_test: usize,
    pub with_mle: bool,
    pub projection: Projection,
    pub mle_tol: f64,
    pub mle_max_iter: usize,
    pub train: TrainConfig,
    pub model: ModelHyper,
}

/// Out-of-distribution study on one-axis-twisted states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OatConfig {
    pub qubits: usize,
    pub n_times: usize,
    pub depolarization: f64,
    pub bias_std: f64,
    pub realizations: usize,
    /// Mean LI fidelity the shot count is calibrated to, before extra noise.
    pub target_fidelity: f64,
    pub fidelity_tolerance: f64,
    /// Search interval for log10 of the calibrated shot count.
    pub log10_shots_range: [f64; 2],
    pub projection: Projection,
    pub train: TrainConfig,
    pub model: ModelHyper,
}

/// Fidelity table for SIC-POVM shot noise on OAT and Haar states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingConfig {
    pub qubits: usize,
    pub n_times: usize,
    pub n_trials: Vec<u64>,
    pub with_nn: bool,
    pub n_haar_test: usize,
    pub projection: Projection,
    pub train: TrainConfig,
    pub model: ModelHyper,
}

/// Closed-form depolarization of MLE states against a grid scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PstarConfig {
    pub d: usize,
    pub n_states: usize,
    pub n_trials: Vec<u64>,
    pub grid_points: usize,
    pub mle_tol: f64,
    pub mle_max_iter: usize,
}

/// Transformer against parameter-matched convolutional baselines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchConfig {
    pub qubits: usize,
    pub n_trial: u64,
    pub n_test: usize,
    pub projection: Projection,
    pub train: TrainConfig,
    pub model: ModelHyper,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub profile: Profile,
    pub seed: u64,
    /// Used by the `gen-data`, `train` and `eval` commands.
    pub generation: GenerationConfig,
    pub train: TrainConfig,
    pub model: ModelHyper,
    pub mixed: MixedConfig,
    pub oat: OatConfig,
    pub sampling: SamplingConfig,
    pub pstar: PstarConfig,
    pub arch: ArchConfig,
}

const TRIAL_GRID: [u64; 4] = [1_000, 10_000, 100_000, 1_000_000];

fn desk_train(n_train: usize, n_val: usize, epochs: usize) -> TrainConfig {
    TrainConfig {
        n_train,
        n_val,
        batch: 100,
        epochs,
        learning_rate: 1e-3,
        ..TrainConfig::default()
    }
}

fn desk_model(head_dim: Option<usize>) -> ModelHyper {
    ModelHyper {
        kernels: 8,
        heads: 2,
        head_dim,
        ..ModelHyper::default()
    }
}

fn full_train(n_train: usize) -> TrainConfig {
    TrainConfig {
        n_train,
        ..TrainConfig::default()
    }
}

impl Config {
    pub fn desk() -> Self {
        Self {
            profile: Profile::Desk,
            seed: 0,
            generation: GenerationConfig {
                count: 2300,
                ..GenerationConfig::default()
            },
            train: desk_train(2000, 300, 150),
            model: desk_model(None),
            mixed: MixedConfig {
                d: 9,
                n_trials: TRIAL_GRID.to_vec(),
                nn_trials: TRIAL_GRID.to_vec(),
                n_test: 100,
                with_mle: true,
                projection: Projection::Smolin,
                mle_tol: 1e-10,
                mle_max_iter: 5000,
                train: desk_train(2000, 300, 150),
                model: desk_model(None),
            },
            oat: OatConfig {
                qubits: 4,
                n_times: 100,
                depolarization: 0.3,
                bias_std: 1e-4,
                realizations: 2,
                target_fidelity: 0.85,
                fidelity_tolerance: 0.02,
                log10_shots_range: [1.0, 9.0],
                projection: Projection::Clip,
                train: desk_train(4000, 500, 150),
                model: desk_model(Some(16)),
            },
            sampling: SamplingConfig {
                qubits: 4,
                n_times: 100,
                n_trials: TRIAL_GRID.iter().rev().copied().collect(),
                with_nn: true,
                n_haar_test: 100,
                projection: Projection::Clip,
                train: desk_train(2000, 300, 60),
                model: desk_model(Some(16)),
            },
            pstar: PstarConfig {
                d: 9,
                n_states: 200,
                n_trials: TRIAL_GRID.to_vec(),
                grid_points: 1000,
                mle_tol: 1e-10,
                mle_max_iter: 5000,
            },
            arch: ArchConfig {
                qubits: 4,
                n_trial: 1000,
                n_test: 100,
                projection: Projection::Clip,
                train: desk_train(1500, 300, 40),
                model: desk_model(Some(16)),
            },
        }
    }

    pub fn paper() -> Self {
        let desk = Self::desk();
        Self {
            profile: Profile::Paper,
            generation: GenerationConfig {
                count: 6500,
                ..desk.generation
            },
            train: full_train(5000),
            model: ModelHyper::default(),
            mixed: MixedConfig {
                n_test: 1000,
                train: full_train(5000),
                model: ModelHyper::default(),
                ..desk.mixed
            },
            oat: OatConfig {
                train: full_train(10_000),
                model: ModelHyper::default(),
                ..desk.oat
            },
            sampling: SamplingConfig {
                n_haar_test: 1000,
                train: full_train(10_000),
                model: ModelHyper::default(),
                ..desk.sampling
            },
            pstar: PstarConfig {
                n_states: 1000,
                ..desk.pstar
            },
            arch: ArchConfig {
                n_test: 1000,
                train: full_train(10_000),
                model: ModelHyper::default(),
                ..desk.arch
            },
            ..desk
        }
    }

    pub fn for_profile(profile: Profile) -> Self {
        match profile {
            Profile::Desk => Self::desk(),
            Profile::Paper => Self::paper(),
        }
    }

    /// Parses `text` over the defaults of `profile`, or of the file's own
    /// `profile` key when `profile` is `None`.
    pub fn parse(text: &str, profile: Option<Profile>) -> Result<Self> {
        let user: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        let chosen = match profile {
            Some(p) => p,
            None => match user.get("profile") {
                Some(toml::Value::String(s)) => s.parse()?,
                Some(_) => return Err(Error::Config("`profile` must be a string".into())),
                None => Profile::Desk,
            },
        };
        let mut base = toml::Table::try_from(Self::for_profile(chosen))
            .map_err(|e| Error::Config(e.to_string()))?;
        merge(&mut base, user);
        base.insert(
            "profile".into(),
            toml::Value::String(profile_name(chosen).into()),
        );
        let cfg: Self = toml::Value::Table(base)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path, profile: Option<Profile>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?, profile)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.generation.validate()?;
        for t in [
            &self.train,
            &self.mixed.train,
            &self.oat.train,
            &self.sampling.train,
            &self.arch.train,
        ] {
            t.validate()?;
        }
        let nonempty = |name: &str, v: &[u64]| {
            if v.is_empty() || v.contains(&0) {
                Err(Error::Config(format!(
                    "{name} must list positive trial counts"
                )))
            } else {
                Ok(())
            }
        };
        nonempty("mixed.n_trials", &self.mixed.n_trials)?;
        nonempty("sampling.n_trials", &self.sampling.n_trials)?;
        nonempty("pstar.n_trials", &self.pstar.n_trials)?;
        if let Some(n) = self
            .mixed
            .nn_trials
            .iter()
            .find(|n| !self.mixed.n_trials.contains(n))
        {
            return Err(Error::Config(format!(
                "mixed.nn_trials entry {n} is not in mixed.n_trials"
            )));
        }
        if self.mixed.n_test == 0 || self.pstar.n_states == 0 || self.arch.n_test == 0 {
            return Err(Error::Config("test state counts must be at least 1".into()));
        }
        if self.oat.n_times < 2 || self.sampling.n_times < 2 {
            return Err(Error::Config("n_times must be at least 2".into()));
        }
        if self.pstar.grid_points < 2 {
            return Err(Error::Config("pstar.grid_points must be at least 2".into()));
        }
        if !(0.0..=1.0).contains(&self.oat.depolarization) {
            return Err(Error::InvalidProbability(self.oat.depolarization));
        }
        let [lo, hi] = self.oat.log10_shots_range;
        if !(lo >= 0.0 && hi > lo && hi <= 15.0) {
            return Err(Error::Config(
                "oat.log10_shots_range must satisfy 0 <= lo < hi <= 15".into(),
            ));
        }
        if !(self.oat.fidelity_tolerance > 0.0 && self.oat.fidelity_tolerance < 1.0) {
            return Err(Error::Config(
                "oat.fidelity_tolerance must lie in (0, 1)".into(),
            ));
        }
        if !(self.oat.bias_std >= 0.0 && self.oat.bias_std.is_finite()) {
            return Err(Error::Config(
                "oat.bias_std must be finite and non-negative".into(),
            ));
        }
        if !(self.oat.target_fidelity > 0.0 && self.oat.target_fidelity < 1.0) {
            return Err(Error::Config(
                "oat.target_fidelity must lie in (0, 1)".into(),
            ));
        }
        for q in [self.oat.qubits, self.sampling.qubits, self.arch.qubits] {
            if !(1..=6).contains(&q) {
                return Err(Error::Config(format!("{q} qubits is outside 1..=6")));
            }
        }
        Ok(())
    }
}

fn profile_name(p: Profile) -> &'static str {
    match p {
        Profile::Desk => "desk",
        Profile::Paper => "paper",
    }
}

/// Recursively overlays `over` onto `base`; non-table values replace.
fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}
