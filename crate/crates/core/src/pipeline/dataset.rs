//! Simulated tomography datasets: generation, regeneration and file I/O.
//!
//! A dataset file is a pair `NAME.toml` (manifest) + `NAME.bin` (records as
//! little-endian f64, complex entries interleaved re, im in row-major order).

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::denoiser::{pack_cholesky, CholeskyVector};
use crate::error::{Error, Result};
use crate::estimators::{best_effort, linear_inversion_with, mle_estimate, Projection};
use crate::linalg::{ComplexMatrix, CHOLESKY_REPAIR};
use crate::measurement::{
    apply_calibration_bias, born_values, draw_calibration_bias, pauli_basis, sample_direct,
    sample_indirect, sic_povm, sqrt_povm, BasisKind, FrequencyKind, FrequencyVector,
    MeasurementBasis,
};
use crate::rng::SeedStream;
use crate::states::{depolarize, haar_random_pure, hs_random_state, oat_state, DensityMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ensemble {
    /// Hilbert-Schmidt random mixed states.
    Hs,
    /// Haar random pure states.
    Haar,
    /// One-axis-twisted states at evenly spaced times in [0, π].
    Oat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseMode {
    /// Multinomial counts over the POVM outcomes.
    Direct,
    /// Gaussian surrogate with std 1/(2√N) on every non-identity value.
    Indirect,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preprocess {
    Li,
    Mle,
}

impl Preprocess {
    pub fn name(self) -> &'static str {
        match self {
            Preprocess::Li => "LI",
            Preprocess::Mle => "MLE",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GenerationConfig {
    pub ensemble: Ensemble,
    pub d: usize,
    pub basis: BasisKind,
    /// Seeds the random frame of the sqrt-POVM; ignored by the fixed bases.
    pub basis_seed: u64,
    pub n_trial: u64,
    pub noise: NoiseMode,
    /// Strength p of (1-p)ρ + pI/d applied before measuring; 0 disables.
    pub depolarization: f64,
    /// Std of the fixed per-outcome calibration bias; 0 disables.
    pub bias_std: f64,
    pub bias_seed: u64,
    pub preprocess: Preprocess,
    pub projection: Projection,
    pub mle_tol: f64,
    pub mle_max_iter: usize,
    pub count: usize,
    pub seed: u64,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        Self {
            ensemble: Ensemble::Hs,
            d: 9,
            basis: BasisKind::SqrtPovm,
            basis_seed: 0,
            n_trial: 1000,
            noise: NoiseMode::Direct,
            depolarization: 0.0,
            bias_std: 0.0,
            bias_seed: 0,
            preprocess: Preprocess::Li,
            projection: Projection::Smolin,
            mle_tol: 1e-10,
            mle_max_iter: 5000,
            count: 1000,
            seed: 0,
        }
    }
}

fn qubits_of(d: usize) -> Result<usize> {
    if d >= 2 && d.is_power_of_two() {
        Ok(d.trailing_zeros() as usize)
    } else {
        Err(Error::Config(format!(
            "dimension {d} is not a power of two"
        )))
    }
}

impl GenerationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d < 2 {
            return Err(Error::Config("d must be at least 2".into()));
        }
        if matches!(self.basis, BasisKind::SicPovm | BasisKind::Pauli)
            || self.ensemble == Ensemble::Oat
        {
            qubits_of(self.d)?;
        }
        if self.n_trial == 0 {
            return Err(Error::Config("n_trial must be at least 1".into()));
        }
        if self.noise == NoiseMode::Direct && !self.basis.is_povm() {
            return Err(Error::Config("direct sampling needs a POVM basis".into()));
        }
        if self.preprocess == Preprocess::Mle
            && (!self.basis.is_povm() || self.noise == NoiseMode::Indirect)
        {
            return Err(Error::Config(
                "MLE preprocessing needs direct sampling of a POVM".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.depolarization) {
            return Err(Error::InvalidProbability(self.depolarization));
        }
        if !(self.bias_std >= 0.0 && self.bias_std.is_finite()) {
            return Err(Error::Config(
                "bias_std must be finite and non-negative".into(),
            ));
        }
        if self.mle_tol.is_nan() || self.mle_tol <= 0.0 || self.mle_max_iter == 0 {
            return Err(Error::Config(
                "MLE tolerance and iteration cap must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn build_basis(&self) -> Result<MeasurementBasis> {
        match self.basis {
            BasisKind::SqrtPovm => sqrt_povm(self.d, &mut SeedStream::new(self.basis_seed)),
            BasisKind::SicPovm => sic_povm(qubits_of(self.d)?),
            BasisKind::Pauli => pauli_basis(qubits_of(self.d)?),
        }
    }

    /// The fixed calibration bias shared by every record, if any.
    pub fn calibration_bias(&self, basis: &MeasurementBasis) -> Option<Vec<f64>> {
        (self.bias_std > 0.0).then(|| {
            draw_calibration_bias(
                basis.len(),
                self.bias_std,
                basis.identity_index(),
                &mut SeedStream::new(self.bias_seed),
            )
        })
    }

    pub fn oat_time(&self, index: usize) -> f64 {
        if self.count <= 1 {
            0.0
        } else {
            (std::f64::consts::PI * index as f64 / (self.count - 1) as f64)
                .min(std::f64::consts::PI)
        }
    }

    pub fn frequency_kind(&self) -> FrequencyKind {
        if self.basis.is_povm()
            && (self.noise == NoiseMode::Direct || self.preprocess == Preprocess::Mle)
        {
            FrequencyKind::Probability
        } else {
            FrequencyKind::MeanValue
        }
    }
}

/// Everything needed to regenerate one record exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordMeta {
    pub generation: GenerationConfig,
    pub index: usize,
    pub oat_time: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct DatasetRecord {
    pub target: DensityMatrix,
    pub frequencies: FrequencyVector,
    pub preprocessed: DensityMatrix,
    pub input_vec: CholeskyVector,
    pub target_vec: CholeskyVector,
    pub meta: RecordMeta,
}

impl DatasetRecord {
    pub fn pair(&self) -> (CholeskyVector, CholeskyVector) {
        (self.input_vec.clone(), self.target_vec.clone())
    }
}

pub fn cholesky_vector(rho: &DensityMatrix) -> Result<CholeskyVector> {
    pack_cholesky(&rho.cholesky(CHOLESKY_REPAIR)?)
}

fn target_state(
    cfg: &GenerationConfig,
    index: usize,
    rng: &mut SeedStream,
) -> Result<DensityMatrix> {
    match cfg.ensemble {
        Ensemble::Hs => hs_random_state(cfg.d, rng),
        Ensemble::Haar => haar_random_pure(cfg.d, rng),
        Ensemble::Oat => oat_state(qubits_of(cfg.d)?, cfg.oat_time(index)),
    }
}

/// Noisy frequencies of `state` under the configured noise stack.
pub fn simulate_frequencies(
    cfg: &GenerationConfig,
    basis: &MeasurementBasis,
    bias: Option<&[f64]>,
    state: &DensityMatrix,
    rng: &mut SeedStream,
) -> Result<FrequencyVector> {
    let measured = if cfg.depolarization > 0.0 {
        depolarize(state, cfg.depolarization)?
    } else {
        state.clone()
    };
    let p = born_values(&measured, basis)?;
    let f = match cfg.noise {
        NoiseMode::Direct => sample_direct(&p, cfg.n_trial, rng)?,
        NoiseMode::Indirect => sample_indirect(&p, cfg.n_trial, basis.identity_index(), rng)?,
    };
    match bias {
        Some(b) => apply_calibration_bias(&f, b, cfg.preprocess == Preprocess::Mle),
        None => Ok(f),
    }
}

pub fn preprocess(
    cfg: &GenerationConfig,
    basis: &MeasurementBasis,
    f: &FrequencyVector,
) -> Result<DensityMatrix> {
    let report = match cfg.preprocess {
        Preprocess::Li => linear_inversion_with(f, basis, cfg.projection)?,
        Preprocess::Mle => best_effort(mle_estimate(f, basis, cfg.mle_tol, cfg.mle_max_iter))?,
    };
    Ok(report.state)
}

fn make_record(
    cfg: &GenerationConfig,
    basis: &MeasurementBasis,
    bias: Option<&[f64]>,
    index: usize,
) -> Result<DatasetRecord> {
    let mut rng = SeedStream::derive(cfg.seed, index as u64);
    let target = target_state(cfg, index, &mut rng)?;
    let frequencies = simulate_frequencies(cfg, basis, bias, &target, &mut rng)?;
    let preprocessed = preprocess(cfg, basis, &frequencies)?;
    Ok(DatasetRecord {
        input_vec: cholesky_vector(&preprocessed)?,
        target_vec: cholesky_vector(&target)?,
        target,
        frequencies,
        preprocessed,
        meta: RecordMeta {
            generation: cfg.clone(),
            index,
            oat_time: (cfg.ensemble == Ensemble::Oat).then(|| cfg.oat_time(index)),
        },
    })
}

/// `cfg.count` independent records, record i seeded by `derive(cfg.seed, i)`.
pub fn generate_dataset(cfg: &GenerationConfig) -> Result<Vec<DatasetRecord>> {
    cfg.validate()?;
    let basis = cfg.build_basis()?;
    let bias = cfg.calibration_bias(&basis);
    (0..cfg.count)
        .into_par_iter()
        .map(|i| make_record(cfg, &basis, bias.as_deref(), i))
        .collect()
}

pub fn regenerate_record(meta: &RecordMeta) -> Result<DatasetRecord> {
    let cfg = &meta.generation;
    cfg.validate()?;
    let basis = cfg.build_basis()?;
    let bias = cfg.calibration_bias(&basis);
    make_record(cfg, &basis, bias.as_deref(), meta.index)
}

pub const DATASET_FORMAT: &str = "tomonet-dataset";
pub const DATASET_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldLayout {
    pub name: String,
    /// `complex` (interleaved re, im) or `real`.
    pub kind: String,
    pub shape: Vec<usize>,
    /// Offset in f64 values from the start of a record.
    pub offset: usize,
    pub values: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub format: String,
    pub version: u32,
    pub records: usize,
    pub d: usize,
    pub outcomes: usize,
    pub frequency_kind: FrequencyKind,
    /// f64 values per record.
    pub record_len: usize,
    pub byte_order: String,
    pub layout: Vec<FieldLayout>,
    pub generation: GenerationConfig,
}

fn layout(d: usize, m: usize) -> Vec<FieldLayout> {
    let n = d * d;
    let fields = [
        ("target", "complex", vec![d, d], 2 * n),
        ("frequencies", "real", vec![m], m),
        ("preprocessed", "complex", vec![d, d], 2 * n),
        ("input_vec", "real", vec![n], n),
        ("target_vec", "real", vec![n], n),
    ];
    let mut offset = 0;
    fields
        .into_iter()
        .map(|(name, kind, shape, values)| {
            let f = FieldLayout {
                name: name.into(),
                kind: kind.into(),
                shape,
                offset,
                values,
            };
            offset += values;
            f
        })
        .collect()
}

impl DatasetManifest {
    pub fn new(generation: &GenerationConfig, records: usize, outcomes: usize) -> Self {
        let d = generation.d;
        let layout = layout(d, outcomes);
        Self {
            format: DATASET_FORMAT.into(),
            version: DATASET_VERSION,
            records,
            d,
            outcomes,
            frequency_kind: generation.frequency_kind(),
            record_len: layout.iter().map(|f| f.values).sum(),
            byte_order: "little-endian f64".into(),
            layout,
            generation: generation.clone(),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let m: Self = toml::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        if m.format != DATASET_FORMAT || m.version != DATASET_VERSION {
            return Err(Error::Format(format!(
                "unsupported dataset {} v{}",
                m.format, m.version
            )));
        }
        if m.d < 2 || m.d > 64 || m.outcomes == 0 || m.outcomes > 1 << 20 || m.generation.d != m.d {
            return Err(Error::Format("dataset dimensions out of range".into()));
        }
        if m.layout != layout(m.d, m.outcomes)
            || m.record_len != m.layout.iter().map(|f| f.values).sum::<usize>()
        {
            return Err(Error::Format(
                "dataset layout does not match dimensions".into(),
            ));
        }
        Ok(m)
    }
}

fn push_matrix(out: &mut Vec<u8>, m: &ComplexMatrix) {
    for z in m.row_major() {
        out.extend_from_slice(&z.re.to_le_bytes());
        out.extend_from_slice(&z.im.to_le_bytes());
    }
}

fn push_reals(out: &mut Vec<u8>, v: &[f64]) {
    for x in v {
        out.extend_from_slice(&x.to_le_bytes());
    }
}

pub fn encode_dataset(records: &[DatasetRecord]) -> Result<(DatasetManifest, Vec<u8>)> {
    let first = records.first().ok_or(Error::EmptyDataset)?;
    let generation = &first.meta.generation;
    let manifest = DatasetManifest::new(generation, records.len(), first.frequencies.len());
    let mut blob = Vec::with_capacity(8 * manifest.record_len * records.len());
    for (i, r) in records.iter().enumerate() {
        if r.meta.index != i
            || &r.meta.generation != generation
            || r.frequencies.len() != manifest.outcomes
        {
            return Err(Error::Format(format!(
                "record {i} does not belong to the dataset of record 0"
            )));
        }
        push_matrix(&mut blob, r.target.matrix());
        push_reals(&mut blob, r.frequencies.values());
        push_matrix(&mut blob, r.preprocessed.matrix());
        push_reals(&mut blob, r.input_vec.values());
        push_reals(&mut blob, r.target_vec.values());
    }
    Ok((manifest, blob))
}

fn read_matrix(d: usize, v: &[f64]) -> Result<DensityMatrix> {
    let entries = v
        .chunks_exact(2)
        .map(|c| Complex64::new(c[0], c[1]))
        .collect();
    DensityMatrix::new(ComplexMatrix::from_row_major(d, d, entries)?)
        .map_err(|e| Error::Format(format!("stored matrix is not a state: {e}")))
}

pub fn decode_dataset(manifest: &DatasetManifest, blob: &[u8]) -> Result<Vec<DatasetRecord>> {
    let expected = manifest
        .records
        .checked_mul(manifest.record_len)
        .and_then(|v| v.checked_mul(8));
    if expected != Some(blob.len()) {
        return Err(Error::Format(format!(
            "blob holds {} bytes, manifest implies {:?}",
            blob.len(),
            expected
        )));
    }
    let values: Vec<f64> = blob
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Format("dataset contains non-finite values".into()));
    }
    let field = |name: &str| {
        manifest
            .layout
            .iter()
            .find(|f| f.name == name)
            .expect("layout validated")
            .clone()
    };
    let (ft, ff, fp, fi, fo) = (
        field("target"),
        field("frequencies"),
        field("preprocessed"),
        field("input_vec"),
        field("target_vec"),
    );
    let d = manifest.d;
    values
        .chunks_exact(manifest.record_len)
        .enumerate()
        .map(|(index, rec)| {
            let slice = |f: &FieldLayout| &rec[f.offset..f.offset + f.values];
            let generation = manifest.generation.clone();
            let oat_time =
                (generation.ensemble == Ensemble::Oat).then(|| generation.oat_time(index));
            Ok(DatasetRecord {
                target: read_matrix(d, slice(&ft))?,
                frequencies: FrequencyVector::new(slice(&ff).to_vec(), manifest.frequency_kind)
                    .map_err(|e| Error::Format(e.to_string()))?,
                preprocessed: read_matrix(d, slice(&fp))?,
                input_vec: CholeskyVector::from_values(slice(&fi).to_vec())?,
                target_vec: CholeskyVector::from_values(slice(&fo).to_vec())?,
                meta: RecordMeta {
                    generation,
                    index,
                    oat_time,
                },
            })
        })
        .collect()
}

fn dataset_paths(path: &Path) -> (PathBuf, PathBuf) {
    (path.with_extension("toml"), path.with_extension("bin"))
}

/// Writes `path.toml` and `path.bin`.
pub fn save_dataset(records: &[DatasetRecord], path: &Path) -> Result<()> {
    let (manifest, blob) = encode_dataset(records)?;
    let (mp, bp) = dataset_paths(path);
    if let Some(dir) = mp.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    let text = toml::to_string(&manifest).map_err(|e| Error::Format(e.to_string()))?;
    std::fs::write(mp, text)?;
    std::fs::write(bp, blob)?;
    Ok(())
}

pub fn load_dataset(path: &Path) -> Result<Vec<DatasetRecord>> {
    let (mp, bp) = dataset_paths(path);
    let manifest = DatasetManifest::parse(&std::fs::read_to_string(mp)?)?;
    decode_dataset(&manifest, &std::fs::read(bp)?)
}
