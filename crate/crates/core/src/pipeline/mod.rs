//! End-to-end experiments: dataset generation, training, evaluation and
//! result files.

pub mod config;
pub mod dataset;
pub mod experiments;
pub mod results;

pub use config::{
    ArchConfig, Config, MixedConfig, OatConfig, Profile, PstarConfig, SamplingConfig,
};
pub use dataset::{
    generate_dataset, load_dataset, regenerate_record, save_dataset, DatasetRecord, Ensemble,
    GenerationConfig, NoiseMode, Preprocess, RecordMeta,
};
pub use experiments::{
    run_architecture_benchmark, run_mixed_benchmark, run_oat_study, run_pstar_analysis,
    run_sampling_noise_table, ModelStore, PstarTable,
};
pub use results::{Aggregate, ExperimentResult, ResultRow};
