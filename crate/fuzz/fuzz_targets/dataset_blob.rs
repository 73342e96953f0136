#![no_main]

use libfuzzer_sys::fuzz_target;
use tomonet::pipeline::dataset::{decode_dataset, DatasetManifest, GenerationConfig};

// fixed manifest for two d=2 records over a 4-outcome POVM
fuzz_target!(|blob: &[u8]| {
    let generation = GenerationConfig {
        d: 2,
        count: 2,
        ..GenerationConfig::default()
    };
    let manifest = DatasetManifest::new(&generation, 2, 4);
    let _ = decode_dataset(&manifest, blob);
});
