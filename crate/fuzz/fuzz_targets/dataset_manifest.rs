#![no_main]

use libfuzzer_sys::fuzz_target;
use tomonet::pipeline::dataset::DatasetManifest;

fuzz_target!(|text: &str| {
    let _ = DatasetManifest::parse(text);
});
