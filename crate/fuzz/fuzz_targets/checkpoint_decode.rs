#![no_main]

use libfuzzer_sys::fuzz_target;
use tomonet::denoiser::checkpoint::{decode, encode};

fuzz_target!(|bytes: &[u8]| {
    if let Ok(model) = decode(bytes) {
        assert_eq!(encode(&model), bytes);
    }
});
