#![no_main]

use libfuzzer_sys::fuzz_target;
use tomonet::pipeline::Config;

fuzz_target!(|text: &str| {
    if let Ok(cfg) = Config::parse(text, None) {
        // anything accepted must survive a round trip
        let again = Config::parse(&cfg.to_toml().unwrap(), None).unwrap();
        assert_eq!(again, cfg);
    }
});
