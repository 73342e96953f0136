use std::path::Path;
use std::process::{Command, Output};

fn tomonet(dir: &Path, args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_tomonet"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs");
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

const SMALL: &str = "
[generation]
d = 3
count = 40

[train]
n_train = 30
n_val = 10
batch = 10
epochs = 2

[model]
kernels = 2
heads = 1
";

#[test]
fn gen_train_eval_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("small.toml"), SMALL).unwrap();
    let base = ["--config", "small.toml", "--threads", "1"];
    let run = |extra: &[&str]| tomonet(dir.path(), &[&base[..], extra].concat());
    run(&["gen-data", "--name", "ds"]);
    assert!(dir.path().join("out/ds.toml").exists() && dir.path().join("out/ds.bin").exists());
    run(&["train", "--data", "out/ds", "--name", "m"]);
    assert!(dir.path().join("out/models/m.toml").exists());
    let eval = run(&["eval", "--data", "out/ds", "--model", "out/models/m.bin"]);
    let text = String::from_utf8(eval.stdout).unwrap();
    assert!(text.contains("LI-NN"), "{text}");
    let csv = std::fs::read_to_string(dir.path().join("out/eval.csv")).unwrap();
    // header plus LI and LI-NN rows for all 40 records
    assert_eq!(csv.lines().count(), 81);
    let cfg = std::fs::read_to_string(dir.path().join("out/config.toml")).unwrap();
    assert!(cfg.contains("count = 40"));
}

#[test]
fn show_config_applies_seed_and_profile() {
    let dir = tempfile::tempdir().unwrap();
    let out = tomonet(
        dir.path(),
        &["--profile", "paper", "--seed", "17", "show-config"],
    );
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("profile = \"paper\""));
    assert!(text.contains("seed = 17"));
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.toml"), "[generation]\nbogus = 1\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_tomonet"))
        .current_dir(dir.path())
        .args(["--config", "bad.toml", "show-config"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));
}

#[test]
fn missing_models_reported() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_tomonet"))
        .current_dir(dir.path())
        .args(["benchmark-arch", "--models", "nowhere"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr).to_lowercase();
    assert!(err.contains("model"), "{err}");
}
