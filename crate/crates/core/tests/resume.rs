//! A run resumed from a checkpoint reproduces the uninterrupted run.

use std::fs;
use std::path::Path;

use fdlab::harness::simulate::simulate;
use fdlab::harness::ExperimentConfig;

fn config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.grid.cells = 512;
    cfg.run.t_end = 0.8;
    cfg.run.output_every = 0.05;
    cfg.run.checkpoint_every = 40;
    cfg
}

fn rows_after(path: &Path, t: f64) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .filter(|l| l.split(',').next().unwrap().parse::<f64>().unwrap() > t)
        .map(str::to_owned)
        .collect()
}

#[test]
fn resumed_run_is_bit_identical() {
    let full = tempfile::tempdir().unwrap();
    simulate(&config(), full.path()).unwrap();
    let cp = full.path().join("checkpoints/step_00000040.json");
    let t_c = fdlab::dynamics::Checkpoint::load(&cp).unwrap().state.t;

    let mut cfg = config();
    cfg.run.resume_from = Some(cp);
    let resumed = tempfile::tempdir().unwrap();
    let out = simulate(&cfg, resumed.path()).unwrap();
    assert_eq!(out.manifest.resumed_from_t, Some(t_c));

    for file in ["reports.csv", "steps.csv"] {
        let a = rows_after(&full.path().join(file), t_c);
        let b = rows_after(&resumed.path().join(file), t_c);
        assert!(!a.is_empty());
        assert_eq!(a, b, "{file}");
    }
    let a = fs::read(full.path().join("checkpoints/final.json")).unwrap();
    let b = fs::read(resumed.path().join("checkpoints/final.json")).unwrap();
    assert_eq!(a, b);
}
