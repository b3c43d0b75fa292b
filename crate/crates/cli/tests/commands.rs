use std::path::Path;
use std::process::Command as Process;

use ndarray::Array2;
use xad_cli::commands;
use xad_cli::{Error, Layout, Manifest, RunConfig, TrainOverrides};
use xad_core::io::write_gray_png;
use xad_core::preprocess::PreprocessVariant;
use xad_core::scoring::ScoreMetric;
use xad_core::synthetic::{generate, write_dataset, SyntheticConfig};
use xad_models::LossHistory;

fn dataset(root: &Path, normal: usize, anomalous: usize) {
    let images = generate(&SyntheticConfig { normal, anomalous, seed: 3, ..Default::default() });
    write_dataset(&images, root, None).unwrap();
}

fn config(data: &Path, out: &Path) -> RunConfig {
    RunConfig {
        data_root: data.to_path_buf(),
        output_root: out.to_path_buf(),
        train: TrainOverrides { epochs: Some(1), batch_size: Some(2), ..Default::default() },
        ..Default::default()
    }
}

#[test]
fn preprocess_writes_pairs_and_is_idempotent() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    dataset(&data, 4, 2);
    let cfg = config(&data, &tmp.path().join("out"));

    let first = commands::preprocess(&cfg, false).unwrap();
    assert_eq!((first.processed, first.outputs), (6, 6));
    let dir = Layout::new(&cfg.output_root).preprocessed(PreprocessVariant::Full);
    assert_eq!(std::fs::read_dir(dir.join("images")).unwrap().count(), 6);
    assert_eq!(std::fs::read_dir(dir.join("masks")).unwrap().count(), 6);
    let manifest = Manifest::read(&dir.join("manifest.json")).unwrap();
    assert_eq!(manifest.entries.len(), 6);
    let ids: Vec<_> = manifest.entries.iter().map(|e| e.meta.image_id.clone()).collect();
    let mut sorted = ids.clone();
    sorted.sort();
    assert_eq!(ids, sorted);
    let bytes = std::fs::read(dir.join("manifest.json")).unwrap();

    let again = commands::preprocess(&cfg, false).unwrap();
    assert_eq!((again.processed, again.skipped, again.outputs), (0, 6, 6));
    assert_eq!(std::fs::read(dir.join("manifest.json")).unwrap(), bytes);

    let forced = commands::preprocess(&cfg, true).unwrap();
    assert_eq!(forced.processed, 6);
    assert_eq!(std::fs::read(dir.join("manifest.json")).unwrap(), bytes);

    std::fs::remove_file(dir.join(&manifest.entries[0].image)).unwrap();
    assert_eq!(commands::preprocess(&cfg, false).unwrap().processed, 1);
}

#[test]
fn two_hands_give_two_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    let pixels = Array2::from_shape_fn((80, 100), |(r, c)| {
        let on_carrier = (6..74).contains(&r) && (8..92).contains(&c);
        let d = |cy: f64, cx: f64| ((r as f64 - cy) / 22.0).powi(2) + ((c as f64 - cx) / 12.0).powi(2);
        if d(40.0, 30.0) < 1.0 || d(40.0, 70.0) < 1.0 {
            0.85
        } else if on_carrier {
            0.4
        } else {
            0.05
        }
    });
    let path = data.join("p1").join("study1_negative").join("image1.png");
    std::fs::create_dir_all(path.parent().unwrap()).unwrap();
    write_gray_png(&path, &pixels).unwrap();

    let cfg = RunConfig { variant: PreprocessVariant::Crop, ..config(&data, &tmp.path().join("out")) };
    let s = commands::preprocess(&cfg, false).unwrap();
    assert_eq!((s.processed, s.outputs), (1, 2));
    let m = Manifest::read(&Layout::new(&cfg.output_root).manifest(PreprocessVariant::Crop)).unwrap();
    assert!(m.entries.iter().all(|e| e.source_id == "p1_study1_image1"));
    assert_eq!(m.entries[0].meta.image_id, "p1_study1_image1_h0");
}

#[test]
fn train_requires_a_split() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    dataset(&data, 4, 2);
    let cfg = config(&data, &tmp.path().join("out"));
    commands::preprocess(&cfg, false).unwrap();
    let err = commands::train(&cfg).unwrap_err();
    assert!(matches!(err, Error::Missing { what: "split manifest", .. }), "{err}");
    assert_eq!(err.exit_code(), 1);
}

#[test]
fn seeds_checkpoints_report_and_heatmaps() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    dataset(&data, 12, 4);
    let cfg = RunConfig {
        seeds: vec![1, 2, 3, 4],
        metrics: vec![ScoreMetric::Mse, ScoreMetric::MseTopK(20)],
        ..config(&data, &tmp.path().join("out"))
    };
    let layout = Layout::new(&cfg.output_root);
    commands::preprocess(&cfg, false).unwrap();
    commands::split(&cfg).unwrap();

    let runs = commands::train(&cfg).unwrap();
    assert_eq!(runs.len(), 4);
    let dir = layout.run_dir(cfg.model, cfg.variant, cfg.equalize);
    let checkpoints = std::fs::read_dir(&dir)
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "safetensors"))
        .count();
    assert_eq!(checkpoints, 4);
    for seed in 1..=4 {
        let h = LossHistory::read(&layout.losses(cfg.model, cfg.variant, cfg.equalize, seed)).unwrap();
        assert_eq!(h.epochs.len(), 1);
    }

    let report = commands::evaluate(&cfg, false, &["patient0000_study1_image1".to_string()]).unwrap();
    assert_eq!(report.rows.len(), 2);
    for row in &report.rows {
        assert_eq!(row.aucs.len(), 4);
        assert!(row.std.is_some());
        assert!((0.0..=1.0).contains(&row.mean));
    }
    assert!(layout.report_csv().is_file() && layout.report_txt().is_file());
    let heat = layout.heatmaps(cfg.model, cfg.variant, cfg.equalize, 1);
    for name in ["patient0000_study1_image1_overlay.png", "patient0000_study1_image1.png", "patient0000_study1_image1.npy"] {
        assert!(heat.join(name).is_file(), "{name}");
    }
    for seed in 1..=4 {
        assert!(layout.scores(cfg.model, cfg.variant, cfg.equalize, seed).is_file());
    }

    // grid: only the trained column has numbers, the other five print as "-"
    let grid = commands::evaluate(&cfg, true, &[]).unwrap();
    assert_eq!(grid.rows.len(), 2);
    let text = grid.to_text();
    for v in ["raw", "crop", "full"] {
        assert!(text.contains(v), "{text}");
    }
    assert_eq!(text.lines().nth(1).unwrap().matches("HE").count(), 6);
    let mse = text.lines().find(|l| l.starts_with("MSE ")).unwrap();
    assert_eq!(mse.split_whitespace().filter(|c| *c == "-").count(), 5, "{text}");

    let unknown = commands::heatmaps(&cfg, &["nope".to_string()]).unwrap_err();
    assert_eq!(unknown.exit_code(), 1);
    let other = cfg.at(PreprocessVariant::Raw, true);
    assert!(matches!(commands::evaluate(&other, false, &[]), Err(Error::Missing { .. })));
}

#[test]
fn config_file_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = RunConfig { seeds: vec![5, 6], metrics: vec![ScoreMetric::L1TopK(7)], ..config(tmp.path(), tmp.path()) };
    let path = tmp.path().join("run.toml");
    std::fs::write(&path, cfg.to_toml().unwrap()).unwrap();
    assert_eq!(RunConfig::load(&path).unwrap(), cfg);
}

fn xad(args: &[&str]) -> std::process::Output {
    Process::new(env!("CARGO_BIN_EXE_xad")).args(args).env_remove("XAD_DATA_ROOT").output().unwrap()
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    assert_eq!(xad(&["--help"]).status.code(), Some(0));
    assert_eq!(xad(&["--version"]).status.code(), Some(0));
    assert_eq!(xad(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(xad(&["train", "--model", "resnet"]).status.code(), Some(1));
    let missing = xad(&["preprocess", "--data-root", "/no/such/dir", "--output", out]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("data root"));
    assert_eq!(xad(&["train", "--output", out, "--metric", "kld"]).status.code(), Some(1));

    // a file where a directory is expected fails at run time
    let data = tmp.path().join("data");
    dataset(&data, 4, 2);
    let blocker = tmp.path().join("blocked");
    std::fs::write(&blocker, b"").unwrap();
    let status = xad(&["preprocess", "--data-root", data.to_str().unwrap(), "--output", blocker.to_str().unwrap()]).status;
    assert_eq!(status.code(), Some(2));

    let ok = xad(&["preprocess", "--data-root", data.to_str().unwrap(), "--output", out, "--workers", "2"]);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("processed 6"));
}
