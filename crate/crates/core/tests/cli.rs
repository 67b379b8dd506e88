//! CLI smoke tests against the compiled binary.

mod common;

use std::path::Path;
use std::process::Command;

const BIN: &str = env!("CARGO_BIN_EXE_semcom");

fn run(args: &[&str]) -> (bool, String, String) {
    let out = Command::new(BIN).args(args).output().unwrap();
    (
        out.status.success(),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn full_cli_workflow() {
    let dir = tempfile::tempdir().unwrap();
    let train_dir = dir.path().join("train");
    std::fs::create_dir(&train_dir).unwrap();
    for seed in 0..3u64 {
        let img = common::synthetic_image(200 + seed, 64, 64);
        img.write_pgm(train_dir.join(format!("t{seed}.pgm"))).unwrap();
    }
    let image = dir.path().join("input.pgm");
    common::synthetic_image(1, 128, 128).write_pgm(&image).unwrap();
    let codebook = dir.path().join("cb.vqcb");

    let (ok, stdout, stderr) = run(&[
        "train-codebook",
        "--images",
        path_str(&train_dir),
        "--patch",
        "4",
        "--entries",
        "16",
        "--seed",
        "0",
        "--max-iters",
        "30",
        "--out",
        path_str(&codebook),
    ]);
    assert!(ok, "train-codebook failed: {stderr}");
    assert!(stdout.contains("trained 16 entries"));
    assert!(codebook.exists());

    let (ok, stdout, _) = run(&["grid-info", "--profile", "desk"]);
    assert!(ok);
    assert!(stdout.contains("N_ref     : 168"));
    assert!(stdout.contains("N_green   : 646"));
    assert!(stdout.contains("D_imp     : 2"));

    let recon = dir.path().join("recon.pgm");
    let (ok, stdout, stderr) = run(&[
        "run",
        "--image",
        path_str(&image),
        "--codebook",
        path_str(&codebook),
        "--snr-db",
        "15",
        "--fit",
        "on",
        "--rematch",
        "on",
        "--seed",
        "0",
        "--emit-image",
        path_str(&recon),
    ]);
    assert!(ok, "run failed: {stderr}");
    assert!(stdout.starts_with("scheme,snr_db,seed"));
    assert!(stdout.lines().nth(1).unwrap().starts_with("fit+rematch,15,0,"));
    assert!(recon.exists());

    let csv = dir.path().join("sweep.csv");
    let (ok, stdout, stderr) = run(&[
        "sweep",
        "--image",
        path_str(&image),
        "--codebook",
        path_str(&codebook),
        "--snr-db",
        "5:15:5",
        "--seeds",
        "2",
        "--schemes",
        "all",
        "--csv",
        path_str(&csv),
    ]);
    assert!(ok, "sweep failed: {stderr}");
    assert!(stdout.contains("wrote 24 rows"));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 25);
}

#[test]
fn errors_exit_nonzero_with_message() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.pgm");
    let cb = dir.path().join("missing.vqcb");

    let (ok, _, stderr) = run(&[
        "run",
        "--image",
        path_str(&missing),
        "--codebook",
        path_str(&cb),
        "--snr-db",
        "10",
    ]);
    assert!(!ok);
    assert!(stderr.contains("error:"));

    let image = dir.path().join("input.pgm");
    common::synthetic_image(1, 32, 32).write_pgm(&image).unwrap();
    let (ok, _, stderr) = run(&[
        "run",
        "--image",
        path_str(&image),
        "--codebook",
        path_str(&cb),
        "--snr-db",
        "10",
        "--fit",
        "maybe",
    ]);
    assert!(!ok);
    assert!(stderr.contains("error:"));

    let (ok, _, _) = run(&["grid-info", "--profile", "pocket"]);
    assert!(!ok);

    let (ok, _, _) = run(&[
        "sweep",
        "--image",
        path_str(&image),
        "--codebook",
        path_str(&cb),
        "--snr-db",
        "15:5:5",
        "--csv",
        path_str(&dir.path().join("x.csv")),
    ]);
    assert!(!ok);
}
