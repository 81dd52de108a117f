use std::path::{Path, PathBuf};
use std::process::Command;

use proptest::prelude::*;

use olmdisf::copula::{CopulaConfig, CopulaState};
use olmdisf::ingest::TypedSchema;

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn olmdisf() -> Command {
    Command::new(env!("CARGO_BIN_EXE_olmdisf"))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Whatever the observation pattern, the running estimate stays a
    /// symmetric positive semidefinite matrix with a unit diagonal.
    #[test]
    fn sigma_stays_a_correlation_matrix(
        rows in prop::collection::vec(prop::collection::vec(prop::option::weighted(0.6, -5.0f64..5.0), 4), 1..60)
    ) {
        let mut c = CopulaState::new(&TypedSchema::all_continuous(4), CopulaConfig::default()).unwrap();
        for row in &rows {
            let observed: Vec<(usize, f64)> = row.iter().enumerate().filter_map(|(j, v)| v.map(|v| (j, v))).collect();
            let warmed = c.warm_cold_features(&observed).unwrap();
            let obs = c.to_latent(&observed).unwrap();
            c.update_correlation(&obs);
            let fresh: Vec<(usize, f64)> = observed.iter().copied().filter(|(j, _)| !warmed.contains(j)).collect();
            c.update_marginals(&fresh).unwrap();
        }
        let s = c.sigma();
        for i in 0..4 {
            prop_assert!((s[(i, i)] - 1.0).abs() < 1e-9);
            for j in 0..4 {
                prop_assert!((s[(i, j)] - s[(j, i)]).abs() < 1e-12);
                prop_assert!(s[(i, j)].is_finite());
            }
        }
        let eig = s.clone().symmetric_eigenvalues();
        prop_assert!(eig.iter().all(|&l| l >= -1e-9), "eigenvalues {eig:?}");
    }
}

#[test]
fn cli_run_writes_outputs_and_report_rebuilds_them() {
    let out = tempfile::tempdir().unwrap();
    let config = repo_root().join("configs/single_run.toml");
    let status = olmdisf().arg("run").arg(&config).arg("--out").arg(out.path()).status().unwrap();
    assert!(status.success());
    for f in ["manifest.json", "summary.csv", "cells.csv", "timings.csv"] {
        assert!(out.path().join(f).is_file(), "{f} missing");
    }
    let summary = std::fs::read(out.path().join("summary.csv")).unwrap();
    let status = olmdisf().arg("report").arg(out.path()).status().unwrap();
    assert!(status.success());
    assert_eq!(std::fs::read(out.path().join("summary.csv")).unwrap(), summary);
}

#[test]
fn cli_reports_bad_input_with_exit_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "method = \"nope\"\n[data]\npath = \"x.csv\"\n").unwrap();
    let out = olmdisf().arg("run").arg(&bad).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());

    let missing = dir.path().join("missing.toml");
    std::fs::write(&missing, "[data]\npath = \"does_not_exist.csv\"\n").unwrap();
    let out = olmdisf().arg("run").arg(&missing).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("does_not_exist.csv"));
}

#[test]
fn cli_synth_is_deterministic() {
    let config = repo_root().join("configs/single_run.toml");
    let a = olmdisf().arg("synth").arg(&config).output().unwrap();
    let b = olmdisf().arg("synth").arg(&config).output().unwrap();
    assert!(a.status.success());
    assert!(!a.stdout.is_empty());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn report_compares_a_summary_table() {
    let table = repo_root().join("data/reference_cer.csv");
    let out = olmdisf().args(["report", "--ties", "reference-wins", "--table"]).arg(&table).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("LR 51/5"), "{text}");
    assert!(text.contains("LR 43/13"), "{text}");
}
