use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use sha2::{Digest, Sha256};

fn synchrolab(args: &[&str], outdir: &Path, env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_synchrolab"));
    cmd.args(args)
        .arg("--outdir")
        .arg(outdir)
        .env_remove("SYNCHROLAB_SEED")
        .env_remove("SYNCHROLAB_OUTDIR");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn run_dirs(outdir: &Path) -> Vec<PathBuf> {
    let mut dirs: Vec<PathBuf> = fs::read_dir(outdir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    dirs.sort();
    dirs
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn cerny_prints_extremal_length() {
    let tmp = tempfile::tempdir().unwrap();
    let o = synchrolab(&["cerny", "--n", "4"], tmp.path(), &[]);
    assert_eq!(o.status.code(), Some(0));
    let rows: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(rows[0]["shortest_reset_length"], 9);
}

#[test]
fn exact_three_states() {
    let tmp = tempfile::tempdir().unwrap();
    let o = synchrolab(&["exact", "--n", "3", "--format", "json"], tmp.path(), &[]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("\"sync_count\": 21"));
    assert!(out.contains("\"total\": 27"));
    assert!(out.contains("\"mean_z0\": \"1/1\""));
}

#[test]
fn chromatic_big_integer_value() {
    let tmp = tempfile::tempdir().unwrap();
    let o = synchrolab(
        &["chromatic", "--n", "12", "--i", "5", "--eval", "12"],
        tmp.path(),
        &[],
    );
    assert_eq!(o.status.code(), Some(0));
    let rows: Value = serde_json::from_str(&stdout(&o)).unwrap();
    // (x-1)^12 + (x-1) at x = 12
    assert_eq!(rows[0]["value"], "3138428376732");
    assert_eq!(rows[0]["matches_deletion_contraction"], true);
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(
        synchrolab(&["cerny"], tmp.path(), &[]).status.code(),
        Some(2)
    );
    assert_eq!(
        synchrolab(&["mc", "--n", "4", "--bogus"], tmp.path(), &[])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        synchrolab(&["exact", "--n", "7"], tmp.path(), &[])
            .status
            .code(),
        Some(3)
    );
    assert_eq!(
        synchrolab(
            &["lemma-row", "--n", "20", "--trials", "5"],
            tmp.path(),
            &[]
        )
        .status
        .code(),
        Some(2)
    );
    assert_eq!(
        synchrolab(&["bound-thm22", "--n", "20"], tmp.path(), &[])
            .status
            .code(),
        Some(3)
    );
    assert_eq!(
        synchrolab(&["mc", "--n", "4"], tmp.path(), &[("SYNCHROLAB_SEED", "x")])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn seed_precedence_recorded_in_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let args = ["mc", "--n", "8", "--trials", "10"];
    synchrolab(
        &[&args[..], &["--seed", "42"]].concat(),
        tmp.path(),
        &[("SYNCHROLAB_SEED", "7")],
    );
    synchrolab(&args, tmp.path(), &[("SYNCHROLAB_SEED", "7")]);
    let dirs = run_dirs(tmp.path());
    assert_eq!(dirs.len(), 2);
    assert_eq!(manifest(&dirs[0])["config"]["seed"], 42);
    assert_eq!(manifest(&dirs[1])["config"]["seed"], 7);
    assert!(dirs[0]
        .file_name()
        .unwrap()
        .to_str()
        .unwrap()
        .starts_with("0001-"));
    assert!(dirs[1]
        .file_name()
        .unwrap()
        .to_str()
        .unwrap()
        .starts_with("0002-"));
}

#[test]
fn outdir_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let target = tmp.path().join("from-env");
    let o = Command::new(env!("CARGO_BIN_EXE_synchrolab"))
        .args(["cerny", "--n", "3"])
        .env("SYNCHROLAB_OUTDIR", &target)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(run_dirs(&target).len(), 1);
}

#[test]
fn manifest_checksums_match_files() {
    let tmp = tempfile::tempdir().unwrap();
    synchrolab(
        &["exact", "--n-grid", "2,3,4", "--format", "csv"],
        tmp.path(),
        &[],
    );
    let dir = &run_dirs(tmp.path())[0];
    let m = manifest(dir);
    let files = m["files"].as_array().unwrap();
    assert_eq!(files.len(), 3);
    for f in files {
        let body = fs::read(dir.join(f["file"].as_str().unwrap())).unwrap();
        assert_eq!(f["sha256"], hex::encode(Sha256::digest(&body)));
        assert_eq!(f["bytes"], body.len());
    }
    let csv = fs::read_to_string(dir.join("exact.csv")).unwrap();
    assert!(csv.starts_with("n,total,sync_count,certificate_count,"));
    assert_eq!(csv.lines().count(), 4);
}

fn data_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != "manifest.json")
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    out.sort();
    out
}

#[test]
fn data_files_identical_across_workers() {
    let tmp = tempfile::tempdir().unwrap();
    for threads in ["1", "4", "8"] {
        for (cmd, extra) in [("mc", "--n-grid"), ("lemma-zero", "--n-grid")] {
            let o = synchrolab(
                &[
                    cmd,
                    extra,
                    "16,33",
                    "--trials",
                    "300",
                    "--seed",
                    "5",
                    "--threads",
                    threads,
                ],
                tmp.path(),
                &[],
            );
            assert_eq!(o.status.code(), Some(0));
        }
    }
    let dirs = run_dirs(tmp.path());
    assert_eq!(dirs.len(), 6);
    for k in 2..6 {
        assert_eq!(data_files(&dirs[k % 2]), data_files(&dirs[k]));
    }
}

#[test]
fn rerun_from_manifest_config_reproduces_data() {
    let tmp = tempfile::tempdir().unwrap();
    synchrolab(
        &["lemma-row", "--n", "48", "--trials", "200", "--seed", "3"],
        tmp.path(),
        &[],
    );
    let first = run_dirs(tmp.path())[0].clone();
    let cfg = &manifest(&first)["config"];
    let toml = format!(
        "n = {}\ntrials = {}\nseed = {}\nepsilon = {}\nthreads = 8\n",
        cfg["n"], cfg["trials"], cfg["seed"], cfg["epsilon"]
    );
    let path = tmp.path().join("rerun.toml");
    fs::write(&path, toml).unwrap();
    let o = synchrolab(
        &["lemma-row", "--config", path.to_str().unwrap()],
        &tmp.path().join("again"),
        &[],
    );
    assert_eq!(o.status.code(), Some(0));
    let second = run_dirs(&tmp.path().join("again"))[0].clone();
    assert_eq!(data_files(&first), data_files(&second));
}
