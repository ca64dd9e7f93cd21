use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ftn-papr"));
    cmd.env_remove("FTN_PAPR_OUTPUT_DIR");
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("config.toml");
    fs::write(&path, body).unwrap();
    path
}

const TINY: &str = r#"
name = "tiny"
delta_list = [0.8]
n_symbols = 200
schemes = ["uniform", "optimal"]
realizations = 40
tolerance = 0.1
"#;

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn run_writes_reproducible_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), TINY);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for (dir, extra) in [(&a, None), (&b, Some("--sequential"))] {
        let mut args = vec!["run", cfg.to_str().unwrap(), "--output-dir", dir.to_str().unwrap()];
        args.extend(extra);
        let out = run(&args);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        assert!(String::from_utf8_lossy(&out.stdout).contains("PASS"));
    }
    let (fa, fb) = (csv_files(&a), csv_files(&b));
    assert_eq!(fa.len(), 6);
    assert_eq!(fa, fb);
    assert!(a.join("summary.json").exists());
    assert!(a.join("tiny.svg").exists());
}

#[test]
fn output_dir_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), TINY);
    let dir = tmp.path().join("env");
    let out = bin()
        .args(["run", cfg.to_str().unwrap(), "--schemes", "uniform"])
        .env("FTN_PAPR_OUTPUT_DIR", &dir)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.join("summary.json").exists());
}

#[test]
fn wrong_regime_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "delta_list = [0.5]\nschemes = [\"optimal-moderate\"]\nrealizations = 2\n");
    let out = run(&["run", cfg.to_str().unwrap(), "--output-dir", tmp.path().to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn unknown_key_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "deltas = [0.5]\n");
    let out = run(&["run", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("deltas"));
}

#[test]
fn invalid_value_names_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "delta_list = [1.5]\n");
    let out = run(&["run", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("delta_list"));
}

#[test]
fn missing_config_file_is_a_plain_failure() {
    let out = run(&["run", "/nonexistent/config.toml"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn bad_usage_exits_with_two() {
    assert_eq!(code(&run(&["figure", "fig9"])), 2);
    assert_eq!(code(&run(&["frobnicate"])), 2);
}

#[test]
fn verify_spectral_passes() {
    let out = run(&["verify", "spectral"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.lines().filter(|l| l.starts_with("PASS")).count() >= 8);
}

#[test]
fn verify_reports_breaches_with_three() {
    let out = run(&["verify", "spectral", "--tolerance-scale", "0"]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}

#[test]
fn shipped_example_config_parses() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/example.toml");
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&[
        "run",
        path.to_str().unwrap(),
        "--realizations",
        "40",
        "--delta",
        "1.0",
        "--n-symbols",
        "200",
        "--tolerance",
        "0.5",
        "--output-dir",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}
