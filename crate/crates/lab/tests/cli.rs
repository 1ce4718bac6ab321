use std::path::Path;
use std::process::{Command, Output};

fn squeezesim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_squeezesim"))
        .args(args)
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn data_rows(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

#[test]
fn echo_without_experiment() {
    let out = squeezesim(&["--lambda", "0.3"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().any(|l| l == "lambda=0.3"));
}

#[test]
fn help_succeeds() {
    assert_eq!(code(&squeezesim(&["--help"])), 0);
}

#[test]
fn validation_errors_exit_2() {
    assert_eq!(code(&squeezesim(&["--experiment", "spectra", "--lambda", "1"])), 2);
    assert_eq!(code(&squeezesim(&["--experiment", "nope"])), 2);
    assert_eq!(code(&squeezesim(&["--experiment", "chd-quantum", "--n-tau", "10"])), 2);
    let off_axis = squeezesim(&["--experiment", "chd-sed", "--offset-phase", "0", "--t-max", "100"]);
    assert_eq!(code(&off_axis), 2);
}

#[test]
fn unknown_config_key_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "lambda = 0.3\ncolour = blue\n").unwrap();
    let out = squeezesim(&["--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# sweep point\nlambda=0.2\nnbar_a=0.05\n").unwrap();
    let out = squeezesim(&["--config", cfg.to_str().unwrap(), "--lambda", "0.3"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().any(|l| l == "lambda=0.3"));
    assert!(text.lines().any(|l| l == "nbar-a=0.05"));
}

#[test]
fn unwritable_output_exits_3() {
    let out = squeezesim(&["--experiment", "spectra", "--out", "/nonexistent-dir/spectra.csv"]);
    assert_eq!(code(&out), 3);
}

#[test]
fn spectra_csv_layout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("spectra.csv");
    let out = squeezesim(&[
        "--experiment",
        "spectra",
        "--lambda",
        "0.4",
        "--nbar-a",
        "0",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.lines().any(|l| l == "# experiment=spectra"));
    let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header, "omega,classical_y,wigner_y,classical_x,wigner_x");
    let rows = data_rows(&text);
    assert!((rows[0][2] - 9.0 / 196.0).abs() < 1e-15);
    let leftovers: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
    assert_eq!(leftovers.len(), 1, "temporary file left behind");
}

#[test]
fn chd_csv_has_oracle_column() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("chd.csv");
    let args = [
        "--experiment",
        "chd-quantum",
        "--nbar-a",
        "0.1",
        "--t-max",
        "120",
        "--tau-max",
        "1",
        "--n-tau",
        "11",
        "--n-traj",
        "3",
        "--out",
    ];
    let mut full: Vec<&str> = args.to_vec();
    full.push(path.to_str().unwrap());
    let out = squeezesim(&full);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(Path::new(&path)).unwrap();
    let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header, "tau,mean,stderr,count,oracle");
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 11);
    assert_eq!(rows[5][0], 0.0);
    assert!(rows.iter().all(|r| r[3] > 0.0 && r[2] > 0.0));
}
