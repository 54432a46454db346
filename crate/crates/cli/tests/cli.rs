use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_adaptive-sis")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

const SIM: &str = "n_nodes = 40\ntau = 0.3\ngamma = 1\nalpha_ss = 0.04\nomega_si = 0.5\nt_max = 10\nruns = 4\n";

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.cfg");
    fs::write(&path, text).unwrap();
    path.display().to_string()
}

#[test]
fn successful_run_writes_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SIM);
    let out = dir.path().join("o");
    let res = run(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap(), "--seed", "5"]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let stdout = String::from_utf8(res.stdout).unwrap();
    assert!(stdout.starts_with("simulate: 2 files"), "{stdout}");
    let manifest = fs::read_to_string(out.join("manifest.json")).unwrap();
    assert!(manifest.contains("\"seed\": 5"), "{manifest}");
}

#[test]
fn reruns_and_thread_counts_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SIM);
    let mut outputs = Vec::new();
    for (name, threads) in [("a", "1"), ("b", "3"), ("c", "3")] {
        let out = dir.path().join(name);
        let res = run(&["ensemble", "--config", &cfg, "--out", out.to_str().unwrap(), "--threads", threads]);
        assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
        outputs.push((
            fs::read(out.join("summary.json")).unwrap(),
            fs::read(out.join("mean_prevalence.csv")).unwrap(),
        ));
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[1], outputs[2]);
}

#[test]
fn set_overrides_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SIM);
    let out = dir.path().join("o");
    let res = run(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap(), "--set", "n_nodes=12"]);
    assert_eq!(code(&res), 0);
    let run_json = fs::read_to_string(out.join("run.json")).unwrap();
    assert!(run_json.contains("\"n_nodes\": 12"), "{run_json}");
}

#[test]
fn config_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SIM);
    let out = dir.path().join("o");
    let out = out.to_str().unwrap();
    for extra in [&["--set", "colour=red"][..], &["--set", "scan.omega_si="], &["--set", "novalue"], &["--threads", "0"]] {
        let mut args = vec!["ensemble", "--config", &cfg, "--out", out];
        args.extend_from_slice(extra);
        let res = run(&args);
        assert_eq!(code(&res), 2, "{extra:?}: {}", String::from_utf8_lossy(&res.stderr));
        assert!(String::from_utf8_lossy(&res.stderr).contains("configuration error"));
    }
    let missing = run(&["simulate", "--config", "/nonexistent/run.cfg", "--out", out]);
    assert_eq!(code(&missing), 2);
    // a mode that needs scenario B given scenario A parameters
    let wrong = run(&["netmap", "--config", &cfg, "--out", out]);
    assert_eq!(code(&wrong), 2);
    assert_eq!(code(&run(&["no-such-mode"])), 2);
}

#[test]
fn runtime_errors_exit_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SIM);
    // the output path is an existing file, so the directory cannot be created
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let res = run(&["simulate", "--config", &cfg, "--out", blocker.to_str().unwrap()]);
    assert_eq!(code(&res), 3, "{}", String::from_utf8_lossy(&res.stderr));
}
