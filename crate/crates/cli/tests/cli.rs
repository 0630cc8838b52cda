use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use modalstab::experiment::{cmd_spectrum, cmd_verify, RunConfig};

fn modalstab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_modalstab")).current_dir(dir).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

const SMALL: &str = "n_sim = 80\nhorizon = 2\ngrid = 24\n";

#[test]
fn spectrum_reports_five_unstable_modes() {
    let dir = tempfile::tempdir().unwrap();
    let out = modalstab(dir.path(), &["spectrum", "--output", "s"]);
    assert_eq!(code(&out), 0);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.starts_with("N = 5\n"));
    let modes = fs::read_to_string(dir.path().join("s/modes.csv")).unwrap();
    assert_eq!(modes.lines().count(), 301);
}

#[test]
fn outputs_match_library_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.cfg"), SMALL).unwrap();
    let cfg = RunConfig::parse(SMALL).unwrap();
    assert_eq!(code(&modalstab(dir.path(), &["verify", "--config", "c.cfg", "--output", "v"])), 0);
    for (name, bytes) in &cmd_verify(&cfg).unwrap().artifacts.files {
        assert_eq!(&fs::read(dir.path().join("v").join(name)).unwrap(), bytes, "{name}");
    }
    assert_eq!(code(&modalstab(dir.path(), &["spectrum", "--output", "s"])), 0);
    let lib = cmd_spectrum(&RunConfig::parse("").unwrap()).unwrap();
    assert_eq!(fs::read(dir.path().join("s/spectrum.json")).unwrap(), lib.artifacts.file("spectrum.json").unwrap());
}

#[test]
fn repeated_runs_are_byte_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.cfg"), SMALL).unwrap();
    let run = |out: &str, threads: &str| {
        let o = Command::new(env!("CARGO_BIN_EXE_modalstab"))
            .current_dir(dir.path())
            .env("MODALSTAB_THREADS", threads)
            .args(["simulate", "--config", "c.cfg", "--seed", "7", "--output", out])
            .output()
            .unwrap();
        assert_eq!(code(&o), 0);
    };
    run("a", "1");
    run("b", "4");
    for f in ["trajectory.csv", "norms.csv", "snapshots.bin", "summary.json"] {
        assert_eq!(
            fs::read(dir.path().join("a").join(f)).unwrap(),
            fs::read(dir.path().join("b").join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.cfg"), SMALL).unwrap();
    let open = modalstab(dir.path(), &["verify", "--config", "c.cfg", "--mode", "open_loop", "--output", "o"]);
    assert_eq!(code(&open), 1);
    let summary = fs::read_to_string(dir.path().join("o/summary.json")).unwrap();
    assert!(summary.contains("\"diverged\": true"));

    assert_eq!(code(&modalstab(dir.path(), &["synthesize", "--output", "g"])), 3);
    let gains = fs::read_to_string(dir.path().join("g/gains.json")).unwrap();
    assert!(gains.contains("suggestion"));

    fs::write(dir.path().join("bad.cfg"), "dt = -1\n").unwrap();
    let bad = modalstab(dir.path(), &["simulate", "--config", "bad.cfg"]);
    assert_eq!(code(&bad), 2);
    assert!(String::from_utf8_lossy(&bad.stderr).contains("dt"));
    assert_eq!(code(&modalstab(dir.path(), &["spectrum", "--config", "missing.cfg"])), 2);

    fs::write(dir.path().join("res.cfg"), "gammas = 1, 2\n").unwrap();
    assert_eq!(code(&modalstab(dir.path(), &["synthesize", "--config", "res.cfg"])), 4);
}

#[test]
fn bad_thread_count_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_modalstab"))
        .current_dir(dir.path())
        .env("MODALSTAB_THREADS", "zero")
        .arg("spectrum")
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
}

#[test]
fn zero_initial_condition_is_a_degenerate_pass() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("z.cfg"), format!("{SMALL}initial = zero\n")).unwrap();
    let o = modalstab(dir.path(), &["verify", "--config", "z.cfg", "--output", "z"]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("degenerate"));
}
