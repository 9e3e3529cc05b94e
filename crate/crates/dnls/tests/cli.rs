use std::path::Path;
use std::process::{Command, Output};

fn dnls(args: &[&str], out_env: Option<&Path>) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_dnls"));
    c.args(args).env_remove("DNLS_OUT");
    if let Some(p) = out_env {
        c.env("DNLS_OUT", p);
    }
    c.output().expect("binary runs")
}

fn text(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned() + &String::from_utf8_lossy(&o.stderr)
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        &["frobnicate"][..],
        &["evolve", "--colour", "red"],
        &["report", "--out"],
        &[],
    ] {
        let o = dnls(args, None);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", text(&o));
        assert!(
            text(&o).contains("Usage") || text(&o).contains("--help"),
            "{args:?}"
        );
    }
}

#[test]
fn report_on_empty_dir_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let o = dnls(&["report", "--out", tmp.path().to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o).contains("no run.csv"));
}

#[test]
fn invalid_override_is_reported_by_field() {
    let tmp = tempfile::tempdir().unwrap();
    let o = dnls(
        &[
            "evolve",
            "--n",
            "1000",
            "--out",
            tmp.path().to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o).contains("config: n:"), "{}", text(&o));
}

#[test]
fn evolve_then_report_with_env_override() {
    let tmp = tempfile::tempdir().unwrap();
    let flagged = tmp.path().join("ignored");
    let env_dir = tmp.path().join("run");
    let cfg = tmp.path().join("small.cfg");
    std::fs::write(&cfg, "# short focusing run\nl = 64\nn = 1024\nt_max = 2\n").unwrap();
    let o = dnls(
        &[
            "evolve",
            "--config",
            cfg.to_str().unwrap(),
            "--lambda",
            "-1",
            "--out",
            flagged.to_str().unwrap(),
        ],
        Some(&env_dir),
    );
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    assert!(env_dir.join("summary.json").is_file());
    assert!(!flagged.exists());
    let cfg_back = std::fs::read_to_string(env_dir.join("config.txt")).unwrap();
    assert!(cfg_back.contains("lambda = -1"));

    let o = dnls(&["report"], Some(&env_dir));
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    let plot = std::fs::read_to_string(env_dir.join("plot_norm_w_h1.dat")).unwrap();
    let data: Vec<&str> = plot.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data.len(), 6);
    assert!(data.iter().all(|l| l.split_whitespace().count() == 2));
    assert!(plot.contains("beta=0.1"));
}

#[test]
fn verify_transform_small_grid() {
    let o = dnls(
        &["verify-transform", "--q", "1", "--n", "1024", "--l", "40"],
        None,
    );
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    let out = String::from_utf8_lossy(&o.stdout);
    assert!(out.contains("unitarity") && out.contains("roundtrip"));
    assert_eq!(
        out.lines()
            .filter(|l| l.split_whitespace().nth(1) == Some("1"))
            .count(),
        10
    );
}
