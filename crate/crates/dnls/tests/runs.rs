use dnls::config::SimConfig;
use dnls::experiment::{profile_report, read_summary, run_experiment, CONFIG_FILE, CSV_FILE};
use std::path::Path;

fn small(dir: &Path, t_max: f64) -> SimConfig {
    SimConfig {
        l: 64.0,
        n: 1024,
        dt: 0.02,
        t_max,
        output_dir: dir.to_path_buf(),
        ..SimConfig::default()
    }
}

fn files(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    names
}

#[test]
fn replay_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    run_experiment(&small(&a, 4.0)).unwrap();
    let mut cfg = SimConfig::load(&a.join(CONFIG_FILE)).unwrap();
    cfg.output_dir = b.clone();
    run_experiment(&cfg).unwrap();
    let names = files(&a);
    assert_eq!(names, files(&b));
    assert!(names.iter().any(|n| n.starts_with("snap_")));
    for n in names
        .iter()
        .filter(|n| *n != CONFIG_FILE && !n.ends_with(".json"))
    {
        assert!(
            std::fs::read(a.join(n)).unwrap() == std::fs::read(b.join(n)).unwrap(),
            "{n} differs"
        );
    }
    assert_eq!(
        read_summary(&a).unwrap().mass_drift,
        read_summary(&b).unwrap().mass_drift
    );
}

#[test]
fn config_file_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small(tmp.path(), 8.0);
    cfg.lambda = -1.0;
    cfg.seed = 17;
    let path = tmp.path().join("run.cfg");
    std::fs::write(&path, cfg.to_text()).unwrap();
    let back = SimConfig::load(&path).unwrap();
    assert_eq!(back, cfg);
    assert_eq!(back.hash(), cfg.hash());
    assert!(SimConfig::load(&tmp.path().join("missing.cfg")).is_err());
}

#[test]
fn profile_extraction_on_medium_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = SimConfig {
        l: 256.0,
        n: 2048,
        dt: 0.05,
        t_max: 64.0,
        output_dir: tmp.path().to_path_buf(),
        ..SimConfig::default()
    };
    let s = run_experiment(&cfg).unwrap();
    assert!(s.violations.is_empty(), "{:?}", s.violations);
    assert!(tmp.path().join(CSV_FILE).is_file());
    let r = profile_report(tmp.path(), None).unwrap();
    assert_eq!(r.t_final, 64.0);
    assert!(r.w_inf.is_finite() && r.w_inf > 0.0);
    assert!(!r.residuals.is_empty());
    assert!(r.fits.g_cauchy.slope < 0.0, "{:?}", r.fits.g_cauchy);
    assert_eq!(r.fits.w_shift, None);
    assert!(read_summary(tmp.path()).unwrap().fits.is_some());
    assert!(matches!(
        profile_report(tmp.path(), Some(32.0)),
        Err(dnls::Error::InsufficientRun(_))
    ));
}
