use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn ivis(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ivis")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn corpus(rel: &str) -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(rel);
    p.to_str().unwrap().to_string()
}

/// Per-test scratch directory under the target dir.
fn scratch(name: &str) -> PathBuf {
    let d = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    let _ = fs::remove_dir_all(&d);
    fs::create_dir_all(&d).unwrap();
    d
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn golden_scenario_passes() {
    let dir = scratch("golden");
    let report = dir.join("report.txt");
    let events = dir.join("events.txt");
    let o = ivis(&["run", &corpus("scenarios/golden.scenario"), "--report", s(&report), "--events", s(&events)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(report).unwrap();
    assert!(text.lines().any(|l| l == "result pass"));
    assert!(text.contains("final mode=Media"));
    assert!(fs::read_to_string(events).unwrap().contains(" tap"));
}

#[test]
fn failing_expectation_exits_one() {
    let dir = scratch("failing");
    let sc = dir.join("fail.scenario");
    fs::write(&sc, "0 synth tap\n3 expect media.playing=false\n").unwrap();
    let o = ivis(&["run", s(&sc)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("result fail"));
}

#[test]
fn errors_exit_two() {
    assert_eq!(ivis(&["run", "/nonexistent.scenario"]).status.code(), Some(2));
    assert_eq!(ivis(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(ivis(&["haptics", "anchor"]).status.code(), Some(2));
    let dir = scratch("bad-scenario");
    let sc = dir.join("bad.scenario");
    fs::write(&sc, "1 expect warp=9\n").unwrap();
    let o = ivis(&["run", s(&sc)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 1"));
}

#[test]
fn config_round_trips() {
    let o = ivis(&["--print-config"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("pinch_on = 0.8"));
    let dir = scratch("config");
    let cfg = dir.join("rec.conf");
    fs::write(&cfg, text.replace("pinch_on = 0.8", "pinch_on = 0.85")).unwrap();
    let again = stdout(&ivis(&["--config", s(&cfg), "--print-config"]));
    assert!(again.contains("pinch_on = 0.85"));
    fs::write(&cfg, "pinch_on = 0.2\n").unwrap();
    assert_eq!(ivis(&["--config", s(&cfg), "--print-config"]).status.code(), Some(2));
}

#[test]
fn synth_then_recognize_then_score() {
    let dir = scratch("synth");
    let traj = dir.join("swipe.traj");
    let o = ivis(&["synth", "swipe-left", "--seed", "4", "--start", "1", "--out", s(&traj)]);
    assert_eq!(o.status.code(), Some(0));
    let events = dir.join("events.txt");
    assert_eq!(ivis(&["recognize", s(&traj), "--out", s(&events)]).status.code(), Some(0));
    let log = fs::read_to_string(&events).unwrap();
    let lines: Vec<_> = log.lines().collect();
    assert_eq!(lines.len(), 1, "{log}");
    let (t, kind) = lines[0].split_once(' ').unwrap();
    assert_eq!(kind, "swipe-left");
    let t: f64 = t.parse().unwrap();
    let labels = dir.join("labels.txt");
    fs::write(&labels, format!("# t kind\n{} swipe-left\n", t + 0.1)).unwrap();
    let o = ivis(&["score", s(&labels), s(&events)]);
    assert_eq!(stdout(&o), "precision 1.000000\nrecall 1.000000\n");
    let o = ivis(&["score", s(&labels), s(&events), "--tol", "0.05"]);
    assert_eq!(stdout(&o), "precision 0.000000\nrecall 0.000000\n");
}

#[test]
fn synth_is_seeded() {
    let a = stdout(&ivis(&["synth", "tap", "--seed", "7"]));
    let b = stdout(&ivis(&["synth", "tap", "--seed", "7"]));
    let c = stdout(&ivis(&["synth", "tap", "--seed", "8"]));
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn field_slice_peaks_at_focus() {
    let o = ivis(&["field", "--focus", "0.01,0,0.2", "--plane", "z=0.2", "--extent", "10", "--res", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let csv = stdout(&o);
    let rows: Vec<_> = csv.lines().collect();
    assert_eq!(rows.len(), 12);
    assert_eq!(rows[0].split(',').count(), 12);
    let err = String::from_utf8(o.stderr).unwrap();
    let coords: Vec<f64> = err
        .strip_prefix("argmax ")
        .and_then(|r| r.split_whitespace().next())
        .unwrap()
        .split(',')
        .map(|c| c.parse().unwrap())
        .collect();
    assert!((coords[0] - 0.01).abs() < 1e-12 && coords[1].abs() < 1e-12, "{err}");
}

#[test]
fn haptics_timeline_has_one_sample_per_tick() {
    let o = ivis(&["haptics", "double-tap", "--rate", "1000"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let samples: Vec<_> = text.lines().filter(|l| !l.starts_with('#')).collect();
    let times: Vec<f64> = samples
        .iter()
        .map(|l| l.split_whitespace().next().unwrap().parse().unwrap())
        .collect();
    // 0.7 s at 1 kHz, minus the 99 ticks strictly inside the gap.
    assert_eq!(times.len(), 701 - 99);
    assert!(times.iter().all(|t| !(0.3 < *t && *t < 0.4)));
    let o = ivis(&["haptics", "value:0.5", "--length", "0.01", "--envelope", "am"]);
    assert!(stdout(&o).lines().skip(1).all(|l| l.ends_with("AM-200Hz")));
}
