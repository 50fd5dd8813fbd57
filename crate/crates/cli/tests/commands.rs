use std::path::Path;
use std::process::{Command, Output};

fn vtforge(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vtforge"))
        .args(args)
        .current_dir(dir)
        .env_remove("VTFORGE_CONFIG")
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

#[test]
fn render_then_analyze() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "rest.traj", "0 0 0 0 0\n1 0 0 0 0\n");
    let out = vtforge(
        &[
            "render",
            "--traj",
            "rest.traj",
            "--out",
            "rest.wav",
            "--states",
            "s.jsonl",
        ],
        dir.path(),
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(
        std::fs::metadata(dir.path().join("rest.wav"))
            .unwrap()
            .len(),
        44 + 88_200
    );
    let states = std::fs::read_to_string(dir.path().join("s.jsonl")).unwrap();
    assert_eq!(states.lines().count(), 100);
    assert!(states.starts_with(r#"{"type":"state","t":0.0,"#));

    let out = vtforge(&["analyze", "--in", "rest.wav"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let report = String::from_utf8(out.stdout).unwrap();
    for key in ["rms:", "f0:", "formants:", "clipped: 0"] {
        assert!(report.contains(key), "{report}");
    }
    let f0: f64 = report
        .lines()
        .find_map(|l| l.strip_prefix("f0: "))
        .unwrap()
        .parse()
        .unwrap();
    assert!((f0 - 110.0).abs() < 2.0, "{report}");
}

#[test]
fn config_and_global_model_flags() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "a.traj", "0 0 1 0 0\n0.6 0 1 0 0\n");
    write(dir.path(), "c.cfg", "glottis.f0 = 140\n");
    let (model, _) = vtforge::tongue::build_reference_tongue();
    write(dir.path(), "t.model", &vtforge::tongue::write_model(&model));
    write(
        dir.path(),
        "o.txt",
        &vtforge::tract::TractOutline::reference().to_text(),
    );
    let out = vtforge(
        &[
            "--tongue-model",
            "t.model",
            "render",
            "--traj",
            "a.traj",
            "--out",
            "a.wav",
            "--config",
            "c.cfg",
            "--tract",
            "o.txt",
        ],
        dir.path(),
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let buf = vtforge::engine::read_wav(&dir.path().join("a.wav")).unwrap();
    let f0 = vtforge::engine::analyze_render(&buf).unwrap().f0.unwrap();
    assert!((f0 - 140.0).abs() < 2.0);

    let out = vtforge(
        &[
            "--tract",
            "missing.txt",
            "render",
            "--traj",
            "a.traj",
            "--out",
            "b.wav",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.txt"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "bad.traj", "0 0 0 0\n");
    assert_eq!(
        vtforge(&["render", "--bogus"], dir.path()).status.code(),
        Some(2)
    );
    assert_eq!(
        vtforge(&["render", "--traj", "x"], dir.path())
            .status
            .code(),
        Some(2)
    );
    assert_eq!(vtforge(&["frobnicate"], dir.path()).status.code(), Some(2));
    assert_eq!(vtforge(&["--help"], dir.path()).status.code(), Some(0));
    let out = vtforge(
        &["render", "--traj", "bad.traj", "--out", "o.wav"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));
    assert_eq!(
        vtforge(&["analyze", "--in", "nope.wav"], dir.path())
            .status
            .code(),
        Some(1)
    );
    write(dir.path(), "bad.cfg", "glottis.f0 = fast\n");
    write(dir.path(), "ok.traj", "0 0 0 0 0\n0.1 0 0 0 0\n");
    let out = vtforge(
        &[
            "render", "--traj", "ok.traj", "--out", "o.wav", "--config", "bad.cfg",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn simulate_writes_sensor_lines() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "a.traj", "0 0 0 0 0\n1 1 0 0.5 0\n");
    let out = vtforge(
        &["simulate", "--traj", "a.traj", "--rate", "50"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 51);
    assert_eq!(text.lines().last().unwrap(), "F 1023 8 516 8");
}
