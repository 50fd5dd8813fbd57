use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use vtforge::engine::*;
use vtforge::gesture::{
    ActivationCell, ActivationTrajectory, ActivationVector, DeviceSimulator, LiveInput,
};
use vtforge::tract::{distance_to_area, Tract};

fn act(v: [f64; 4]) -> ActivationVector {
    ActivationVector::new(v).unwrap()
}

fn sweep() -> ActivationTrajectory {
    ActivationTrajectory::new(
        vec![
            (0.0, ActivationVector::REST),
            (0.3, act([0.0, 1.0, 0.0, 0.0])),
            (0.6, act([0.2, 0.0, 0.8, 0.8])),
            (1.0, act([1.0, 0.0, 0.0, 0.3])),
        ],
        None,
    )
    .unwrap()
}

#[test]
fn one_second_at_rest() {
    let traj = ActivationTrajectory::constant(ActivationVector::REST, 1.0);
    let (buf, snaps) = render_offline(&traj, &EngineConfig::default()).unwrap();
    assert_eq!(buf.samples.len(), 44_100);
    assert_eq!(snaps.len(), 100);
    assert!(buf.rms() > 0.0 && buf.all_finite() && buf.peak() <= 1.0);
    let report = analyze_render(&buf).unwrap();
    let f0 = report.f0.unwrap();
    assert!((f0 - 110.0).abs() < 2.0, "{report}");
    assert!(report.formants.len() >= 3, "{report}");
}

#[test]
fn offline_render_is_bit_identical() {
    let cfg = EngineConfig::default();
    let (a, sa) = render_offline(&sweep(), &cfg).unwrap();
    let (b, sb) = render_offline(&sweep(), &cfg).unwrap();
    assert!(a
        .samples
        .iter()
        .zip(&b.samples)
        .all(|(x, y)| x.to_bits() == y.to_bits()));
    assert_eq!(sa, sb);
}

#[test]
fn snapshots_are_self_consistent() {
    let (_, snaps) = render_offline(&sweep(), &EngineConfig::default()).unwrap();
    let tract = Tract::reference();
    for s in snaps.iter().step_by(7) {
        let areas: Vec<f64> = tract
            .distances(&s.tongue)
            .into_iter()
            .map(distance_to_area)
            .collect();
        assert_eq!(areas, s.area, "t = {}", s.t);
        assert_eq!(s.activation, sweep().sample_clamped(s.t));
    }
    // The tongue actually moves.
    assert_ne!(snaps[0].area, snaps[50].area);
}

#[test]
fn two_mass_render_is_voiced() {
    let mut cfg = EngineConfig::default();
    cfg.glottis.mode = vtforge::glottis::GlottalMode::TwoMass;
    let traj = ActivationTrajectory::constant(ActivationVector::REST, 1.0);
    let (buf, _) = render_offline(&traj, &cfg).unwrap();
    let f0 = analyze_render(&buf).unwrap().f0.unwrap();
    assert!((80.0..=200.0).contains(&f0), "{f0}");
    assert!(buf.peak() <= 1.0);
}

#[test]
fn replayed_sensor_stream_matches_offline() {
    let traj = sweep();
    let (offline, _) = render_offline(&traj, &EngineConfig::default()).unwrap();

    let sim = DeviceSimulator::new(traj.clone(), 100.0);
    let cfg = EngineConfig {
        live: true,
        ..Default::default()
    };
    let blocks = Arc::new(Mutex::new(Vec::new()));
    let sink = blocks.clone();
    let session = run_live(
        Engine::from_config(cfg).unwrap(),
        SensorReplay::from_simulator(&sim),
        move |b: AudioBlock| sink.lock().unwrap().push(b),
        |_| {},
        LiveOptions {
            realtime: false,
            max_seconds: Some(traj.duration()),
        },
    )
    .unwrap();
    let stats = session.join().unwrap();
    assert_eq!(stats.blocks, 100);
    let blocks = blocks.lock().unwrap();
    assert!(blocks.iter().enumerate().all(|(i, b)| b.index == i as u64));
    let live: Vec<f64> = blocks.iter().flat_map(|b| b.samples.clone()).collect();
    assert_eq!(live.len(), offline.samples.len());
    let diff: Vec<f64> = live
        .iter()
        .zip(&offline.samples)
        .map(|(a, b)| a - b)
        .collect();
    let err = rms(&diff);
    assert!(err < 1e-3, "rms difference {err}");
}

#[test]
fn silent_source_decays_to_rest() {
    let cell = Arc::new(ActivationCell::new());
    cell.publish(act([1.0, 0.0, 0.0, 0.0]));
    let cfg = EngineConfig {
        live: true,
        ..Default::default()
    };
    let last = Arc::new(Mutex::new(None));
    let keep = last.clone();
    let session = run_live(
        Engine::from_config(cfg).unwrap(),
        LiveInput::new(cell, true),
        |_| {},
        move |s: StateSnapshot| *keep.lock().unwrap() = Some(s),
        LiveOptions {
            realtime: true,
            max_seconds: Some(2.0),
        },
    )
    .unwrap();
    session.join().unwrap();
    let s = last.lock().unwrap().clone().unwrap();
    assert!(s.activation.values()[0] < 0.01, "{:?}", s.activation);
    assert!(s.rms > 0.0);
}

#[test]
fn stop_lands_within_a_tick() {
    let cfg = EngineConfig {
        live: true,
        ..Default::default()
    };
    let session = run_live(
        Engine::from_config(cfg).unwrap(),
        TrajectorySource(ActivationTrajectory::constant(ActivationVector::REST, 1.0)),
        |_| {},
        |_| {},
        LiveOptions {
            realtime: true,
            max_seconds: None,
        },
    )
    .unwrap();
    std::thread::sleep(Duration::from_millis(100));
    let asked = Instant::now();
    session.stop();
    let stats = session.join().unwrap();
    assert!(
        asked.elapsed() < Duration::from_millis(20),
        "{:?}",
        asked.elapsed()
    );
    assert!(stats.blocks >= 5);
    assert!(stats.mean_block_seconds < 0.01, "{stats:?}");
}

#[test]
fn live_requires_live_config() {
    let r = run_live(
        Engine::from_config(EngineConfig::default()).unwrap(),
        TrajectorySource(sweep()),
        |_| {},
        |_| {},
        LiveOptions::default(),
    );
    assert!(r.is_err());
}

#[test]
fn wav_round_trip_of_a_render() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.wav");
    let (buf, _) = render_offline(&sweep(), &EngineConfig::default()).unwrap();
    write_wav(&buf, &path).unwrap();
    assert_eq!(std::fs::metadata(&path).unwrap().len(), 44 + 2 * 44_100);
    let back = read_wav(&path).unwrap();
    let worst = back
        .samples
        .iter()
        .zip(&buf.samples)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(worst <= 0.5 / 32767.0 + 1e-12);
}

#[test]
fn config_file_overrides_and_model_paths() {
    let dir = tempfile::tempdir().unwrap();
    let tongue = dir.path().join("t.model");
    let (model, _) = vtforge::tongue::build_reference_tongue();
    std::fs::write(&tongue, vtforge::tongue::write_model(&model)).unwrap();
    let outline = dir.path().join("o.txt");
    std::fs::write(
        &outline,
        vtforge::tract::TractOutline::reference().to_text(),
    )
    .unwrap();
    let cfg_path = dir.path().join("engine.cfg");
    std::fs::write(
        &cfg_path,
        "glottis.f0 = 150\ntongue.model = t.model\ntract.outline = o.txt\n",
    )
    .unwrap();
    let cfg = EngineConfig::load(Some(&cfg_path)).unwrap();
    assert_eq!(cfg.glottis.rosenberg.f0, 150.0);
    let traj = ActivationTrajectory::constant(ActivationVector::REST, 0.6);
    let (from_files, _) = render_offline(&traj, &cfg).unwrap();
    let builtin = EngineConfig {
        tongue_model: None,
        tract: None,
        ..cfg.clone()
    };
    let (reference, _) = render_offline(&traj, &builtin).unwrap();
    assert_eq!(from_files, reference);
    let f0 = analyze_render(&from_files).unwrap().f0.unwrap();
    assert!((f0 - 150.0).abs() < 2.0, "{f0}");
}
