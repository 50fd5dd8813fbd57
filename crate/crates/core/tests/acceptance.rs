//! Acceptance checks. Runs without the libtest harness so that every
//! criterion prints exactly one PASS/FAIL line even under captured output.

use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use vtforge::acoustics::*;
use vtforge::engine::*;
use vtforge::exec::Execution;
use vtforge::gesture::{
    map_force_to_activation, ActivationTrajectory, ActivationVector, CalibrationMap,
    ChannelCalibration, DeviceSimulator, Muscle, SensorFrame,
};
use vtforge::glottis::*;
use vtforge::tongue::*;
use vtforge::tract::{AreaFunction, Tract};

const FS: f64 = 44_100.0;

const FORMANT_TARGETS: [f64; 3] = [500.0, 1500.0, 2500.0];
const FORMANT_TOL: f64 = 0.05;
const UNIFORM_BUDGET: Duration = Duration::from_secs(5);
const CHAIN_TOL: f64 = 0.05;
const CORNER_SECONDS: f64 = 2.0;
const CORNER_BUDGET: Duration = Duration::from_secs(120);
const LOSSLESS_STEPS: usize = 10_000;
const LOSSLESS_DRIFT: f64 = 1e-3;
const SETTLE_TOL: f64 = 1e-2;
const SETTLE_MAX_STEPS: usize = 80_000;
const TWO_MASS_PS: f64 = 8_000.0;
const TWO_MASS_F0: (f64, f64) = (80.0, 200.0);
const TWO_MASS_SECONDS: f64 = 1.0;
const MAPPING_CASES: u32 = 512;
const REPLAY_RMS: f64 = 1e-3;
const LONG_RENDER_SECONDS: f64 = 10.0;
const LONG_RENDER_BUDGET: Duration = Duration::from_secs(10);

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn act(v: [f64; 4]) -> ActivationVector {
    ActivationVector::new(v).unwrap()
}

/// Lowest three spectral peaks of a flow impulse response, twins within
/// 50 Hz merged.
fn impulse_peaks(tube: &mut Tube, seconds: f64) -> Vec<f64> {
    let mut first = true;
    let y: Vec<f64> = (0..(seconds * FS) as usize)
        .map(|_| {
            tube.audio_sample::<AcousticsError>(|_| {
                Ok(if std::mem::take(&mut first) {
                    1000.0
                } else {
                    0.0
                })
            })
            .unwrap()
        })
        .collect();
    let mut merged: Vec<Peak> = Vec::new();
    for p in spectral_peaks(&y, FS, 4_000.0, 40.0, false) {
        match merged.last_mut() {
            Some(last) if p.freq - last.freq < 50.0 => {
                if p.magnitude > last.magnitude {
                    *last = p;
                }
            }
            _ => merged.push(p),
        }
    }
    merged.iter().take(3).map(|p| p.freq).collect()
}

fn uniform_tube_formants() -> Outcome {
    let start = Instant::now();
    let params = AcousticParams::default();
    let af = AreaFunction::uniform(22, 17.5, 3.0);
    let mut tube = Tube::radiating(params, build_grid(&af, 2)).map_err(|e| e.to_string())?;
    let glottis = GlottisParams {
        rosenberg: RosenbergParams {
            f0: 110.0,
            ..Default::default()
        },
        ..Default::default()
    };
    let mut g = GlottalState::new(GlottalMode::Rosenberg);
    let dt = tube.dt();
    let y: Vec<f64> = (0..FS as usize)
        .map(|_| {
            tube.audio_sample::<AcousticsError>(|p| {
                Ok(glottal_tick(&mut g, &glottis, p, dt).expect("rosenberg cannot fail"))
            })
            .unwrap()
        })
        .collect();
    let f = find_formants(&y, FS).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let within = f.len() >= 3
        && f.iter()
            .zip(FORMANT_TARGETS)
            .all(|(g, w)| (g - w).abs() / w <= FORMANT_TOL);
    check(
        within && elapsed < UNIFORM_BUDGET,
        format!("formants {:.0?} Hz in {elapsed:.2?}", &f[..f.len().min(3)]),
    )
}

fn solver_vs_chain() -> Outcome {
    let params = AcousticParams::default();
    let (model, _) = build_reference_tongue();
    let tract = Tract::reference();
    let mut shapes = vec![("uniform".to_string(), AreaFunction::uniform(22, 17.5, 3.0))];
    for m in Muscle::ALL {
        let mut v = [0.0; 4];
        v[m.index()] = 1.0;
        let s = settle_quasi_static(
            &act(v),
            &model,
            &DynamicsParams::default(),
            SETTLE_TOL,
            SETTLE_MAX_STEPS,
        )
        .map_err(|e| e.to_string())?;
        shapes.push((
            m.name().to_string(),
            tract.area_function(&s.state, &model.mesh),
        ));
    }
    let mut worst = 0.0f64;
    let mut lines = Vec::new();
    for (name, af) in &shapes {
        let mut tube = Tube::radiating(params, build_grid(af, 2)).map_err(|e| e.to_string())?;
        let fdtd = impulse_peaks(&mut tube, 0.5);
        let chain: Vec<f64> = chain_matrix_peaks(af, &params, 4_000.0, 1.0, Execution::Sequential)
            .map_err(|e| e.to_string())?
            .iter()
            .take(3)
            .map(|p| p.freq)
            .collect();
        if fdtd.len() < 3 || chain.len() < 3 {
            return Err(format!(
                "{name}: too few peaks, fdtd {fdtd:.0?} chain {chain:.0?}"
            ));
        }
        for (a, b) in fdtd.iter().zip(&chain) {
            worst = worst.max((a - b).abs() / b);
        }
        lines.push(format!("{name} {fdtd:.0?}/{chain:.0?}"));
    }
    check(
        worst <= CHAIN_TOL,
        format!("worst {:.2}%: {}", 100.0 * worst, lines.join(", ")),
    )
}

fn corners_are_stable() -> Outcome {
    let start = Instant::now();
    let trajs: Vec<ActivationTrajectory> = ActivationVector::corners()
        .into_iter()
        .map(|a| ActivationTrajectory::constant(a, CORNER_SECONDS))
        .collect();
    let renders = render_batch(&trajs, &EngineConfig::default(), Execution::default())
        .map_err(|e| e.to_string())?;
    let mut peak = 0.0f64;
    for (i, r) in renders.into_iter().enumerate() {
        let (buf, _) = r.map_err(|e| format!("corner {i}: {e}"))?;
        if !buf.all_finite() {
            return Err(format!("corner {i}: non-finite sample"));
        }
        peak = peak.max(buf.peak());
    }
    let elapsed = start.elapsed();
    check(
        peak <= 1.0 && elapsed < CORNER_BUDGET,
        format!("16 corners, peak {peak:.4}, {elapsed:.2?}"),
    )
}

fn energy_behaviour() -> Outcome {
    let lossless = AcousticParams {
        loss: 0.0,
        ..Default::default()
    };
    let areas: Vec<f64> = (0..44)
        .map(|i| 0.5 + 4.0 * (i as f64 / 9.0).sin().powi(2))
        .collect();
    let grid = TubeGrid {
        areas,
        dx: 17.5 / 44.0,
    };
    let mut tube = Tube::new(lossless, grid.clone(), GlottalEnd::Closed, LipEnd::Rigid)
        .map_err(|e| e.to_string())?;
    tube.excite_pressure(5, 2000.0);
    tube.excite_pressure(30, -700.0);
    tube.step(0.0).map_err(|e| e.to_string())?;
    let e0 = tube.energy();
    let mut drift = 0.0f64;
    for _ in 0..LOSSLESS_STEPS {
        tube.step(0.0).map_err(|e| e.to_string())?;
        drift = drift.max((tube.energy() - e0).abs() / e0);
    }

    let mut lossy = Tube::new(
        AcousticParams::default(),
        grid,
        GlottalEnd::Closed,
        LipEnd::Rigid,
    )
    .map_err(|e| e.to_string())?;
    lossy.excite_pressure(20, 1000.0);
    lossy.step(0.0).map_err(|e| e.to_string())?;
    let mut prev = lossy.energy();
    let mut rises = 0;
    for _ in 0..LOSSLESS_STEPS {
        lossy.step(0.0).map_err(|e| e.to_string())?;
        let e = lossy.energy();
        if e > prev * (1.0 + 1e-12) {
            rises += 1;
        }
        prev = e;
    }
    check(
        drift < LOSSLESS_DRIFT && rises == 0,
        format!("lossless drift {:.2e}, lossy rises {rises}", drift),
    )
}

fn tongue_directions() -> Outcome {
    let (model, _) = build_reference_tongue();
    let params = DynamicsParams::default();
    let settle = |v: [f64; 4]| {
        settle_quasi_static(&act(v), &model, &params, SETTLE_TOL, SETTLE_MAX_STEPS)
            .map(|s| s.state)
            .map_err(|e| e.to_string())
    };
    let mut lengths = Vec::new();
    for a in [0.0, 0.25, 0.5, 0.75, 1.0] {
        lengths.push(surface_arc_length(&settle([0.0, 0.0, a, a])?, &model.mesh));
    }
    let shrinking = lengths.windows(2).all(|w| w[1] < w[0]);
    let tip_dx = settle([0.0, 1.0, 0.0, 0.0])?.pos[0].x - model.mesh.nodes[0].x;
    check(
        shrinking && tip_dx > 0.0,
        format!("SL=IL arc lengths {lengths:.3?} cm, GGP tip dx {tip_dx:+.3} cm"),
    )
}

fn two_mass_oscillates() -> Outcome {
    let dt = 1.0 / (3.0 * FS);
    let run = |ps: f64| -> Result<Vec<f64>, String> {
        let p = TwoMassParams {
            ps,
            ..Default::default()
        };
        let mut s = FoldState::onset();
        (0..(3.0 * FS * TWO_MASS_SECONDS) as usize)
            .map(|_| two_mass_step(&mut s, &p, 0.0, dt).map_err(|e| e.to_string()))
            .collect()
    };
    let voiced = run(TWO_MASS_PS)?;
    let tail = &voiced[voiced.len() / 2..];
    let f0 = estimate_f0(tail, 3.0 * FS);
    let silent = run(0.0)?;
    let max_silent = silent.iter().fold(0.0f64, |m, u| m.max(u.abs()));
    let ok = f0.is_some_and(|f| (TWO_MASS_F0.0..=TWO_MASS_F0.1).contains(&f)) && max_silent == 0.0;
    check(
        ok,
        format!("f0 {f0:.1?} Hz at Ps {TWO_MASS_PS}, max flow {max_silent} at Ps 0"),
    )
}

fn force_mapping() -> Outcome {
    let mut runner = TestRunner::new(Config {
        cases: MAPPING_CASES,
        failure_persistence: None,
        ..Config::default()
    });
    let strategy = (0u16..512, 513u16..=1023, 0u16..64, 0u16..=1023, 0u16..=1023);
    let result = runner.run(&strategy, |(lo, hi, dz, a, b)| {
        let Ok(cal) = ChannelCalibration::new(lo, hi, dz) else {
            return Ok(());
        };
        let (ya, yb) = (cal.map(a.min(b)), cal.map(a.max(b)));
        prop_assert!(
            ya <= yb,
            "not monotone: {} -> {}, {} -> {}",
            a.min(b),
            ya,
            a.max(b),
            yb
        );
        prop_assert!((0.0..=1.0).contains(&ya) && (0.0..=1.0).contains(&yb));
        Ok(())
    });
    let cal = CalibrationMap::default();
    let frame = |raw| SensorFrame {
        raw,
        seq: 0,
        t: 0.0,
    };
    let zero = map_force_to_activation(&frame([0; 4]), &cal).values();
    let full = map_force_to_activation(&frame([1023; 4]), &cal).values();
    let ends = zero == [0.0; 4] && full == [1.0; 4];
    match result {
        Ok(()) => check(
            ends,
            format!("{MAPPING_CASES} cases monotone in [0,1], 0 -> {zero:?}, 1023 -> {full:?}"),
        ),
        Err(e) => Err(e.to_string()),
    }
}

fn determinism_and_replay() -> Outcome {
    let traj = ActivationTrajectory::new(
        vec![
            (0.0, ActivationVector::REST),
            (0.3, act([0.0, 1.0, 0.0, 0.0])),
            (0.6, act([0.2, 0.0, 0.8, 0.8])),
            (1.0, act([1.0, 0.0, 0.0, 0.3])),
        ],
        None,
    )
    .map_err(|e| e.to_string())?;
    let cfg = EngineConfig::default();
    let (a, sa) = render_offline(&traj, &cfg).map_err(|e| e.to_string())?;
    let (b, sb) = render_offline(&traj, &cfg).map_err(|e| e.to_string())?;
    let identical = a.samples.len() == b.samples.len()
        && a.samples
            .iter()
            .zip(&b.samples)
            .all(|(x, y)| x.to_bits() == y.to_bits())
        && sa == sb;

    let live_cfg = EngineConfig {
        live: true,
        ..Default::default()
    };
    let sim = DeviceSimulator::new(traj.clone(), 100.0);
    let blocks = Arc::new(Mutex::new(Vec::new()));
    let sink = blocks.clone();
    let session = run_live(
        Engine::from_config(live_cfg).map_err(|e| e.to_string())?,
        SensorReplay::from_simulator(&sim),
        move |blk: AudioBlock| sink.lock().unwrap().extend(blk.samples),
        |_| {},
        LiveOptions {
            realtime: false,
            max_seconds: Some(traj.duration()),
        },
    )
    .map_err(|e| e.to_string())?;
    session.join().map_err(|e| e.to_string())?;
    let live = blocks.lock().unwrap();
    if live.len() != a.samples.len() {
        return Err(format!(
            "live produced {} samples, offline {}",
            live.len(),
            a.samples.len()
        ));
    }
    let diff: Vec<f64> = live.iter().zip(&a.samples).map(|(x, y)| x - y).collect();
    let err = rms(&diff);
    check(
        identical && err < REPLAY_RMS,
        format!("bit-identical {identical}, live replay rms diff {err:.2e}"),
    )
}

fn long_render_speed() -> Outcome {
    let traj = ActivationTrajectory::new(
        vec![
            (0.0, ActivationVector::REST),
            (2.5, act([0.0, 1.0, 0.0, 0.0])),
            (5.0, act([0.0, 0.0, 1.0, 1.0])),
            (7.5, act([1.0, 0.0, 0.0, 0.0])),
            (LONG_RENDER_SECONDS, ActivationVector::REST),
        ],
        None,
    )
    .map_err(|e| e.to_string())?;
    let start = Instant::now();
    let (buf, _) = render_offline(&traj, &EngineConfig::default()).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    check(
        elapsed < LONG_RENDER_BUDGET && buf.duration() == LONG_RENDER_SECONDS,
        format!("{:.1} s of audio in {elapsed:.2?}", buf.duration()),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 9] = [
        ("uniform tube formants", uniform_tube_formants),
        ("solver agrees with chain matrix", solver_vs_chain),
        ("corner renders stay bounded", corners_are_stable),
        ("energy conservation and loss", energy_behaviour),
        ("tongue deformation directions", tongue_directions),
        ("two-mass self-oscillation", two_mass_oscillates),
        ("force to activation mapping", force_mapping),
        ("determinism and live replay", determinism_and_replay),
        ("ten second render speed", long_render_speed),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(d) => println!("PASS {} {name}: {d}", i + 1),
            Err(d) => {
                failed += 1;
                println!("FAIL {} {name}: {d}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
