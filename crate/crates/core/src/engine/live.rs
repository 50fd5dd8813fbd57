use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use super::{ConfigError, Engine, EngineError, StateSnapshot};
use crate::gesture::{
    map_force_to_activation, ActivationTrajectory, ActivationVector, CalibrationMap,
    DeviceSimulator, LiveInput, SensorParser,
};

/// Where the live engine gets its activation at each tick. `t` is engine
/// time in seconds.
pub trait ActivationSource: Send {
    fn activation(&mut self, t: f64) -> ActivationVector;
}

/// Wall-clock reads of the shared mailbox.
impl ActivationSource for LiveInput {
    fn activation(&mut self, _t: f64) -> ActivationVector {
        self.current()
    }
}

/// Samples a trajectory at engine time.
#[derive(Debug, Clone)]
pub struct TrajectorySource(pub ActivationTrajectory);

impl ActivationSource for TrajectorySource {
    fn activation(&mut self, t: f64) -> ActivationVector {
        self.0.sample_clamped(t)
    }
}

/// Replays recorded sensor lines through the parser and calibration, each
/// becoming visible once engine time reaches its timestamp.
#[derive(Debug)]
pub struct SensorReplay {
    frames: Vec<(f64, String)>,
    next: usize,
    parser: SensorParser,
    calibration: CalibrationMap,
    current: ActivationVector,
}

impl SensorReplay {
    pub fn new(frames: Vec<(f64, String)>, calibration: CalibrationMap) -> Self {
        SensorReplay {
            frames,
            next: 0,
            parser: SensorParser::new(),
            calibration,
            current: ActivationVector::REST,
        }
    }

    pub fn from_simulator(sim: &DeviceSimulator) -> Self {
        Self::new(sim.frames().collect(), sim.calibration)
    }
}

impl ActivationSource for SensorReplay {
    fn activation(&mut self, t: f64) -> ActivationVector {
        while let Some((ft, line)) = self.frames.get(self.next) {
            if *ft > t + 1e-9 {
                break;
            }
            match self.parser.parse_line(line, *ft) {
                Ok(f) => self.current = map_force_to_activation(&f, &self.calibration),
                Err(e) => log::debug!("replay: {e}"),
            }
            self.next += 1;
        }
        self.current
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AudioBlock {
    /// Gap-free from 0.
    pub index: u64,
    pub samples: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LiveOptions {
    /// Pace blocks to the wall clock; otherwise run as fast as possible.
    pub realtime: bool,
    /// Stop on their own after this much engine time.
    pub max_seconds: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LiveStats {
    pub blocks: u64,
    /// Mean compute time per block, s.
    pub mean_block_seconds: f64,
    pub max_block_seconds: f64,
    /// Blocks that finished after their real-time deadline.
    pub late_blocks: u64,
}

/// Handle to a running live engine.
#[derive(Debug)]
pub struct LiveSession {
    stop: Arc<AtomicBool>,
    handle: Option<JoinHandle<Result<LiveStats, EngineError>>>,
}

impl LiveSession {
    /// Asks the engine to stop after the block in progress.
    pub fn stop(&self) {
        self.stop.store(true, Ordering::Release);
    }

    pub fn is_finished(&self) -> bool {
        self.handle.as_ref().is_none_or(|h| h.is_finished())
    }

    pub fn join(mut self) -> Result<LiveStats, EngineError> {
        let h = self.handle.take().expect("joined once");
        h.join().unwrap_or_else(|_| {
            Err(EngineError::Io(std::io::Error::other(
                "engine thread panicked",
            )))
        })
    }
}

impl Drop for LiveSession {
    fn drop(&mut self) {
        self.stop();
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

/// Runs `engine` on its own thread, one block per control tick. Both sinks
/// are called on the engine thread and must not block; dropping or queueing
/// is up to them.
pub fn run_live<S, A, T>(
    mut engine: Engine,
    mut source: S,
    mut audio: A,
    mut state: T,
    opts: LiveOptions,
) -> Result<LiveSession, EngineError>
where
    S: ActivationSource + 'static,
    A: FnMut(AudioBlock) + Send + 'static,
    T: FnMut(StateSnapshot) + Send + 'static,
{
    if !engine.config().live {
        return Err(ConfigError::Invalid("run_live needs a live-mode config".into()).into());
    }
    let stop = Arc::new(AtomicBool::new(false));
    let flag = stop.clone();
    let handle = thread::Builder::new()
        .name("engine".into())
        .spawn(move || {
            let r = live_loop(
                &mut engine,
                &mut source,
                &mut audio,
                &mut state,
                opts,
                &flag,
            );
            if let Err(e) = &r {
                log::error!("live engine stopped: {e}");
            }
            r
        })?;
    Ok(LiveSession {
        stop,
        handle: Some(handle),
    })
}

fn live_loop(
    engine: &mut Engine,
    source: &mut impl ActivationSource,
    audio: &mut impl FnMut(AudioBlock),
    state: &mut impl FnMut(StateSnapshot),
    opts: LiveOptions,
    stop: &AtomicBool,
) -> Result<LiveStats, EngineError> {
    let block = engine.config().block_size();
    let rate = engine.config().control_rate as f64;
    let period = Duration::from_secs_f64(1.0 / rate);
    let limit = opts.max_seconds.map(|s| (s * rate).round() as u64);
    let start = Instant::now();
    let mut stats = LiveStats::default();
    let mut busy = 0.0;
    let mut index = 0u64;
    while !stop.load(Ordering::Acquire) && limit.is_none_or(|n| index < n) {
        let began = Instant::now();
        let act = source.activation(engine.time());
        let mut samples = vec![0.0; block];
        let snap = engine.run_tick(act, &mut samples)?;
        audio(AudioBlock { index, samples });
        state(snap);
        let spent = began.elapsed().as_secs_f64();
        busy += spent;
        stats.max_block_seconds = stats.max_block_seconds.max(spent);
        index += 1;
        let deadline = period * index as u32;
        if start.elapsed() > deadline {
            stats.late_blocks += 1;
        } else if opts.realtime {
            thread::sleep(deadline.saturating_sub(start.elapsed()));
        }
    }
    stats.blocks = index;
    stats.mean_block_seconds = if index > 0 { busy / index as f64 } else { 0.0 };
    Ok(stats)
}
