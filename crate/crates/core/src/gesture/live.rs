use std::io::{self, BufRead, Write};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use arc_swap::ArcSwapOption;

use super::{
    map_force_to_activation, ActivationTrajectory, ActivationVector, CalibrationMap, SensorParser,
};

/// Silence tolerated before activations start to decay.
pub const DROPOUT_HOLD_S: f64 = 0.25;
/// Time constant of the decay toward rest once the hold expires.
pub const DROPOUT_TAU_S: f64 = 0.2;

/// Activation after `silence` seconds without a new frame.
pub fn dropout_envelope(last: &ActivationVector, silence: f64) -> ActivationVector {
    if silence <= DROPOUT_HOLD_S {
        *last
    } else {
        last.scaled((-(silence - DROPOUT_HOLD_S) / DROPOUT_TAU_S).exp())
    }
}

#[derive(Debug, Clone, Copy)]
struct Published {
    act: ActivationVector,
    t: f64,
}

/// Single-slot, keep-latest activation mailbox. Writers overwrite; readers
/// never block.
#[derive(Debug)]
pub struct ActivationCell {
    slot: ArcSwapOption<Published>,
    epoch: Instant,
}

impl Default for ActivationCell {
    fn default() -> Self {
        Self::new()
    }
}

impl ActivationCell {
    pub fn new() -> Self {
        ActivationCell {
            slot: ArcSwapOption::empty(),
            epoch: Instant::now(),
        }
    }

    /// Seconds since the cell was created.
    pub fn now(&self) -> f64 {
        self.epoch.elapsed().as_secs_f64()
    }

    pub fn publish(&self, act: ActivationVector) {
        self.publish_at(act, self.now());
    }

    pub fn publish_at(&self, act: ActivationVector, t: f64) {
        self.slot.store(Some(Arc::new(Published { act, t })));
    }

    /// Latest value and its publish time.
    pub fn latest(&self) -> Option<(ActivationVector, f64)> {
        self.slot.load().as_ref().map(|p| (p.act, p.t))
    }
}

/// Reads the shared cell on behalf of the engine, optionally applying the
/// dropout policy (sensor streams send continuously, UI clients do not).
#[derive(Debug, Clone)]
pub struct LiveInput {
    cell: Arc<ActivationCell>,
    dropout: bool,
}

impl LiveInput {
    pub fn new(cell: Arc<ActivationCell>, dropout: bool) -> Self {
        LiveInput { cell, dropout }
    }

    pub fn cell(&self) -> &Arc<ActivationCell> {
        &self.cell
    }

    pub fn current(&self) -> ActivationVector {
        self.current_at(self.cell.now())
    }

    pub fn current_at(&self, now: f64) -> ActivationVector {
        match self.cell.latest() {
            None => ActivationVector::REST,
            Some((a, t)) if self.dropout => dropout_envelope(&a, now - t),
            Some((a, _)) => a,
        }
    }
}

/// Spawns a thread that parses sensor lines from `reader` and publishes the
/// mapped activations. Malformed lines are dropped. Returns the number of
/// frames accepted once the stream ends.
pub fn spawn_sensor_reader<R>(
    reader: R,
    cal: CalibrationMap,
    cell: Arc<ActivationCell>,
) -> JoinHandle<io::Result<u64>>
where
    R: BufRead + Send + 'static,
{
    thread::Builder::new()
        .name("sensor-reader".into())
        .spawn(move || {
            let mut parser = SensorParser::new();
            let mut accepted = 0u64;
            for line in reader.lines() {
                let line = match line {
                    Ok(l) => l,
                    Err(e) if e.kind() == io::ErrorKind::InvalidData => {
                        log::debug!("dropping undecodable sensor line");
                        continue;
                    }
                    Err(e) => return Err(e),
                };
                match parser.parse_line(&line, cell.now()) {
                    Ok(frame) => {
                        cell.publish_at(map_force_to_activation(&frame, &cal), frame.t);
                        accepted += 1;
                    }
                    Err(e) => log::debug!("{e}"),
                }
            }
            Ok(accepted)
        })
        .expect("spawn sensor reader")
}

/// Emits sensor frames for a trajectory, standing in for the joystick box.
#[derive(Debug, Clone)]
pub struct DeviceSimulator {
    pub trajectory: ActivationTrajectory,
    pub calibration: CalibrationMap,
    /// Frames per second.
    pub frame_rate: f64,
    pub baud: u32,
}

impl DeviceSimulator {
    pub fn new(trajectory: ActivationTrajectory, frame_rate: f64) -> Self {
        DeviceSimulator {
            trajectory,
            calibration: CalibrationMap::default(),
            frame_rate,
            baud: 115_200,
        }
    }

    /// `(time, line)` pairs covering the trajectory, newline included.
    pub fn frames(&self) -> impl Iterator<Item = (f64, String)> + '_ {
        let n = (self.trajectory.duration() * self.frame_rate).floor() as u64 + 1;
        (0..n).map(move |i| {
            let t = i as f64 / self.frame_rate;
            let a = self.trajectory.sample_clamped(t);
            let frame = self.calibration.encode(&a, i, t);
            (t, format!("{}\n", frame.to_line()))
        })
    }

    /// Writes every frame; with `realtime` the writer is paced at the frame
    /// rate, never faster than the serial line could carry.
    pub fn write_to<W: Write>(&self, mut out: W, realtime: bool) -> io::Result<u64> {
        let start = Instant::now();
        let mut wire_time = 0.0;
        let mut count = 0;
        for (t, line) in self.frames() {
            if realtime {
                wire_time = f64::max(wire_time, t) + line.len() as f64 * 10.0 / self.baud as f64;
                let due = Duration::from_secs_f64(wire_time);
                if let Some(wait) = due.checked_sub(start.elapsed()) {
                    thread::sleep(wait);
                }
            }
            out.write_all(line.as_bytes())?;
            if realtime {
                out.flush()?;
            }
            count += 1;
        }
        out.flush()?;
        Ok(count)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dropout_holds_then_decays() {
        let a = ActivationVector::new([1.0, 0.5, 0.0, 0.2]).unwrap();
        assert_eq!(dropout_envelope(&a, 0.1), a);
        assert_eq!(dropout_envelope(&a, 0.25), a);
        let d = dropout_envelope(&a, 0.45).values();
        assert!((d[0] - (-1.0f64).exp()).abs() < 1e-12);
        assert!((d[1] - 0.5 * (-1.0f64).exp()).abs() < 1e-12);
        assert!(dropout_envelope(&a, 5.0).values()[0] < 1e-9);
    }

    #[test]
    fn cell_keeps_latest() {
        let cell = Arc::new(ActivationCell::new());
        assert!(cell.latest().is_none());
        let input = LiveInput::new(cell.clone(), true);
        assert_eq!(input.current_at(10.0), ActivationVector::REST);
        cell.publish_at(ActivationVector::clamped([0.1; 4]), 1.0);
        cell.publish_at(ActivationVector::clamped([0.7; 4]), 1.01);
        assert_eq!(input.current_at(1.1).values(), [0.7; 4]);
        assert!(input.current_at(3.0).values()[0] < 0.01);
        let hold = LiveInput::new(cell, false);
        assert_eq!(hold.current_at(100.0).values(), [0.7; 4]);
    }

    #[test]
    fn reader_publishes_and_skips_garbage() {
        let cell = Arc::new(ActivationCell::new());
        let text = "F 0 0 0 0\nnonsense\nF 1023 8 0 0\nF 5 5 5\n";
        let n = spawn_sensor_reader(text.as_bytes(), CalibrationMap::default(), cell.clone())
            .join()
            .unwrap()
            .unwrap();
        assert_eq!(n, 2);
        assert_eq!(cell.latest().unwrap().0.values(), [1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn simulator_frames_decode_to_trajectory() {
        let traj = ActivationTrajectory::new(
            vec![
                (0.0, ActivationVector::REST),
                (1.0, ActivationVector::new([1.0, 0.5, 0.0, 0.25]).unwrap()),
            ],
            None,
        )
        .unwrap();
        let sim = DeviceSimulator::new(traj.clone(), 100.0);
        let mut parser = SensorParser::new();
        let mut n = 0;
        for (t, line) in sim.frames() {
            assert!(line.len() <= 24);
            let f = parser.parse_line(&line, t).unwrap();
            let a = map_force_to_activation(&f, &sim.calibration);
            assert!(a.max_abs_diff(&traj.sample(t).unwrap()) < 1e-3);
            n += 1;
        }
        assert_eq!(n, 101);
        let mut buf = Vec::new();
        assert_eq!(sim.write_to(&mut buf, false).unwrap(), 101);
        assert!(buf.ends_with(b"F 1023 516 8 262\n"));
    }
}
