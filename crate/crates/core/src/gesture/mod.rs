//! Gesture input: force-sensor frames, calibration, activation trajectories
//! and the live activation feed.

mod live;
mod sensor;
mod trajectory;

pub use live::{
    dropout_envelope, spawn_sensor_reader, ActivationCell, DeviceSimulator, LiveInput,
    DROPOUT_HOLD_S, DROPOUT_TAU_S,
};
pub use sensor::{
    map_force_to_activation, CalibrationMap, ChannelCalibration, SensorFrame, SensorParser,
    ADC_MAX, MAX_LINE_BYTES,
};
pub use trajectory::{load_trajectory, ActivationTrajectory};

use std::fmt;

use thiserror::Error;

/// The four controlled muscle groups, in activation-vector order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Muscle {
    /// Anterior genioglossus.
    Gga,
    /// Posterior genioglossus.
    Ggp,
    /// Superior longitudinal.
    Sl,
    /// Inferior longitudinal.
    Il,
}

impl Muscle {
    pub const ALL: [Muscle; 4] = [Muscle::Gga, Muscle::Ggp, Muscle::Sl, Muscle::Il];

    pub fn index(self) -> usize {
        match self {
            Muscle::Gga => 0,
            Muscle::Ggp => 1,
            Muscle::Sl => 2,
            Muscle::Il => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Muscle::Gga => "GGA",
            Muscle::Ggp => "GGP",
            Muscle::Sl => "SL",
            Muscle::Il => "IL",
        }
    }

    pub fn from_name(s: &str) -> Option<Muscle> {
        Muscle::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
    }
}

impl fmt::Display for Muscle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Four muscle excitations in `[0, 1]`, ordered `[GGA, GGP, SL, IL]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ActivationVector([f64; 4]);

impl ActivationVector {
    pub const REST: ActivationVector = ActivationVector([0.0; 4]);

    /// Validating constructor; rejects NaN and anything outside `[0, 1]`.
    pub fn new(values: [f64; 4]) -> Result<Self, GestureError> {
        for (i, v) in values.iter().enumerate() {
            if !(0.0..=1.0).contains(v) {
                return Err(GestureError::ActivationOutOfRange {
                    channel: i,
                    value: *v,
                });
            }
        }
        Ok(ActivationVector(values))
    }

    /// Clamps each component into `[0, 1]`; NaN becomes 0.
    pub fn clamped(values: [f64; 4]) -> Self {
        ActivationVector(values.map(|v| if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) }))
    }

    pub fn get(&self, m: Muscle) -> f64 {
        self.0[m.index()]
    }

    pub fn values(&self) -> [f64; 4] {
        self.0
    }

    /// Componentwise linear blend `self + f * (other - self)`.
    pub fn lerp(&self, other: &ActivationVector, f: f64) -> ActivationVector {
        let mut out = self.0;
        for (o, b) in out.iter_mut().zip(other.0) {
            *o += f * (b - *o);
        }
        ActivationVector::clamped(out)
    }

    pub fn scaled(&self, k: f64) -> ActivationVector {
        ActivationVector::clamped(self.0.map(|v| v * k))
    }

    /// The 16 vertices of the activation cube, GGA as the lowest bit.
    pub fn corners() -> Vec<ActivationVector> {
        (0..16u32)
            .map(|bits| ActivationVector(std::array::from_fn(|i| ((bits >> i) & 1) as f64)))
            .collect()
    }

    pub fn max_abs_diff(&self, other: &ActivationVector) -> f64 {
        self.0
            .iter()
            .zip(other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl From<ActivationVector> for [f64; 4] {
    fn from(a: ActivationVector) -> Self {
        a.0
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GestureError {
    #[error("malformed sensor frame: {0}")]
    MalformedFrame(String),
    #[error("invalid calibration for channel {channel}: {reason}")]
    InvalidCalibration {
        channel: usize,
        reason: &'static str,
    },
    #[error("activation channel {channel} out of range: {value}")]
    ActivationOutOfRange { channel: usize, value: f64 },
    #[error("trajectory parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("trajectory time not increasing at line {line}: {time} after {previous}")]
    NonMonotoneTime {
        line: usize,
        time: f64,
        previous: f64,
    },
    #[error("time {t} outside trajectory range [0, {duration}]")]
    OutOfRange { t: f64, duration: f64 },
}
