use super::{ActivationVector, GestureError};

/// Full-scale reading of the 10-bit ADC.
pub const ADC_MAX: u16 = 1023;

/// Longest accepted wire line, excluding the newline.
pub const MAX_LINE_BYTES: usize = 64;

/// One four-channel reading off the serial line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorFrame {
    pub raw: [u16; 4],
    pub seq: u64,
    /// Receipt time in seconds.
    pub t: f64,
}

impl SensorFrame {
    /// Canonical wire form, without the trailing newline.
    pub fn to_line(&self) -> String {
        let [a, b, c, d] = self.raw;
        format!("F {a} {b} {c} {d}")
    }
}

/// Stateful line parser; assigns monotone sequence numbers per connection.
#[derive(Debug, Default)]
pub struct SensorParser {
    next_seq: u64,
}

impl SensorParser {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parses `F <n0> <n1> <n2> <n3>`. A rejected line does not consume a
    /// sequence number.
    pub fn parse_line(&mut self, line: &str, t: f64) -> Result<SensorFrame, GestureError> {
        let raw = parse_raw(line)?;
        let seq = self.next_seq;
        self.next_seq += 1;
        Ok(SensorFrame { raw, seq, t })
    }
}

fn parse_raw(line: &str) -> Result<[u16; 4], GestureError> {
    let line = line.strip_suffix('\n').unwrap_or(line);
    let line = line.strip_suffix('\r').unwrap_or(line);
    if line.len() > MAX_LINE_BYTES {
        return Err(GestureError::MalformedFrame(format!(
            "line is {} bytes, limit {MAX_LINE_BYTES}",
            line.len()
        )));
    }
    let mut fields = line.split_ascii_whitespace();
    match fields.next() {
        Some("F") => {}
        Some(tag) => return Err(GestureError::MalformedFrame(format!("unknown tag {tag:?}"))),
        None => return Err(GestureError::MalformedFrame("empty line".into())),
    }
    let mut raw = [0u16; 4];
    for (i, slot) in raw.iter_mut().enumerate() {
        let field = fields
            .next()
            .ok_or_else(|| GestureError::MalformedFrame(format!("expected 4 values, got {i}")))?;
        let v: i64 = field
            .parse()
            .map_err(|_| GestureError::MalformedFrame(format!("non-integer value {field:?}")))?;
        if !(0..=ADC_MAX as i64).contains(&v) {
            return Err(GestureError::MalformedFrame(format!(
                "value {v} outside [0, {ADC_MAX}]"
            )));
        }
        *slot = v as u16;
    }
    if fields.next().is_some() {
        return Err(GestureError::MalformedFrame("more than 4 values".into()));
    }
    Ok(raw)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChannelCalibration {
    /// ADC count at zero force.
    pub lo: u16,
    /// ADC count at full force.
    pub hi: u16,
    pub deadzone: u16,
}

impl ChannelCalibration {
    pub fn new(lo: u16, hi: u16, deadzone: u16) -> Result<Self, GestureError> {
        let c = ChannelCalibration { lo, hi, deadzone };
        c.validate(0)?;
        Ok(c)
    }

    fn validate(&self, channel: usize) -> Result<(), GestureError> {
        if self.hi > ADC_MAX {
            return Err(GestureError::InvalidCalibration {
                channel,
                reason: "hi above ADC range",
            });
        }
        if self.lo as u32 + self.deadzone as u32 >= self.hi as u32 {
            return Err(GestureError::InvalidCalibration {
                channel,
                reason: "lo + deadzone must be below hi",
            });
        }
        Ok(())
    }

    pub fn map(&self, raw: u16) -> f64 {
        let floor = self.lo as f64 + self.deadzone as f64;
        let span = self.hi as f64 - floor;
        ((raw as f64 - floor) / span).clamp(0.0, 1.0)
    }

    /// Smallest-error ADC count that maps back to `a`.
    pub fn raw_for(&self, a: f64) -> u16 {
        let floor = self.lo as f64 + self.deadzone as f64;
        let span = self.hi as f64 - floor;
        (floor + a.clamp(0.0, 1.0) * span).round() as u16
    }
}

/// Per-channel affine calibration from ADC counts to activation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CalibrationMap {
    pub channels: [ChannelCalibration; 4],
}

impl CalibrationMap {
    pub fn new(channels: [ChannelCalibration; 4]) -> Result<Self, GestureError> {
        for (i, c) in channels.iter().enumerate() {
            c.validate(i)?;
        }
        Ok(CalibrationMap { channels })
    }

    pub fn uniform(lo: u16, hi: u16, deadzone: u16) -> Result<Self, GestureError> {
        Self::new([ChannelCalibration { lo, hi, deadzone }; 4])
    }

    /// Encodes an activation vector into the frame that would produce it.
    pub fn encode(&self, a: &ActivationVector, seq: u64, t: f64) -> SensorFrame {
        let v = a.values();
        let mut raw = [0u16; 4];
        for i in 0..4 {
            raw[i] = self.channels[i].raw_for(v[i]);
        }
        SensorFrame { raw, seq, t }
    }
}

impl Default for CalibrationMap {
    /// Full ADC range with an 8-count deadzone.
    fn default() -> Self {
        CalibrationMap {
            channels: [ChannelCalibration {
                lo: 0,
                hi: ADC_MAX,
                deadzone: 8,
            }; 4],
        }
    }
}

/// Affine-then-clamped force law, applied per channel.
pub fn map_force_to_activation(frame: &SensorFrame, cal: &CalibrationMap) -> ActivationVector {
    ActivationVector::clamped(std::array::from_fn(|i| cal.channels[i].map(frame.raw[i])))
}
