use std::fmt;

use rustfft::{num_complex::Complex, FftPlanner};

use super::{AudioBuffer, EngineError};
use crate::acoustics::{find_formants, AcousticsError};

pub const MIN_ANALYSIS_SECONDS: f64 = 0.5;
const F0_MIN: f64 = 50.0;
const F0_MAX: f64 = 400.0;
/// Normalized autocorrelation below this is treated as unvoiced.
const VOICING_THRESHOLD: f64 = 0.3;
/// The first lag within this fraction of the best one wins, which avoids
/// locking onto a multiple of the period.
const OCTAVE_MARGIN: f64 = 0.85;

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisReport {
    /// s
    pub duration: f64,
    pub rate: u32,
    pub rms: f64,
    pub peak: f64,
    /// Samples at or beyond full scale.
    pub clipped: usize,
    pub f0: Option<f64>,
    /// Hz, ascending.
    pub formants: Vec<f64>,
}

impl fmt::Display for AnalysisReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "duration: {:.3}", self.duration)?;
        writeln!(f, "rate: {}", self.rate)?;
        writeln!(f, "rms: {:.6}", self.rms)?;
        writeln!(f, "peak: {:.6}", self.peak)?;
        writeln!(f, "clipped: {}", self.clipped)?;
        match self.f0 {
            Some(v) => writeln!(f, "f0: {v:.2}")?,
            None => writeln!(f, "f0: none")?,
        }
        let list: Vec<String> = self.formants.iter().map(|v| format!("{v:.0}")).collect();
        writeln!(f, "formants: {}", list.join(" "))
    }
}

/// Level, pitch and formants of a rendered buffer.
pub fn analyze_render(buf: &AudioBuffer) -> Result<AnalysisReport, EngineError> {
    if buf.duration() < MIN_ANALYSIS_SECONDS {
        return Err(EngineError::TooShort {
            got: buf.duration(),
            need: MIN_ANALYSIS_SECONDS,
        });
    }
    let fs = buf.rate as f64;
    let formants = match find_formants(&buf.samples, fs) {
        Ok(f) => f,
        Err(AcousticsError::TooShort { got, need }) => {
            return Err(EngineError::TooShort {
                got: got as f64 / fs,
                need: need as f64 / fs,
            })
        }
        Err(e) => return Err(EngineError::Wav(e.to_string())),
    };
    Ok(AnalysisReport {
        duration: buf.duration(),
        rate: buf.rate,
        rms: buf.rms(),
        peak: buf.peak(),
        clipped: buf.samples.iter().filter(|x| x.abs() >= 1.0).count(),
        f0: estimate_f0(&buf.samples, fs),
        formants,
    })
}

/// Autocorrelation pitch in [50, 400] Hz, or `None` when unvoiced.
pub fn estimate_f0(x: &[f64], fs: f64) -> Option<f64> {
    let n = x.len();
    let lo = (fs / F0_MAX).floor() as usize;
    let hi = (fs / F0_MIN).ceil() as usize;
    if n <= hi + 1 {
        return None;
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let size = (2 * n).next_power_of_two();
    let mut buf: Vec<Complex<f64>> = x.iter().map(|v| Complex::new(v - mean, 0.0)).collect();
    buf.resize(size, Complex::new(0.0, 0.0));
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(size).process(&mut buf);
    for c in buf.iter_mut() {
        *c = Complex::new(c.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(size).process(&mut buf);
    let r0 = buf[0].re;
    if !(r0 > 0.0) {
        return None;
    }
    let r: Vec<f64> = buf[..=hi + 1].iter().map(|c| c.re / r0).collect();
    let best = (lo..=hi).map(|k| r[k]).fold(f64::MIN, f64::max);
    if best < VOICING_THRESHOLD {
        return None;
    }
    let k = (lo.max(1)..=hi)
        .find(|&k| r[k] >= OCTAVE_MARGIN * best && r[k] >= r[k - 1] && r[k] >= r[k + 1])?;
    let (a, b, c) = (r[k - 1], r[k], r[k + 1]);
    let denom = a - 2.0 * b + c;
    let shift = if denom.abs() > 1e-15 {
        (0.5 * (a - c) / denom).clamp(-0.5, 0.5)
    } else {
        0.0
    };
    Some(fs / (k as f64 + shift))
}
