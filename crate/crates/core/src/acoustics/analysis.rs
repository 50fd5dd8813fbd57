use std::f64::consts::PI;

use rustfft::{num_complex::Complex, FftPlanner};

use super::AcousticsError;

/// Prediction order at the analysis rate.
pub const LPC_ORDER: usize = 10;
/// Signals are decimated to roughly this rate before prediction, so the
/// poles go to the formant range rather than the tube's upper resonances.
pub const ANALYSIS_RATE: f64 = 11_025.0;
const DECIMATION_TAPS: usize = 255;
/// Shortest signal `find_formants` accepts, s.
pub const MIN_DURATION: f64 = 0.2;
const PRE_EMPHASIS: f64 = 0.97;
/// Peaks must rise this far above the valleys on both sides.
const MIN_PROMINENCE_DB: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    /// Hz
    pub freq: f64,
    pub magnitude: f64,
}

/// Local maxima of a sampled response, ascending in frequency. The location
/// is refined with a parabola through the peak bin and its neighbours in dB.
pub fn response_peaks(freqs: &[f64], mags: &[f64]) -> Vec<Peak> {
    prominent_peaks(freqs, mags, 0.0)
}

fn prominent_peaks(freqs: &[f64], mags: &[f64], min_prominence_db: f64) -> Vec<Peak> {
    let n = mags.len();
    if n < 3 {
        return Vec::new();
    }
    let db: Vec<f64> = mags.iter().map(|m| 20.0 * m.max(1e-300).log10()).collect();
    let mut peaks = Vec::new();
    for i in 1..n - 1 {
        if !(db[i] > db[i - 1] && db[i] >= db[i + 1]) {
            continue;
        }
        if min_prominence_db > 0.0 {
            let left = valley(&db, i, -1);
            let right = valley(&db, i, 1);
            if db[i] - left.max(right) < min_prominence_db {
                continue;
            }
        }
        let (a, b, c) = (db[i - 1], db[i], db[i + 1]);
        let denom = a - 2.0 * b + c;
        let shift = if denom.abs() > 1e-12 {
            (0.5 * (a - c) / denom).clamp(-0.5, 0.5)
        } else {
            0.0
        };
        let step = if shift >= 0.0 {
            freqs[i + 1] - freqs[i]
        } else {
            freqs[i] - freqs[i - 1]
        };
        peaks.push(Peak {
            freq: freqs[i] + shift * step,
            magnitude: mags[i],
        });
    }
    peaks
}

/// Lowest level reached walking from `i` in direction `dir` before the
/// curve climbs above the starting level.
fn valley(db: &[f64], i: usize, dir: isize) -> f64 {
    let mut lowest = db[i];
    let mut j = i as isize + dir;
    while j >= 0 && (j as usize) < db.len() {
        let v = db[j as usize];
        if v > db[i] {
            break;
        }
        lowest = lowest.min(v);
        j += dir;
    }
    lowest
}

/// Peaks of the magnitude spectrum of `signal` below `max_freq`, ignoring
/// anything more than `range_db` under the strongest bin. Use `taper` for
/// sustained signals; decayed impulse responses need none.
pub fn spectral_peaks(
    signal: &[f64],
    fs: f64,
    max_freq: f64,
    range_db: f64,
    taper: bool,
) -> Vec<Peak> {
    let len = signal.len();
    let n = (len * 4).next_power_of_two().max(1024);
    let mut buf: Vec<Complex<f64>> = signal
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let w = if taper && len > 1 {
                0.5 - 0.5 * (2.0 * PI * i as f64 / (len - 1) as f64).cos()
            } else {
                1.0
            };
            Complex::new(x * w, 0.0)
        })
        .collect();
    buf.resize(n, Complex::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let bins = ((max_freq / fs * n as f64) as usize).min(n / 2);
    let freqs: Vec<f64> = (0..=bins).map(|k| k as f64 * fs / n as f64).collect();
    let mags: Vec<f64> = buf[..=bins].iter().map(|c| c.norm()).collect();
    let top = mags.iter().cloned().fold(0.0, f64::max);
    let floor = top * 10f64.powf(-range_db / 20.0);
    prominent_peaks(&freqs, &mags, MIN_PROMINENCE_DB)
        .into_iter()
        .filter(|p| p.magnitude >= floor && p.freq > 0.0)
        .collect()
}

/// Autocorrelation-method linear prediction. Returns `a` with `a[0] = 1`
/// such that `x[n] ≈ -Σ a[k] x[n-k]`.
pub fn lpc(signal: &[f64], order: usize) -> Vec<f64> {
    let r: Vec<f64> = (0..=order)
        .map(|lag| {
            signal[lag.min(signal.len())..]
                .iter()
                .zip(signal)
                .map(|(a, b)| a * b)
                .sum()
        })
        .collect();
    let mut a = vec![0.0; order + 1];
    a[0] = 1.0;
    // Slight white-noise floor keeps the recursion well conditioned.
    let mut err = r[0] * (1.0 + 1e-9);
    if err <= 0.0 {
        return a;
    }
    for i in 1..=order {
        let acc: f64 = (1..i).map(|j| a[j] * r[i - j]).sum::<f64>() + r[i];
        let k = -acc / err;
        let prev = a.clone();
        for j in 1..i {
            a[j] = prev[j] + k * prev[i - j];
        }
        a[i] = k;
        err *= 1.0 - k * k;
        if err <= 0.0 {
            break;
        }
    }
    a
}

/// `1 / |A(e^{jω})|` at each frequency.
pub fn lpc_envelope(a: &[f64], fs: f64, freqs: &[f64]) -> Vec<f64> {
    freqs
        .iter()
        .map(|&f| {
            let w = 2.0 * PI * f / fs;
            let z: Complex<f64> = a
                .iter()
                .enumerate()
                .map(|(k, &ak)| Complex::from_polar(ak, -w * k as f64))
                .sum();
            1.0 / z.norm().max(1e-300)
        })
        .collect()
}

/// Windowed-sinc lowpass at 0.45 of the new rate, keeping every
/// `factor`-th sample.
fn decimate(signal: &[f64], factor: usize) -> Vec<f64> {
    if factor <= 1 {
        return signal.to_vec();
    }
    let half = (DECIMATION_TAPS / 2) as isize;
    let cutoff = 0.45 / factor as f64;
    let taps: Vec<f64> = (-half..=half)
        .map(|k| {
            let x = k as f64;
            let sinc = if k == 0 {
                2.0 * cutoff
            } else {
                (2.0 * PI * cutoff * x).sin() / (PI * x)
            };
            let w = 0.54 + 0.46 * (PI * x / half as f64).cos();
            sinc * w
        })
        .collect();
    (0..signal.len())
        .step_by(factor)
        .map(|n| {
            taps.iter()
                .enumerate()
                .filter_map(|(i, t)| {
                    let j = n as isize + i as isize - half;
                    signal.get(usize::try_from(j).ok()?).map(|x| x * t)
                })
                .sum()
        })
        .collect()
}

/// Formant estimates of a sampled signal: decimation to about
/// [`ANALYSIS_RATE`], pre-emphasis, Hamming window, linear prediction, peaks
/// of the prediction spectrum. Ascending Hz.
pub fn find_formants(signal: &[f64], fs: f64) -> Result<Vec<f64>, AcousticsError> {
    let need = (MIN_DURATION * fs).ceil() as usize;
    if signal.len() < need {
        return Err(AcousticsError::TooShort {
            got: signal.len(),
            need,
        });
    }
    let factor = ((fs / ANALYSIS_RATE).round() as usize).max(1);
    let x = decimate(signal, factor);
    let rate = fs / factor as f64;
    let n = x.len();
    let windowed: Vec<f64> = (0..n)
        .map(|i| {
            let d = x[i] - if i > 0 { PRE_EMPHASIS * x[i - 1] } else { 0.0 };
            d * (0.54 - 0.46 * (2.0 * PI * i as f64 / (n - 1) as f64).cos())
        })
        .collect();
    let a = lpc(&windowed, LPC_ORDER);
    let freqs: Vec<f64> = (1..(rate / 2.0) as usize).map(|f| f as f64).collect();
    let env = lpc_envelope(&a, rate, &freqs);
    Ok(response_peaks(&freqs, &env)
        .into_iter()
        .map(|p| p.freq)
        .collect())
}
