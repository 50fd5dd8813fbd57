use std::io::BufRead;

use super::{ActivationVector, GestureError};

/// Time-stamped activation knots, interpolated linearly.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationTrajectory {
    samples: Vec<(f64, ActivationVector)>,
    duration: f64,
}

impl ActivationTrajectory {
    /// Builds a trajectory; knot times must start at 0 and strictly increase.
    /// `duration` defaults to the last knot time.
    pub fn new(
        samples: Vec<(f64, ActivationVector)>,
        duration: Option<f64>,
    ) -> Result<Self, GestureError> {
        let Some(&(t0, _)) = samples.first() else {
            return Err(GestureError::Parse {
                line: 1,
                column: 1,
                message: "trajectory has no samples".into(),
            });
        };
        if t0 != 0.0 {
            return Err(GestureError::Parse {
                line: 1,
                column: 1,
                message: format!("first knot must be at t=0, got {t0}"),
            });
        }
        for (i, w) in samples.windows(2).enumerate() {
            if !(w[1].0 > w[0].0) {
                return Err(GestureError::NonMonotoneTime {
                    line: i + 2,
                    time: w[1].0,
                    previous: w[0].0,
                });
            }
        }
        let last = samples.last().map(|s| s.0).unwrap_or(0.0);
        let duration = duration.unwrap_or(last).max(last);
        Ok(ActivationTrajectory { samples, duration })
    }

    /// A single activation held for `duration` seconds.
    pub fn constant(a: ActivationVector, duration: f64) -> Self {
        ActivationTrajectory {
            samples: vec![(0.0, a)],
            duration: duration.max(0.0),
        }
    }

    pub fn samples(&self) -> &[(f64, ActivationVector)] {
        &self.samples
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn with_duration(mut self, duration: f64) -> Self {
        let last = self.samples.last().map(|s| s.0).unwrap_or(0.0);
        self.duration = duration.max(last);
        self
    }

    /// Piecewise-linear sample; held flat after the last knot.
    pub fn sample(&self, t: f64) -> Result<ActivationVector, GestureError> {
        if !(0.0..=self.duration).contains(&t) {
            return Err(GestureError::OutOfRange {
                t,
                duration: self.duration,
            });
        }
        Ok(self.sample_clamped(t))
    }

    /// Like [`sample`](Self::sample) but clamps `t` into range.
    pub fn sample_clamped(&self, t: f64) -> ActivationVector {
        let s = &self.samples;
        let idx = s.partition_point(|(kt, _)| *kt <= t);
        if idx == 0 {
            return s[0].1;
        }
        if idx == s.len() {
            return s[s.len() - 1].1;
        }
        let (t0, a0) = s[idx - 1];
        let (t1, a1) = s[idx];
        a0.lerp(&a1, (t - t0) / (t1 - t0))
    }

    /// Writes the text form accepted by [`load_trajectory`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (t, a) in &self.samples {
            let v = a.values();
            out.push_str(&format!("{t} {} {} {} {}\n", v[0], v[1], v[2], v[3]));
        }
        out
    }
}

/// Reads `<t> <a0> <a1> <a2> <a3>` rows; `#` starts a comment.
pub fn load_trajectory<R: BufRead>(source: R) -> Result<ActivationTrajectory, GestureError> {
    let mut samples: Vec<(f64, ActivationVector)> = Vec::new();
    let mut last_line = 0;
    for (i, line) in source.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| GestureError::Parse {
            line: lineno,
            column: 1,
            message: e.to_string(),
        })?;
        let content = match line.find('#') {
            Some(p) => &line[..p],
            None => &line[..],
        };
        if content.trim().is_empty() {
            continue;
        }
        let mut values = [0.0f64; 5];
        let mut n = 0;
        for (col, tok) in tokens_with_columns(content) {
            if n == 5 {
                return Err(GestureError::Parse {
                    line: lineno,
                    column: col,
                    message: "expected 5 fields".into(),
                });
            }
            let v: f64 = tok.parse().map_err(|_| GestureError::Parse {
                line: lineno,
                column: col,
                message: format!("not a number: {tok:?}"),
            })?;
            if !v.is_finite() {
                return Err(GestureError::Parse {
                    line: lineno,
                    column: col,
                    message: format!("non-finite value {tok:?}"),
                });
            }
            values[n] = v;
            n += 1;
        }
        if n != 5 {
            return Err(GestureError::Parse {
                line: lineno,
                column: content.trim_end().len() + 1,
                message: format!("expected 5 fields, got {n}"),
            });
        }
        let t = values[0];
        if let Some(&(prev, _)) = samples.last() {
            if !(t > prev) {
                return Err(GestureError::NonMonotoneTime {
                    line: lineno,
                    time: t,
                    previous: prev,
                });
            }
        } else if t != 0.0 {
            return Err(GestureError::Parse {
                line: lineno,
                column: 1,
                message: format!("first sample must be at t=0, got {t}"),
            });
        }
        let a =
            ActivationVector::new([values[1], values[2], values[3], values[4]]).map_err(|e| {
                GestureError::Parse {
                    line: lineno,
                    column: 1,
                    message: e.to_string(),
                }
            })?;
        samples.push((t, a));
        last_line = lineno;
    }
    if samples.is_empty() {
        return Err(GestureError::Parse {
            line: last_line.max(1),
            column: 1,
            message: "no samples".into(),
        });
    }
    ActivationTrajectory::new(samples, None)
}

fn tokens_with_columns(s: &str) -> impl Iterator<Item = (usize, &str)> {
    let mut rest = s;
    let mut offset = 0;
    std::iter::from_fn(move || {
        let start = rest.find(|c: char| !c.is_whitespace())?;
        let tail = &rest[start..];
        let len = tail.find(char::is_whitespace).unwrap_or(tail.len());
        let tok = &tail[..len];
        let col = offset + start + 1;
        offset += start + len;
        rest = &tail[len..];
        Some((col, tok))
    })
}
