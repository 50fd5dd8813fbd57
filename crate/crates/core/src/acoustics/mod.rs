//! One-dimensional acoustic tube: a staggered pressure/volume-velocity
//! finite-difference solver, a lossless chain-matrix reference, and the
//! spectral tools used to read formants off either.
//!
//! CGS units: pressure dyn/cm², volume velocity cm³/s, lengths cm.

mod analysis;
mod chain;
mod solver;

pub use analysis::{find_formants, lpc, lpc_envelope, response_peaks, spectral_peaks, Peak};
pub use chain::{chain_matrix_peaks, chain_matrix_response};
pub use solver::{AcousticState, GlottalEnd, LipEnd, Tube};

use thiserror::Error;

use crate::tract::{AreaFunction, A_MIN};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AcousticsError {
    #[error("acoustic solver blew up: |p| = {value:.3e} in cell {cell} at t = {t:.6} s")]
    NumericalBlowup { t: f64, cell: usize, value: f64 },
    #[error("CFL ratio {0:.3} exceeds 0.9")]
    Cfl(f64),
    #[error("chain matrix singular at {0} Hz; perturb the frequency")]
    SingularMatrix(f64),
    #[error("signal too short: {got} samples, need {need}")]
    TooShort { got: usize, need: usize },
    #[error("invalid acoustic configuration: {0}")]
    Invalid(String),
}

/// Largest allowed `c·dt/dx`.
pub const CFL_LIMIT: f64 = 0.9;
/// Rate at which the per-step loss and lip smoothing constants are quoted.
pub const REFERENCE_RATE: f64 = 88_200.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcousticParams {
    /// cm/s
    pub c: f64,
    /// g/cm³
    pub rho: f64,
    /// Velocity damping per step at [`REFERENCE_RATE`].
    pub loss: f64,
    pub r_lip: f64,
    /// One-pole coefficient of the lip smoothing at [`REFERENCE_RATE`].
    pub lip_smoothing: f64,
    pub r_glottis: f64,
    /// Output scale applied to the lip flow difference.
    pub gain: f64,
    pub audio_rate: f64,
    pub cells_per_section: usize,
}

impl Default for AcousticParams {
    fn default() -> Self {
        AcousticParams {
            c: 35_000.0,
            rho: 1.14e-3,
            loss: 0.002,
            r_lip: -0.9,
            lip_smoothing: 0.6,
            r_glottis: 0.95,
            gain: 1e-3,
            audio_rate: 44_100.0,
            cells_per_section: 2,
        }
    }
}

impl AcousticParams {
    pub fn validate(&self) -> Result<(), AcousticsError> {
        let bad = |m: &str| Err(AcousticsError::Invalid(m.to_string()));
        if !(self.c > 0.0 && self.rho > 0.0 && self.audio_rate > 0.0) {
            return bad("c, rho and audio rate must be positive");
        }
        if !(0.0..1.0).contains(&self.loss) {
            return bad("loss must be in [0, 1)");
        }
        if !(self.r_lip > -1.0 && self.r_lip <= 0.0) {
            return bad("r_lip must be in (-1, 0]");
        }
        if !(0.0..1.0).contains(&self.lip_smoothing) {
            return bad("lip smoothing must be in [0, 1)");
        }
        if !(self.r_glottis > -1.0 && self.r_glottis <= 1.0) {
            return bad("r_glottis must be in (-1, 1]");
        }
        if !(self.gain.is_finite() && self.cells_per_section >= 1) {
            return bad("gain must be finite and cells_per_section at least 1");
        }
        Ok(())
    }

    /// Smallest whole multiple of the audio rate, at least 2, whose step
    /// meets the CFL limit on cells of length `dx`.
    pub fn oversample(&self, dx: f64) -> usize {
        let min = self.c / (self.audio_rate * dx * CFL_LIMIT);
        (min.ceil() as usize).max(2)
    }
}

/// Cells of equal length with per-cell areas, glottis first.
#[derive(Debug, Clone, PartialEq)]
pub struct TubeGrid {
    pub areas: Vec<f64>,
    /// cm
    pub dx: f64,
}

impl TubeGrid {
    pub fn uniform(cells: usize, length: f64, area: f64) -> Self {
        TubeGrid {
            areas: vec![area; cells],
            dx: length / cells as f64,
        }
    }

    pub fn len(&self) -> usize {
        self.areas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.areas.is_empty()
    }

    pub fn length(&self) -> f64 {
        self.dx * self.areas.len() as f64
    }

    pub fn validate(&self) -> Result<(), AcousticsError> {
        if self.areas.len() < 2 || !(self.dx > 0.0) || !self.dx.is_finite() {
            return Err(AcousticsError::Invalid(
                "grid needs 2+ cells and dx > 0".into(),
            ));
        }
        if let Some(i) = self
            .areas
            .iter()
            .position(|a| !(*a >= A_MIN) || !a.is_finite())
        {
            return Err(AcousticsError::Invalid(format!(
                "cell {i} area {} below floor",
                self.areas[i]
            )));
        }
        Ok(())
    }
}

/// Splits each section into `cells_per_section` equal cells. Sections are
/// assumed equally long, which area functions built from markers are.
pub fn build_grid(af: &AreaFunction, cells_per_section: usize) -> TubeGrid {
    let areas = af
        .sections
        .iter()
        .flat_map(|s| std::iter::repeat_n(s.area, cells_per_section))
        .collect::<Vec<_>>();
    TubeGrid {
        dx: af.total_length() / areas.len() as f64,
        areas,
    }
}

/// Per-cell geometric interpolation `A_cur^(1-f)·A_tgt^f`.
pub fn morph_grid(grid: &TubeGrid, target: &TubeGrid, fraction: f64) -> TubeGrid {
    let mut areas = vec![0.0; grid.len()];
    morph_areas(&grid.areas, &target.areas, fraction, &mut areas);
    TubeGrid { areas, dx: grid.dx }
}

/// [`morph_grid`] into a caller-owned buffer.
pub fn morph_areas(from: &[f64], to: &[f64], fraction: f64, out: &mut [f64]) {
    let f = fraction.clamp(0.0, 1.0);
    for ((o, &a), &b) in out.iter_mut().zip(from).zip(to) {
        *o = if f == 0.0 || a == b {
            a
        } else if f == 1.0 {
            b
        } else {
            a.powf(1.0 - f) * b.powf(f)
        };
    }
}
