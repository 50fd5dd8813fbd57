//! Glottal volume-velocity sources: an open-loop Rosenberg pulse train and a
//! self-oscillating two-mass fold model driven by the tract inlet pressure.
//! CGS units throughout: cm, g, s, dyn/cm², cm³/s.

mod two_mass;

pub use two_mass::{two_mass_step, FoldState, TwoMassParams};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GlottisError {
    #[error("invalid glottal parameters: {0}")]
    InvalidParams(String),
    #[error("two-mass state blew up (|value| {0:.3e}); reduce dt")]
    NumericalBlowup(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GlottalMode {
    Rosenberg,
    TwoMass,
}

impl GlottalMode {
    pub fn name(self) -> &'static str {
        match self {
            GlottalMode::Rosenberg => "rosenberg",
            GlottalMode::TwoMass => "two-mass",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rosenberg" => Some(GlottalMode::Rosenberg),
            "two-mass" | "twomass" | "two_mass" => Some(GlottalMode::TwoMass),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RosenbergParams {
    /// Hz
    pub f0: f64,
    /// Peak flow, cm³/s.
    pub amplitude: f64,
    pub open_quotient: f64,
    /// Rise time over fall time.
    pub speed_quotient: f64,
}

impl Default for RosenbergParams {
    fn default() -> Self {
        RosenbergParams {
            f0: 110.0,
            amplitude: 300.0,
            open_quotient: 0.6,
            speed_quotient: 2.0,
        }
    }
}

impl RosenbergParams {
    pub fn validate(&self) -> Result<(), GlottisError> {
        let ok = self.f0 > 0.0
            && self.f0.is_finite()
            && self.amplitude >= 0.0
            && self.amplitude.is_finite()
            && self.open_quotient > 0.0
            && self.open_quotient < 1.0
            && self.speed_quotient > 0.0
            && self.speed_quotient.is_finite();
        if ok {
            Ok(())
        } else {
            Err(GlottisError::InvalidParams(format!("{self:?}")))
        }
    }

    /// Opening and closing durations as fractions of the period.
    pub fn phases(&self) -> (f64, f64) {
        let tp = self.open_quotient * self.speed_quotient / (1.0 + self.speed_quotient);
        let tn = self.open_quotient / (1.0 + self.speed_quotient);
        (tp, tn)
    }
}

/// Cubic rise to the peak at `Tp`, quadratic fall to closure at `Tp + Tn`.
pub fn rosenberg_flow(phase: f64, p: &RosenbergParams) -> f64 {
    let (tp, tn) = p.phases();
    if phase < 0.0 {
        0.0
    } else if phase < tp {
        let s = phase / tp;
        p.amplitude * s * s * (3.0 - 2.0 * s)
    } else if phase < tp + tn {
        let s = (phase - tp) / tn;
        p.amplitude * (1.0 - s * s)
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlottisParams {
    pub mode: GlottalMode,
    pub rosenberg: RosenbergParams,
    pub two_mass: TwoMassParams,
}

impl Default for GlottisParams {
    fn default() -> Self {
        GlottisParams {
            mode: GlottalMode::Rosenberg,
            rosenberg: RosenbergParams::default(),
            two_mass: TwoMassParams::default(),
        }
    }
}

impl GlottisParams {
    pub fn validate(&self) -> Result<(), GlottisError> {
        self.rosenberg.validate()?;
        self.two_mass.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Crossfade {
    from: GlottalMode,
    elapsed: f64,
    duration: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlottalState {
    pub mode: GlottalMode,
    /// Rosenberg phase in [0, 1).
    pub phase: f64,
    pub fold: FoldState,
    /// cm³/s, never negative.
    pub last_flow: f64,
    crossfade: Option<Crossfade>,
}

impl GlottalState {
    pub fn new(mode: GlottalMode) -> Self {
        GlottalState {
            mode,
            phase: 0.0,
            fold: FoldState::onset(),
            last_flow: 0.0,
            crossfade: None,
        }
    }

    pub fn is_crossfading(&self) -> bool {
        self.crossfade.is_some()
    }

    /// Switches source, blending the two over one nominal period.
    pub fn switch_mode(&mut self, mode: GlottalMode, params: &GlottisParams) {
        if mode == self.mode {
            return;
        }
        if mode == GlottalMode::TwoMass && self.crossfade.is_none() {
            self.fold = FoldState::onset();
        }
        self.crossfade = Some(Crossfade {
            from: self.mode,
            elapsed: 0.0,
            duration: 1.0 / params.rosenberg.f0,
        });
        self.mode = mode;
    }
}

/// Advances the active source (and the outgoing one during a crossfade) by
/// `dt` and returns the emitted flow.
pub fn glottal_tick(
    state: &mut GlottalState,
    params: &GlottisParams,
    inlet_pressure: f64,
    dt: f64,
) -> Result<f64, GlottisError> {
    let rosenberg_active = state.mode == GlottalMode::Rosenberg
        || state
            .crossfade
            .is_some_and(|c| c.from == GlottalMode::Rosenberg);
    let fold_active = state.mode == GlottalMode::TwoMass
        || state
            .crossfade
            .is_some_and(|c| c.from == GlottalMode::TwoMass);

    let mut rosenberg = 0.0;
    if rosenberg_active {
        state.phase = (state.phase + params.rosenberg.f0 * dt).fract();
        rosenberg = rosenberg_flow(state.phase, &params.rosenberg);
    }
    let mut folds = 0.0;
    if fold_active {
        folds = two_mass_step(&mut state.fold, &params.two_mass, inlet_pressure, dt)?;
    }
    let pick = |m: GlottalMode| match m {
        GlottalMode::Rosenberg => rosenberg,
        GlottalMode::TwoMass => folds,
    };

    let flow = match state.crossfade.as_mut() {
        Some(c) => {
            c.elapsed += dt;
            let w = (c.elapsed / c.duration).min(1.0);
            let blended = (1.0 - w) * pick(c.from) + w * pick(state.mode);
            if w >= 1.0 {
                state.crossfade = None;
            }
            blended
        }
        None => pick(state.mode),
    };
    state.last_flow = flow.max(0.0);
    Ok(state.last_flow)
}
