//! Two-rate orchestration. Each control tick advances the tongue under the
//! current activation, rebuilds the area function and starts a geometric
//! morph of the tube toward it; each audio sample runs the glottis and the
//! tube, with the morph completing on the last sample of the block.

mod config;
mod live;
mod report;
mod wav;

pub use config::{ConfigError, EngineConfig, CONFIG_ENV, CONFIG_KEYS};
pub use live::{
    run_live, ActivationSource, AudioBlock, LiveOptions, LiveSession, LiveStats, SensorReplay,
    TrajectorySource,
};
pub use report::{analyze_render, estimate_f0, AnalysisReport, MIN_ANALYSIS_SECONDS};
pub use wav::{read_wav, to_pcm16, write_wav};

use std::path::PathBuf;

use thiserror::Error;

use crate::acoustics::{build_grid, morph_areas, AcousticsError, Tube};
use crate::exec::{par_map, Execution};
use crate::geom::Vec2;
use crate::gesture::{ActivationTrajectory, ActivationVector};
use crate::glottis::{glottal_tick, GlottalState, GlottisError};
use crate::tongue::{
    build_reference_tongue, inverted_elements, parse_model, tongue_surface, TongueError,
    TongueModel, TongueState,
};
use crate::tract::{AreaFunction, Tract, TractError, TractOutline};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("loading {path}: {message}")]
    Load { path: PathBuf, message: String },
    #[error("tick {tick}: {source}")]
    Tongue { tick: u64, source: TongueError },
    #[error("tick {tick}: {source}")]
    Acoustics { tick: u64, source: AcousticsError },
    #[error("tick {tick}: {source}")]
    Glottis { tick: u64, source: GlottisError },
    #[error(transparent)]
    Tract(#[from] TractError),
    #[error("analysis needs at least {need:.2} s of audio, got {got:.3} s")]
    TooShort { got: f64, need: f64 },
    #[error("wav: {0}")]
    Wav(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Mono samples at a fixed rate.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    pub samples: Vec<f64>,
    /// Hz
    pub rate: u32,
}

impl AudioBuffer {
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.rate as f64
    }

    pub fn rms(&self) -> f64 {
        rms(&self.samples)
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, x| f64::max(m, x.abs()))
    }

    pub fn all_finite(&self) -> bool {
        self.samples.iter().all(|x| x.is_finite())
    }
}

pub fn rms(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

/// What the engine looked like at one control tick. Surface and areas come
/// from the same tongue state.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSnapshot {
    /// Tick start, s.
    pub t: f64,
    pub activation: ActivationVector,
    /// Tip to root, cm.
    pub tongue: Vec<Vec2>,
    /// One area per tract section, cm².
    pub area: Vec<f64>,
    /// Of the block rendered during this tick.
    pub rms: f64,
}

/// Counters that do not stop synthesis.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Diagnostics {
    /// Most flipped tongue elements seen at any tick.
    pub max_inverted: usize,
    /// Most degenerate fiber segments seen at any tick.
    pub max_degenerate: usize,
}

enum SynthError {
    Acoustics(AcousticsError),
    Glottis(GlottisError),
}

impl From<AcousticsError> for SynthError {
    fn from(e: AcousticsError) -> Self {
        SynthError::Acoustics(e)
    }
}

impl SynthError {
    fn at(self, tick: u64) -> EngineError {
        match self {
            SynthError::Acoustics(source) => EngineError::Acoustics { tick, source },
            SynthError::Glottis(source) => EngineError::Glottis { tick, source },
        }
    }
}

/// One synthesis pipeline and all its mutable state.
#[derive(Debug, Clone)]
pub struct Engine {
    cfg: EngineConfig,
    model: TongueModel,
    tract: Tract,
    tongue: TongueState,
    glottal: GlottalState,
    tube: Tube,
    morph_from: Vec<f64>,
    morph_to: Vec<f64>,
    scratch: Vec<f64>,
    area: AreaFunction,
    activation: ActivationVector,
    tick: u64,
    diagnostics: Diagnostics,
}

/// Loads the tongue and tract named in `cfg`, or the built-in ones.
pub fn load_models(cfg: &EngineConfig) -> Result<(TongueModel, Tract), EngineError> {
    let read = |p: &PathBuf| {
        std::fs::read_to_string(p).map_err(|e| EngineError::Load {
            path: p.clone(),
            message: e.to_string(),
        })
    };
    let model = match &cfg.tongue_model {
        Some(p) => parse_model(&read(p)?).map_err(|e| EngineError::Load {
            path: p.clone(),
            message: e.to_string(),
        })?,
        None => build_reference_tongue().0,
    };
    let tract = match &cfg.tract {
        Some(p) => Tract::new(
            TractOutline::parse(&read(p)?).map_err(|e| EngineError::Load {
                path: p.clone(),
                message: e.to_string(),
            })?,
        )?,
        None => Tract::reference(),
    };
    Ok((model, tract))
}

impl Engine {
    pub fn new(cfg: EngineConfig, model: TongueModel, tract: Tract) -> Result<Self, EngineError> {
        cfg.validate()?;
        cfg.dynamics
            .validate(&model.mesh)
            .map_err(|source| EngineError::Tongue { tick: 0, source })?;
        let tongue = model.rest_state();
        let area = tract.area_function(&tongue, &model.mesh);
        let params = cfg.acoustic_params();
        let grid = build_grid(&area, params.cells_per_section);
        let tube = Tube::radiating(params, grid.clone())
            .map_err(|source| EngineError::Acoustics { tick: 0, source })?;
        Ok(Engine {
            glottal: GlottalState::new(cfg.glottis.mode),
            morph_from: grid.areas.clone(),
            morph_to: grid.areas.clone(),
            scratch: grid.areas,
            cfg,
            model,
            tract,
            tongue,
            tube,
            area,
            activation: ActivationVector::REST,
            tick: 0,
            diagnostics: Diagnostics::default(),
        })
    }

    /// Engine with the models named in `cfg`.
    pub fn from_config(cfg: EngineConfig) -> Result<Self, EngineError> {
        let (model, tract) = load_models(&cfg)?;
        Self::new(cfg, model, tract)
    }

    pub fn config(&self) -> &EngineConfig {
        &self.cfg
    }

    pub fn model(&self) -> &TongueModel {
        &self.model
    }

    pub fn tract(&self) -> &Tract {
        &self.tract
    }

    pub fn tongue(&self) -> &TongueState {
        &self.tongue
    }

    pub fn area_function(&self) -> &AreaFunction {
        &self.area
    }

    pub fn diagnostics(&self) -> Diagnostics {
        self.diagnostics
    }

    /// Ticks completed so far.
    pub fn tick(&self) -> u64 {
        self.tick
    }

    /// Start of the next tick, s.
    pub fn time(&self) -> f64 {
        self.tick as f64 / self.cfg.control_rate as f64
    }

    /// Control half of a tick: tongue substeps under `act`, then a new morph
    /// target from the resulting area function.
    pub fn control(&mut self, act: ActivationVector) -> Result<(), EngineError> {
        let tick = self.tick;
        let degenerate = crate::tongue::advance(
            &mut self.tongue,
            &act,
            &self.model,
            &self.cfg.dynamics,
            self.cfg.tongue_substeps,
        )
        .map_err(|source| EngineError::Tongue { tick, source })?;
        let inverted = inverted_elements(&self.tongue, &self.model.mesh);
        if inverted > self.diagnostics.max_inverted {
            log::warn!("tick {tick}: {inverted} inverted tongue elements");
        }
        self.diagnostics.max_inverted = self.diagnostics.max_inverted.max(inverted);
        self.diagnostics.max_degenerate = self.diagnostics.max_degenerate.max(degenerate);
        self.activation = act;
        self.area = self.tract.area_function(&self.tongue, &self.model.mesh);
        let target = build_grid(&self.area, self.cfg.acoustics.cells_per_section);
        self.morph_from.copy_from_slice(&self.tube.grid().areas);
        self.morph_to.copy_from_slice(&target.areas);
        Ok(())
    }

    /// Audio half of a tick: fills `out` (at most one block) and finishes
    /// the tick. Returns the block RMS.
    pub fn render_block(&mut self, out: &mut [f64]) -> Result<f64, EngineError> {
        let block = self.cfg.block_size();
        debug_assert!(out.len() <= block);
        let tick = self.tick;
        let dt = self.tube.dt();
        let gain = self.cfg.render_gain;
        let clip = self.cfg.live;
        let moving = self.morph_from != self.morph_to;
        for (k, y) in out.iter_mut().enumerate() {
            if moving {
                let f = (k + 1) as f64 / block as f64;
                morph_areas(&self.morph_from, &self.morph_to, f, &mut self.scratch);
                self.tube.set_areas(&self.scratch);
            }
            let glottis = &mut self.glottal;
            let params = &self.cfg.glottis;
            let v = self
                .tube
                .audio_sample(|p| glottal_tick(glottis, params, p, dt).map_err(SynthError::Glottis))
                .map_err(|e| e.at(tick))?;
            *y = if clip { (gain * v).tanh() } else { gain * v };
        }
        if moving && out.len() < block {
            // A truncated final block still lands on the target.
            self.tube.set_areas(&self.morph_to);
        }
        self.tick += 1;
        Ok(rms(out))
    }

    /// Snapshot of the tick just rendered.
    pub fn snapshot(&self, t: f64, block_rms: f64) -> StateSnapshot {
        StateSnapshot {
            t,
            activation: self.activation,
            tongue: tongue_surface(&self.tongue, &self.model.mesh),
            area: self.area.areas(),
            rms: block_rms,
        }
    }

    /// One full tick.
    pub fn run_tick(
        &mut self,
        act: ActivationVector,
        out: &mut [f64],
    ) -> Result<StateSnapshot, EngineError> {
        let t = self.time();
        self.control(act)?;
        let r = self.render_block(out)?;
        Ok(self.snapshot(t, r))
    }

    /// Renders `traj` from the current state, sampling it at each tick
    /// start. Produces `round(duration·rate)` samples.
    pub fn render_trajectory(
        &mut self,
        traj: &ActivationTrajectory,
    ) -> Result<Render, EngineError> {
        let total = (traj.duration() * self.cfg.audio_rate as f64).round() as usize;
        let block = self.cfg.block_size();
        let mut samples = vec![0.0; total];
        let mut snaps = Vec::with_capacity(total.div_ceil(block));
        let t0 = self.time();
        for (i, chunk) in samples.chunks_mut(block).enumerate() {
            let t = i as f64 / self.cfg.control_rate as f64;
            let act = traj.sample_clamped(t);
            let mut snap = self.run_tick(act, chunk)?;
            snap.t = t0 + t;
            snaps.push(snap);
        }
        let buf = AudioBuffer {
            samples,
            rate: self.cfg.audio_rate,
        };
        Ok((buf, snaps))
    }
}

/// Audio plus one snapshot per control tick.
pub type Render = (AudioBuffer, Vec<StateSnapshot>);

/// Offline render from rest with the models named in `cfg`.
pub fn render_offline(
    traj: &ActivationTrajectory,
    cfg: &EngineConfig,
) -> Result<Render, EngineError> {
    let mut cfg = cfg.clone();
    cfg.live = false;
    Engine::from_config(cfg)?.render_trajectory(traj)
}

/// Independent offline renders, fanned out according to `exec`. Results
/// keep the input order and do not depend on the execution mode.
pub fn render_batch(
    trajectories: &[ActivationTrajectory],
    cfg: &EngineConfig,
    exec: Execution,
) -> Result<Vec<Result<Render, EngineError>>, EngineError> {
    let mut cfg = cfg.clone();
    cfg.live = false;
    let template = Engine::from_config(cfg)?;
    Ok(par_map(exec, trajectories, |traj| {
        template.clone().render_trajectory(traj)
    }))
}
