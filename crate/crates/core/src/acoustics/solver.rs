use super::{AcousticParams, AcousticsError, TubeGrid, CFL_LIMIT, REFERENCE_RATE};

const BLOWUP: f64 = 1e9;

/// Boundary condition at the glottis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GlottalEnd {
    /// Flow source backed by a partially reflecting termination.
    Source { reflection: f64 },
    /// Ideal flow source: the boundary flow is exactly the injected flow.
    Closed,
}

/// Boundary condition at the lips.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LipEnd {
    /// Reflects the incident pressure wave through a one-pole lowpass
    /// scaled by `reflection`: nearly open at low frequencies, increasingly
    /// absorbing above the lowpass corner.
    Radiating { reflection: f64, smoothing: f64 },
    /// Pressure release, p = 0 at the lip plane.
    Open,
    /// Hard wall, u = 0.
    Rigid,
}

/// Pressures at cell centres and volume velocities at the `N + 1` cell
/// boundaries, half a step apart.
#[derive(Debug, Clone, PartialEq)]
pub struct AcousticState {
    pub p: Vec<f64>,
    pub u: Vec<f64>,
    /// Pressures one step earlier, for the discrete energy.
    pub p_prev: Vec<f64>,
    pub t: f64,
    /// Lowpassed incident wave at the lips, dyn/cm².
    lip_y: f64,
    lip_avg: f64,
}

impl AcousticState {
    fn zero(cells: usize) -> Self {
        AcousticState {
            p: vec![0.0; cells],
            u: vec![0.0; cells + 1],
            p_prev: vec![0.0; cells],
            t: 0.0,
            lip_y: 0.0,
            lip_avg: 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Tube {
    params: AcousticParams,
    grid: TubeGrid,
    /// Boundary areas: end cells at the ends, harmonic means inside.
    iface: Vec<f64>,
    glottal_end: GlottalEnd,
    lip_end: LipEnd,
    state: AcousticState,
    oversample: usize,
    dt: f64,
    loss_step: f64,
}

impl Tube {
    pub fn new(
        params: AcousticParams,
        grid: TubeGrid,
        glottal_end: GlottalEnd,
        lip_end: LipEnd,
    ) -> Result<Self, AcousticsError> {
        params.validate()?;
        grid.validate()?;
        let oversample = params.oversample(grid.dx);
        let dt = 1.0 / (params.audio_rate * oversample as f64);
        let cfl = params.c * dt / grid.dx;
        if cfl > CFL_LIMIT {
            return Err(AcousticsError::Cfl(cfl));
        }
        let per_ref = REFERENCE_RATE * dt;
        let lip_end = match lip_end {
            LipEnd::Radiating {
                reflection,
                smoothing,
            } => LipEnd::Radiating {
                reflection,
                smoothing: smoothing.powf(per_ref),
            },
            other => other,
        };
        let mut tube = Tube {
            params,
            iface: Vec::new(),
            glottal_end,
            lip_end,
            state: AcousticState::zero(grid.len()),
            oversample,
            dt,
            // Same damping per second as `loss` per reference-rate step.
            loss_step: 1.0 - (1.0 - params.loss).powf(per_ref),
            grid,
        };
        tube.update_interfaces();
        Ok(tube)
    }

    /// Default boundaries from `params`: leaky flow source and radiating lips.
    pub fn radiating(params: AcousticParams, grid: TubeGrid) -> Result<Self, AcousticsError> {
        let glottal = GlottalEnd::Source {
            reflection: params.r_glottis,
        };
        let lips = LipEnd::Radiating {
            reflection: params.r_lip,
            smoothing: params.lip_smoothing,
        };
        Self::new(params, grid, glottal, lips)
    }

    pub fn params(&self) -> &AcousticParams {
        &self.params
    }

    pub fn grid(&self) -> &TubeGrid {
        &self.grid
    }

    pub fn state(&self) -> &AcousticState {
        &self.state
    }

    /// Solver steps per audio sample.
    pub fn oversample(&self) -> usize {
        self.oversample
    }

    /// Solver step, s.
    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn cfl(&self) -> f64 {
        self.params.c * self.dt / self.grid.dx
    }

    pub fn loss_per_step(&self) -> f64 {
        self.loss_step
    }

    pub fn reset(&mut self) {
        self.state = AcousticState::zero(self.grid.len());
    }

    /// Replaces cell areas in place; the acoustic state carries over.
    pub fn set_areas(&mut self, areas: &[f64]) {
        debug_assert_eq!(areas.len(), self.grid.len());
        self.grid.areas.copy_from_slice(areas);
        self.update_interfaces();
    }

    fn update_interfaces(&mut self) {
        let a = &self.grid.areas;
        let n = a.len();
        self.iface.clear();
        self.iface.push(a[0]);
        for j in 1..n {
            self.iface.push(2.0 * a[j - 1] * a[j] / (a[j - 1] + a[j]));
        }
        self.iface.push(a[n - 1]);
    }

    /// Pressure in the first cell, seen by the glottis.
    pub fn inlet_pressure(&self) -> f64 {
        self.state.p[0]
    }

    pub fn lip_flow(&self) -> f64 {
        self.state.u[self.grid.len()]
    }

    /// One solver step with `glottal_flow` injected at the glottis.
    pub fn step(&mut self, glottal_flow: f64) -> Result<(), AcousticsError> {
        let AcousticParams { c, rho, .. } = self.params;
        let n = self.grid.len();
        let dx = self.grid.dx;
        let dt = self.dt;
        let loss = self.loss_step;
        let s = &mut self.state;
        let areas = &self.grid.areas;

        let kv = dt / (rho * dx);
        for j in 1..n {
            s.u[j] -= self.iface[j] * kv * (s.p[j] - s.p[j - 1]) + loss * s.u[j];
        }
        s.u[0] = match self.glottal_end {
            GlottalEnd::Closed => glottal_flow,
            GlottalEnd::Source { reflection } => {
                let leak = areas[0] / (rho * c) * (1.0 - reflection) / (1.0 + reflection);
                glottal_flow - leak * s.p[0]
            }
        };
        let a_lip = areas[n - 1];
        match self.lip_end {
            LipEnd::Rigid => s.u[n] = 0.0,
            LipEnd::Open => {
                s.u[n] -= a_lip * 2.0 * kv * (0.0 - s.p[n - 1]) + loss * s.u[n];
            }
            LipEnd::Radiating {
                reflection,
                smoothing,
            } => {
                // Wave split at the lip plane with the reflected wave
                // p⁻ = r·y and y the one-pole lowpassed incident wave
                // p⁺ = z0·ū + p⁻. Everything at the new level is solved
                // implicitly, ū being the mean of old and new flow, which
                // leaves p_rad = z_eff·ū + q.
                let z0 = rho * c / a_lip;
                let k = a_lip * 2.0 * kv;
                let a = smoothing;
                let g = reflection * (1.0 - a);
                let z_eff = z0 * (1.0 + g) / (1.0 - g);
                let q = 2.0 * reflection * a * s.lip_y / (1.0 - g);
                let h = 0.5 * k * z_eff;
                let u_old = s.u[n] * (1.0 - loss);
                s.u[n] = (u_old * (1.0 - h) - k * (q - s.p[n - 1])) / (1.0 + h);
                let u_mean = 0.5 * (u_old + s.u[n]);
                let reflected = (reflection * a * s.lip_y + g * z0 * u_mean) / (1.0 - g);
                let incident = z0 * u_mean + reflected;
                s.lip_y = a * s.lip_y + (1.0 - a) * incident;
            }
        }

        s.p_prev.copy_from_slice(&s.p);
        let kp = rho * c * c * dt / dx;
        for (i, (p, area)) in s.p.iter_mut().zip(areas).enumerate() {
            *p -= kp / area * (s.u[i + 1] - s.u[i]);
        }
        s.t += dt;
        if let Some((cell, value)) =
            s.p.iter()
                .enumerate()
                .find(|(_, v)| !(v.abs() <= BLOWUP))
                .map(|(i, v)| (i, *v))
        {
            return Err(AcousticsError::NumericalBlowup {
                t: s.t,
                cell,
                value,
            });
        }
        Ok(())
    }

    /// Runs one audio sample's worth of solver steps. `source` receives the
    /// inlet pressure and returns the glottal flow for each step. The sample
    /// is the change in step-averaged lip flow times the gain.
    pub fn audio_sample<E>(
        &mut self,
        mut source: impl FnMut(f64) -> Result<f64, E>,
    ) -> Result<f64, E>
    where
        E: From<AcousticsError>,
    {
        let mut acc = 0.0;
        for _ in 0..self.oversample {
            let ug = source(self.inlet_pressure())?;
            self.step(ug)?;
            acc += self.lip_flow();
        }
        let avg = acc / self.oversample as f64;
        let out = self.params.gain * (avg - self.state.lip_avg);
        self.state.lip_avg = avg;
        Ok(out)
    }

    /// Discrete energy conserved exactly by the lossless scheme with hard
    /// ends: `Σ V p^n p^(n+1) / (2ρc²) + Σ ρ dx u² / (2A)`, erg.
    pub fn energy(&self) -> f64 {
        let AcousticParams { c, rho, .. } = self.params;
        let dx = self.grid.dx;
        let s = &self.state;
        let n = self.grid.len();
        let potential: f64 = (0..n)
            .map(|i| self.grid.areas[i] * dx * s.p[i] * s.p_prev[i] / (2.0 * rho * c * c))
            .sum();
        let kinetic: f64 = (0..=n)
            .map(|j| {
                let len = if j == 0 || j == n { 0.5 * dx } else { dx };
                rho * len * s.u[j] * s.u[j] / (2.0 * self.iface[j])
            })
            .sum();
        potential + kinetic
    }

    /// Sets the interior state directly; used to start from an impulse.
    pub fn excite_pressure(&mut self, cell: usize, value: f64) {
        self.state.p[cell] += value;
        self.state.p_prev[cell] += value;
    }
}
