//! Midsagittal mass-spring tongue driven by four muscle fiber groups.
//!
//! Node indexing is row-major on a `columns x rows` grid: row 0 is the
//! dorsal surface, column 0 the tip. Positions are in cm, forces in N,
//! masses in kg and damping in N·s/cm, combined exactly as written in the
//! update law of [`step_dynamics`]; the unit system is nominal.

mod dynamics;
mod model_file;
mod reference;

pub(crate) use dynamics::advance;
pub use dynamics::{
    inverted_elements, mechanical_energy, muscle_forces, settle_quasi_static, spring_forces,
    step_dynamics, MuscleForces, Settled,
};
pub use model_file::{parse_model, write_model};
pub use reference::{build_reference_tongue, ReferenceGeometry};

use thiserror::Error;

use crate::geom::{polyline_length, Vec2};
use crate::gesture::Muscle;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpringKind {
    Structural,
    Shear,
    Boundary,
}

impl SpringKind {
    pub fn name(self) -> &'static str {
        match self {
            SpringKind::Structural => "structural",
            SpringKind::Shear => "shear",
            SpringKind::Boundary => "boundary",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spring {
    pub a: usize,
    pub b: usize,
    /// cm
    pub rest: f64,
    /// N/cm
    pub stiffness: f64,
    pub kind: SpringKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TongueMesh {
    pub nodes: Vec<Vec2>,
    pub springs: Vec<Spring>,
    pub fixed: Vec<usize>,
    pub columns: usize,
    pub rows: usize,
}

impl TongueMesh {
    pub fn node_index(&self, row: usize, col: usize) -> usize {
        row * self.columns + col
    }

    pub fn is_fixed(&self, i: usize) -> bool {
        self.fixed.contains(&i)
    }

    pub fn fixed_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.nodes.len()];
        for &i in &self.fixed {
            mask[i] = true;
        }
        mask
    }

    pub fn max_stiffness(&self) -> f64 {
        self.springs.iter().map(|s| s.stiffness).fold(0.0, f64::max)
    }

    /// Surface node indices, tip to root.
    pub fn surface_indices(&self) -> impl Iterator<Item = usize> {
        0..self.columns
    }

    /// Checks every structural invariant.
    pub fn validate(&self) -> Result<(), TongueError> {
        let n = self.nodes.len();
        if self.columns < 2 || self.rows < 2 || self.columns * self.rows != n {
            return Err(TongueError::InvalidModel(format!(
                "grid {}x{} does not match {n} nodes",
                self.columns, self.rows
            )));
        }
        if self.fixed.is_empty() {
            return Err(TongueError::InvalidModel("no fixed nodes".into()));
        }
        if let Some(&bad) = self.fixed.iter().find(|&&i| i >= n) {
            return Err(TongueError::InvalidModel(format!(
                "fixed node {bad} out of range"
            )));
        }
        for s in &self.springs {
            if s.a >= n || s.b >= n || s.a == s.b {
                return Err(TongueError::InvalidModel(format!(
                    "spring {}-{} has invalid endpoints",
                    s.a, s.b
                )));
            }
            if !(s.rest > 0.0) || !(s.stiffness > 0.0) {
                return Err(TongueError::InvalidModel(format!(
                    "spring {}-{} needs positive rest length and stiffness",
                    s.a, s.b
                )));
            }
        }
        if !self.is_connected() {
            return Err(TongueError::InvalidModel("mesh is not connected".into()));
        }
        Ok(())
    }

    pub fn is_connected(&self) -> bool {
        let n = self.nodes.len();
        if n == 0 {
            return false;
        }
        let mut adj = vec![Vec::new(); n];
        for s in &self.springs {
            adj[s.a].push(s.b);
            adj[s.b].push(s.a);
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for &j in &adj[i] {
                if !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MuscleGroup {
    pub muscle: Muscle,
    /// Node chains; each consecutive pair is one contractile segment.
    pub fibers: Vec<Vec<usize>>,
    /// N per fiber segment at full activation.
    pub max_force: f64,
}

/// Mesh plus its four muscle groups, stored in activation order.
#[derive(Debug, Clone, PartialEq)]
pub struct TongueModel {
    pub mesh: TongueMesh,
    pub muscles: [MuscleGroup; 4],
}

impl TongueModel {
    pub fn new(mesh: TongueMesh, muscles: Vec<MuscleGroup>) -> Result<Self, TongueError> {
        mesh.validate()?;
        let mut slots: [Option<MuscleGroup>; 4] = Default::default();
        for g in muscles {
            let slot = &mut slots[g.muscle.index()];
            if slot.is_some() {
                return Err(TongueError::InvalidModel(format!(
                    "muscle {} defined twice",
                    g.muscle
                )));
            }
            if !(g.max_force > 0.0) {
                return Err(TongueError::InvalidModel(format!(
                    "muscle {} needs positive max force",
                    g.muscle
                )));
            }
            for chain in &g.fibers {
                if chain.len() < 2 || chain.iter().any(|&i| i >= mesh.nodes.len()) {
                    return Err(TongueError::InvalidModel(format!(
                        "muscle {} has an invalid fiber chain",
                        g.muscle
                    )));
                }
            }
            *slot = Some(g);
        }
        let [a, b, c, d] = slots;
        let missing = |m: Muscle| TongueError::InvalidModel(format!("muscle {m} missing"));
        Ok(TongueModel {
            mesh,
            muscles: [
                a.ok_or_else(|| missing(Muscle::Gga))?,
                b.ok_or_else(|| missing(Muscle::Ggp))?,
                c.ok_or_else(|| missing(Muscle::Sl))?,
                d.ok_or_else(|| missing(Muscle::Il))?,
            ],
        })
    }

    pub fn muscle(&self, m: Muscle) -> &MuscleGroup {
        &self.muscles[m.index()]
    }

    pub fn rest_state(&self) -> TongueState {
        TongueState::rest(&self.mesh)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TongueState {
    pub pos: Vec<Vec2>,
    /// cm/s
    pub vel: Vec<Vec2>,
    pub t: f64,
}

impl TongueState {
    pub fn rest(mesh: &TongueMesh) -> Self {
        TongueState {
            pos: mesh.nodes.clone(),
            vel: vec![Vec2::ZERO; mesh.nodes.len()],
            t: 0.0,
        }
    }

    pub fn max_speed(&self) -> f64 {
        self.vel.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// Surface polyline (row 0), tip to root.
pub fn tongue_surface(state: &TongueState, mesh: &TongueMesh) -> Vec<Vec2> {
    mesh.surface_indices().map(|i| state.pos[i]).collect()
}

/// Tip-to-root arc length of the surface.
pub fn surface_arc_length(state: &TongueState, mesh: &TongueMesh) -> f64 {
    polyline_length(&tongue_surface(state, mesh))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicsParams {
    /// kg
    pub node_mass: f64,
    /// N·s/cm, viscous, per node
    pub damping: f64,
    /// s
    pub dt: f64,
    pub gravity: bool,
}

impl Default for DynamicsParams {
    fn default() -> Self {
        DynamicsParams {
            node_mass: 0.01,
            damping: 0.8,
            dt: 2e-4,
            gravity: false,
        }
    }
}

impl DynamicsParams {
    /// Largest step allowed for a given spring stiffness: `2·sqrt(m/k)/3`.
    pub fn stable_dt(&self, max_stiffness: f64) -> f64 {
        2.0 * (self.node_mass / max_stiffness).sqrt() / 3.0
    }

    pub fn validate(&self, mesh: &TongueMesh) -> Result<(), TongueError> {
        if !(self.node_mass > 0.0) || !(self.damping >= 0.0) || !(self.dt > 0.0) {
            return Err(TongueError::InvalidParams(
                "need node_mass > 0, damping >= 0, dt > 0",
            ));
        }
        if self.dt >= self.stable_dt(mesh.max_stiffness()) {
            return Err(TongueError::InvalidParams(
                "dt violates the stability bound",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TongueError {
    #[error("invalid tongue model: {0}")]
    InvalidModel(String),
    #[error("invalid dynamics parameters: {0}")]
    InvalidParams(&'static str),
    #[error("tongue dynamics unstable: node {node} speed {speed:.3e} cm/s")]
    Instability { node: usize, speed: f64 },
    #[error("tongue did not settle in {steps} steps (residual {residual:.3e} cm/s)")]
    NotConverged {
        residual: f64,
        steps: usize,
        state: Box<TongueState>,
    },
    #[error("model file line {line}: {message}")]
    Parse { line: usize, message: String },
}
