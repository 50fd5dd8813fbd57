use super::{DynamicsParams, TongueError, TongueMesh, TongueModel, TongueState};
use crate::geom::Vec2;
use crate::gesture::ActivationVector;

/// Velocity magnitude treated as a blow-up.
const MAX_SPEED: f64 = 1e6;
/// Fiber nodes closer than this are skipped.
const DEGENERATE_LEN: f64 = 1e-9;
/// cm/s²
const GRAVITY: f64 = 981.0;

#[derive(Debug, Clone, PartialEq)]
pub struct MuscleForces {
    pub forces: Vec<Vec2>,
    /// Fiber segments skipped because their endpoints coincide.
    pub degenerate_segments: usize,
}

/// Contractile fiber forces: each segment pulls its two nodes toward each
/// other with magnitude `activation · max_force`.
pub fn muscle_forces(
    state: &TongueState,
    act: &ActivationVector,
    model: &TongueModel,
) -> MuscleForces {
    let mut forces = vec![Vec2::ZERO; state.pos.len()];
    let mut degenerate_segments = 0;
    for group in &model.muscles {
        let magnitude = act.get(group.muscle) * group.max_force;
        if magnitude == 0.0 {
            continue;
        }
        for chain in &group.fibers {
            for seg in chain.windows(2) {
                let (i, j) = (seg[0], seg[1]);
                let d = state.pos[j] - state.pos[i];
                let len = d.norm();
                if len < DEGENERATE_LEN {
                    degenerate_segments += 1;
                    continue;
                }
                let f = d * (magnitude / len);
                forces[i] += f;
                forces[j] -= f;
            }
        }
    }
    MuscleForces {
        forces,
        degenerate_segments,
    }
}

/// Linear Hookean spring forces, summed per node.
pub fn spring_forces(pos: &[Vec2], mesh: &TongueMesh) -> Vec<Vec2> {
    let mut forces = vec![Vec2::ZERO; pos.len()];
    for s in &mesh.springs {
        let d = pos[s.b] - pos[s.a];
        let len = d.norm();
        if len == 0.0 {
            continue;
        }
        let f = d * (s.stiffness * (len - s.rest) / len);
        forces[s.a] += f;
        forces[s.b] -= f;
    }
    forces
}

/// One semi-implicit Euler step. Fixed nodes stay at rest.
pub fn step_dynamics(
    state: &TongueState,
    muscle: &[Vec2],
    mesh: &TongueMesh,
    params: &DynamicsParams,
) -> Result<TongueState, TongueError> {
    let mut next = state.clone();
    step_in_place(&mut next, muscle, mesh, &mesh.fixed_mask(), params)?;
    Ok(next)
}

fn step_in_place(
    state: &mut TongueState,
    muscle: &[Vec2],
    mesh: &TongueMesh,
    fixed: &[bool],
    params: &DynamicsParams,
) -> Result<(), TongueError> {
    let springs = spring_forces(&state.pos, mesh);
    let dt = params.dt;
    let inv_m = 1.0 / params.node_mass;
    for i in 0..state.pos.len() {
        if fixed[i] {
            state.pos[i] = mesh.nodes[i];
            state.vel[i] = Vec2::ZERO;
            continue;
        }
        let mut f = springs[i] + muscle[i] - state.vel[i] * params.damping;
        if params.gravity {
            f.y -= GRAVITY * params.node_mass;
        }
        state.vel[i] += f * (dt * inv_m);
        let speed = state.vel[i].norm();
        if !(speed <= MAX_SPEED) {
            return Err(TongueError::Instability { node: i, speed });
        }
        state.pos[i] += state.vel[i] * dt;
    }
    state.t += dt;
    Ok(())
}

/// Advances `steps` substeps at constant activation, warm-started from
/// `state`. Returns the number of degenerate fiber segments seen.
pub(crate) fn advance(
    state: &mut TongueState,
    act: &ActivationVector,
    model: &TongueModel,
    params: &DynamicsParams,
    steps: usize,
) -> Result<usize, TongueError> {
    let fixed = model.mesh.fixed_mask();
    let mut degenerate = 0;
    for _ in 0..steps {
        let m = muscle_forces(state, act, model);
        degenerate = degenerate.max(m.degenerate_segments);
        step_in_place(state, &m.forces, &model.mesh, &fixed, params)?;
    }
    Ok(degenerate)
}

/// Largest of node speed and terminal drift speed `|F|/damping` over free
/// nodes; both vanish only at a static equilibrium.
fn residual(
    state: &TongueState,
    act: &ActivationVector,
    model: &TongueModel,
    params: &DynamicsParams,
    fixed: &[bool],
) -> f64 {
    let springs = spring_forces(&state.pos, &model.mesh);
    let muscle = muscle_forces(state, act, model).forces;
    let drag = if params.damping > 0.0 {
        params.damping
    } else {
        params.node_mass / params.dt
    };
    (0..state.pos.len())
        .filter(|&i| !fixed[i])
        .map(|i| {
            let drift = (springs[i] + muscle[i]).norm() / drag;
            drift.max(state.vel[i].norm())
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Settled {
    pub state: TongueState,
    pub steps: usize,
    /// cm/s
    pub residual: f64,
}

/// Steps from rest until the residual speed drops below `tol` (cm/s).
pub fn settle_quasi_static(
    act: &ActivationVector,
    model: &TongueModel,
    params: &DynamicsParams,
    tol: f64,
    max_steps: usize,
) -> Result<Settled, TongueError> {
    settle_from(model.rest_state(), act, model, params, tol, max_steps)
}

pub(crate) fn settle_from(
    mut state: TongueState,
    act: &ActivationVector,
    model: &TongueModel,
    params: &DynamicsParams,
    tol: f64,
    max_steps: usize,
) -> Result<Settled, TongueError> {
    if !(tol > 0.0) {
        return Err(TongueError::InvalidParams(
            "settle tolerance must be positive",
        ));
    }
    let fixed = model.mesh.fixed_mask();
    let mut r = residual(&state, act, model, params, &fixed);
    let mut steps = 0;
    while r >= tol {
        if steps == max_steps {
            return Err(TongueError::NotConverged {
                residual: r,
                steps,
                state: Box::new(state),
            });
        }
        advance(&mut state, act, model, params, 1)?;
        steps += 1;
        r = residual(&state, act, model, params, &fixed);
    }
    Ok(Settled {
        state,
        steps,
        residual: r,
    })
}

/// Kinetic + spring + contractile potential energy. A constant-tension fiber
/// segment stores `tension · length`.
pub fn mechanical_energy(
    state: &TongueState,
    act: &ActivationVector,
    model: &TongueModel,
    params: &DynamicsParams,
) -> f64 {
    let kinetic: f64 = state
        .vel
        .iter()
        .map(|v| 0.5 * params.node_mass * v.norm_sq())
        .sum();
    let elastic: f64 = model
        .mesh
        .springs
        .iter()
        .map(|s| {
            let stretch = (state.pos[s.b] - state.pos[s.a]).norm() - s.rest;
            0.5 * s.stiffness * stretch * stretch
        })
        .sum();
    let contractile: f64 = model
        .muscles
        .iter()
        .map(|g| {
            let tension = act.get(g.muscle) * g.max_force;
            g.fibers
                .iter()
                .flat_map(|c| c.windows(2))
                .map(|w| tension * (state.pos[w[1]] - state.pos[w[0]]).norm())
                .sum::<f64>()
        })
        .sum();
    let gravity: f64 = if params.gravity {
        state
            .pos
            .iter()
            .map(|p| params.node_mass * GRAVITY * p.y)
            .sum()
    } else {
        0.0
    };
    kinetic + elastic + contractile + gravity
}

/// Grid cells whose orientation flipped relative to the rest mesh.
pub fn inverted_elements(state: &TongueState, mesh: &TongueMesh) -> usize {
    let signed = |p: &[Vec2], a: usize, b: usize, c: usize| (p[b] - p[a]).cross(p[c] - p[a]);
    let mut count = 0;
    for r in 0..mesh.rows - 1 {
        for c in 0..mesh.columns - 1 {
            let i00 = mesh.node_index(r, c);
            let i01 = mesh.node_index(r, c + 1);
            let i10 = mesh.node_index(r + 1, c);
            let i11 = mesh.node_index(r + 1, c + 1);
            let flipped = [(i00, i01, i11), (i00, i11, i10)].iter().any(|&(a, b, c)| {
                signed(&mesh.nodes, a, b, c) * signed(&state.pos, a, b, c) <= 0.0
            });
            if flipped {
                count += 1;
            }
        }
    }
    count
}
