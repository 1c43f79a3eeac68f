//! Observer and environment influence on a trajectory: seeded velocity
//! kicks, weak spring coupling between two vessels, and the phase-space
//! divergence between twin trajectories.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::dynamics::{Direction, Integrator, ParticleState, MEAN_SPEED};
use crate::error::{Result, SimError};
use crate::geometry::BoxGeometry;
use crate::rng::{self, Stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KickTarget {
    All,
    Indices(Vec<usize>),
}

/// A single impulsive velocity kick of magnitude `epsilon` per targeted
/// particle, applied at `kick_step`. `epsilon = 0` is a no-op.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    pub epsilon: f64,
    pub kick_step: u64,
    pub target: KickTarget,
    pub seed: u64,
}

impl PerturbationSpec {
    pub fn none() -> Self {
        Self {
            epsilon: 0.0,
            kick_step: 0,
            target: KickTarget::All,
            seed: 0,
        }
    }

    pub fn all(epsilon: f64, kick_step: u64, seed: u64) -> Self {
        Self {
            epsilon,
            kick_step,
            target: KickTarget::All,
            seed,
        }
    }

    pub fn is_active(&self) -> bool {
        self.epsilon > 0.0
    }
}

/// Realised increments of a kick, one entry per targeted particle.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct KickRecord {
    pub step: u64,
    pub deltas: Vec<(usize, [f64; 2])>,
}

/// Adds `epsilon · u` to each targeted velocity, `u` a unit vector drawn from
/// the kick stream of `spec.seed` in target order.
pub fn apply_kick<I: Integrator>(
    integ: &I,
    state: &mut ParticleState<I::Scalar>,
    spec: &PerturbationSpec,
) -> Result<KickRecord> {
    let mut record = KickRecord {
        step: spec.kick_step,
        deltas: Vec::new(),
    };
    if !spec.is_active() {
        return Ok(record);
    }
    if state.time_step_index() != spec.kick_step as i64 {
        return Err(SimError::Protocol(format!(
            "kick scheduled for step {} applied at step {}",
            spec.kick_step,
            state.time_step_index()
        )));
    }
    if !spec.epsilon.is_finite() {
        return Err(SimError::Protocol("kick magnitude must be finite".into()));
    }
    let targets: Vec<usize> = match &spec.target {
        KickTarget::All => (0..state.len()).collect(),
        KickTarget::Indices(idx) => idx.clone(),
    };
    let mut draw = rng::stream(spec.seed, Stream::Kick);
    for i in targets {
        if i >= state.len() {
            return Err(SimError::Protocol(format!("kick target {i} out of range")));
        }
        let u = rng::unit_vector(&mut draw);
        let dv = [spec.epsilon * u[0], spec.epsilon * u[1]];
        let before = integ.velocity(&state.velocities()[i]);
        integ.add_velocity(&mut state.velocities_mut()[i], dv)?;
        let after = integ.velocity(&state.velocities()[i]);
        record.deltas.push((i, [after[0] - before[0], after[1] - before[1]]));
    }
    Ok(record)
}

/// Index-paired springs of stiffness `lambda` between two vessels, active on
/// the half-open joint step interval `active`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingSpec {
    pub lambda: f64,
    pub active: Range<u64>,
}

impl CouplingSpec {
    pub fn new(lambda: f64, active: Range<u64>) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(SimError::Protocol(format!("lambda must be >= 0, got {lambda}")));
        }
        Ok(Self { lambda, active })
    }

    pub fn decoupled() -> Self {
        Self {
            lambda: 0.0,
            active: 0..0,
        }
    }

    /// Stiffness in effect for the step that starts at joint step `step`.
    pub fn lambda_at(&self, step: u64) -> f64 {
        if self.active.contains(&step) {
            self.lambda
        } else {
            0.0
        }
    }
}

fn joint_half_kick<I: Integrator>(
    ia: &I,
    ib: &I,
    a: &mut ParticleState<I::Scalar>,
    b: &mut ParticleState<I::Scalar>,
    lambda: f64,
    dir: Direction,
) -> Result<()> {
    ia.half_kick(a, dir)?;
    ib.half_kick(b, dir)?;
    ia.coupling_half_kick(a, b, lambda, dir)
}

/// One synchronized step of two vessels starting at joint step `step`.
///
/// Within the coupling interval, each half-kick also applies the spring
/// impulse between particle `k mod N_A` of A and `k mod N_B` of B, so the
/// joint map keeps the kick-drift-kick symmetry and stays bit-reversible in
/// fixed-point mode. Outside it the two vessels step independently.
pub fn coupled_step<I: Integrator>(
    ia: &I,
    ib: &I,
    a: &mut ParticleState<I::Scalar>,
    b: &mut ParticleState<I::Scalar>,
    coupling: &CouplingSpec,
    step: u64,
) -> Result<()> {
    let lambda = coupling.lambda_at(step);
    if lambda == 0.0 {
        ia.step(a)?;
        return ib.step(b);
    }
    check_compatible(ia, ib)?;
    joint_half_kick(ia, ib, a, b, lambda, Direction::Forward)?;
    ia.drift(a, Direction::Forward)?;
    ib.drift(b, Direction::Forward)?;
    joint_half_kick(ia, ib, a, b, lambda, Direction::Forward)?;
    a.shift_time_step_index(1);
    b.shift_time_step_index(1);
    Ok(())
}

/// Exact inverse of [`coupled_step`] taken at joint step `step`.
pub fn coupled_step_back<I: Integrator>(
    ia: &I,
    ib: &I,
    a: &mut ParticleState<I::Scalar>,
    b: &mut ParticleState<I::Scalar>,
    coupling: &CouplingSpec,
    step: u64,
) -> Result<()> {
    let lambda = coupling.lambda_at(step);
    if lambda == 0.0 {
        ia.step_back(a)?;
        return ib.step_back(b);
    }
    check_compatible(ia, ib)?;
    joint_half_kick(ia, ib, a, b, lambda, Direction::Backward)?;
    ia.drift(a, Direction::Backward)?;
    ib.drift(b, Direction::Backward)?;
    joint_half_kick(ia, ib, a, b, lambda, Direction::Backward)?;
    a.shift_time_step_index(-1);
    b.shift_time_step_index(-1);
    Ok(())
}

fn check_compatible<I: Integrator>(ia: &I, ib: &I) -> Result<()> {
    let (ma, mb) = (ia.mode(), ib.mode());
    if ma != mb {
        return Err(SimError::Incompatible(format!(
            "vessels use different integrator modes ({ma:?} vs {mb:?})"
        )));
    }
    Ok(())
}

/// Normalisation of the divergence metric: lengths by the box diagonal,
/// velocities by the initial mean speed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivergenceScale {
    pub length: f64,
    pub speed: f64,
}

impl DivergenceScale {
    pub fn for_geometry(g: &BoxGeometry) -> Self {
        Self {
            length: g.diagonal(),
            speed: MEAN_SPEED,
        }
    }
}

/// Root-mean-square over particles of the normalised phase-space distance.
pub fn divergence<I: Integrator>(
    integ: &I,
    a: &ParticleState<I::Scalar>,
    b: &ParticleState<I::Scalar>,
    scale: DivergenceScale,
) -> Result<f64> {
    if a.len() != b.len() {
        return Err(SimError::CountMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.is_empty() {
        return Ok(0.0);
    }
    let mut sum = 0.0;
    for i in 0..a.len() {
        let (pa, pb) = (integ.position(&a.positions()[i]), integ.position(&b.positions()[i]));
        let (va, vb) = (integ.velocity(&a.velocities()[i]), integ.velocity(&b.velocities()[i]));
        let dx = (pa[0] - pb[0]) / scale.length;
        let dy = (pa[1] - pb[1]) / scale.length;
        let du = (va[0] - vb[0]) / scale.speed;
        let dv = (va[1] - vb[1]) / scale.speed;
        sum += dx * dx + dy * dy + du * du + dv * dv;
    }
    Ok((sum / a.len() as f64).sqrt())
}
