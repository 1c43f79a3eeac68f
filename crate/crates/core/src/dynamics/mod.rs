//! Deterministic 2D soft-disk dynamics.
//!
//! Both integrators use the symmetric kick-drift-kick splitting
//!
//! ```text
//! v += K(x)/2;  x += v·dt (mirrored at the walls);  v += K(x)/2
//! ```
//!
//! In [`FixedIntegrator`] positions and velocities are integers and every
//! half-kick impulse is rounded half-to-even from a force that depends only
//! on the integer positions, so `step_back` undoes `step` bit-exactly and
//! `reverse ∘ step ∘ reverse = step_back`. [`FloatIntegrator`] runs the same
//! scheme in `f64` and serves as a reference and for Jacobian estimates.

mod cells;
mod fixed;
mod float;
mod init;

use std::fmt::Debug;
use std::ops::Neg;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::geometry::{BoxGeometry, Rect};

pub use fixed::FixedIntegrator;
pub use float::FloatIntegrator;
pub use init::{init_state, packing_limit};

/// Every particle starts with this speed; it sets the velocity unit.
pub const MEAN_SPEED: f64 = 1.0;

/// Coordinate type of a phase point: `i64` quanta or `f64` reference values.
pub trait Scalar: Copy + PartialEq + Debug + Send + Sync + Neg<Output = Self> + 'static {}

impl Scalar for i64 {}
impl Scalar for f64 {}

/// Microstate of an `N`-particle gas.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleState<S> {
    positions: Vec<[S; 2]>,
    velocities: Vec<[S; 2]>,
    time_step_index: i64,
}

pub type FixedState = ParticleState<i64>;
pub type FloatState = ParticleState<f64>;

impl<S: Scalar> ParticleState<S> {
    pub fn from_parts(positions: Vec<[S; 2]>, velocities: Vec<[S; 2]>) -> Result<Self> {
        if positions.len() != velocities.len() {
            return Err(SimError::CountMismatch {
                left: positions.len(),
                right: velocities.len(),
            });
        }
        Ok(Self {
            positions,
            velocities,
            time_step_index: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[[S; 2]] {
        &self.positions
    }

    pub fn velocities(&self) -> &[[S; 2]] {
        &self.velocities
    }

    pub fn velocities_mut(&mut self) -> &mut [[S; 2]] {
        &mut self.velocities
    }

    pub fn time_step_index(&self) -> i64 {
        self.time_step_index
    }

    /// Same phase point, ignoring the step counter.
    pub fn same_phase_point(&self, other: &Self) -> bool {
        self.positions == other.positions && self.velocities == other.velocities
    }

    pub(crate) fn shift_time_step_index(&mut self, by: i64) {
        self.time_step_index += by;
    }

    pub(crate) fn parts_mut(&mut self) -> (&mut [[S; 2]], &mut [[S; 2]]) {
        (&mut self.positions, &mut self.velocities)
    }
}

/// Negates every velocity component; positions and step counter are untouched.
pub fn reverse_velocities<S: Scalar>(state: &ParticleState<S>) -> ParticleState<S> {
    let mut out = state.clone();
    reverse_in_place(&mut out);
    out
}

pub fn reverse_in_place<S: Scalar>(state: &mut ParticleState<S>) {
    for v in &mut state.velocities {
        *v = [-v[0], -v[1]];
    }
}

/// Short-range pair repulsion `U(r) = strength · (1 − r²/cutoff²)²` for
/// `r < cutoff`, zero beyond. `particle_radius` only governs placement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForceField {
    pub particle_radius: f64,
    pub repulsion_strength: f64,
    pub cutoff: f64,
}

impl ForceField {
    pub fn new(particle_radius: f64, repulsion_strength: f64, cutoff: f64) -> Result<Self> {
        if !(particle_radius >= 0.0 && particle_radius.is_finite()) {
            return Err(SimError::Geometry("particle_radius must be >= 0".into()));
        }
        if !(repulsion_strength >= 0.0 && repulsion_strength.is_finite()) {
            return Err(SimError::Geometry("repulsion_strength must be >= 0".into()));
        }
        if !(cutoff > 0.0 && cutoff >= 2.0 * particle_radius && cutoff.is_finite()) {
            return Err(SimError::Geometry(
                "cutoff must be positive and at least 2 * particle_radius".into(),
            ));
        }
        Ok(Self {
            particle_radius,
            repulsion_strength,
            cutoff,
        })
    }

    pub fn ideal_gas() -> Self {
        Self {
            particle_radius: 0.0,
            repulsion_strength: 0.0,
            cutoff: 1.0,
        }
    }

    pub fn is_interacting(&self) -> bool {
        self.repulsion_strength > 0.0
    }

    /// Pair energy at squared distance `r2`.
    pub fn pair_energy(&self, r2: f64) -> f64 {
        let c2 = self.cutoff * self.cutoff;
        if r2 >= c2 {
            return 0.0;
        }
        let s = 1.0 - r2 / c2;
        self.repulsion_strength * s * s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arithmetic {
    FixedReversible,
    FloatReference,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorMode {
    pub arithmetic: Arithmetic,
    pub dt: f64,
    /// Position quanta per unit length.
    pub fixed_point_scale: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

/// One-step evolution of a [`ParticleState`] under a fixed geometry, force
/// field and time step.
pub trait Integrator: Send + Sync {
    type Scalar: Scalar;

    fn geometry(&self) -> &BoxGeometry;
    fn field(&self) -> &ForceField;
    fn mode(&self) -> IntegratorMode;

    fn dt(&self) -> f64 {
        self.mode().dt
    }

    /// Converts a physical phase point into this integrator's representation.
    fn encode(&self, position: [f64; 2], velocity: [f64; 2]) -> Result<([Self::Scalar; 2], [Self::Scalar; 2])>;
    fn position(&self, p: &[Self::Scalar; 2]) -> [f64; 2];
    fn velocity(&self, v: &[Self::Scalar; 2]) -> [f64; 2];
    /// Adds a physical velocity increment, rounding to the representation.
    fn add_velocity(&self, v: &mut [Self::Scalar; 2], dv: [f64; 2]) -> Result<()>;

    /// Grid cell of a position on a `cells_x × cells_y` tiling of the box;
    /// cells are half-open and the far box edges close the last cells.
    fn cell_of(&self, p: &[Self::Scalar; 2], cells_x: usize, cells_y: usize) -> (usize, usize);
    /// Half-open containment; a region edge lying on the box edge is closed.
    fn in_region(&self, p: &[Self::Scalar; 2], region: &Rect) -> bool;

    fn half_kick(&self, state: &mut ParticleState<Self::Scalar>, dir: Direction) -> Result<()>;
    fn drift(&self, state: &mut ParticleState<Self::Scalar>, dir: Direction) -> Result<()>;
    /// Index-paired spring impulse `λ (x_B − x_A)` between two vessels, half
    /// a step's worth, applied equal and opposite.
    fn coupling_half_kick(
        &self,
        a: &mut ParticleState<Self::Scalar>,
        b: &mut ParticleState<Self::Scalar>,
        lambda: f64,
        dir: Direction,
    ) -> Result<()>;

    /// Pairs `(i, j)`, `i < j`, currently inside the force cutoff, sorted.
    fn contacts(&self, state: &ParticleState<Self::Scalar>) -> Vec<(u32, u32)>;

    fn step(&self, state: &mut ParticleState<Self::Scalar>) -> Result<()> {
        self.half_kick(state, Direction::Forward)?;
        self.drift(state, Direction::Forward)?;
        self.half_kick(state, Direction::Forward)?;
        state.time_step_index += 1;
        Ok(())
    }

    fn step_back(&self, state: &mut ParticleState<Self::Scalar>) -> Result<()> {
        self.half_kick(state, Direction::Backward)?;
        self.drift(state, Direction::Backward)?;
        self.half_kick(state, Direction::Backward)?;
        state.time_step_index -= 1;
        Ok(())
    }

    fn run(&self, state: &mut ParticleState<Self::Scalar>, steps: u64) -> Result<()> {
        for _ in 0..steps {
            self.step(state)?;
        }
        Ok(())
    }

    /// Kinetic plus pair potential energy, unit mass, in `f64` for reporting.
    fn total_energy(&self, state: &ParticleState<Self::Scalar>) -> f64 {
        let kinetic: f64 = state
            .velocities()
            .iter()
            .map(|v| {
                let [vx, vy] = self.velocity(v);
                0.5 * (vx * vx + vy * vy)
            })
            .sum();
        let potential: f64 = self
            .contacts(state)
            .iter()
            .map(|&(i, j)| {
                let a = self.position(&state.positions()[i as usize]);
                let b = self.position(&state.positions()[j as usize]);
                let (dx, dy) = (a[0] - b[0], a[1] - b[1]);
                self.field().pair_energy(dx * dx + dy * dy)
            })
            .sum();
        kinetic + potential
    }

    /// Physical positions and velocities.
    fn physical(&self, state: &ParticleState<Self::Scalar>) -> Vec<([f64; 2], [f64; 2])> {
        state
            .positions()
            .iter()
            .zip(state.velocities())
            .map(|(p, v)| (self.position(p), self.velocity(v)))
            .collect()
    }

    fn from_physical(&self, phase: &[([f64; 2], [f64; 2])]) -> Result<ParticleState<Self::Scalar>> {
        let mut positions = Vec::with_capacity(phase.len());
        let mut velocities = Vec::with_capacity(phase.len());
        for &(p, v) in phase {
            let (p, v) = self.encode(p, v)?;
            positions.push(p);
            velocities.push(v);
        }
        ParticleState::from_parts(positions, velocities)
    }
}

/// Spring energy `½ λ Σ |x_B − x_A|²` over the index pairing used by
/// [`Integrator::coupling_half_kick`].
pub fn coupling_energy<I: Integrator>(
    integ: &I,
    a: &ParticleState<I::Scalar>,
    b: &ParticleState<I::Scalar>,
    lambda: f64,
) -> f64 {
    if lambda == 0.0 || a.is_empty() || b.is_empty() {
        return 0.0;
    }
    coupling_pairs(a.len(), b.len())
        .map(|(ia, ib)| {
            let pa = integ.position(&a.positions()[ia]);
            let pb = integ.position(&b.positions()[ib]);
            let (dx, dy) = (pb[0] - pa[0], pb[1] - pa[1]);
            0.5 * lambda * (dx * dx + dy * dy)
        })
        .sum()
}

/// Index pairing across vessels: `k ↦ (k mod N_A, k mod N_B)` for
/// `k < max(N_A, N_B)`.
pub fn coupling_pairs(na: usize, nb: usize) -> impl Iterator<Item = (usize, usize)> {
    let n = if na == 0 || nb == 0 { 0 } else { na.max(nb) };
    (0..n).map(move |k| (k % na, k % nb))
}
