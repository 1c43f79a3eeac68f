use serde::{Deserialize, Serialize};

use super::{ExperimentSeries, Setup};
use crate::dynamics::{init_state, Integrator, ParticleState};
use crate::error::{Result, SimError};
use crate::perturb::{divergence, DivergenceScale};

/// Recurrence times grow so fast with particle count that larger systems
/// are refused.
pub const MAX_RECURRENCE_PARTICLES: usize = 3;
pub const DEFAULT_RECURRENCE_RADIUS: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceProtocol {
    pub max_steps: u64,
    /// Threshold on the normalised phase-space distance to the start.
    pub radius: f64,
}

impl RecurrenceProtocol {
    pub fn new(max_steps: u64) -> Self {
        Self {
            max_steps,
            radius: DEFAULT_RECURRENCE_RADIUS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceOutcome {
    pub series: ExperimentSeries,
    /// First step at which the trajectory, having left the recurrence
    /// radius, comes back inside it. The run stops there.
    pub recurrence_step: Option<u64>,
    /// The state at `recurrence_step` is the initial state bit for bit.
    pub exact: bool,
    pub distance_at_recurrence: Option<f64>,
    /// Smallest local minimum of the distance after first leaving the
    /// radius, the closest approach short of a recurrence.
    pub closest_distance: f64,
    pub closest_step: Option<u64>,
}

/// Recurrence search from a fresh initial state.
pub fn run_recurrence<I: Integrator>(setup: &Setup<'_, I>, protocol: &RecurrenceProtocol) -> Result<RecurrenceOutcome> {
    guard(setup.n_particles)?;
    let initial = init_state(setup.integ, setup.n_particles, setup.seed)?;
    run_recurrence_from(setup, &initial, protocol)
}

/// Recurrence search from a prescribed initial state.
pub fn run_recurrence_from<I: Integrator>(
    setup: &Setup<'_, I>,
    initial: &ParticleState<I::Scalar>,
    protocol: &RecurrenceProtocol,
) -> Result<RecurrenceOutcome> {
    guard(initial.len())?;
    if !(protocol.radius > 0.0) {
        return Err(SimError::Protocol(format!(
            "recurrence radius must be > 0, got {}",
            protocol.radius
        )));
    }
    let integ = setup.integ;
    let scale = DivergenceScale::for_geometry(integ.geometry());
    let mut state = initial.clone();
    let mut series = ExperimentSeries::new("recurrence", setup.config_digest.clone(), setup.seed, false);
    series.push(setup.observe(0, &state, None))?;

    let mut left = false;
    let mut previous = [f64::INFINITY, 0.0];
    let mut closest_distance = f64::INFINITY;
    let mut closest_step = None;
    let mut hit = None;
    for step in 1..=protocol.max_steps {
        integ.step(&mut state)?;
        let d = divergence(integ, &state, initial, scale)?;
        if !left {
            left = d >= protocol.radius;
        } else {
            let [before, last] = previous;
            if last < before && last <= d && last < closest_distance {
                closest_distance = last;
                closest_step = Some(step - 1);
            }
            if d < protocol.radius {
                hit = Some((step, d));
            }
        }
        previous = [previous[1], d];
        if hit.is_some() || setup.is_sample(step, protocol.max_steps) {
            series.push(setup.observe(step, &state, None))?;
        }
        if hit.is_some() {
            break;
        }
    }
    Ok(RecurrenceOutcome {
        series,
        recurrence_step: hit.map(|h| h.0),
        exact: hit.is_some() && state.same_phase_point(initial),
        distance_at_recurrence: hit.map(|h| h.1),
        closest_distance,
        closest_step,
    })
}

fn guard(n: usize) -> Result<()> {
    if n > MAX_RECURRENCE_PARTICLES {
        return Err(SimError::Protocol(format!(
            "recurrence needs at most {MAX_RECURRENCE_PARTICLES} particles, got {n}"
        )));
    }
    Ok(())
}
