use serde::{Deserialize, Serialize};

use super::{CollisionCounter, ExperimentSeries, Setup};
use crate::dynamics::{init_state, reverse_in_place, reverse_velocities, Integrator, ParticleState};
use crate::error::{Result, SimError};
use crate::perturb::{apply_kick, divergence, DivergenceScale, PerturbationSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoschmidtProtocol {
    pub reversal_step: u64,
    pub perturbation: PerturbationSpec,
    /// Length of the leg after reversal; defaults to `reversal_step`.
    pub return_steps: Option<u64>,
}

impl LoschmidtProtocol {
    pub fn new(reversal_step: u64, perturbation: PerturbationSpec) -> Self {
        Self {
            reversal_step,
            perturbation,
            return_steps: None,
        }
    }

    pub fn total_steps(&self) -> u64 {
        self.reversal_step + self.return_steps.unwrap_or(self.reversal_step)
    }
}

#[derive(Debug, Clone)]
pub struct LoschmidtOutcome<S> {
    pub series: ExperimentSeries,
    pub initial: ParticleState<S>,
    pub final_state: ParticleState<S>,
    /// Collisions per particle accumulated before the reversal.
    pub collisions_per_particle: f64,
    /// Mean macroscopic entropy over the last quarter of the forward leg.
    pub pre_reversal_plateau: f64,
    /// Final state equals the velocity-reversed initial state bit for bit.
    pub exact_return: bool,
}

/// Forward run, velocity reversal at `reversal_step`, optional kick, and the
/// return leg. With an active kick an unkicked twin runs alongside and fills
/// the divergence channel.
pub fn run_loschmidt<I: Integrator>(
    setup: &Setup<'_, I>,
    protocol: &LoschmidtProtocol,
) -> Result<LoschmidtOutcome<I::Scalar>> {
    let total = protocol.total_steps();
    let kick = &protocol.perturbation;
    if kick.is_active() && kick.kick_step > total {
        return Err(SimError::Protocol(format!(
            "kick step {} outside [0, {total}]",
            kick.kick_step
        )));
    }
    let integ = setup.integ;
    let reversal = protocol.reversal_step;
    let scale = DivergenceScale::for_geometry(integ.geometry());
    let initial = init_state(integ, setup.n_particles, setup.seed)?;
    let mut state = initial.clone();
    let mut twin = kick.is_active().then(|| initial.clone());
    let mut counter = CollisionCounter::new(integ, &state);
    let mut forward_entropy = Vec::new();
    let mut series = ExperimentSeries::new("loschmidt", setup.config_digest.clone(), setup.seed, twin.is_some());

    for step in 0..=total {
        if step > 0 {
            integ.step(&mut state)?;
            if let Some(t) = twin.as_mut() {
                integ.step(t)?;
            }
            if step <= reversal {
                counter.update(integ, &state);
            }
        }
        if step == reversal {
            reverse_in_place(&mut state);
            if let Some(t) = twin.as_mut() {
                reverse_in_place(t);
            }
        }
        if kick.is_active() && step == kick.kick_step {
            apply_kick(integ, &mut state, kick)?;
        }
        let sampled = setup.is_sample(step, total) || step == reversal;
        if sampled {
            let d = match &twin {
                Some(t) => Some(divergence(integ, &state, t, scale)?),
                None => None,
            };
            let sample = setup.observe(step, &state, d);
            if step <= reversal {
                forward_entropy.push(sample.entropy_macro);
            }
            series.push(sample)?;
        }
    }

    let tail = &forward_entropy[forward_entropy.len() - forward_entropy.len().div_ceil(4).max(1)..];
    let pre_reversal_plateau = tail.iter().sum::<f64>() / tail.len() as f64;
    let exact_return = total == 2 * reversal && state.same_phase_point(&reverse_velocities(&initial));
    Ok(LoschmidtOutcome {
        series,
        collisions_per_particle: counter.per_particle(state.len()),
        pre_reversal_plateau,
        exact_return,
        initial,
        final_state: state,
    })
}
