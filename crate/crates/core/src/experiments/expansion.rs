use super::{CollisionCounter, ExperimentSeries, Setup};
use crate::dynamics::{init_state, Integrator};
use crate::error::{Result, SimError};
use crate::perturb::{apply_kick, divergence, DivergenceScale, PerturbationSpec};

/// Evolves a fresh initial state for the configured number of steps.
pub fn run_free_expansion<I: Integrator>(setup: &Setup<'_, I>) -> Result<ExperimentSeries> {
    let integ = setup.integ;
    let mut state = init_state(integ, setup.n_particles, setup.seed)?;
    let mut series = ExperimentSeries::new("expand", setup.config_digest.clone(), setup.seed, false);
    series.push(setup.observe(0, &state, None))?;
    for step in 1..=setup.steps {
        integ.step(&mut state)?;
        if setup.is_sample(step, setup.steps) {
            series.push(setup.observe(step, &state, None))?;
        }
    }
    Ok(series)
}

#[derive(Debug, Clone)]
pub struct TwinOutcome {
    /// Observables of the kicked twin, with its divergence from the
    /// unperturbed run.
    pub series: ExperimentSeries,
    pub collisions_per_particle_at_kick: f64,
    pub collisions_per_particle_total: f64,
}

/// Runs a trajectory and a copy that receives `kick` at its scheduled step,
/// recording their phase-space divergence throughout.
pub fn run_twin_divergence<I: Integrator>(setup: &Setup<'_, I>, kick: &PerturbationSpec) -> Result<TwinOutcome> {
    if kick.kick_step > setup.steps {
        return Err(SimError::Protocol(format!(
            "kick step {} lies beyond the {} simulated steps",
            kick.kick_step, setup.steps
        )));
    }
    let integ = setup.integ;
    let scale = DivergenceScale::for_geometry(integ.geometry());
    let mut base = init_state(integ, setup.n_particles, setup.seed)?;
    let mut counter = CollisionCounter::new(integ, &base);
    let mut twin = base.clone();
    let mut at_kick = None;
    let mut series = ExperimentSeries::new("twin", setup.config_digest.clone(), setup.seed, true);

    for step in 0..=setup.steps {
        if step > 0 {
            integ.step(&mut base)?;
            integ.step(&mut twin)?;
            counter.update(integ, &base);
        }
        if step == kick.kick_step {
            apply_kick(integ, &mut twin, kick)?;
            at_kick = Some(counter.per_particle(base.len()));
        }
        if setup.is_sample(step, setup.steps) || step == kick.kick_step {
            let d = divergence(integ, &base, &twin, scale)?;
            series.push(setup.observe(step, &twin, Some(d)))?;
        }
    }
    Ok(TwinOutcome {
        series,
        collisions_per_particle_at_kick: at_kick.unwrap_or_default(),
        collisions_per_particle_total: counter.per_particle(base.len()),
    })
}
