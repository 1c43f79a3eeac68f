use serde::{Deserialize, Serialize};

use super::{first_persistent, relaxation_index, smooth, ExperimentSeries, Setup};
use crate::dynamics::{coupling_energy, init_state, reverse_in_place, reverse_velocities, Integrator, ParticleState};
use crate::error::{Result, SimError};
use crate::perturb::{coupled_step, CouplingSpec};

pub const DEFAULT_SMOOTHING: usize = 50;
pub const DEFAULT_PERSISTENCE: usize = 100;
pub const DEFAULT_RELAXATION_FRACTION: f64 = 0.95;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyncProtocol {
    /// Steps vessel B evolves from its compact state before reversal.
    pub prep_steps: u64,
    pub coupling: CouplingSpec,
    /// Moving-average window, in samples, applied before slope tests.
    pub smoothing: usize,
    /// Consecutive samples a slope sign must hold to count as persistent.
    pub persistence: usize,
    /// Fraction of B's re-expansion that defines its relaxation step.
    pub relaxation_fraction: f64,
}

impl SyncProtocol {
    pub fn new(prep_steps: u64, coupling: CouplingSpec) -> Self {
        Self {
            prep_steps,
            coupling,
            smoothing: DEFAULT_SMOOTHING,
            persistence: DEFAULT_PERSISTENCE,
            relaxation_fraction: DEFAULT_RELAXATION_FRACTION,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyncOutcome {
    pub series_a: ExperimentSeries,
    pub series_b: ExperimentSeries,
    /// First sampled step from which B's smoothed entropy rises for the
    /// persistence window. The onset must be decided by samples taken no
    /// later than `prep_steps`, where B's isolated trajectory turns around
    /// on its own.
    pub sync_step: Option<u64>,
    /// Macroscopic entropy of B's compact starting state.
    pub b_compact_entropy: f64,
    /// Raw minimum of B's sampled macroscopic entropy and where it occurs.
    pub b_min_entropy: f64,
    pub b_min_step: u64,
    /// B's state at joint step `prep_steps` equals its reversed compact
    /// state bit for bit; `None` if the run is shorter than that.
    pub b_exact_return: Option<bool>,
    /// First step from which A's smoothed entropy falls for the persistence
    /// window.
    pub a_decrease_step: Option<u64>,
    /// First step after B's smoothed minimum at which the smoothed entropy
    /// covers the configured fraction of the rise to its final plateau.
    pub b_relaxation_step: Option<u64>,
    pub b_plateau: f64,
    /// Largest deviation of the joint energy, spring term included, from its
    /// starting value.
    pub joint_energy_drift: f64,
    pub joint_energy_initial: f64,
}

/// Two vessels: A starts compact and expands; B is evolved for `prep_steps`
/// from its own compact start and reversed, so that in isolation it would
/// shrink back. Both then run jointly for A's configured steps under the
/// coupling schedule, sampled at A's cadence.
pub fn run_two_vessel_sync<I: Integrator>(
    setup_a: &Setup<'_, I>,
    setup_b: &Setup<'_, I>,
    protocol: &SyncProtocol,
) -> Result<SyncOutcome> {
    let (ia, ib) = (setup_a.integ, setup_b.integ);
    if ia.mode() != ib.mode() {
        return Err(SimError::Incompatible(format!(
            "vessels use different integrator modes ({:?} vs {:?})",
            ia.mode(),
            ib.mode()
        )));
    }
    if protocol.coupling.lambda > 0.0 && protocol.coupling.active.start != 0 {
        return Err(SimError::Protocol("coupling must start at the joint-run origin".into()));
    }

    let mut a = init_state(ia, setup_a.n_particles, setup_a.seed)?;
    let compact_b = init_state(ib, setup_b.n_particles, setup_b.seed)?;
    let b_compact_entropy = setup_b.observe(0, &compact_b, None).entropy_macro;
    let mut b = compact_b.clone();
    ib.run(&mut b, protocol.prep_steps)?;
    reverse_in_place(&mut b);
    let b_target = reverse_velocities(&compact_b);
    let start_b = b.time_step_index();

    let steps = setup_a.steps;
    let joint_energy = |a: &ParticleState<I::Scalar>, b: &ParticleState<I::Scalar>, step: u64| -> f64 {
        let lambda = if protocol.coupling.active.contains(&step) || step == protocol.coupling.active.end {
            protocol.coupling.lambda
        } else {
            0.0
        };
        ia.total_energy(a) + ib.total_energy(b) + coupling_energy(ia, a, b, lambda)
    };
    let joint_energy_initial = joint_energy(&a, &b, 0);
    let mut joint_energy_drift: f64 = 0.0;
    let mut b_exact_return = None;
    let mut series_a = ExperimentSeries::new("sync_a", setup_a.config_digest.clone(), setup_a.seed, false);
    let mut series_b = ExperimentSeries::new("sync_b", setup_b.config_digest.clone(), setup_b.seed, false);

    for step in 0..=steps {
        if step > 0 {
            coupled_step(ia, ib, &mut a, &mut b, &protocol.coupling, step - 1)?;
        }
        if step == protocol.prep_steps {
            b_exact_return = Some(b.time_step_index() - start_b == step as i64 && b.same_phase_point(&b_target));
        }
        if setup_a.is_sample(step, steps) {
            series_a.push(setup_a.observe(step, &a, None))?;
            series_b.push(setup_b.observe(step, &b, None))?;
            let e = joint_energy(&a, &b, step);
            joint_energy_drift = joint_energy_drift.max((e - joint_energy_initial).abs());
        }
    }

    let steps_of = series_b.steps();
    let raw_b = series_b.entropy_macro();
    let (min_idx, b_min_entropy) = raw_b
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
    let smooth_b = smooth(&raw_b, protocol.smoothing);
    let smooth_a = smooth(&series_a.entropy_macro(), protocol.smoothing);

    // The smoothed slope at sample k reads raw samples up to k + 1 + w/2.
    let horizon = steps_of.partition_point(|&s| s <= protocol.prep_steps);
    let reach = protocol.smoothing / 2 + 1;
    let sync_step = first_persistent(&smooth_b, protocol.persistence, smooth_b.len(), |d| d > 0.0)
        .filter(|&k| k + reach < horizon)
        .map(|k| steps_of[k]);
    let a_decrease_step =
        first_persistent(&smooth_a, protocol.persistence, smooth_a.len(), |d| d < 0.0).map(|k| steps_of[k]);

    let tail = &raw_b[raw_b.len() - raw_b.len().div_ceil(4)..];
    let b_plateau = tail.iter().sum::<f64>() / tail.len() as f64;
    let (smin_idx, smin) = smooth_b
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
    let b_relaxation_step = (b_plateau > smin)
        .then(|| relaxation_index(&smooth_b, smin_idx, smin, b_plateau, protocol.relaxation_fraction))
        .flatten()
        .map(|k| steps_of[k]);

    Ok(SyncOutcome {
        b_min_step: steps_of[min_idx],
        series_a,
        series_b,
        sync_step,
        b_compact_entropy,
        b_min_entropy,
        b_exact_return,
        a_decrease_step,
        b_relaxation_step,
        b_plateau,
        joint_energy_drift,
        joint_energy_initial,
    })
}
