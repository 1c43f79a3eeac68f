//! Protocols reproducing the arrow-of-time experiments: free expansion,
//! Loschmidt echo, two-vessel synchronisation, recurrence, and the growth
//! law of twin-trajectory divergence.

mod expansion;
mod growth;
mod loschmidt;
mod recurrence;
mod series;
mod sync;

pub use expansion::{run_free_expansion, run_twin_divergence, TwinOutcome};
pub use growth::{fit_divergence_growth, saturation_window, FitWindow, GrowthFit, GrowthModel, DEFAULT_SATURATION};
pub use loschmidt::{run_loschmidt, LoschmidtOutcome, LoschmidtProtocol};
pub use recurrence::{run_recurrence, run_recurrence_from, RecurrenceOutcome, RecurrenceProtocol, DEFAULT_RECURRENCE_RADIUS, MAX_RECURRENCE_PARTICLES};
pub use series::{ExperimentSeries, Sample};
pub use sync::{run_two_vessel_sync, SyncOutcome, SyncProtocol, DEFAULT_PERSISTENCE, DEFAULT_RELAXATION_FRACTION, DEFAULT_SMOOTHING};

use crate::config::SimConfig;
use crate::dynamics::{Integrator, ParticleState};
use crate::entropy::{coarse_grain, occupied_volume_entropy, region_return_fraction, CoarseGrid};
use crate::error::Result;
use crate::geometry::Rect;

/// Everything a protocol needs besides its own parameters.
#[derive(Debug, Clone)]
pub struct Setup<'a, I> {
    pub integ: &'a I,
    pub n_particles: usize,
    pub seed: u64,
    pub steps: u64,
    pub sample_every: u64,
    pub grid: CoarseGrid,
    pub config_digest: String,
}

impl<'a, I: Integrator> Setup<'a, I> {
    pub fn from_config(config: &SimConfig, integ: &'a I) -> Result<Self> {
        Ok(Self {
            integ,
            n_particles: config.n_particles,
            seed: config.seed,
            steps: config.steps,
            sample_every: config.sample_every.max(1),
            grid: config.coarse_grid(integ)?,
            config_digest: config.digest(),
        })
    }

    pub fn region(&self) -> Rect {
        self.integ.geometry().initial_region()
    }

    pub(crate) fn is_sample(&self, step: u64, last: u64) -> bool {
        step.is_multiple_of(self.sample_every) || step == last
    }

    pub(crate) fn observe(&self, step: u64, state: &ParticleState<I::Scalar>, divergence: Option<f64>) -> Sample {
        observe(self.integ, self.grid, &self.region(), step, state, divergence)
    }
}

pub(crate) fn observe<I: Integrator>(
    integ: &I,
    grid: CoarseGrid,
    region: &Rect,
    step: u64,
    state: &ParticleState<I::Scalar>,
    divergence: Option<f64>,
) -> Sample {
    let m = coarse_grain(integ, state, grid);
    Sample {
        step,
        entropy_macro: m.entropy_macroscopic,
        entropy_volume: occupied_volume_entropy(&m).unwrap_or(0.0),
        return_fraction: region_return_fraction(integ, state, region),
        divergence,
        energy: integ.total_energy(state),
    }
}

/// Counts pair collisions: a pair that enters the force cutoff from outside.
#[derive(Debug, Clone, Default)]
pub struct CollisionCounter {
    inside: Vec<(u32, u32)>,
    entries: u64,
}

impl CollisionCounter {
    /// Pairs already in contact at the start are not counted.
    pub fn new<I: Integrator>(integ: &I, state: &ParticleState<I::Scalar>) -> Self {
        Self {
            inside: integ.contacts(state),
            entries: 0,
        }
    }

    pub fn update<I: Integrator>(&mut self, integ: &I, state: &ParticleState<I::Scalar>) {
        let now = integ.contacts(state);
        let mut old = self.inside.iter().peekable();
        for pair in &now {
            while old.peek().is_some_and(|p| *p < pair) {
                old.next();
            }
            if old.peek() != Some(&pair) {
                self.entries += 1;
            }
        }
        self.inside = now;
    }

    pub fn collisions(&self) -> u64 {
        self.entries
    }

    /// Each collision involves two particles.
    pub fn per_particle(&self, n: usize) -> f64 {
        if n == 0 {
            0.0
        } else {
            2.0 * self.entries as f64 / n as f64
        }
    }
}

/// Centred moving average over `window` samples, truncated at the ends.
pub fn smooth(values: &[f64], window: usize) -> Vec<f64> {
    let half = window / 2;
    let mut prefix = vec![0.0; values.len() + 1];
    for (i, v) in values.iter().enumerate() {
        prefix[i + 1] = prefix[i] + v;
    }
    (0..values.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(values.len());
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect()
}

/// Index of the first sample `k` such that the slopes `s[j+1] − s[j]` for
/// `j` in `k .. k + persistence` all satisfy `pred`, with `k + persistence`
/// no later than `limit` (exclusive upper bound on the last sample index).
pub fn first_persistent(smoothed: &[f64], persistence: usize, limit: usize, pred: impl Fn(f64) -> bool) -> Option<usize> {
    let limit = limit.min(smoothed.len());
    if persistence == 0 || limit <= persistence {
        return None;
    }
    let mut run = 0usize;
    for j in 0..limit - 1 {
        if pred(smoothed[j + 1] - smoothed[j]) {
            run += 1;
            if run == persistence {
                return Some(j + 1 - persistence);
            }
        } else {
            run = 0;
        }
    }
    None
}

/// First sample index, at or after `from`, where `values` reaches
/// `base + fraction · (plateau − base)`.
pub fn relaxation_index(values: &[f64], from: usize, base: f64, plateau: f64, fraction: f64) -> Option<usize> {
    let target = base + fraction * (plateau - base);
    (from..values.len()).find(|&i| values[i] >= target)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moving_average_truncates_at_edges() {
        let s = smooth(&[1.0, 2.0, 3.0, 4.0, 5.0], 3);
        assert_eq!(s, vec![1.5, 2.0, 3.0, 4.0, 4.5]);
        assert_eq!(smooth(&[2.0, 4.0], 1), vec![2.0, 4.0]);
    }

    #[test]
    fn persistence_detection() {
        let v = [5.0, 4.0, 3.0, 3.5, 4.0, 4.5, 5.0, 4.9];
        assert_eq!(first_persistent(&v, 3, v.len(), |d| d > 0.0), Some(2));
        assert_eq!(first_persistent(&v, 4, v.len(), |d| d > 0.0), Some(2));
        assert_eq!(first_persistent(&v, 5, v.len(), |d| d > 0.0), None);
        // The run of rising slopes must end by sample 5.
        assert_eq!(first_persistent(&v, 3, 6, |d| d > 0.0), Some(2));
        assert_eq!(first_persistent(&v, 3, 5, |d| d > 0.0), None);
        assert_eq!(first_persistent(&v, 2, v.len(), |d| d < 0.0), Some(0));
    }

    #[test]
    fn relaxation_is_first_crossing() {
        let v = [0.0, 1.0, 5.0, 9.0, 9.6, 10.0];
        assert_eq!(relaxation_index(&v, 0, 0.0, 10.0, 0.95), Some(4));
        assert_eq!(relaxation_index(&v, 5, 0.0, 10.0, 0.95), Some(5));
        assert_eq!(relaxation_index(&v, 0, 0.0, 20.0, 0.95), None);
    }
}
