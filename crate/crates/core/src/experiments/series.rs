use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

/// One sampled instant of a protocol run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub step: u64,
    pub entropy_macro: f64,
    pub entropy_volume: f64,
    pub return_fraction: f64,
    pub divergence: Option<f64>,
    pub energy: f64,
}

/// Time-indexed record of a protocol run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSeries {
    pub protocol: String,
    pub config_digest: String,
    pub seed: u64,
    has_divergence: bool,
    samples: Vec<Sample>,
}

impl ExperimentSeries {
    pub fn new(protocol: impl Into<String>, config_digest: impl Into<String>, seed: u64, has_divergence: bool) -> Self {
        Self {
            protocol: protocol.into(),
            config_digest: config_digest.into(),
            seed,
            has_divergence,
            samples: Vec::new(),
        }
    }

    /// Appends a sample; steps must strictly increase and the divergence
    /// channel must be filled exactly when the series declares it.
    pub fn push(&mut self, sample: Sample) -> Result<()> {
        if let Some(last) = self.samples.last() {
            if sample.step <= last.step {
                return Err(SimError::Protocol(format!(
                    "sample step {} does not follow {}",
                    sample.step, last.step
                )));
            }
        }
        if sample.divergence.is_some() != self.has_divergence {
            return Err(SimError::Protocol(format!(
                "divergence channel mismatch at step {}",
                sample.step
            )));
        }
        self.samples.push(sample);
        Ok(())
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn has_divergence(&self) -> bool {
        self.has_divergence
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn last(&self) -> Option<&Sample> {
        self.samples.last()
    }

    pub fn steps(&self) -> Vec<u64> {
        self.samples.iter().map(|s| s.step).collect()
    }

    pub fn entropy_macro(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.entropy_macro).collect()
    }

    pub fn at_step(&self, step: u64) -> Option<&Sample> {
        self.samples
            .binary_search_by_key(&step, |s| s.step)
            .ok()
            .map(|i| &self.samples[i])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(step: u64, div: Option<f64>) -> Sample {
        Sample {
            step,
            entropy_macro: 0.0,
            entropy_volume: 0.0,
            return_fraction: 1.0,
            divergence: div,
            energy: 0.0,
        }
    }

    #[test]
    fn steps_must_increase() {
        let mut s = ExperimentSeries::new("t", "d", 0, false);
        s.push(sample(0, None)).unwrap();
        s.push(sample(5, None)).unwrap();
        assert!(s.push(sample(5, None)).is_err());
        assert!(s.push(sample(3, None)).is_err());
        assert_eq!(s.at_step(5).unwrap().step, 5);
        assert!(s.at_step(4).is_none());
    }

    #[test]
    fn channels_must_be_complete() {
        let mut s = ExperimentSeries::new("t", "d", 0, true);
        assert!(s.push(sample(0, None)).is_err());
        s.push(sample(0, Some(0.0))).unwrap();
        let mut s = ExperimentSeries::new("t", "d", 0, false);
        assert!(s.push(sample(0, Some(0.0))).is_err());
    }
}
