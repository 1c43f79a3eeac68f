//! Byte-stable rendering of series (CSV) and run summaries (JSON).

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::experiments::{ExperimentSeries, GrowthModel};

pub const SERIES_HEADER: &str = "step,entropy_macro,entropy_volume,return_fraction,divergence,energy";

/// CSV text of a series. Floats use the shortest decimal that parses back to
/// the same value; an absent divergence channel leaves its field empty.
pub fn render_series(series: &ExperimentSeries) -> String {
    let mut out = String::with_capacity(64 * (series.len() + 1));
    out.push_str(SERIES_HEADER);
    out.push('\n');
    for s in series.samples() {
        let _ = write!(
            out,
            "{},{},{},{},",
            s.step, s.entropy_macro, s.entropy_volume, s.return_fraction
        );
        if let Some(d) = s.divergence {
            let _ = write!(out, "{d}");
        }
        let _ = writeln!(out, ",{}", s.energy);
    }
    out
}

pub fn emit_series(series: &ExperimentSeries, destination: &Path) -> io::Result<()> {
    fs::write(destination, render_series(series))
}

/// Headline scalars of a run. Absent entries are omitted from the JSON.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Headline {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_entropy_macro: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_entropy_volume: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_return_fraction: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_energy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pre_reversal_plateau: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sync_step: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b_relaxation_step: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub recurrence_step: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub growth_model: Option<GrowthModel>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub growth_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r2_linear: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r2_exponential: Option<f64>,
}

impl Headline {
    /// Final-sample scalars of a series.
    pub fn from_last(series: &ExperimentSeries) -> Self {
        let last = series.last();
        Self {
            final_entropy_macro: last.map(|s| s.entropy_macro),
            final_entropy_volume: last.map(|s| s.entropy_volume),
            final_return_fraction: last.map(|s| s.return_fraction),
            final_energy: last.map(|s| s.energy),
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub protocol: String,
    pub config_digest: String,
    pub seed: u64,
    pub headline: Headline,
    /// Series file names, relative to the summary's directory.
    pub series: Vec<String>,
}

impl RunSummary {
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("summary serialises");
        text.push('\n');
        text
    }

    pub fn write(&self, destination: &Path) -> io::Result<()> {
        fs::write(destination, self.to_json())
    }
}
