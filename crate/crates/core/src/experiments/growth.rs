use serde::{Deserialize, Serialize};

use super::ExperimentSeries;
use crate::error::{Result, SimError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthModel {
    Linear,
    Exponential,
}

/// Steps `start ..= end` of a series. The linear model is anchored at the
/// sample taken at `origin`, normally the kick step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FitWindow {
    pub origin: u64,
    pub start: u64,
    pub end: u64,
}

impl FitWindow {
    /// Everything after the kick up to `end`.
    pub fn after_kick(origin: u64, end: u64) -> Self {
        Self {
            origin,
            start: origin + 1,
            end,
        }
    }
}

/// Divergence level treated as the onset of saturation when choosing a fit
/// window automatically.
pub const DEFAULT_SATURATION: f64 = 1e-2;

/// Window from just after `origin` to the first later sample whose divergence
/// exceeds `threshold`, or to the end of the series if none does.
pub fn saturation_window(series: &ExperimentSeries, origin: u64, threshold: f64) -> FitWindow {
    let last = series.last().map_or(origin, |s| s.step);
    let end = series
        .samples()
        .iter()
        .find(|s| s.step > origin && s.divergence.is_some_and(|d| d > threshold))
        .map_or(last, |s| s.step);
    FitWindow::after_kick(origin, end)
}

/// Result of classifying divergence growth. Each R² is measured in the
/// space its model was fitted in: `d` for the linear model, `ln d` for the
/// exponential one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub model: GrowthModel,
    /// Slope per step of the chosen model: `d` per step for the linear one,
    /// `ln d` per step for the exponential one.
    pub rate: f64,
    pub linear_slope: f64,
    pub exponential_rate: f64,
    /// Intercept of `ln d` at the origin step.
    pub exponential_log_intercept: f64,
    pub r2_linear: f64,
    pub r2_exponential: f64,
    pub samples: usize,
}

impl GrowthFit {
    pub fn margin(&self) -> f64 {
        (self.r2_linear - self.r2_exponential).abs()
    }
}

/// Fits `d = d₀ + a·(t − origin)`, with `d₀` the divergence sampled at
/// `origin`, and `ln d = c + b·(t − origin)` over the window, and keeps the
/// model with the higher R².
pub fn fit_divergence_growth(series: &ExperimentSeries, window: FitWindow) -> Result<GrowthFit> {
    if !series.has_divergence() {
        return Err(SimError::MissingDivergence);
    }
    let anchor = series
        .at_step(window.origin)
        .ok_or_else(|| SimError::Protocol(format!("no sample at fit origin step {}", window.origin)))?
        .divergence
        .ok_or(SimError::MissingDivergence)?;
    let mut t = Vec::new();
    let mut d = Vec::new();
    for s in series.samples() {
        if s.step < window.start || s.step > window.end {
            continue;
        }
        let value = s.divergence.ok_or(SimError::MissingDivergence)?;
        if !(value > 0.0) {
            return Err(SimError::NonPositiveDivergence { step: s.step, value });
        }
        t.push(s.step as f64 - window.origin as f64);
        d.push(value);
    }
    fit_points(anchor, &t, &d)
}

fn r_squared(y: &[f64], pred: impl Fn(usize) -> f64) -> f64 {
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let ss_res: f64 = y.iter().enumerate().map(|(i, v)| (v - pred(i)).powi(2)).sum();
    if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else if ss_res == 0.0 {
        1.0
    } else {
        f64::NEG_INFINITY
    }
}

fn fit_points(anchor: f64, t: &[f64], d: &[f64]) -> Result<GrowthFit> {
    let n = t.len();
    if n < 3 {
        return Err(SimError::ShortWindow(n));
    }
    let stt: f64 = t.iter().map(|x| x * x).sum();
    let std: f64 = t.iter().zip(d).map(|(x, y)| x * (y - anchor)).sum();
    let a = if stt > 0.0 { std / stt } else { 0.0 };
    let r2_linear = r_squared(d, |i| anchor + a * t[i]);

    let logs: Vec<f64> = d.iter().map(|v| v.ln()).collect();
    let nf = n as f64;
    let mean_t = t.iter().sum::<f64>() / nf;
    let mean_l = logs.iter().sum::<f64>() / nf;
    let sxx: f64 = t.iter().map(|x| (x - mean_t).powi(2)).sum();
    let sxl: f64 = t.iter().zip(&logs).map(|(x, l)| (x - mean_t) * (l - mean_l)).sum();
    let b = if sxx > 0.0 { sxl / sxx } else { 0.0 };
    let c = mean_l - b * mean_t;
    let r2_exponential = r_squared(&logs, |i| c + b * t[i]);

    let model = if r2_exponential > r2_linear {
        GrowthModel::Exponential
    } else {
        GrowthModel::Linear
    };
    Ok(GrowthFit {
        model,
        rate: match model {
            GrowthModel::Linear => a,
            GrowthModel::Exponential => b,
        },
        linear_slope: a,
        exponential_rate: b,
        exponential_log_intercept: c,
        r2_linear,
        r2_exponential,
        samples: n,
    })
}
