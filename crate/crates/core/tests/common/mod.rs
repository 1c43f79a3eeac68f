#![allow(dead_code)]

use revgas::config::{parse_config, SimConfig};
use serde_json::{json, Value};

pub const SCALE: u64 = 1 << 40;

/// The desk-scale gas: 32×32 box, 16×16 starting quarter, disks of radius
/// 0.25 with cutoff 0.5.
pub fn gas(n: usize, steps: u64, sample_every: u64, seed: u64) -> Value {
    json!({
        "n_particles": n,
        "box": {"width": 32, "height": 32},
        "initial_region": {"x0": 0, "y0": 0, "x1": 16, "y1": 16},
        "particle_radius": 0.25,
        "repulsion_strength": 10,
        "cutoff": 0.5,
        "dt": 0.01,
        "steps": steps,
        "sample_every": sample_every,
        "grid": {"cells_x": 16, "cells_y": 16},
        "mode": "fixed_reversible",
        "fixed_point_scale": SCALE,
        "seed": seed
    })
}

/// Small 4×4 box used for recurrence runs.
pub fn small_box(n: usize, repulsion: f64, steps: u64) -> Value {
    json!({
        "n_particles": n,
        "box": {"width": 4, "height": 4},
        "initial_region": {"x0": 0, "y0": 0, "x1": 4, "y1": 4},
        "particle_radius": 0.25,
        "repulsion_strength": repulsion,
        "cutoff": 0.5,
        "dt": 0.01,
        "steps": steps,
        "sample_every": 1000,
        "grid": {"cells_x": 4, "cells_y": 4},
        "mode": "fixed_reversible",
        "fixed_point_scale": SCALE,
        "seed": 1
    })
}

pub fn with(mut doc: Value, key: &str, value: Value) -> Value {
    doc.as_object_mut().expect("object").insert(key.to_string(), value);
    doc
}

pub fn build(doc: &Value) -> SimConfig {
    parse_config(&doc.to_string()).expect("valid config")
}
