//! Run configuration: one JSON document fully describes a run.
//!
//! Unknown keys are rejected and every constraint violation is reported at
//! once. Only `sample_every`, `grid` and `mode` are optional.

use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::dynamics::{Arithmetic, FixedIntegrator, FloatIntegrator, ForceField, Integrator, MEAN_SPEED};
use crate::entropy::CoarseGrid;
use crate::error::SimError;
use crate::geometry::{BoxGeometry, Rect};

pub const DEFAULT_SAMPLE_EVERY: u64 = 10;
pub const DEFAULT_GRID: GridSpec = GridSpec { cells_x: 16, cells_y: 16 };
pub const DEFAULT_MODE: Arithmetic = Arithmetic::FixedReversible;

const KEYS: [&str; 13] = [
    "n_particles",
    "box",
    "initial_region",
    "particle_radius",
    "repulsion_strength",
    "cutoff",
    "dt",
    "steps",
    "sample_every",
    "grid",
    "mode",
    "fixed_point_scale",
    "seed",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxSpec {
    pub width: f64,
    pub height: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub cells_x: usize,
    pub cells_y: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_particles: usize,
    #[serde(rename = "box")]
    pub box_size: BoxSpec,
    pub initial_region: Rect,
    pub particle_radius: f64,
    pub repulsion_strength: f64,
    pub cutoff: f64,
    pub dt: f64,
    pub steps: u64,
    pub sample_every: u64,
    pub grid: GridSpec,
    pub mode: Arithmetic,
    pub fixed_point_scale: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub key: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.key, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("malformed JSON: {0}")]
    Json(String),
    #[error("{}", join(.0))]
    Invalid(Vec<Violation>),
}

fn join(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

impl ConfigError {
    pub fn violations(&self) -> &[Violation] {
        match self {
            ConfigError::Json(_) => &[],
            ConfigError::Invalid(v) => v,
        }
    }
}

struct Reader<'a> {
    obj: &'a Map<String, Value>,
    errors: Vec<Violation>,
}

impl<'a> Reader<'a> {
    fn fail(&mut self, key: &str, message: impl Into<String>) {
        self.errors.push(Violation {
            key: key.to_string(),
            message: message.into(),
        });
    }

    fn get(&mut self, key: &str, required: bool) -> Option<&'a Value> {
        match self.obj.get(key) {
            Some(v) => Some(v),
            None => {
                if required {
                    self.fail(key, "missing required key");
                }
                None
            }
        }
    }

    fn f64_in(&mut self, obj: &'a Value, key: &str, field: &str) -> Option<f64> {
        let path = format!("{key}.{field}");
        match obj.get(field) {
            Some(v) => match v.as_f64() {
                Some(x) if x.is_finite() => Some(x),
                _ => {
                    self.fail(&path, "must be a finite number");
                    None
                }
            },
            None => {
                self.fail(&path, "missing required key");
                None
            }
        }
    }

    fn number(&mut self, key: &str) -> Option<f64> {
        let v = self.get(key, true)?;
        match v.as_f64() {
            Some(x) if x.is_finite() => Some(x),
            _ => {
                self.fail(key, "must be a finite number");
                None
            }
        }
    }

    fn integer(&mut self, key: &str, required: bool) -> Option<u64> {
        let v = self.get(key, required)?;
        match v.as_u64() {
            Some(x) => Some(x),
            None => {
                self.fail(key, "must be a non-negative integer");
                None
            }
        }
    }

    fn check_fields(&mut self, key: &str, v: &Value, allowed: &[&str]) -> bool {
        match v.as_object() {
            Some(o) => {
                for k in o.keys() {
                    if !allowed.contains(&k.as_str()) {
                        self.fail(&format!("{key}.{k}"), "unknown key");
                    }
                }
                true
            }
            None => {
                self.fail(key, "must be an object");
                false
            }
        }
    }
}

/// Parses and validates a JSON configuration document.
pub fn parse_config(text: &str) -> Result<SimConfig, ConfigError> {
    let value: Value = serde_json::from_str(text).map_err(|e| ConfigError::Json(e.to_string()))?;
    let obj = value
        .as_object()
        .ok_or_else(|| ConfigError::Json("top level must be an object".into()))?;
    let mut r = Reader { obj, errors: Vec::new() };

    let mut unknown: Vec<&String> = obj.keys().filter(|k| !KEYS.contains(&k.as_str())).collect();
    unknown.sort();
    for k in unknown {
        r.fail(k, "unknown key");
    }

    let n_particles = r.integer("n_particles", true);
    let box_size = r.get("box", true).and_then(|b| {
        if !r.check_fields("box", b, &["width", "height"]) {
            return None;
        }
        let w = r.f64_in(b, "box", "width");
        let h = r.f64_in(b, "box", "height");
        Some(BoxSpec { width: w?, height: h? })
    });
    let initial_region = r.get("initial_region", true).and_then(|b| {
        if !r.check_fields("initial_region", b, &["x0", "y0", "x1", "y1"]) {
            return None;
        }
        let c: Vec<Option<f64>> = ["x0", "y0", "x1", "y1"]
            .iter()
            .map(|f| r.f64_in(b, "initial_region", f))
            .collect();
        Some(Rect::new(c[0]?, c[1]?, c[2]?, c[3]?))
    });
    let particle_radius = r.number("particle_radius");
    let repulsion_strength = r.number("repulsion_strength");
    let cutoff = r.number("cutoff");
    let dt = r.number("dt");
    let steps = r.integer("steps", true);
    let sample_every = r.integer("sample_every", false).or(Some(DEFAULT_SAMPLE_EVERY));
    let grid = match r.get("grid", false) {
        None => Some(DEFAULT_GRID),
        Some(g) => {
            if r.check_fields("grid", g, &["cells_x", "cells_y"]) {
                let cx = g.get("cells_x").and_then(Value::as_u64);
                let cy = g.get("cells_y").and_then(Value::as_u64);
                if cx.is_none() {
                    r.fail("grid.cells_x", "must be a positive integer");
                }
                if cy.is_none() {
                    r.fail("grid.cells_y", "must be a positive integer");
                }
                match (cx, cy) {
                    (Some(x), Some(y)) => Some(GridSpec {
                        cells_x: x as usize,
                        cells_y: y as usize,
                    }),
                    _ => None,
                }
            } else {
                None
            }
        }
    };
    let mode = match r.get("mode", false) {
        None => Some(DEFAULT_MODE),
        Some(m) => match serde_json::from_value::<Arithmetic>(m.clone()) {
            Ok(a) => Some(a),
            Err(_) => {
                r.fail("mode", "must be \"fixed_reversible\" or \"float_reference\"");
                None
            }
        },
    };
    let fixed_point_scale = r.integer("fixed_point_scale", true);
    let seed = r.integer("seed", true);

    let mut errors = r.errors;
    let (
        Some(n_particles),
        Some(box_size),
        Some(initial_region),
        Some(particle_radius),
        Some(repulsion_strength),
        Some(cutoff),
        Some(dt),
        Some(steps),
        Some(sample_every),
        Some(grid),
        Some(mode),
        Some(fixed_point_scale),
        Some(seed),
    ) = (
        n_particles,
        box_size,
        initial_region,
        particle_radius,
        repulsion_strength,
        cutoff,
        dt,
        steps,
        sample_every,
        grid,
        mode,
        fixed_point_scale,
        seed,
    )
    else {
        return Err(ConfigError::Invalid(errors));
    };
    let cfg = SimConfig {
        n_particles: n_particles as usize,
        box_size,
        initial_region,
        particle_radius,
        repulsion_strength,
        cutoff,
        dt,
        steps,
        sample_every,
        grid,
        mode,
        fixed_point_scale,
        seed,
    };
    errors.extend(cfg.validate());
    if errors.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigError::Invalid(errors))
    }
}

impl SimConfig {
    /// Every numeric constraint violation, in key order.
    pub fn validate(&self) -> Vec<Violation> {
        let mut v = Vec::new();
        let mut fail = |key: &str, msg: String| {
            v.push(Violation {
                key: key.into(),
                message: msg,
            })
        };
        if self.n_particles < 1 {
            fail("n_particles", "must be >= 1".into());
        }
        let (w, h) = (self.box_size.width, self.box_size.height);
        if !(w > 0.0) {
            fail("box.width", format!("must be > 0, got {w}"));
        }
        if !(h > 0.0) {
            fail("box.height", format!("must be > 0, got {h}"));
        }
        let r = self.initial_region;
        if r.is_degenerate() {
            fail("initial_region", "must have x1 > x0 and y1 > y0".into());
        } else if !Rect::new(0.0, 0.0, w, h).contains_rect(&r) {
            fail("initial_region", format!("must lie within the box [0, {w}] x [0, {h}]"));
        }
        if !(self.particle_radius >= 0.0) {
            fail("particle_radius", "must be >= 0".into());
        }
        if !(self.repulsion_strength >= 0.0) {
            fail("repulsion_strength", "must be >= 0".into());
        }
        if !(self.cutoff > 0.0) {
            fail("cutoff", "must be > 0".into());
        } else if self.cutoff < 2.0 * self.particle_radius {
            fail("cutoff", format!("must be >= 2 * particle_radius = {}", 2.0 * self.particle_radius));
        }
        if !(self.dt > 0.0) {
            fail("dt", "must be > 0".into());
        } else if w > 0.0 && h > 0.0 && MEAN_SPEED * self.dt >= w.min(h) {
            fail("dt", "mean displacement per step must stay below the box size".into());
        }
        if self.sample_every < 1 {
            fail("sample_every", "must be >= 1".into());
        }
        let g = self.grid;
        if g.cells_x < 1 || g.cells_y < 1 || g.cells_x * g.cells_y < 2 {
            fail("grid", "cells_x, cells_y >= 1 and cells_x * cells_y >= 2".into());
        }
        if self.fixed_point_scale < 1 {
            fail("fixed_point_scale", "must be >= 1".into());
        } else if self.mode == Arithmetic::FixedReversible && w > 0.0 && h > 0.0 {
            let s = self.fixed_point_scale as f64;
            for (key, len, cells) in [("box.width", w, g.cells_x), ("box.height", h, g.cells_y)] {
                let q = len * s;
                if q.fract() != 0.0 || q > (1u64 << 60) as f64 {
                    fail(
                        "fixed_point_scale",
                        format!("{key} * fixed_point_scale must be a whole number of quanta below 2^60"),
                    );
                } else if cells >= 1 && !(q as u64).is_multiple_of(cells as u64) {
                    fail("grid", format!("{key} does not split into {cells} equal fixed-point cells"));
                }
            }
        }
        v
    }

    /// Compact JSON with keys in declaration order; the digest is taken over
    /// this text.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serialises")
    }

    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }

    pub fn geometry(&self) -> Result<BoxGeometry, SimError> {
        BoxGeometry::new(self.box_size.width, self.box_size.height, self.initial_region)
    }

    pub fn force_field(&self) -> Result<ForceField, SimError> {
        ForceField::new(self.particle_radius, self.repulsion_strength, self.cutoff)
    }

    pub fn fixed_integrator(&self) -> Result<FixedIntegrator, SimError> {
        FixedIntegrator::new(self.geometry()?, self.force_field()?, self.dt, self.fixed_point_scale)
    }

    pub fn float_integrator(&self) -> Result<FloatIntegrator, SimError> {
        FloatIntegrator::new(self.geometry()?, self.force_field()?, self.dt, self.fixed_point_scale)
    }

    pub fn coarse_grid<I: Integrator>(&self, integ: &I) -> Result<CoarseGrid, SimError> {
        CoarseGrid::new(self.grid.cells_x, self.grid.cells_y, integ)
    }

    /// Calls `visit` with the integrator selected by `mode`.
    pub fn dispatch<V: IntegratorVisitor>(&self, visit: V) -> Result<V::Output, SimError> {
        match self.mode {
            Arithmetic::FixedReversible => Ok(visit.visit(&self.fixed_integrator()?)),
            Arithmetic::FloatReference => Ok(visit.visit(&self.float_integrator()?)),
        }
    }
}

/// Work that is generic over the integrator chosen at run time.
pub trait IntegratorVisitor {
    type Output;
    fn visit<I: Integrator>(self, integ: &I) -> Self::Output;
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    pub(crate) const MINIMAL: &str = r#"{
        "n_particles": 100,
        "box": {"width": 32, "height": 32},
        "initial_region": {"x0": 0, "y0": 0, "x1": 16, "y1": 16},
        "particle_radius": 0.25,
        "repulsion_strength": 10,
        "cutoff": 0.5,
        "dt": 0.01,
        "steps": 1000,
        "fixed_point_scale": 1099511627776,
        "seed": 1
    }"#;

    fn with(key: &str, value: Value) -> String {
        let mut v: Value = serde_json::from_str(MINIMAL).unwrap();
        v.as_object_mut().unwrap().insert(key.into(), value);
        v.to_string()
    }

    #[test]
    fn minimal_document_gets_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.sample_every, DEFAULT_SAMPLE_EVERY);
        assert_eq!(c.grid, DEFAULT_GRID);
        assert_eq!(c.mode, Arithmetic::FixedReversible);
        assert_eq!(c.n_particles, 100);
    }

    #[test]
    fn zero_particles_is_named() {
        let err = parse_config(&with("n_particles", 0.into())).unwrap_err();
        assert_eq!(err.violations().len(), 1);
        assert_eq!(err.violations()[0].key, "n_particles");
        assert!(err.to_string().contains("n_particles: must be >= 1"));
    }

    #[test]
    fn unknown_key_is_listed() {
        let err = parse_config(&with("nparticles", 100.into())).unwrap_err();
        assert_eq!(err.violations()[0].key, "nparticles");
        assert!(err.to_string().contains("nparticles: unknown key"));
    }

    #[test]
    fn every_violation_is_reported() {
        let mut v: Value = serde_json::from_str(MINIMAL).unwrap();
        let o = v.as_object_mut().unwrap();
        o.insert("dt".into(), (-1.0).into());
        o.insert("cutoff".into(), 0.1.into());
        o.remove("seed");
        o.insert("grid".into(), serde_json::json!({"cells_x": 1, "cells_y": 1}));
        let err = parse_config(&v.to_string()).unwrap_err();
        let keys: Vec<_> = err.violations().iter().map(|x| x.key.as_str()).collect();
        assert_eq!(keys, vec!["seed"]);
        v.as_object_mut().unwrap().insert("seed".into(), 1.into());
        let err = parse_config(&v.to_string()).unwrap_err();
        let keys: Vec<_> = err.violations().iter().map(|x| x.key.as_str()).collect();
        assert_eq!(keys, vec!["cutoff", "dt", "grid"]);
    }

    #[test]
    fn malformed_json() {
        assert!(matches!(parse_config("{\"n_particles\": "), Err(ConfigError::Json(_))));
        assert!(matches!(parse_config("[1, 2]"), Err(ConfigError::Json(_))));
    }

    #[test]
    fn nested_unknown_and_bad_mode() {
        let err = parse_config(&with("box", serde_json::json!({"width": 32, "height": 32, "depth": 1}))).unwrap_err();
        assert_eq!(err.violations()[0].key, "box.depth");
        let err = parse_config(&with("mode", "exact".into())).unwrap_err();
        assert_eq!(err.violations()[0].key, "mode");
    }

    #[test]
    fn grid_must_tile_fixed_point_box() {
        let err = parse_config(&with("grid", serde_json::json!({"cells_x": 3, "cells_y": 16}))).unwrap_err();
        assert_eq!(err.violations()[0].key, "grid");
        let mut v: Value = serde_json::from_str(&with("grid", serde_json::json!({"cells_x": 3, "cells_y": 16}))).unwrap();
        v.as_object_mut().unwrap().insert("mode".into(), "float_reference".into());
        assert!(parse_config(&v.to_string()).is_ok());
    }

    proptest! {
        #[test]
        fn canonical_round_trip(
            n in 1usize..500,
            seed in any::<u64>(),
            steps in 0u64..1_000_000,
            every in 1u64..100,
            dt in 0.001f64..0.05,
            eps in 0.0f64..50.0,
        ) {
            let mut c = parse_config(MINIMAL).unwrap();
            c.n_particles = n;
            c.seed = seed;
            c.steps = steps;
            c.sample_every = every;
            c.dt = dt;
            c.repulsion_strength = eps;
            let text = c.canonical_json();
            let back = parse_config(&text).unwrap();
            prop_assert_eq!(&back, &c);
            prop_assert_eq!(back.digest(), c.digest());
        }
    }
}
