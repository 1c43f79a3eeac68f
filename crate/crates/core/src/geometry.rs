use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

/// Axis-aligned rectangle `[x0, x1) × [y0, y1)` in simulation length units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self { x0, y0, x1, y1 }
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn is_degenerate(&self) -> bool {
        !(self.width() > 0.0 && self.height() > 0.0)
    }

    pub fn contains_rect(&self, other: &Rect) -> bool {
        other.x0 >= self.x0 && other.y0 >= self.y0 && other.x1 <= self.x1 && other.y1 <= self.y1
    }
}

/// The vessel: a `width × height` box with its lower-left corner at the origin,
/// plus the compact region the gas starts in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxGeometry {
    width: f64,
    height: f64,
    initial_region: Rect,
}

impl BoxGeometry {
    pub fn new(width: f64, height: f64, initial_region: Rect) -> Result<Self> {
        if !(width > 0.0 && height > 0.0 && width.is_finite() && height.is_finite()) {
            return Err(SimError::Geometry(format!(
                "box dimensions must be positive, got {width} x {height}"
            )));
        }
        if initial_region.is_degenerate() {
            return Err(SimError::Geometry("initial region is degenerate".into()));
        }
        let b = Rect::new(0.0, 0.0, width, height);
        if !b.contains_rect(&initial_region) {
            return Err(SimError::Geometry(
                "initial region is not contained in the box".into(),
            ));
        }
        Ok(Self {
            width,
            height,
            initial_region,
        })
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn height(&self) -> f64 {
        self.height
    }

    pub fn initial_region(&self) -> Rect {
        self.initial_region
    }

    pub fn bounds(&self) -> Rect {
        Rect::new(0.0, 0.0, self.width, self.height)
    }

    pub fn diagonal(&self) -> f64 {
        self.width.hypot(self.height)
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }
}
