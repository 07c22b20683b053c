//! Radial coordinates.
//!
//! Everything radial is evaluated in `t = ln r`. Radii such as `exp(-1e4)`
//! are still far too shallow for the singular fields and potentials, whose
//! structure lives at `ln|t|` of order `1e4` and beyond, so a second
//! coordinate is layered on top:
//!
//! ```text
//! s = t                 for t >= -1
//! s = -1 - ln(-t)       for t <  -1
//! ```
//!
//! The map is C¹ and strictly increasing. For `s < -1` the depth
//! `ℓ = ln|t| = -1 - s` is what the evaluators consume, so `t` itself may
//! overflow to `-inf` without harm.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Finite natural logarithm of a radius.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct LogRadius(f64);

impl LogRadius {
    pub fn new(t: f64) -> Result<Self> {
        if t.is_finite() {
            Ok(Self(t))
        } else {
            Err(Error::ParameterError(format!("log-radius must be finite, got {t}")))
        }
    }

    pub fn from_radius(r: f64) -> Result<Self> {
        if r > 0.0 && r.is_finite() {
            Ok(Self(r.ln()))
        } else {
            Err(Error::ParameterError(format!("radius must be positive and finite, got {r}")))
        }
    }

    pub fn t(self) -> f64 {
        self.0
    }

    pub fn radius(self) -> f64 {
        self.0.exp()
    }
}

/// Largest magnitude kept for barrier terms; squares of it stay finite.
pub const BIG: f64 = 1e150;

/// A point of the half line, carried in all three coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    /// Stretched coordinate.
    pub s: f64,
    /// `ln r`; `-inf` once the depth exceeds roughly 709.
    pub t: f64,
    /// `ln(dt/ds)`: zero for `s >= -1`, the depth `ln|t|` below.
    pub g: f64,
}

impl Point {
    pub fn from_s(s: f64) -> Self {
        if s >= -1.0 {
            Self { s, t: s, g: 0.0 }
        } else {
            let depth = -1.0 - s;
            Self { s, t: -depth.exp(), g: depth }
        }
    }

    pub fn from_t(t: f64) -> Self {
        Self { s: stretch(t), t, g: if t < -1.0 { (-t).ln() } else { 0.0 } }
    }

    /// `ln|t|` when the point is deep, `None` above `t = -1`.
    pub fn depth(&self) -> Option<f64> {
        (self.s < -1.0).then_some(self.g)
    }

    pub fn is_deep(&self) -> bool {
        self.s < -1.0
    }

    /// `dt/ds`, possibly `+inf`.
    pub fn jacobian(&self) -> f64 {
        self.g.exp()
    }
}

pub fn stretch(t: f64) -> f64 {
    if t >= -1.0 {
        t
    } else {
        -1.0 - (-t).ln()
    }
}

pub fn unstretch(s: f64) -> f64 {
    Point::from_s(s).t
}

/// `x² · e^{2g}` evaluated in logarithms, clamped to [`BIG`].
pub fn scaled_square(x: f64, g: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let log = 2.0 * (x.abs().ln() + g);
    if log > BIG.ln() {
        BIG
    } else {
        log.exp()
    }
}

/// `v · e^{2g}` for `v >= 0`, clamped to [`BIG`].
pub fn scaled_by_jacobian_sq(v: f64, g: f64) -> f64 {
    if v <= 0.0 {
        return 0.0;
    }
    let log = v.ln() + 2.0 * g;
    if log > BIG.ln() {
        BIG
    } else {
        log.exp()
    }
}
