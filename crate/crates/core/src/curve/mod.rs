//! Arclength-parameterized curves in the plane and in space, plus the
//! surgery primitives (concatenation, restriction, rigid motions, rescaling,
//! odd extension) that every competitor construction is built from.

mod motion;
mod planar;
mod space;

pub use motion::RigidMotion;
pub use planar::{curvature_of_planar, Joint, OddExtension, PlanarCurve, Quadrature, Reconstruction};
pub use space::{SpaceCurvature, SpaceCurve, DEFAULT_SPEED_TOL};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default sample count for a unit-length curve.
pub const DEFAULT_SAMPLES: usize = 4001;

/// Uniform arclength grid `s_i = i*h`, `i = 0..n`, with `h*(n-1) = L`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    n: usize,
    h: f64,
    length: f64,
}

impl Grid {
    pub fn new(length: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::BadGrid(format!("need at least 2 samples, got {n}")));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::BadGrid(format!("length must be positive, got {length}")));
        }
        Ok(Self { n, h: length / (n - 1) as f64, length })
    }

    /// Grid with `cells` cells of spacing `h`.
    pub fn from_spacing(h: f64, cells: usize) -> Result<Self> {
        Self::new(h * cells as f64, cells + 1)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn cells(&self) -> usize {
        self.n - 1
    }

    /// Arclength of node `i`; the last node is exactly `L`.
    pub fn s(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.length
        } else {
            i as f64 * self.h
        }
    }

    /// Nearest node to arclength `s`, clamped to the grid.
    pub fn node_of(&self, s: f64) -> usize {
        let i = (s / self.h).round();
        if i <= 0.0 {
            0
        } else {
            (i as usize).min(self.n - 1)
        }
    }

    /// Node index if `s` sits on a node within `tol*h`.
    pub fn exact_node(&self, s: f64, tol: f64) -> Option<usize> {
        let x = s / self.h;
        let i = x.round();
        if (x - i).abs() <= tol && i >= 0.0 && (i as usize) < self.n {
            Some(i as usize)
        } else {
            None
        }
    }

    /// Same sample count and length within `1e-12` relative.
    pub fn matches(&self, other: &Grid) -> bool {
        self.n == other.n && (self.length - other.length).abs() <= 1e-12 * self.length.max(other.length)
    }

    /// Same spacing within `1e-9` relative.
    pub fn same_spacing(&self, other: &Grid) -> bool {
        (self.h - other.h).abs() <= 1e-9 * self.h.max(other.h)
    }
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::PI;
    let mut x = a.rem_euclid(2.0 * PI);
    if x > PI {
        x -= 2.0 * PI;
    }
    x
}
