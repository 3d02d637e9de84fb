//! Geometry of the periodic dimer screen.
//!
//! One unit cell of length `L` along x1 holds two disks of radius `R_D` whose
//! centers sit at `±(d/2)(cos θ, sin θ)`. The pair is symmetric under the
//! inversion `x -> -x`.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub type Point = [f64; 2];

/// Geometry and material parameters of the screen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetascreenConfig {
    /// Lattice period.
    pub period: f64,
    pub radius: f64,
    /// Center-to-center distance.
    pub separation: f64,
    /// Inclination of the dimer axis against the lattice axis.
    pub theta: f64,
    /// Density contrast.
    pub delta: f64,
    /// Wave speed inside the resonators. The background speed is 1.
    pub v_b: f64,
}

impl Default for MetascreenConfig {
    fn default() -> Self {
        MetascreenConfig {
            period: 1.0,
            radius: 0.05,
            separation: 0.3,
            theta: 0.0,
            delta: 1e-3,
            v_b: 1.0,
        }
    }
}

/// One violated constraint of a [`MetascreenConfig`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    NonPositive(&'static str),
    DisksOverlap,
    DimerExceedsCell,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::NonPositive(name) => write!(f, "{name} must be positive and finite"),
            Violation::DisksOverlap => write!(f, "disks overlap (need d > 2 R_D)"),
            Violation::DimerExceedsCell => {
                write!(f, "dimer exceeds cell (need d |cos theta| + 2 R_D < L)")
            }
        }
    }
}

/// Which resonator of the dimer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Disk {
    First,
    Second,
}

impl Disk {
    pub const BOTH: [Disk; 2] = [Disk::First, Disk::Second];

    pub fn index(self) -> usize {
        match self {
            Disk::First => 0,
            Disk::Second => 1,
        }
    }

    pub fn from_index(i: usize) -> Disk {
        if i == 0 {
            Disk::First
        } else {
            Disk::Second
        }
    }
}

impl MetascreenConfig {
    /// Every violated invariant; empty when the configuration is usable.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for (name, v) in [
            ("L", self.period),
            ("R_D", self.radius),
            ("d", self.separation),
            ("delta", self.delta),
            ("v_b", self.v_b),
        ] {
            if !(v.is_finite() && v > 0.0) {
                out.push(Violation::NonPositive(name));
            }
        }
        if !self.theta.is_finite() {
            out.push(Violation::NonPositive("theta"));
        }
        if self.separation <= 2.0 * self.radius {
            out.push(Violation::DisksOverlap);
        }
        if self.separation * self.theta.cos().abs() + 2.0 * self.radius >= self.period {
            out.push(Violation::DimerExceedsCell);
        }
        out
    }

    pub fn validated(self) -> Result<Self> {
        let v = self.validate();
        if v.is_empty() {
            Ok(self)
        } else {
            let msg: Vec<String> = v.iter().map(|x| x.to_string()).collect();
            Err(Error::Geometry(msg.join("; ")))
        }
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = theta;
        self
    }

    /// Centers of the two disks; the second is the negative of the first.
    pub fn disk_centers(&self) -> (Point, Point) {
        let h = 0.5 * self.separation;
        let c = [h * self.theta.cos(), h * self.theta.sin()];
        (c, [-c[0], -c[1]])
    }

    pub fn center(&self, disk: Disk) -> Point {
        let (a, b) = self.disk_centers();
        match disk {
            Disk::First => a,
            Disk::Second => b,
        }
    }

    pub fn boundary_point(&self, disk: Disk, t: f64) -> Point {
        let c = self.center(disk);
        [c[0] + self.radius * t.cos(), c[1] + self.radius * t.sin()]
    }

    /// Outward unit normal at parameter `t`, identical for both disks.
    pub fn normal(&self, t: f64) -> Point {
        [t.cos(), t.sin()]
    }

    /// Arc-length density |dx/dt|.
    pub fn arc_weight(&self) -> f64 {
        self.radius
    }

    pub fn disk_area(&self) -> f64 {
        PI * self.radius * self.radius
    }

    pub fn perimeter(&self) -> f64 {
        2.0 * PI * self.radius
    }
}

/// Bloch parameter reduced to the zone `[-π/L, π/L)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quasimomentum(f64);

impl Quasimomentum {
    pub fn new(alpha: f64, period: f64) -> Self {
        let g = 2.0 * PI / period;
        let mut a = (alpha + 0.5 * g).rem_euclid(g) - 0.5 * g;
        if a >= 0.5 * g {
            a -= g;
        }
        Quasimomentum(a)
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Fixed incidence direction `(α0, w⊥)` with `α0² + w⊥² = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Incidence {
    pub alpha0: f64,
    pub w_perp: f64,
}

impl Incidence {
    pub fn new(alpha0: f64) -> Result<Self> {
        if !(alpha0.is_finite() && alpha0.abs() < 1.0) {
            return Err(Error::Parameter(format!("alpha0 = {alpha0} must satisfy |alpha0| < 1")));
        }
        Ok(Incidence {
            alpha0,
            w_perp: (1.0 - alpha0 * alpha0).sqrt(),
        })
    }

    pub fn normal_incidence() -> Self {
        Incidence {
            alpha0: 0.0,
            w_perp: 1.0,
        }
    }

    /// Wave vector of the incoming (`up = false`, travelling towards -x2) or
    /// outgoing upward (`up = true`) plane wave at frequency `omega`.
    pub fn wave_vector(&self, omega: f64, up: bool) -> Point {
        let s = if up { 1.0 } else { -1.0 };
        [omega * self.alpha0, s * omega * self.w_perp]
    }
}
