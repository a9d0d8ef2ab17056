//! Rotation angles kept in canonical form.

use std::f64::consts::TAU;
use std::fmt;
use std::ops::{Add, Neg, Sub};

/// Absolute tolerance for angle equality, in radians.
pub const ANGLE_TOLERANCE: f64 = 1e-12;

/// A rotation angle in radians, canonicalized to `[0, 2π)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, PartialOrd)]
pub struct Angle(f64);

impl Angle {
    pub const ZERO: Angle = Angle(0.0);

    pub fn new(radians: f64) -> Self {
        Angle(canonical(radians))
    }

    /// `π / 2^k`, the phase between QFT qubits at distance `k`.
    pub fn pi_over_pow2(k: u32) -> Self {
        Angle::new(std::f64::consts::PI / 2f64.powi(k as i32))
    }

    pub fn radians(self) -> f64 {
        self.0
    }

    /// Signed representative in `(-π, π]`.
    pub fn signed(self) -> f64 {
        if self.0 > std::f64::consts::PI {
            self.0 - TAU
        } else {
            self.0
        }
    }

    pub fn half(self) -> Self {
        Angle::new(self.signed() / 2.0)
    }

    /// Circular distance to `other`.
    pub fn distance(self, other: Angle) -> f64 {
        let d = (self.0 - other.0).abs();
        d.min(TAU - d)
    }

    pub fn approx_eq(self, other: Angle) -> bool {
        self.distance(other) <= ANGLE_TOLERANCE
    }

    pub fn is_zero(self) -> bool {
        self.approx_eq(Angle::ZERO)
    }
}

fn canonical(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if r >= TAU {
        0.0
    } else {
        r
    }
}

impl From<f64> for Angle {
    fn from(radians: f64) -> Self {
        Angle::new(radians)
    }
}

impl Add for Angle {
    type Output = Angle;
    fn add(self, rhs: Angle) -> Angle {
        Angle::new(self.0 + rhs.0)
    }
}

impl Sub for Angle {
    type Output = Angle;
    fn sub(self, rhs: Angle) -> Angle {
        Angle::new(self.0 - rhs.0)
    }
}

impl Neg for Angle {
    type Output = Angle;
    fn neg(self) -> Angle {
        Angle::new(-self.0)
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}
