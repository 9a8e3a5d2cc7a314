//! Minimal 2D vector and angle helpers used across the simulator.

use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use std::ops::{Add, Mul, Sub};

/// A point or displacement in the arena plane, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    /// Unit vector pointing along `angle` (radians).
    pub fn from_angle(angle: f64) -> Self {
        Vec2 {
            x: angle.cos(),
            y: angle.sin(),
        }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_sq(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    pub fn dist(self, other: Vec2) -> f64 {
        (self - other).norm()
    }

    pub fn dist_sq(self, other: Vec2) -> f64 {
        (self - other).norm_sq()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, rhs: f64) -> Vec2 {
        Vec2::new(self.x * rhs, self.y * rhs)
    }
}

/// Wraps an angle to the canonical interval `[-pi, pi)`.
pub fn wrap_angle(angle: f64) -> f64 {
    let wrapped = (angle + PI).rem_euclid(TAU) - PI;
    // rem_euclid can round up to TAU for tiny negative inputs.
    if wrapped >= PI {
        -PI
    } else {
        wrapped
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn wrap_angle_basics() {
        assert_eq!(wrap_angle(0.0), 0.0);
        assert!((wrap_angle(3.0 * PI) - (-PI)).abs() < 1e-12);
        assert!((wrap_angle(-PI) - (-PI)).abs() < 1e-12);
        // +pi wraps to -pi: interval is half-open.
        assert_eq!(wrap_angle(PI), -PI);
    }

    proptest! {
        #[test]
        fn wrap_angle_in_range(a in -1e6f64..1e6f64) {
            let w = wrap_angle(a);
            prop_assert!((-PI..PI).contains(&w));
        }

        #[test]
        fn wrap_angle_preserves_direction(a in -50.0f64..50.0) {
            let w = wrap_angle(a);
            prop_assert!((w.cos() - a.cos()).abs() < 1e-9);
            prop_assert!((w.sin() - a.sin()).abs() < 1e-9);
        }
    }
}
