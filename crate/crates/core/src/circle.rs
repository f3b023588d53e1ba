use crate::scalar::Scalar;
use num_complex::Complex;
use std::f64::consts::{PI, TAU};

/// Point of the unit circle, stored as an angle in `[0, 2π)`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Direction {
    angle: f64,
}

impl Direction {
    pub fn new(angle: f64) -> Self {
        Direction { angle: wrap(angle) }
    }

    pub fn from_complex(z: Complex<f64>) -> Self {
        Self::new(z.im.atan2(z.re))
    }

    pub fn angle(self) -> f64 {
        self.angle
    }

    pub fn turns(self) -> f64 {
        self.angle / TAU
    }

    pub fn to_complex<T: Scalar>(self) -> Complex<T> {
        let a = T::of(self.angle);
        Complex::new(a.cos(), a.sin())
    }

    pub fn rotate(self, delta: f64) -> Self {
        Self::new(self.angle + delta)
    }

    /// Arc-length distance, in `[0, π]`.
    pub fn dist(self, other: Direction) -> f64 {
        arc_dist(self.angle, other.angle)
    }
}

/// Reduces an angle to `[0, 2π)`.
pub fn wrap(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

pub fn arc_dist(a: f64, b: f64) -> f64 {
    let d = wrap(a - b);
    if d > PI {
        TAU - d
    } else {
        d
    }
}

/// Counterclockwise distance from `a` to `b`, in `[0, 2π)`.
pub fn ccw(a: f64, b: f64) -> f64 {
    wrap(b - a)
}
