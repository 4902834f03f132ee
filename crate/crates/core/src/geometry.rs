//! Planar geometry on the map's cell grid.
//!
//! Conventions used everywhere in this crate: +x is east, +y is north,
//! angles are measured counterclockwise from +x in radians. Distances are
//! in cell units.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

/// A continuous point in cell coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }
}

impl From<(f64, f64)> for Point {
    fn from((x, y): (f64, f64)) -> Self {
        Point { x, y }
    }
}

/// Unit vector pointing from `from` to `to`, or `None` when the two points
/// are closer than 1e-9 and no direction exists.
pub fn unit_vector(from: Point, to: Point) -> Option<(f64, f64)> {
    let dx = to.x - from.x;
    let dy = to.y - from.y;
    let norm = (dx * dx + dy * dy).sqrt();
    if norm < 1e-9 {
        None
    } else {
        Some((dx / norm, dy / norm))
    }
}

/// Reduce an angle to [0, 2π).
pub fn wrap_angle(theta: f64) -> f64 {
    let r = theta.rem_euclid(TAU);
    // rem_euclid can return exactly TAU after rounding for tiny negatives
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Signed wrap-around difference a − b, reduced to [−π, π).
pub fn signed_angle_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    if d >= std::f64::consts::PI {
        d - TAU
    } else {
        d
    }
}
