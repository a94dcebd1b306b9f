//! 2D vectors and periodic-box helpers.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_squared(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    pub fn is_zero(self) -> bool {
        self.x == 0.0 && self.y == 0.0
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, rhs: Vec2) {
        self.x += rhs.x;
        self.y += rhs.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

impl Mul<Vec2> for f64 {
    type Output = Vec2;
    fn mul(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self * rhs.x, self * rhs.y)
    }
}

/// Maps a coordinate into `[-half_width, half_width)`.
pub fn wrap_coordinate(x: f64, half_width: f64) -> f64 {
    let width = 2.0 * half_width;
    let mut w = x - width * ((x + half_width) / width).floor();
    // floor can leave the result one ulp past either edge
    if w >= half_width {
        w -= width;
    }
    if w < -half_width {
        w = -half_width;
    }
    w
}

pub fn wrap_point(p: Vec2, half_width: f64) -> Vec2 {
    Vec2::new(wrap_coordinate(p.x, half_width), wrap_coordinate(p.y, half_width))
}

fn image_component(d: f64, half_width: f64) -> f64 {
    let width = 2.0 * half_width;
    if d >= half_width {
        d - width
    } else if d < -half_width {
        d + width
    } else {
        d
    }
}

/// Displacement `xi - xj` under the minimum image convention. Both points
/// must already lie in the box, so a single shift per axis suffices.
pub fn minimum_image_displacement(xi: Vec2, xj: Vec2, half_width: f64) -> Vec2 {
    Vec2::new(
        image_component(xi.x - xj.x, half_width),
        image_component(xi.y - xj.y, half_width),
    )
}
