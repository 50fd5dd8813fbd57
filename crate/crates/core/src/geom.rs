//! Small 2D helpers shared by the tongue and tract modules. Units are cm.

use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z component of the 3D cross product.
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn normalized(self) -> Option<Vec2> {
        let n = self.norm();
        (n > 0.0 && n.is_finite()).then(|| self * (1.0 / n))
    }

    /// Rotated 90 degrees clockwise.
    pub fn perp_cw(self) -> Vec2 {
        Vec2::new(self.y, -self.x)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, o: Vec2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl SubAssign for Vec2 {
    fn sub_assign(&mut self, o: Vec2) {
        self.x -= o.x;
        self.y -= o.y;
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

pub fn polyline_length(points: &[Vec2]) -> f64 {
    points.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
}

/// Distance along a unit-direction ray to segment `a-b`, if they meet at a
/// non-negative ray parameter.
pub fn ray_segment(origin: Vec2, dir: Vec2, a: Vec2, b: Vec2) -> Option<f64> {
    let seg = b - a;
    let denom = dir.cross(seg);
    if denom.abs() < 1e-14 {
        return None;
    }
    let rel = a - origin;
    let t = rel.cross(seg) / denom;
    let u = rel.cross(dir) / denom;
    const EDGE: f64 = 1e-12;
    (t >= -EDGE && (-EDGE..=1.0 + EDGE).contains(&u)).then_some(t.max(0.0))
}

/// Nearest hit of a ray against a polyline.
pub fn ray_polyline(origin: Vec2, dir: Vec2, points: &[Vec2]) -> Option<f64> {
    points
        .windows(2)
        .filter_map(|w| ray_segment(origin, dir, w[0], w[1]))
        .reduce(f64::min)
}

/// Closest point to `p` on a polyline.
pub fn closest_point_on_polyline(p: Vec2, points: &[Vec2]) -> Option<Vec2> {
    if points.len() == 1 {
        return Some(points[0]);
    }
    points
        .windows(2)
        .map(|w| {
            let seg = w[1] - w[0];
            let len_sq = seg.norm_sq();
            let t = if len_sq > 0.0 {
                ((p - w[0]).dot(seg) / len_sq).clamp(0.0, 1.0)
            } else {
                0.0
            };
            w[0] + seg * t
        })
        .min_by(|a, b| (*a - p).norm_sq().total_cmp(&(*b - p).norm_sq()))
}

/// Proper intersection test for segments `p1-p2` and `q1-q2` (shared
/// endpoints do not count).
pub fn segments_cross(p1: Vec2, p2: Vec2, q1: Vec2, q2: Vec2) -> bool {
    let d1 = (p2 - p1).cross(q1 - p1);
    let d2 = (p2 - p1).cross(q2 - p1);
    let d3 = (q2 - q1).cross(p1 - q1);
    let d4 = (q2 - q1).cross(p2 - q1);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

/// Point at arc length `s` and the unit tangent of the segment holding it.
pub fn point_at_arclength(points: &[Vec2], s: f64) -> Option<(Vec2, Vec2)> {
    let mut acc = 0.0;
    let last = points.len().checked_sub(2)?;
    for (i, w) in points.windows(2).enumerate() {
        let seg = w[1] - w[0];
        let len = seg.norm();
        if s <= acc + len || i == last {
            let tangent = seg.normalized()?;
            let f = ((s - acc) / len).clamp(0.0, 1.0);
            return Some((w[0] + seg * f, tangent));
        }
        acc += len;
    }
    None
}
