//! Planar points, SE(2) poses and rigid transforms.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

/// Wrap an angle into (−π, π].
pub fn wrap_angle(theta: f64) -> f64 {
    if theta > -PI && theta <= PI {
        return theta;
    }
    let mut a = theta.rem_euclid(2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    }
    if a <= -PI {
        a += 2.0 * PI;
    }
    a
}

/// Signed angular difference `a − b` wrapped into (−π, π].
pub fn angle_diff(a: f64, b: f64) -> f64 {
    wrap_angle(a - b)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, other: Point2) -> f64 {
        (self - other).norm()
    }

    pub fn dist_sq(self, other: Point2) -> f64 {
        let d = self - other;
        d.x * d.x + d.y * d.y
    }

    pub fn dot(self, other: Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn lerp(self, other: Point2, t: f64) -> Point2 {
        Point2::new(
            self.x + (other.x - self.x) * t,
            self.y + (other.y - self.y) * t,
        )
    }

    /// Round both coordinates to the nearest binary32 value.
    pub fn snap_f32(self) -> Point2 {
        Point2::new(snap_f32(self.x), snap_f32(self.y))
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, s: f64) -> Point2 {
        Point2::new(self.x * s, self.y * s)
    }
}

/// Round a value to binary32 precision, returned as f64.
pub fn snap_f32(v: f64) -> f64 {
    v as f32 as f64
}

/// Robot pose in the plane. `theta` is kept in (−π, π].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose2 {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose2 {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: wrap_angle(theta),
        }
    }

    pub fn position(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }

    pub fn to_transform(&self) -> Transform2 {
        Transform2::new(self.x, self.y, self.theta)
    }
}

/// Rigid transform in SE(2): `p ↦ R(rotation)·p + translation`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Transform2 {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Transform2 {
    pub const IDENTITY: Transform2 = Transform2 {
        x: 0.0,
        y: 0.0,
        theta: 0.0,
    };

    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: wrap_angle(theta),
        }
    }

    pub fn from_translation(p: Point2) -> Self {
        Self::new(p.x, p.y, 0.0)
    }

    pub fn translation(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }

    pub fn apply(&self, p: Point2) -> Point2 {
        let (s, c) = self.theta.sin_cos();
        Point2::new(c * p.x - s * p.y + self.x, s * p.x + c * p.y + self.y)
    }

    pub fn rotate(&self, p: Point2) -> Point2 {
        let (s, c) = self.theta.sin_cos();
        Point2::new(c * p.x - s * p.y, s * p.x + c * p.y)
    }

    /// `self ∘ other`: apply `other` first, then `self`.
    pub fn compose(&self, other: &Transform2) -> Transform2 {
        let t = self.apply(other.translation());
        Transform2::new(t.x, t.y, self.theta + other.theta)
    }

    pub fn inverse(&self) -> Transform2 {
        let (s, c) = self.theta.sin_cos();
        Transform2::new(
            -(c * self.x + s * self.y),
            s * self.x - c * self.y,
            -self.theta,
        )
    }

    pub fn apply_pose(&self, pose: &Pose2) -> Pose2 {
        let p = self.apply(pose.position());
        Pose2::new(p.x, p.y, self.theta + pose.theta)
    }

    /// Component residual (Δx, Δy, wrapped Δθ) of `self ⊖ other`.
    pub fn residual(&self, other: &Transform2) -> [f64; 3] {
        [
            self.x - other.x,
            self.y - other.y,
            angle_diff(self.theta, other.theta),
        ]
    }
}

/// Axis-aligned rectangle in map coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Rect {
    pub xmin: f64,
    pub ymin: f64,
    pub xmax: f64,
    pub ymax: f64,
}

impl Rect {
    pub fn new(xmin: f64, ymin: f64, xmax: f64, ymax: f64) -> Self {
        Self {
            xmin,
            ymin,
            xmax,
            ymax,
        }
    }

    pub fn contains(&self, p: Point2) -> bool {
        p.x >= self.xmin && p.x <= self.xmax && p.y >= self.ymin && p.y <= self.ymax
    }

    pub fn area(&self) -> f64 {
        (self.xmax - self.xmin).max(0.0) * (self.ymax - self.ymin).max(0.0)
    }

    pub fn snap_f32(self) -> Rect {
        Rect::new(
            snap_f32(self.xmin),
            snap_f32(self.ymin),
            snap_f32(self.xmax),
            snap_f32(self.ymax),
        )
    }

    /// Euclidean distance from `p` to the rectangle (0 inside).
    pub fn distance_to(&self, p: Point2) -> f64 {
        let dx = (self.xmin - p.x).max(0.0).max(p.x - self.xmax);
        let dy = (self.ymin - p.y).max(0.0).max(p.y - self.ymax);
        dx.hypot(dy)
    }
}

/// Distance from point `p` to the segment `ab`.
pub fn point_segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let ab = b - a;
    let len_sq = ab.dot(ab);
    if len_sq == 0.0 {
        return p.dist(a);
    }
    let t = ((p - a).dot(ab) / len_sq).clamp(0.0, 1.0);
    p.dist(a + ab * t)
}

/// Distance between segment `ab` and a closed rectangle; zero if they touch.
pub fn segment_rect_distance(a: Point2, b: Point2, r: &Rect) -> f64 {
    if r.contains(a) || r.contains(b) || segment_hits_rect(a, b, r) {
        return 0.0;
    }
    let corners = [
        Point2::new(r.xmin, r.ymin),
        Point2::new(r.xmax, r.ymin),
        Point2::new(r.xmin, r.ymax),
        Point2::new(r.xmax, r.ymax),
    ];
    let mut d = r.distance_to(a).min(r.distance_to(b));
    for c in corners {
        d = d.min(point_segment_distance(c, a, b));
    }
    d
}

// Liang-Barsky clip of the segment against the closed rectangle.
fn segment_hits_rect(a: Point2, b: Point2, r: &Rect) -> bool {
    let d = b - a;
    let mut t0 = 0.0_f64;
    let mut t1 = 1.0_f64;
    let checks = [
        (-d.x, a.x - r.xmin),
        (d.x, r.xmax - a.x),
        (-d.y, a.y - r.ymin),
        (d.y, r.ymax - a.y),
    ];
    for (p, q) in checks {
        if p == 0.0 {
            if q < 0.0 {
                return false;
            }
        } else {
            let t = q / p;
            if p < 0.0 {
                t0 = t0.max(t);
            } else {
                t1 = t1.min(t);
            }
            if t0 > t1 {
                return false;
            }
        }
    }
    true
}

/// Length of a polyline.
pub fn polyline_length(points: &[Point2]) -> f64 {
    points.windows(2).map(|w| w[0].dist(w[1])).sum()
}
