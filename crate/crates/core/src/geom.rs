//! Points and cubic Bézier segments.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("curve parameter {0} outside [0, 1]")]
    ParameterOutOfRange(f64),
    #[error("non-finite coordinate in segment")]
    NonFinite,
}

/// A 2D point (or vector) in user units.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dot(self, rhs: Point) -> f64 {
        self.x * rhs.x + self.y * rhs.y
    }

    pub fn cross(self, rhs: Point) -> f64 {
        self.x * rhs.y - self.y * rhs.x
    }

    pub fn length(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, rhs: Point) -> f64 {
        (rhs - self).length()
    }

    pub fn distance_sq(self, rhs: Point) -> f64 {
        let d = rhs - self;
        d.dot(d)
    }

    /// Unit vector in the same direction, or `None` for (near) zero vectors.
    pub fn normalized(self) -> Option<Point> {
        let len = self.length();
        if len > 1e-12 && len.is_finite() {
            Some(self * (1.0 / len))
        } else {
            None
        }
    }

    pub fn lerp(self, rhs: Point, t: f64) -> Point {
        Point::new(self.x + (rhs.x - self.x) * t, self.y + (rhs.y - self.y) * t)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        Point::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        Point::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, rhs: f64) -> Point {
        Point::new(self.x * rhs, self.y * rhs)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

/// Angle in radians between two nonzero vectors, in `[0, π]`.
pub fn angle_between(a: Point, b: Point) -> f64 {
    a.cross(b).atan2(a.dot(b)).abs()
}

/// A cubic Bézier segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CubicSegment {
    pub p0: Point,
    pub c1: Point,
    pub c2: Point,
    pub p3: Point,
}

impl CubicSegment {
    pub const fn new(p0: Point, c1: Point, c2: Point, p3: Point) -> Self {
        CubicSegment { p0, c1, c2, p3 }
    }

    /// Exact cubic representation of a straight line.
    pub fn line(a: Point, b: Point) -> Self {
        let d = b - a;
        CubicSegment::new(a, a + d * (1.0 / 3.0), a + d * (2.0 / 3.0), b)
    }

    /// Exact degree elevation of a quadratic with control point `q`.
    pub fn from_quadratic(a: Point, q: Point, b: Point) -> Self {
        CubicSegment::new(
            a,
            a + (q - a) * (2.0 / 3.0),
            b + (q - b) * (2.0 / 3.0),
            b,
        )
    }

    pub fn points(&self) -> [Point; 4] {
        [self.p0, self.c1, self.c2, self.p3]
    }

    pub fn is_finite(&self) -> bool {
        self.points().iter().all(|p| p.is_finite())
    }

    /// All four points coincide.
    pub fn is_degenerate(&self) -> bool {
        self.c1 == self.p0 && self.c2 == self.p0 && self.p3 == self.p0
    }

    pub fn reversed(&self) -> Self {
        CubicSegment::new(self.p3, self.c2, self.c1, self.p0)
    }

    pub fn eval(&self, t: f64) -> Result<Point, GeomError> {
        if !(0.0..=1.0).contains(&t) {
            return Err(GeomError::ParameterOutOfRange(t));
        }
        Ok(self.point_at(t))
    }

    /// De Casteljau evaluation without range checking.
    pub fn point_at(&self, t: f64) -> Point {
        if t == 0.0 {
            return self.p0;
        }
        if t == 1.0 {
            return self.p3;
        }
        let ab = self.p0.lerp(self.c1, t);
        let bc = self.c1.lerp(self.c2, t);
        let cd = self.c2.lerp(self.p3, t);
        let abc = ab.lerp(bc, t);
        let bcd = bc.lerp(cd, t);
        abc.lerp(bcd, t)
    }

    /// First derivative with respect to `t`.
    pub fn derivative(&self, t: f64) -> Point {
        let mt = 1.0 - t;
        (self.c1 - self.p0) * (3.0 * mt * mt)
            + (self.c2 - self.c1) * (6.0 * mt * t)
            + (self.p3 - self.c2) * (3.0 * t * t)
    }

    /// Unit tangent at `t`, falling back to the next nonzero control-polygon
    /// direction when the derivative vanishes (coincident handles).
    pub fn tangent(&self, t: f64) -> Option<Point> {
        if let Some(u) = self.derivative(t).normalized() {
            return Some(u);
        }
        let fallback = if t < 0.5 {
            [self.c2 - self.p0, self.p3 - self.p0]
        } else {
            [self.p3 - self.c1, self.p3 - self.p0]
        };
        fallback.into_iter().find_map(Point::normalized)
    }

    /// Split at `t` into two segments that together trace the original.
    pub fn split(&self, t: f64) -> (CubicSegment, CubicSegment) {
        let ab = self.p0.lerp(self.c1, t);
        let bc = self.c1.lerp(self.c2, t);
        let cd = self.c2.lerp(self.p3, t);
        let abc = ab.lerp(bc, t);
        let bcd = bc.lerp(cd, t);
        let mid = abc.lerp(bcd, t);
        (
            CubicSegment::new(self.p0, ab, abc, mid),
            CubicSegment::new(mid, bcd, cd, self.p3),
        )
    }

    /// The portion of the curve between `t0` and `t1` (`t0 < t1`).
    pub fn subsegment(&self, t0: f64, t1: f64) -> CubicSegment {
        debug_assert!(t0 <= t1);
        let right = if t0 <= 0.0 { *self } else { self.split(t0).1 };
        if t1 >= 1.0 {
            return right;
        }
        let local = (t1 - t0) / (1.0 - t0);
        right.split(local).0
    }

    /// Length of the control polygon, an upper bound on arc length.
    pub fn hull_length(&self) -> f64 {
        self.p0.distance(self.c1) + self.c1.distance(self.c2) + self.c2.distance(self.p3)
    }

    /// Arc length estimated from a 32-piece polyline.
    pub fn approx_length(&self) -> f64 {
        let mut prev = self.p0;
        let mut len = 0.0;
        for i in 1..=32 {
            let p = self.point_at(i as f64 / 32.0);
            len += prev.distance(p);
            prev = p;
        }
        len
    }

    /// Number of line pieces that keep a flattened polyline within `tolerance`
    /// of the curve (Wang's bound).
    pub fn flatten_count(&self, tolerance: f64) -> usize {
        let dd1 = self.p0 - self.c1 * 2.0 + self.c2;
        let dd2 = self.c1 - self.c2 * 2.0 + self.p3;
        let m = dd1.length().max(dd2.length());
        let n = (0.75 * m / tolerance).sqrt().ceil();
        (n as usize).clamp(1, 1024)
    }

    pub fn map(&self, f: impl Fn(Point) -> Point) -> CubicSegment {
        CubicSegment::new(f(self.p0), f(self.c1), f(self.c2), f(self.p3))
    }
}
