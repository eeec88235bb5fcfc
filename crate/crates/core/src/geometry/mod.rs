//! Integer pixel geometry: distances, orientation, line rasterization and
//! Delaunay triangulation.
//!
//! Everything here is exact. Orientation and in-circle tests run in `i128`,
//! so no epsilon is involved anywhere.

mod delaunay;

pub use delaunay::{delaunay, DelaunayError, InternalEdge, Triangulation, MAX_COORDINATE};

use std::fmt;

/// Integer pixel coordinate. `x` grows rightward and `y` downward.
///
/// The derived ordering is lexicographic on `(x, y)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Point {
    pub x: i32,
    pub y: i32,
}

impl Point {
    #[inline]
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn offset(self, dx: i32, dy: i32) -> Self {
        Self::new(self.x + dx, self.y + dy)
    }
}

impl From<(i32, i32)> for Point {
    fn from((x, y): (i32, i32)) -> Self {
        Self::new(x, y)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Chebyshev distance `max(|dx|, |dy|)`.
#[inline]
pub fn chebyshev(p: Point, q: Point) -> i64 {
    let dx = (i64::from(q.x) - i64::from(p.x)).abs();
    let dy = (i64::from(q.y) - i64::from(p.y)).abs();
    dx.max(dy)
}

/// Turn direction of the path `a -> b -> c` as seen on screen (y down).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Orientation {
    ClockwiseOnScreen,
    CounterClockwiseOnScreen,
    Collinear,
}

impl Orientation {
    pub fn reversed(self) -> Self {
        match self {
            Orientation::ClockwiseOnScreen => Orientation::CounterClockwiseOnScreen,
            Orientation::CounterClockwiseOnScreen => Orientation::ClockwiseOnScreen,
            Orientation::Collinear => Orientation::Collinear,
        }
    }
}

/// The cross product `(b - a) x (c - a)`. Positive means clockwise on screen.
#[inline]
pub fn cross(a: Point, b: Point, c: Point) -> i128 {
    let (ax, ay) = (i128::from(a.x), i128::from(a.y));
    (i128::from(b.x) - ax) * (i128::from(c.y) - ay) - (i128::from(b.y) - ay) * (i128::from(c.x) - ax)
}

pub fn orientation(a: Point, b: Point, c: Point) -> Orientation {
    match cross(a, b, c).signum() {
        1 => Orientation::ClockwiseOnScreen,
        -1 => Orientation::CounterClockwiseOnScreen,
        _ => Orientation::Collinear,
    }
}

/// Twice the signed area of a polygon, positive when its vertices run
/// clockwise on screen.
pub fn signed_area2(poly: &[Point]) -> i128 {
    let n = poly.len();
    (0..n)
        .map(|i| {
            let (p, q) = (poly[i], poly[(i + 1) % n]);
            i128::from(p.x) * i128::from(q.y) - i128::from(q.x) * i128::from(p.y)
        })
        .sum()
}

/// Whether the closed segments `p1p2` and `q1q2` share at least one point.
pub fn segments_intersect(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let d1 = cross(q1, q2, p1).signum();
    let d2 = cross(q1, q2, p2).signum();
    let d3 = cross(p1, p2, q1).signum();
    let d4 = cross(p1, p2, q2).signum();
    if d1 * d2 < 0 && d3 * d4 < 0 {
        return true;
    }
    let within = |a: Point, b: Point, c: Point| {
        c.x >= a.x.min(b.x) && c.x <= a.x.max(b.x) && c.y >= a.y.min(b.y) && c.y <= a.y.max(b.y)
    };
    (d1 == 0 && within(q1, q2, p1))
        || (d2 == 0 && within(q1, q2, p2))
        || (d3 == 0 && within(p1, p2, q1))
        || (d4 == 0 && within(p1, p2, q2))
}

/// Whether the closed polygon `poly` (3 or 4 vertices) is simple: no two
/// non-adjacent edges touch.
pub fn is_simple_polygon(poly: &[Point]) -> bool {
    let n = poly.len();
    for i in 0..n {
        for j in (i + 1)..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                continue;
            }
            if segments_intersect(poly[i], poly[(i + 1) % n], poly[j], poly[(j + 1) % n]) {
                return false;
            }
        }
    }
    true
}

/// 8-connected pixel chain from `p` to `q`, both inclusive.
///
/// The chain is always traced from the lexicographically smaller endpoint,
/// so `bresenham(q, p)` is exactly `bresenham(p, q)` reversed.
pub fn bresenham(p: Point, q: Point) -> Vec<Point> {
    if q < p {
        let mut chain = trace(q, p);
        chain.reverse();
        chain
    } else {
        trace(p, q)
    }
}

// Requires p <= q lexicographically, hence dx >= 0.
fn trace(p: Point, q: Point) -> Vec<Point> {
    let dx = i64::from(q.x) - i64::from(p.x);
    let dy = i64::from(q.y) - i64::from(p.y);
    let sy = dy.signum() as i32;
    let ady = dy.abs();
    let mut out = Vec::with_capacity(dx.max(ady) as usize + 1);
    if dx >= ady {
        let mut err = 2 * ady - dx;
        let mut y = p.y;
        for i in 0..=dx as i32 {
            out.push(Point::new(p.x + i, y));
            if err > 0 {
                y += sy;
                err -= 2 * dx;
            }
            err += 2 * ady;
        }
    } else {
        let mut err = 2 * dx - ady;
        let mut x = p.x;
        for i in 0..=ady as i32 {
            out.push(Point::new(x, p.y + sy * i));
            if err > 0 {
                x += 1;
                err -= 2 * ady;
            }
            err += 2 * dx;
        }
    }
    out
}
