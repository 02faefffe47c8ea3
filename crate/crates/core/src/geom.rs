//! Points and domains in one or two dimensions.

use crate::{Error, Result};

/// A point in `R^d`, `d <= 2`. Copy-friendly; the unused coordinate is zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    coords: [f64; 2],
    dim: u8,
}

impl Point {
    pub fn one(x: f64) -> Self {
        Point { coords: [x, 0.0], dim: 1 }
    }

    pub fn two(x: f64, y: f64) -> Self {
        Point { coords: [x, y], dim: 2 }
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn coord(&self, axis: usize) -> f64 {
        self.coords[axis]
    }

    pub fn with_coord(mut self, axis: usize, value: f64) -> Self {
        self.coords[axis] = value;
        self
    }

    /// First coordinate; the only one in 1D.
    pub fn x(&self) -> f64 {
        self.coords[0]
    }

    pub fn y(&self) -> f64 {
        self.coords[1]
    }

    /// Squared Euclidean distance. Coordinate order is fixed, so the result
    /// is bit-identical under argument swap.
    pub fn dist2(&self, other: &Point) -> f64 {
        let dx = self.coords[0] - other.coords[0];
        let dy = self.coords[1] - other.coords[1];
        dx * dx + dy * dy
    }

    pub fn dist(&self, other: &Point) -> f64 {
        self.dist2(other).sqrt()
    }
}

impl std::fmt::Display for Point {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.dim == 1 {
            write!(f, "{}", self.coords[0])
        } else {
            write!(f, "({}, {})", self.coords[0], self.coords[1])
        }
    }
}

/// Solution domain. Axis-aligned boxes cover the built-in problems; the unit
/// disc exists for design studies on non-rectangular geometry.
#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    Interval { lo: f64, hi: f64 },
    Rect { lo: [f64; 2], hi: [f64; 2] },
    UnitDisc,
}

impl Domain {
    pub fn unit_interval() -> Self {
        Domain::Interval { lo: 0.0, hi: 1.0 }
    }

    pub fn unit_square() -> Self {
        Domain::Rect { lo: [0.0, 0.0], hi: [1.0, 1.0] }
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::Interval { .. } => 1,
            Domain::Rect { .. } | Domain::UnitDisc => 2,
        }
    }

    /// Strict interior membership.
    pub fn contains_interior(&self, p: &Point) -> bool {
        match self {
            Domain::Interval { lo, hi } => p.dim() == 1 && p.x() > *lo && p.x() < *hi,
            Domain::Rect { lo, hi } => {
                p.dim() == 2
                    && p.x() > lo[0]
                    && p.x() < hi[0]
                    && p.y() > lo[1]
                    && p.y() < hi[1]
            }
            Domain::UnitDisc => p.dim() == 2 && p.dist2(&Point::two(0.0, 0.0)) < 1.0,
        }
    }

    /// Membership of the closure, with a small tolerance at the boundary.
    pub fn contains_closure(&self, p: &Point, tol: f64) -> bool {
        match self {
            Domain::Interval { lo, hi } => {
                p.dim() == 1 && p.x() >= lo - tol && p.x() <= hi + tol
            }
            Domain::Rect { lo, hi } => {
                p.dim() == 2
                    && p.x() >= lo[0] - tol
                    && p.x() <= hi[0] + tol
                    && p.y() >= lo[1] - tol
                    && p.y() <= hi[1] + tol
            }
            Domain::UnitDisc => {
                p.dim() == 2 && p.dist2(&Point::two(0.0, 0.0)) <= (1.0 + tol) * (1.0 + tol)
            }
        }
    }

    pub fn on_boundary(&self, p: &Point, tol: f64) -> bool {
        match self {
            Domain::Interval { lo, hi } => {
                p.dim() == 1 && ((p.x() - lo).abs() <= tol || (p.x() - hi).abs() <= tol)
            }
            Domain::Rect { lo, hi } => {
                if p.dim() != 2 || !self.contains_closure(p, tol) {
                    return false;
                }
                (p.x() - lo[0]).abs() <= tol
                    || (p.x() - hi[0]).abs() <= tol
                    || (p.y() - lo[1]).abs() <= tol
                    || (p.y() - hi[1]).abs() <= tol
            }
            Domain::UnitDisc => {
                p.dim() == 2 && (p.dist(&Point::two(0.0, 0.0)) - 1.0).abs() <= tol
            }
        }
    }

    /// Range of `axis` available to an interior point whose other coordinates
    /// are those of `p`. Used by the coordinate-exchange search.
    pub fn axis_range(&self, p: &Point, axis: usize) -> (f64, f64) {
        match self {
            Domain::Interval { lo, hi } => (*lo, *hi),
            Domain::Rect { lo, hi } => (lo[axis], hi[axis]),
            Domain::UnitDisc => {
                let other = p.coord(1 - axis);
                let half = (1.0 - other * other).max(0.0).sqrt();
                (-half, half)
            }
        }
    }

    /// `n` interior points per axis on a regular lattice (boundary excluded);
    /// for the disc, the lattice over its bounding box filtered to the disc.
    pub fn interior_grid(&self, n: usize) -> Vec<Point> {
        match self {
            Domain::Interval { lo, hi } => (1..=n)
                .map(|i| Point::one(lo + (hi - lo) * i as f64 / (n + 1) as f64))
                .collect(),
            Domain::Rect { lo, hi } => {
                let mut pts = Vec::with_capacity(n * n);
                for i in 1..=n {
                    for j in 1..=n {
                        pts.push(Point::two(
                            lo[0] + (hi[0] - lo[0]) * i as f64 / (n + 1) as f64,
                            lo[1] + (hi[1] - lo[1]) * j as f64 / (n + 1) as f64,
                        ));
                    }
                }
                pts
            }
            Domain::UnitDisc => {
                let mut pts = Vec::new();
                for i in 1..=n {
                    for j in 1..=n {
                        let p = Point::two(
                            -1.0 + 2.0 * i as f64 / (n + 1) as f64,
                            -1.0 + 2.0 * j as f64 / (n + 1) as f64,
                        );
                        if self.contains_interior(&p) {
                            pts.push(p);
                        }
                    }
                }
                pts
            }
        }
    }

    /// Boundary sample: the two endpoints in 1D; `per_edge` points on the
    /// open interior of each edge in 2D (box corners are never produced, so
    /// conflicting corner conditions cannot arise); `per_edge * 4` points on
    /// the circle for the disc.
    pub fn boundary_points(&self, per_edge: usize) -> Vec<Point> {
        match self {
            Domain::Interval { lo, hi } => vec![Point::one(*lo), Point::one(*hi)],
            Domain::Rect { lo, hi } => {
                let mut pts = Vec::with_capacity(4 * per_edge);
                for i in 1..=per_edge {
                    let t = i as f64 / (per_edge + 1) as f64;
                    let sx = lo[0] + (hi[0] - lo[0]) * t;
                    let sy = lo[1] + (hi[1] - lo[1]) * t;
                    pts.push(Point::two(lo[0], sy));
                    pts.push(Point::two(hi[0], sy));
                    pts.push(Point::two(sx, lo[1]));
                    pts.push(Point::two(sx, hi[1]));
                }
                pts
            }
            Domain::UnitDisc => {
                let n = 4 * per_edge.max(1);
                (0..n)
                    .map(|i| {
                        let a = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
                        Point::two(a.cos(), a.sin())
                    })
                    .collect()
            }
        }
    }

    pub fn validate_point_dim(&self, p: &Point) -> Result<()> {
        if p.dim() != self.dim() {
            return Err(Error::Domain(format!(
                "point dimension {} does not match domain dimension {}",
                p.dim(),
                self.dim()
            )));
        }
        Ok(())
    }
}
