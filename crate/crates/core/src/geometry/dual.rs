//! Point/line duality `(a, b) <-> y = a*x - b`.
//!
//! The map preserves incidence and order: `p` lies above the non-vertical
//! line `l` exactly when the dual point `l*` lies above the dual line `p*`.

use std::cmp::Ordering;

use num_rational::Ratio;

use super::Point;
use crate::error::{Error, Result};

pub type Rational = Ratio<i128>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DualLine {
    pub slope: Rational,
    pub intercept: Rational,
    /// Index of the primal point.
    pub source: usize,
}

impl DualLine {
    pub fn at(&self, x: Rational) -> Rational {
        self.slope * x + self.intercept
    }

    /// Sign of `self.at(x) - y`.
    pub fn compare_at(&self, x: Rational, y: Rational) -> Ordering {
        if self.slope.is_integer() && self.intercept.is_integer() {
            // a*xn/xd + b vs yn/yd, both denominators positive; every product
            // stays below 2^66 under the coordinate bound
            let (a, b) = (self.slope.to_integer(), self.intercept.to_integer());
            let (xn, xd) = (*x.numer(), *x.denom());
            let (yn, yd) = (*y.numer(), *y.denom());
            ((a * xn + b * xd) * yd).cmp(&(yn * xd))
        } else {
            self.at(x).cmp(&y)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DualVertex {
    pub i: usize,
    pub j: usize,
    pub x: Rational,
    pub y: Rational,
}

impl DualVertex {
    pub fn point(&self) -> (Rational, Rational) {
        (self.x, self.y)
    }
}

pub fn dual_point(p: Point, source: usize) -> DualLine {
    DualLine {
        slope: Rational::from_integer(p.x() as i128),
        intercept: Rational::from_integer(-(p.y() as i128)),
        source,
    }
}

/// Intersection of the duals of `points[i]` and `points[j]`, i.e. the point
/// `(m, -k)` for the primal line `y = m*x + k` through both.
pub fn dual_vertex(points: &[Point], i: usize, j: usize) -> Result<DualVertex> {
    let (i, j) = (i.min(j), i.max(j));
    let (u, v) = (points[i], points[j]);
    let dx = (v.x() - u.x()) as i128;
    if dx == 0 {
        return Err(Error::ParallelDuals { i, j });
    }
    let dy = (v.y() - u.y()) as i128;
    let slope = Rational::new(dy, dx);
    let intercept = Rational::new(u.y() as i128 * dx - dy * u.x() as i128, dx);
    Ok(DualVertex {
        i,
        j,
        x: slope,
        y: -intercept,
    })
}

/// Number of lines strictly above `x`.
pub fn level(x: (Rational, Rational), lines: &[DualLine]) -> usize {
    lines
        .iter()
        .filter(|l| l.compare_at(x.0, x.1).is_gt())
        .count()
}

pub fn lines_strictly_below(x: (Rational, Rational), lines: &[DualLine]) -> usize {
    lines
        .iter()
        .filter(|l| l.compare_at(x.0, x.1).is_lt())
        .count()
}
