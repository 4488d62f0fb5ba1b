//! Exact integer primitives in the primal plane.
//!
//! Every point is constructed through [`Point::try_new`] (or the panicking
//! [`Point::new`]), which enforces `|x|, |y| <= COORD_BOUND`. Under that bound
//! an orientation determinant is below `2^44` and a halfplane evaluation is
//! below `2^45`, so all predicates here are exact in `i64`/`i128`.

mod dual;
mod position;

use std::cmp::Ordering;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};

pub use dual::{
    dual_point, dual_vertex, level, lines_strictly_below, DualLine, DualVertex, Rational,
};
pub use position::{validate_general_position, GeneralPositionReport, Strictness};

/// Largest admissible absolute coordinate.
pub const COORD_BOUND: i64 = 1 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Point {
    x: i64,
    y: i64,
}

impl Point {
    pub fn try_new(x: i64, y: i64) -> Result<Self> {
        if x.unsigned_abs() > COORD_BOUND as u64 || y.unsigned_abs() > COORD_BOUND as u64 {
            return Err(Error::CoordinateOutOfRange { x, y });
        }
        Ok(Point { x, y })
    }

    /// Panics if a coordinate exceeds [`COORD_BOUND`].
    pub fn new(x: i64, y: i64) -> Self {
        Self::try_new(x, y).expect("coordinate bound")
    }

    #[inline]
    pub fn x(&self) -> i64 {
        self.x
    }

    #[inline]
    pub fn y(&self) -> i64 {
        self.y
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Orientation {
    Clockwise,
    Collinear,
    CounterClockwise,
}

impl Orientation {
    pub fn sign(self) -> i8 {
        match self {
            Orientation::Clockwise => -1,
            Orientation::Collinear => 0,
            Orientation::CounterClockwise => 1,
        }
    }
}

#[inline]
pub(crate) fn cross(p: Point, q: Point, r: Point) -> i64 {
    (q.x - p.x) * (r.y - p.y) - (q.y - p.y) * (r.x - p.x)
}

/// Sign of `(q - p) x (r - p)`.
#[inline]
pub fn orient(p: Point, q: Point, r: Point) -> Orientation {
    match cross(p, q, r).cmp(&0) {
        Ordering::Less => Orientation::Clockwise,
        Ordering::Equal => Orientation::Collinear,
        Ordering::Greater => Orientation::CounterClockwise,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    /// Upper closed side; closed right side when the boundary is vertical.
    Positive,
    Negative,
}

impl Side {
    pub fn flip(self) -> Side {
        match self {
            Side::Positive => Side::Negative,
            Side::Negative => Side::Positive,
        }
    }
}

/// Closed halfplane `{(x, y) : a*x + b*y + c >= 0}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Halfplane {
    a: i64,
    b: i64,
    c: i64,
    pair: Option<(usize, usize)>,
}

impl Halfplane {
    pub fn new(a: i64, b: i64, c: i64) -> Result<Self> {
        if a == 0 && b == 0 {
            return Err(Error::ZeroNormal);
        }
        Ok(Halfplane {
            a,
            b,
            c,
            pair: None,
        })
    }

    /// Closed side of the line through `u` and `v`.
    pub fn from_points(u: Point, v: Point, side: Side) -> Result<Self> {
        if u == v {
            return Err(Error::DegeneratePair);
        }
        let (dx, dy) = (v.x - u.x, v.y - u.y);
        // a*x + b*y + c == cross(u, v, (x, y))
        let (mut a, mut b, mut c) = (-dy, dx, dy * u.x - dx * u.y);
        if b < 0 || (b == 0 && a < 0) {
            (a, b, c) = (-a, -b, -c);
        }
        let h = Halfplane {
            a,
            b,
            c,
            pair: None,
        };
        Ok(match side {
            Side::Positive => h,
            Side::Negative => h.opposite(),
        })
    }

    /// Like [`Halfplane::from_points`] but records the defining indices.
    pub fn from_pair(points: &[Point], i: usize, j: usize, side: Side) -> Result<Self> {
        let mut h = Self::from_points(points[i], points[j], side)?;
        h.pair = Some((i.min(j), i.max(j)));
        Ok(h)
    }

    pub fn coefficients(&self) -> (i64, i64, i64) {
        (self.a, self.b, self.c)
    }

    pub fn pair(&self) -> Option<(usize, usize)> {
        self.pair
    }

    /// The other closed side of the same boundary.
    pub fn opposite(&self) -> Self {
        Halfplane {
            a: -self.a,
            b: -self.b,
            c: -self.c,
            pair: self.pair,
        }
    }

    #[inline]
    pub fn eval(&self, p: Point) -> i128 {
        self.a as i128 * p.x as i128 + self.b as i128 * p.y as i128 + self.c as i128
    }

    #[inline]
    pub fn contains(&self, p: Point) -> bool {
        self.eval(p) >= 0
    }

    /// `Greater` strictly inside, `Equal` on the boundary, `Less` outside.
    #[inline]
    pub fn side_of(&self, p: Point) -> Ordering {
        self.eval(p).cmp(&0)
    }

    pub fn classify(&self, rect: &Rect) -> RectSide {
        let corners = [
            Point {
                x: rect.min_x,
                y: rect.min_y,
            },
            Point {
                x: rect.min_x,
                y: rect.max_y,
            },
            Point {
                x: rect.max_x,
                y: rect.min_y,
            },
            Point {
                x: rect.max_x,
                y: rect.max_y,
            },
        ];
        let inside = corners.iter().filter(|&&p| self.contains(p)).count();
        match inside {
            4 => RectSide::Inside,
            0 => RectSide::Outside,
            _ => RectSide::Crossed,
        }
    }

    /// Random closed halfplane whose boundary passes through two integer
    /// points drawn from `rect` (grown by a 1/8 margin on each side).
    pub fn random<R: Rng + ?Sized>(rng: &mut R, rect: &Rect) -> Self {
        let grow = |lo: i64, hi: i64| {
            let m = (hi - lo) / 8 + 1;
            ((lo - m).max(-COORD_BOUND), (hi + m).min(COORD_BOUND))
        };
        let (x0, x1) = grow(rect.min_x, rect.max_x);
        let (y0, y1) = grow(rect.min_y, rect.max_y);
        loop {
            let u = Point {
                x: rng.random_range(x0..=x1),
                y: rng.random_range(y0..=y1),
            };
            let v = Point {
                x: rng.random_range(x0..=x1),
                y: rng.random_range(y0..=y1),
            };
            if u == v {
                continue;
            }
            let side = if rng.random_bool(0.5) {
                Side::Positive
            } else {
                Side::Negative
            };
            return Self::from_points(u, v, side).expect("distinct points");
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RectSide {
    Inside,
    Outside,
    Crossed,
}

/// Closed axis-aligned rectangle.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Rect {
    pub min_x: i64,
    pub max_x: i64,
    pub min_y: i64,
    pub max_y: i64,
}

impl Rect {
    pub fn bounding<'a>(points: impl IntoIterator<Item = &'a Point>) -> Option<Rect> {
        let mut it = points.into_iter();
        let first = it.next()?;
        let mut r = Rect {
            min_x: first.x,
            max_x: first.x,
            min_y: first.y,
            max_y: first.y,
        };
        for p in it {
            r.min_x = r.min_x.min(p.x);
            r.max_x = r.max_x.max(p.x);
            r.min_y = r.min_y.min(p.y);
            r.max_y = r.max_y.max(p.y);
        }
        Some(r)
    }
}

/// Exact `|h ∩ S|` by linear scan.
pub fn count_in_halfplane_naive(points: &[Point], h: &Halfplane) -> usize {
    points.iter().filter(|&&p| h.contains(p)).count()
}

/// Number of unordered pairs, `n choose 2`.
pub fn pairs(n: usize) -> u64 {
    let n = n as u64;
    n * n.saturating_sub(1) / 2
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(x: i64, y: i64) -> Point {
        Point::new(x, y)
    }

    #[test]
    fn orient_basic_cases() {
        assert_eq!(orient(p(0, 0), p(1, 0), p(0, 1)).sign(), 1);
        assert_eq!(orient(p(0, 0), p(1, 1), p(2, 2)).sign(), 0);
        assert_eq!(orient(p(0, 0), p(1, 0), p(0, -1)).sign(), -1);
    }

    #[test]
    fn coordinate_bound_is_enforced() {
        assert!(Point::try_new(COORD_BOUND, -COORD_BOUND).is_ok());
        assert!(matches!(
            Point::try_new(COORD_BOUND + 1, 0),
            Err(Error::CoordinateOutOfRange { .. })
        ));
        assert!(Point::try_new(0, i64::MIN).is_err());
    }

    #[test]
    fn extreme_coordinates_do_not_wrap() {
        let b = COORD_BOUND;
        assert_eq!(
            orient(p(-b, -b), p(b, -b), p(-b, b)),
            Orientation::CounterClockwise
        );
        assert_eq!(
            orient(p(-b, -b), p(b, b), p(b - 1, b)),
            Orientation::CounterClockwise
        );
        assert_eq!(
            orient(p(-b, -b), p(b, b), p(b, b - 1)),
            Orientation::Clockwise
        );
    }

    #[test]
    fn horizontal_pair_upper_side() {
        let h = Halfplane::from_points(p(0, 0), p(2, 0), Side::Positive).unwrap();
        assert!(h.contains(p(1, 5)));
        assert!(h.contains(p(1, 0)));
        assert!(!h.contains(p(1, -1)));
        // order of the pair does not matter
        let g = Halfplane::from_points(p(2, 0), p(0, 0), Side::Positive).unwrap();
        assert_eq!(h.coefficients(), g.coefficients());
    }

    #[test]
    fn vertical_pair_positive_is_right() {
        let h = Halfplane::from_points(p(0, 0), p(0, 2), Side::Positive).unwrap();
        assert!(h.contains(p(3, -7)));
        assert!(h.contains(p(0, 100)));
        assert!(!h.contains(p(-1, 0)));
        let g = Halfplane::from_points(p(0, 2), p(0, 0), Side::Positive).unwrap();
        assert_eq!(h.coefficients(), g.coefficients());
    }

    #[test]
    fn diagonal_pair_negative_side() {
        let h = Halfplane::from_points(p(0, 0), p(1, 1), Side::Negative).unwrap();
        assert!(h.contains(p(1, 0)));
        assert!(!h.contains(p(0, 1)));
    }

    #[test]
    fn degenerate_pair_rejected() {
        assert!(matches!(
            Halfplane::from_points(p(3, 3), p(3, 3), Side::Positive),
            Err(Error::DegeneratePair)
        ));
        assert!(matches!(Halfplane::new(0, 0, 1), Err(Error::ZeroNormal)));
    }

    #[test]
    fn naive_counts() {
        let s = vec![p(0, 0), p(2, 0), p(1, 2)];
        let h = Halfplane::from_points(p(0, 0), p(2, 0), Side::Positive).unwrap();
        assert_eq!(count_in_halfplane_naive(&s, &h), 3);
        let r = Rect::bounding(&s).unwrap();
        let all = Halfplane::new(0, 1, -(r.min_y - 1)).unwrap();
        assert_eq!(count_in_halfplane_naive(&s, &all), 3);
    }

    #[test]
    fn rect_classification() {
        let r = Rect {
            min_x: 0,
            max_x: 4,
            min_y: 0,
            max_y: 4,
        };
        let right_of = |x0: i64| Halfplane::new(1, 0, -x0).unwrap();
        assert_eq!(right_of(-1).classify(&r), RectSide::Inside);
        assert_eq!(right_of(0).classify(&r), RectSide::Inside);
        assert_eq!(right_of(2).classify(&r), RectSide::Crossed);
        assert_eq!(right_of(4).classify(&r), RectSide::Crossed);
        assert_eq!(right_of(5).classify(&r), RectSide::Outside);
    }

    fn arb_point() -> impl Strategy<Value = Point> {
        (-1000i64..=1000, -1000i64..=1000).prop_map(|(x, y)| p(x, y))
    }

    proptest! {
        #[test]
        fn orient_is_antisymmetric(a in arb_point(), b in arb_point(), c in arb_point()) {
            let s = orient(a, b, c).sign();
            prop_assert_eq!(orient(b, a, c).sign(), -s);
            prop_assert_eq!(orient(a, c, b).sign(), -s);
            prop_assert_eq!(orient(c, b, a).sign(), -s);
        }

        #[test]
        fn pair_halfplane_passes_through_both_points(u in arb_point(), v in arb_point()) {
            prop_assume!(u != v);
            for side in [Side::Positive, Side::Negative] {
                let h = Halfplane::from_points(u, v, side).unwrap();
                prop_assert_eq!(h.eval(u), 0);
                prop_assert_eq!(h.eval(v), 0);
            }
        }

        #[test]
        fn closed_side_plus_open_complement_is_everything(
            pts in prop::collection::vec(arb_point(), 1..40),
            u in arb_point(),
            v in arb_point(),
        ) {
            prop_assume!(u != v);
            let h = Halfplane::from_points(u, v, Side::Positive).unwrap();
            prop_assume!(pts.iter().all(|&q| h.eval(q) != 0));
            let open_complement = pts.iter().filter(|&&q| h.eval(q) < 0).count();
            prop_assert_eq!(count_in_halfplane_naive(&pts, &h) + open_complement, pts.len());
            prop_assert_eq!(
                count_in_halfplane_naive(&pts, &h) + count_in_halfplane_naive(&pts, &h.opposite()),
                pts.len()
            );
        }
    }
}
