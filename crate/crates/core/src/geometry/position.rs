use std::cmp::Ordering;
use std::collections::HashMap;

use serde::Serialize;

use super::Point;

/// How much degeneracy a caller can tolerate. Checks are cumulative.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Strictness {
    /// Points must be pairwise distinct.
    DistinctPoints,
    /// Additionally no shared x-coordinates (dual lines pairwise non-parallel).
    DistinctX,
    /// Additionally no three collinear points.
    Full,
}

const MAX_LISTED: usize = 64;

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct GeneralPositionReport {
    /// At most 64 pairs are listed; the totals below are exact.
    pub duplicate_points: Vec<(usize, usize)>,
    pub duplicate_x: Vec<(usize, usize)>,
    pub collinear_triples: Vec<(usize, usize, usize)>,
    pub duplicate_point_count: u64,
    pub duplicate_x_count: u64,
    pub collinear_count: u64,
}

impl GeneralPositionReport {
    pub fn is_clean(&self) -> bool {
        self.duplicate_point_count == 0 && self.duplicate_x_count == 0 && self.collinear_count == 0
    }

    pub fn summary(&self) -> String {
        format!(
            "{} duplicate points, {} shared x-coordinates, {} collinear triples",
            self.duplicate_point_count, self.duplicate_x_count, self.collinear_count
        )
    }
}

pub fn validate_general_position(
    points: &[Point],
    strictness: Strictness,
) -> GeneralPositionReport {
    let mut report = GeneralPositionReport::default();

    let mut by_point: HashMap<Point, Vec<usize>> = HashMap::new();
    for (k, &p) in points.iter().enumerate() {
        by_point.entry(p).or_default().push(k);
    }
    let mut groups: Vec<_> = by_point.into_values().filter(|g| g.len() > 1).collect();
    groups.sort();
    for g in &groups {
        for (a, &i) in g.iter().enumerate() {
            for &j in &g[a + 1..] {
                report.duplicate_point_count += 1;
                if report.duplicate_points.len() < MAX_LISTED {
                    report.duplicate_points.push((i, j));
                }
            }
        }
    }
    if strictness == Strictness::DistinctPoints {
        return report;
    }

    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by_key(|&k| (points[k].x(), k));
    for w in order.chunk_by(|&a, &b| points[a].x() == points[b].x()) {
        for (a, &i) in w.iter().enumerate() {
            for &j in &w[a + 1..] {
                report.duplicate_x_count += 1;
                if report.duplicate_x.len() < MAX_LISTED {
                    report.duplicate_x.push((i.min(j), i.max(j)));
                }
            }
        }
    }
    if strictness == Strictness::DistinctX {
        return report;
    }

    // Triples (a, b, c) with a < b < c: around each anchor a, sort the
    // directions to later points modulo pi and group equal ones.
    let mut dirs: Vec<(i64, i64, usize)> = Vec::with_capacity(points.len());
    for a in 0..points.len() {
        dirs.clear();
        for b in a + 1..points.len() {
            let (mut dx, mut dy) = (points[b].x() - points[a].x(), points[b].y() - points[a].y());
            if dx == 0 && dy == 0 {
                continue;
            }
            if dy < 0 || (dy == 0 && dx < 0) {
                (dx, dy) = (-dx, -dy);
            }
            dirs.push((dx, dy, b));
        }
        dirs.sort_by(|u, v| {
            let c = u.0 * v.1 - u.1 * v.0;
            0.cmp(&c).then(u.2.cmp(&v.2))
        });
        for g in dirs.chunk_by(|u, v| u.0 * v.1 - u.1 * v.0 == 0) {
            for (s, u) in g.iter().enumerate() {
                for v in &g[s + 1..] {
                    report.collinear_count += 1;
                    if report.collinear_triples.len() < MAX_LISTED {
                        let (b, c) = match u.2.cmp(&v.2) {
                            Ordering::Less => (u.2, v.2),
                            _ => (v.2, u.2),
                        };
                        report.collinear_triples.push((a, b, c));
                    }
                }
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(v: &[(i64, i64)]) -> Vec<Point> {
        v.iter().map(|&(x, y)| Point::new(x, y)).collect()
    }

    #[test]
    fn flags_collinear_triple() {
        let r = validate_general_position(&pts(&[(0, 0), (1, 1), (2, 2)]), Strictness::Full);
        assert_eq!(r.collinear_triples, vec![(0, 1, 2)]);
        assert!(!r.is_clean());
    }

    #[test]
    fn flags_shared_x() {
        let r = validate_general_position(&pts(&[(0, 0), (0, 1)]), Strictness::DistinctX);
        assert_eq!(r.duplicate_x, vec![(0, 1)]);
        assert_eq!(r.collinear_count, 0);
    }

    #[test]
    fn clean_triangle() {
        let r = validate_general_position(&pts(&[(0, 0), (1, 3), (2, 1)]), Strictness::Full);
        assert!(r.is_clean(), "{}", r.summary());
    }

    #[test]
    fn duplicates_do_not_count_as_collinear() {
        let r = validate_general_position(&pts(&[(5, 5), (5, 5), (1, 0)]), Strictness::Full);
        assert_eq!(r.duplicate_points, vec![(0, 1)]);
        assert_eq!(r.collinear_count, 0);
    }

    #[test]
    fn strictness_limits_checks() {
        let s = pts(&[(0, 0), (0, 1), (0, 2)]);
        let r = validate_general_position(&s, Strictness::DistinctPoints);
        assert!(r.is_clean());
        let r = validate_general_position(&s, Strictness::Full);
        assert_eq!((r.duplicate_x_count, r.collinear_count), (3, 1));
    }

    #[test]
    fn matches_cubic_scan() {
        let s = pts(&[
            (0, 0),
            (2, 1),
            (4, 2),
            (1, 5),
            (3, 3),
            (6, 3),
            (-2, -1),
            (5, 0),
        ]);
        let mut brute = 0;
        for a in 0..s.len() {
            for b in a + 1..s.len() {
                for c in b + 1..s.len() {
                    if crate::geometry::cross(s[a], s[b], s[c]) == 0 {
                        brute += 1;
                    }
                }
            }
        }
        let r = validate_general_position(&s, Strictness::Full);
        assert_eq!(r.collinear_count, brute);
    }
}
