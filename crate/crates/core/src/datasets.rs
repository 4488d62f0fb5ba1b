//! Seeded point-set generators. Every generator returns points with pairwise
//! distinct x-coordinates inside the coordinate bound.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution as _, Normal};
use serde::{Deserialize, Serialize};

use crate::approx_counting::stream_rng;
use crate::error::{Error, Result};
use crate::geometry::{validate_general_position, Point, Strictness, COORD_BOUND};

const DATA_STREAM: u64 = 7;
const DISK_RADIUS: i64 = 1 << 19;
const GAUSS_SIGMA: f64 = (1 << 17) as f64;
const PARABOLA_HALF_WIDTH: i64 = 1024;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Distribution {
    UniformDisk,
    Gaussian,
    GridJittered,
    /// Integer points on `y = x^2` with `|x| <= 1024`.
    ConvexPosition,
}

impl Distribution {
    pub const ALL: [Distribution; 4] = [
        Distribution::UniformDisk,
        Distribution::Gaussian,
        Distribution::GridJittered,
        Distribution::ConvexPosition,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Distribution::UniformDisk => "uniform-disk",
            Distribution::Gaussian => "gaussian",
            Distribution::GridJittered => "grid-jittered",
            Distribution::ConvexPosition => "convex-position",
        }
    }

    pub fn max_points(self) -> usize {
        match self {
            Distribution::ConvexPosition => 2 * PARABOLA_HALF_WIDTH as usize + 1,
            _ => DISK_RADIUS as usize,
        }
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Distribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Distribution::ALL
            .into_iter()
            .find(|d| d.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown distribution {s:?}")))
    }
}

/// Draws `n` points; the same `(distribution, n, seed)` always gives the same
/// points in the same order.
pub fn generate(dist: Distribution, n: usize, seed: u64) -> Result<Vec<Point>> {
    if n > dist.max_points() {
        return Err(Error::InvalidParameter(format!(
            "{dist} supports at most {} points",
            dist.max_points()
        )));
    }
    let mut rng = stream_rng(seed, DATA_STREAM);
    let mut xs = HashSet::with_capacity(n);
    let mut out = Vec::with_capacity(n);
    match dist {
        Distribution::UniformDisk => {
            let r = DISK_RADIUS;
            while out.len() < n {
                let (x, y) = (rng.random_range(-r..=r), rng.random_range(-r..=r));
                if x * x + y * y <= r * r && xs.insert(x) {
                    out.push(Point::new(x, y));
                }
            }
        }
        Distribution::Gaussian => {
            let normal = Normal::new(0.0, GAUSS_SIGMA).expect("positive sigma");
            while out.len() < n {
                let (x, y) = (
                    normal.sample(&mut rng).round() as i64,
                    normal.sample(&mut rng).round() as i64,
                );
                if x.abs() <= COORD_BOUND && y.abs() <= COORD_BOUND && xs.insert(x) {
                    out.push(Point::new(x, y));
                }
            }
        }
        Distribution::GridJittered => {
            let side = (n as f64).sqrt().ceil().max(1.0) as i64;
            let cell = 2 * COORD_BOUND / side;
            let jitter = cell / 4;
            let mut cells: Vec<(i64, i64)> = (0..side)
                .flat_map(|a| (0..side).map(move |b| (a, b)))
                .collect();
            cells.shuffle(&mut rng);
            for (a, b) in cells.into_iter().take(n) {
                let (cx, cy) = (
                    -COORD_BOUND + a * cell + cell / 2,
                    -COORD_BOUND + b * cell + cell / 2,
                );
                loop {
                    let x = cx + rng.random_range(-jitter..=jitter);
                    if xs.insert(x) {
                        out.push(Point::new(x, cy + rng.random_range(-jitter..=jitter)));
                        break;
                    }
                }
            }
        }
        Distribution::ConvexPosition => {
            let width = 2 * PARABOLA_HALF_WIDTH as usize + 1;
            for k in rand::seq::index::sample(&mut rng, width, n) {
                let x = k as i64 - PARABOLA_HALF_WIDTH;
                out.push(Point::new(x, x * x));
            }
        }
    }
    Ok(out)
}

/// Like [`generate`], redrawing from derived seeds until the set has no three
/// collinear points. Gives up after 64 attempts.
pub fn generate_general_position(dist: Distribution, n: usize, seed: u64) -> Result<Vec<Point>> {
    for attempt in 0..64u64 {
        let pts = generate(
            dist,
            n,
            seed.wrapping_add(attempt.wrapping_mul(0x9E37_79B9_7F4A_7C15)),
        )?;
        if validate_general_position(&pts, Strictness::Full).is_clean() {
            return Ok(pts);
        }
    }
    Err(Error::GeneralPosition(format!(
        "no collinear-free {dist} sample of size {n} found"
    )))
}

/// Coordinate-wise median, lower median for even sizes.
pub fn coordinate_median(points: &[Point]) -> Option<Point> {
    if points.is_empty() {
        return None;
    }
    let mid = (points.len() - 1) / 2;
    let mut xs: Vec<i64> = points.iter().map(|p| p.x()).collect();
    let mut ys: Vec<i64> = points.iter().map(|p| p.y()).collect();
    Some(Point::new(
        *xs.select_nth_unstable(mid).1,
        *ys.select_nth_unstable(mid).1,
    ))
}
