//! Majority depth: three exact oracles and the pair-sampling estimator.
//!
//! A closed halfplane bounded by the line through two points of `S` is a
//! major side when it holds at least `n/2` points of `S`. The majority depth
//! of `q` is the number of pairs having `q` in a major side. When `q` lies on
//! a pair's line both closed sides contain it, so the pair counts whenever
//! either side is major; such pairs are reported as ties.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashSet};

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::approx_counting::{stream_rng, HalvingChain};
use crate::error::{Error, Result};
use crate::geometry::{
    cross, dual_point, dual_vertex, level, lines_strictly_below, pairs, validate_general_position,
    DualLine, Halfplane, Point, Side, Strictness,
};
use crate::median_side::{ExactMajority, MajorityDecider, MajorityOracle};

fn check_distinct(points: &[Point]) -> Result<()> {
    let mut seen = HashSet::with_capacity(points.len());
    for (j, p) in points.iter().enumerate() {
        if !seen.insert(*p) {
            let i = points.iter().position(|o| o == p).unwrap();
            return Err(Error::DuplicatePoints { i, j });
        }
    }
    Ok(())
}

/// Pairs whose line passes through `q`.
pub fn boundary_ties(points: &[Point], q: Point) -> u64 {
    let mut ties = 0;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            ties += (cross(points[i], points[j], q) == 0) as u64;
        }
    }
    ties
}

/// Direct evaluation of the definition, `O(n^3)`.
pub fn depth_exact_naive(points: &[Point], q: Point) -> Result<u64> {
    check_distinct(points)?;
    let n = points.len();
    let depth = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut d = 0u64;
            for j in i + 1..n {
                let up = Halfplane::from_pair(points, i, j, Side::Positive).expect("distinct");
                let (mut upper, mut lower) = (0, 0);
                for &p in points {
                    match up.side_of(p) {
                        Ordering::Greater => upper += 1,
                        Ordering::Less => lower += 1,
                        Ordering::Equal => {
                            upper += 1;
                            lower += 1;
                        }
                    }
                }
                let s = up.side_of(q);
                d += ((s.is_ge() && 2 * upper >= n) || (s.is_le() && 2 * lower >= n)) as u64;
            }
            d
        })
        .sum();
    Ok(depth)
}

#[inline]
fn half(d: (i64, i64)) -> u8 {
    (d.1 < 0 || (d.1 == 0 && d.0 < 0)) as u8
}

/// Counter-clockwise angular order starting at the positive x-axis.
#[inline]
fn angle_cmp(a: (i64, i64), b: (i64, i64)) -> Ordering {
    half(a)
        .cmp(&half(b))
        .then_with(|| 0.cmp(&(a.0 * b.1 - a.1 * b.0)))
}

/// Number of directions in `sorted` strictly inside the half-turn
/// counter-clockwise from `d`.
fn open_half_turn(sorted: &[(i64, i64)], d: (i64, i64)) -> usize {
    let opp = (-d.0, -d.1);
    let lo = sorted.partition_point(|&e| angle_cmp(e, d) != Ordering::Greater);
    let hi = sorted.partition_point(|&e| angle_cmp(e, opp) == Ordering::Less);
    if half(d) == 0 {
        hi - lo
    } else {
        sorted.len() - lo + hi
    }
}

/// Angular sweep around every anchor, `O(n^2 log n)`. Agrees with
/// [`depth_exact_naive`] on every input, collinear points included.
pub fn depth_exact_sweep(points: &[Point], q: Point) -> Result<u64> {
    check_distinct(points)?;
    let n = points.len();
    let depth = (0..n)
        .into_par_iter()
        .map(|a| {
            let pa = points[a];
            let dir = |p: Point| (p.x() - pa.x(), p.y() - pa.y());
            let mut sorted: Vec<(i64, i64)> = points
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != a)
                .map(|(_, &p)| dir(p))
                .collect();
            sorted.sort_unstable_by(|&u, &v| angle_cmp(u, v));
            let m = sorted.len();
            let mut d = 0u64;
            for &pb in &points[a + 1..] {
                let db = dir(pb);
                let left = open_half_turn(&sorted, db);
                let right = open_half_turn(&sorted, (-db.0, -db.1));
                let on_line = m - left - right;
                let (closed_left, closed_right) = (1 + on_line + left, 1 + on_line + right);
                let s = cross(pa, pb, q).cmp(&0);
                d += ((s.is_ge() && 2 * closed_left >= n) || (s.is_le() && 2 * closed_right >= n))
                    as u64;
            }
            d
        })
        .sum();
    Ok(depth)
}

/// `C(n,2) - t`, where `t` counts dual vertices strictly between `q*` and
/// the median level: a vertex above `q*` with more than `n/2` dual lines
/// strictly above it, or below `q*` with more than `n/2` strictly below.
///
/// Requires distinct x-coordinates, no three collinear points and `q` off
/// every pair line.
pub fn depth_via_dual_identity(points: &[Point], q: Point) -> Result<u64> {
    let report = validate_general_position(points, Strictness::Full);
    if !report.is_clean() {
        return Err(Error::GeneralPosition(report.summary()));
    }
    let n = points.len();
    for i in 0..n {
        for j in i + 1..n {
            if cross(points[i], points[j], q) == 0 {
                return Err(Error::GeneralPosition(format!(
                    "query lies on the line through points {i} and {j}"
                )));
            }
        }
    }
    let lines: Vec<DualLine> = points
        .iter()
        .enumerate()
        .map(|(k, &p)| dual_point(p, k))
        .collect();
    let q_star = dual_point(q, usize::MAX);
    let sandwiched: u64 = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut t = 0u64;
            for j in i + 1..n {
                let v = dual_vertex(points, i, j)
                    .expect("distinct x checked")
                    .point();
                let hit = match q_star.compare_at(v.0, v.1) {
                    Ordering::Less => 2 * level(v, &lines) > n,
                    Ordering::Greater => 2 * lines_strictly_below(v, &lines) > n,
                    Ordering::Equal => unreachable!("q on a pair line was rejected"),
                };
                t += hit as u64;
            }
            t
        })
        .sum();
    Ok(pairs(n) - sandwiched)
}

/// Uniform unordered pair `(i, j)`, `i < j`.
pub fn sample_pair<R: Rng + ?Sized>(rng: &mut R, n: usize) -> (usize, usize) {
    assert!(n >= 2, "need at least two points");
    let i = rng.random_range(0..n);
    let mut j = rng.random_range(0..n - 1);
    if j >= i {
        j += 1;
    }
    (i.min(j), i.max(j))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Contribution {
    pub contributes: bool,
    /// `q` lies on the pair's line; both closed sides were tested.
    pub tie: bool,
}

/// Does the pair have `q` in a major side?
pub fn contributes<D: MajorityDecider + ?Sized>(
    points: &[Point],
    q: Point,
    pair: (usize, usize),
    decider: &mut D,
) -> Result<Contribution> {
    let up = Halfplane::from_pair(points, pair.0, pair.1, Side::Positive)?;
    Ok(match up.side_of(q) {
        Ordering::Greater => Contribution {
            contributes: decider.is_majority(&up),
            tie: false,
        },
        Ordering::Less => Contribution {
            contributes: decider.is_majority(&up.opposite()),
            tie: false,
        },
        Ordering::Equal => Contribution {
            contributes: decider.is_majority(&up) || decider.is_majority(&up.opposite()),
            tie: true,
        },
    })
}

/// Which majority test the estimator uses.
#[derive(Clone, Copy, Debug)]
pub enum MajorityMode<'a> {
    /// Monte-Carlo doubling test over a halving chain.
    Oracle(&'a HalvingChain),
    /// Linear-scan count.
    Exact,
}

enum AnyDecider<'a> {
    Oracle(MajorityOracle<'a>),
    Exact(ExactMajority<'a>),
}

impl MajorityDecider for AnyDecider<'_> {
    fn is_majority(&mut self, h: &Halfplane) -> bool {
        match self {
            AnyDecider::Oracle(o) => o.is_majority(h),
            AnyDecider::Exact(e) => e.is_majority(h),
        }
    }
}

impl<'a> MajorityMode<'a> {
    fn decider(&self, points: &'a [Point]) -> AnyDecider<'a> {
        match *self {
            MajorityMode::Oracle(chain) => AnyDecider::Oracle(MajorityOracle::new(chain)),
            MajorityMode::Exact => AnyDecider::Exact(ExactMajority { points }),
        }
    }

    fn check(&self, points: &[Point]) -> Result<()> {
        match self {
            MajorityMode::Oracle(chain) if chain.n() != points.len() => {
                Err(Error::InvalidParameter(format!(
                    "chain built over {} points, estimator given {}",
                    chain.n(),
                    points.len()
                )))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DepthEstimate {
    /// `(r_prime / r) * C(n, 2)`.
    pub d_prime: f64,
    pub r: u64,
    pub r_prime: u64,
    pub n: usize,
    pub seed: u64,
    pub ties: u64,
}

impl DepthEstimate {
    fn new(n: usize, r: u64, r_prime: u64, seed: u64, ties: u64) -> Self {
        let d_prime = (r_prime as u128 * pairs(n) as u128) as f64 / r as f64;
        DepthEstimate {
            d_prime,
            r,
            r_prime,
            n,
            seed,
            ties,
        }
    }

    pub fn p_hat(&self) -> f64 {
        self.r_prime as f64 / self.r as f64
    }
}

/// Samples drawn from one deterministic sub-stream.
pub const SHARD_SIZE: u64 = 4096;
const SAMPLE_STREAM_BASE: u64 = 1 << 32;

/// Draws `r` uniform pairs with replacement and scales the fraction that
/// contribute. Shards of [`SHARD_SIZE`] samples each use their own stream of
/// `seed`, so the result does not depend on the worker count.
pub fn estimate_depth(
    points: &[Point],
    q: Point,
    r: u64,
    seed: u64,
    mode: MajorityMode<'_>,
) -> Result<DepthEstimate> {
    if r < 1 {
        return Err(Error::InvalidSamples);
    }
    check_distinct(points)?;
    mode.check(points)?;
    let n = points.len();
    if n < 2 {
        return Ok(DepthEstimate::new(n, r, 0, seed, 0));
    }
    let shards = r.div_ceil(SHARD_SIZE);
    let (r_prime, ties) = (0..shards)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream_rng(seed, SAMPLE_STREAM_BASE + k);
            let mut decider = mode.decider(points);
            let take = SHARD_SIZE.min(r - k * SHARD_SIZE);
            let (mut hits, mut ties) = (0u64, 0u64);
            for _ in 0..take {
                let c = contributes(points, q, sample_pair(&mut rng, n), &mut decider)
                    .expect("distinct points");
                hits += c.contributes as u64;
                ties += c.tie as u64;
            }
            (hits, ties)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    Ok(DepthEstimate::new(n, r, r_prime, seed, ties))
}

/// Every pair exactly once; with [`MajorityMode::Exact`] this is the
/// definition itself.
pub fn depth_census(points: &[Point], q: Point, mode: MajorityMode<'_>) -> Result<DepthEstimate> {
    check_distinct(points)?;
    mode.check(points)?;
    let n = points.len();
    let (r_prime, ties) = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut decider = mode.decider(points);
            let (mut hits, mut ties) = (0u64, 0u64);
            for j in i + 1..n {
                let c = contributes(points, q, (i, j), &mut decider).expect("distinct points");
                hits += c.contributes as u64;
                ties += c.tie as u64;
            }
            (hits, ties)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    Ok(DepthEstimate::new(n, pairs(n).max(1), r_prime, 0, ties))
}

/// `ceil(c ln n / (epsilon^2 p_hat))`, at least 1.
pub fn sample_size_for(epsilon: f64, p_hat: f64, c: f64, n: usize) -> Result<u64> {
    sample_size_for_ln(epsilon, p_hat, c, (n.max(1) as f64).ln())
}

/// [`sample_size_for`] with `ln n` supplied directly.
pub fn sample_size_for_ln(epsilon: f64, p_hat: f64, c: f64, ln_n: f64) -> Result<u64> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon = {epsilon} not in (0, 1]"
        )));
    }
    if !(p_hat > 0.0 && p_hat <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "p_hat = {p_hat} not in (0, 1]"
        )));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidParameter(format!("c = {c} must be positive")));
    }
    Ok(((c * ln_n) / (epsilon * epsilon * p_hat)).ceil().max(1.0) as u64)
}

pub const DEFAULT_PILOT: u64 = 100;

/// Normalized depth from a pilot run; a pilot with no contributors yields
/// `1 / pilot` so the sample size stays finite.
pub fn pilot_p_hat(
    points: &[Point],
    q: Point,
    pilot: u64,
    seed: u64,
    mode: MajorityMode<'_>,
) -> Result<f64> {
    let est = estimate_depth(points, q, pilot, seed, mode)?;
    Ok(est.r_prime.max(1) as f64 / est.r as f64)
}

/// Everything the `depth` command reports.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct DepthReport {
    pub n: usize,
    pub q: [i64; 2],
    pub methods: BTreeMap<String, u64>,
    pub d_prime: Option<f64>,
    pub r: Option<u64>,
    pub r_prime: Option<u64>,
    pub p_hat: Option<f64>,
    pub epsilon_observed: Option<f64>,
    pub seed: Option<u64>,
    pub ties_flagged: u64,
}

impl DepthReport {
    pub fn new(points: &[Point], q: Point) -> Self {
        DepthReport {
            n: points.len(),
            q: [q.x(), q.y()],
            ties_flagged: boundary_ties(points, q),
            ..Default::default()
        }
    }

    pub fn with_estimate(mut self, est: &DepthEstimate) -> Self {
        self.d_prime = Some(est.d_prime);
        self.r = Some(est.r);
        self.r_prime = Some(est.r_prime);
        self.p_hat = Some(est.p_hat());
        self.seed = Some(est.seed);
        self.fill_error();
        self
    }

    pub fn with_method(mut self, name: &str, value: u64) -> Self {
        self.methods.insert(name.to_string(), value);
        self.fill_error();
        self
    }

    /// True when every exact method present agrees.
    pub fn exact_methods_agree(&self) -> bool {
        let mut values = self.methods.values();
        match values.next() {
            None => true,
            Some(first) => values.all(|v| v == first),
        }
    }

    fn fill_error(&mut self) {
        if let (Some(d_prime), Some(&exact)) = (self.d_prime, self.methods.values().next()) {
            self.epsilon_observed =
                (exact > 0).then(|| (d_prime - exact as f64).abs() / exact as f64);
        }
    }
}
