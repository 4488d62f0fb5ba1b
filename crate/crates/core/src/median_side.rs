//! Majority test "does `h` hold at least `n/2` points?" on top of a
//! [`HalvingChain`], and a brute-force level histogram of the dual
//! arrangement.
//!
//! Conventions: the majority predicate is `|h ∩ S| >= n/2` with real `n/2`,
//! i.e. `2|h ∩ S| >= n`; the median level of the dual arrangement is level
//! `floor(n/2)` (number of lines strictly above).

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::approx_counting::HalvingChain;
use crate::error::{Error, Result};
use crate::geometry::{
    count_in_halfplane_naive, dual_point, dual_vertex, level, pairs, validate_general_position,
    DualLine, Halfplane, Point, Strictness,
};

/// Anything that can answer the majority predicate for a halfplane.
pub trait MajorityDecider {
    fn is_majority(&mut self, h: &Halfplane) -> bool;
}

/// Linear-scan reference decider.
#[derive(Clone, Copy, Debug)]
pub struct ExactMajority<'a> {
    pub points: &'a [Point],
}

impl MajorityDecider for ExactMajority<'_> {
    fn is_majority(&mut self, h: &Halfplane) -> bool {
        2 * count_in_halfplane_naive(self.points, h) >= self.points.len()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct QueryRecord {
    pub approx_calls: u32,
    /// Chain level of each call, in order.
    pub levels: Vec<usize>,
    pub nodes_visited: u64,
    pub last_call_nodes: u64,
    pub exact_fallback: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct QueryStats {
    pub queries: u64,
    pub approx_calls: u64,
    pub exact_fallbacks: u64,
    pub nodes_visited: u64,
    pub per_query: Vec<QueryRecord>,
}

impl QueryStats {
    fn record(&mut self, q: QueryRecord) {
        self.queries += 1;
        self.approx_calls += q.approx_calls as u64;
        self.exact_fallbacks += q.exact_fallback as u64;
        self.nodes_visited += q.nodes_visited;
        self.per_query.push(q);
    }

    pub fn merge(&mut self, other: QueryStats) {
        self.queries += other.queries;
        self.approx_calls += other.approx_calls;
        self.exact_fallbacks += other.exact_fallbacks;
        self.nodes_visited += other.nodes_visited;
        self.per_query.extend(other.per_query);
    }

    pub fn mean_nodes(&self) -> f64 {
        if self.queries == 0 {
            0.0
        } else {
            self.nodes_visited as f64 / self.queries as f64
        }
    }

    /// Nearest-rank percentile of per-query node counts.
    pub fn percentile_nodes(&self, pct: f64) -> u64 {
        let mut v: Vec<u64> = self.per_query.iter().map(|q| q.nodes_visited).collect();
        if v.is_empty() {
            return 0;
        }
        v.sort_unstable();
        let rank = ((pct / 100.0) * v.len() as f64).ceil().max(1.0) as usize;
        v[rank.min(v.len()) - 1]
    }
}

/// Doubling-schedule majority test over one chain. Each worker owns its
/// own handle; statistics are merged on demand.
#[derive(Clone, Debug)]
pub struct MajorityOracle<'a> {
    chain: &'a HalvingChain,
    stats: QueryStats,
}

impl<'a> MajorityOracle<'a> {
    pub fn new(chain: &'a HalvingChain) -> Self {
        MajorityOracle {
            chain,
            stats: QueryStats::default(),
        }
    }

    pub fn chain(&self) -> &'a HalvingChain {
        self.chain
    }

    pub fn stats(&self) -> &QueryStats {
        &self.stats
    }

    /// Returns the counters gathered so far and resets them.
    pub fn query_cost(&mut self) -> QueryStats {
        std::mem::take(&mut self.stats)
    }

    /// Queries `r_{i_j}` with `i_j = floor(n / 2^j)` until
    /// `|r - n/2| > i_j` settles the side; an exact reply settles it
    /// outright, and a zero budget falls back to one exact count.
    pub fn is_majority(&mut self, h: &Halfplane) -> bool {
        let n = self.chain.n();
        let mut rec = QueryRecord::default();
        let mut shift = 0u32;
        let answer = loop {
            let budget = n.checked_shr(shift).unwrap_or(0);
            if budget == 0 {
                let r = self.chain.exact_count(h);
                rec.exact_fallback = true;
                rec.levels.push(0);
                rec.nodes_visited += r.visited;
                rec.last_call_nodes = r.visited;
                break 2 * r.count >= n;
            }
            let r = self
                .chain
                .approx_count_detailed(h, budget)
                .expect("budget within 0..=n");
            rec.approx_calls += 1;
            rec.levels.push(r.level);
            rec.nodes_visited += r.visited;
            rec.last_call_nodes = r.visited;
            if r.exact || (2 * r.value).abs_diff(n) > 2 * budget {
                break 2 * r.value >= n;
            }
            shift += 1;
        };
        self.stats.record(rec);
        answer
    }
}

impl MajorityDecider for MajorityOracle<'_> {
    fn is_majority(&mut self, h: &Halfplane) -> bool {
        MajorityOracle::is_majority(self, h)
    }
}

/// Vertex counts of the dual arrangement by distance from the median level:
/// bucket `i >= 1` holds the vertices on levels `floor(n/2) - i + 1` and
/// `floor(n/2) + i - 1`. Buckets run up to `floor(n/2) + 1`, which holds
/// the vertices of the upper envelope (level 0).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LevelHistogram {
    pub n: usize,
    /// `counts[i - 1]` is bucket `i`.
    pub counts: Vec<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HistogramRow {
    pub i: usize,
    pub n_i: u64,
    pub cumulative: u64,
}

impl LevelHistogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn rows(&self) -> Vec<HistogramRow> {
        let mut cumulative = 0;
        self.counts
            .iter()
            .enumerate()
            .map(|(k, &n_i)| {
                cumulative += n_i;
                HistogramRow {
                    i: k + 1,
                    n_i,
                    cumulative,
                }
            })
            .collect()
    }

    /// Largest ratio of the vertices within distance `i` of the median level
    /// to `n^{4/3} i^{2/3}`.
    pub fn max_bound_ratio(&self) -> f64 {
        let n = self.n as f64;
        self.rows()
            .iter()
            .map(|r| r.cumulative as f64 / (n.powf(4.0 / 3.0) * (r.i as f64).powf(2.0 / 3.0)))
            .fold(0.0, f64::max)
    }

    /// `i,n_i,cumulative` rows with a header.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "i,n_i,cumulative")?;
        for r in self.rows() {
            writeln!(out, "{},{},{}", r.i, r.n_i, r.cumulative)?;
        }
        Ok(())
    }
}

/// Brute force over all `n choose 2` dual vertices; `O(n^3)`.
pub fn level_histogram(points: &[Point]) -> Result<LevelHistogram> {
    let report = validate_general_position(points, Strictness::DistinctX);
    if let Some(&(i, j)) = report.duplicate_x.first() {
        return Err(Error::ParallelDuals { i, j });
    }
    let n = points.len();
    let median = n / 2;
    let lines: Vec<DualLine> = points
        .iter()
        .enumerate()
        .map(|(k, &p)| dual_point(p, k))
        .collect();
    let counts = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut local = vec![0u64; median + 1];
            for j in i + 1..n {
                let v = dual_vertex(points, i, j).expect("distinct x checked");
                local[level(v.point(), &lines).abs_diff(median)] += 1;
            }
            local
        })
        .reduce(
            || vec![0u64; median + 1],
            |a, b| a.iter().zip(&b).map(|(x, y)| x + y).collect(),
        );
    debug_assert!(n < 2 || counts.iter().sum::<u64>() == pairs(n));
    Ok(LevelHistogram { n, counts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approx_counting::{ChainConfig, HalvingChain};
    use crate::geometry::{Rect, Side};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_points(n: usize, seed: u64) -> Vec<Point> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut xs = std::collections::BTreeSet::new();
        while xs.len() < n {
            xs.insert(rng.random_range(-200_000i64..=200_000));
        }
        let mut pts: Vec<Point> = xs
            .into_iter()
            .map(|x| Point::new(x, rng.random_range(-200_000..=200_000)))
            .collect();
        // shuffle so that index order is unrelated to x order
        for k in (1..pts.len()).rev() {
            pts.swap(k, rng.random_range(0..=k));
        }
        pts
    }

    #[test]
    fn everything_and_nothing() {
        let pts = random_points(500, 1);
        let chain = HalvingChain::build(&pts, ChainConfig::for_size(500), 2).unwrap();
        let mut oracle = MajorityOracle::new(&chain);
        assert!(oracle.is_majority(&Halfplane::new(0, 1, 300_000).unwrap()));
        let cost = oracle.query_cost();
        assert_eq!(cost.queries, 1);
        // |n - n/2| > i_j first holds at i_2 = n/4
        assert_eq!(cost.approx_calls, 3, "{cost:?}");
        assert!(!oracle.is_majority(&Halfplane::new(0, 1, -300_000).unwrap()));
    }

    #[test]
    fn exact_tie_takes_the_exact_path() {
        let n = 128;
        let pts = random_points(n, 3);
        // horizontal line just above the 64th smallest y: exactly 64 points below or on it
        let mut ys: Vec<i64> = pts.iter().map(|p| p.y()).collect();
        ys.sort_unstable();
        let h = Halfplane::new(0, -1, ys[63]).unwrap();
        assert_eq!(count_in_halfplane_naive(&pts, &h), 64);
        let chain = HalvingChain::build(&pts, ChainConfig::for_size(n), 4).unwrap();
        let mut oracle = MajorityOracle::new(&chain);
        assert!(oracle.is_majority(&h));
        let rec = &oracle.stats().per_query[0];
        assert_eq!(*rec.levels.last().unwrap(), 0, "{rec:?}");
    }

    #[test]
    fn fresh_oracle_has_zero_cost_and_reset_works() {
        let pts = random_points(64, 5);
        let chain = HalvingChain::build(&pts, ChainConfig::for_size(64), 6).unwrap();
        let mut oracle = MajorityOracle::new(&chain);
        assert_eq!(oracle.query_cost(), QueryStats::default());
        oracle.is_majority(&Halfplane::new(1, 0, 0).unwrap());
        let first = oracle.query_cost();
        assert_eq!(first.queries, 1);
        assert_eq!(first.nodes_visited, first.per_query[0].nodes_visited);
        assert_eq!(oracle.query_cost(), QueryStats::default());
    }

    #[test]
    fn agrees_with_linear_scan_on_pair_boundaries() {
        let n = 128;
        let pts = random_points(n, 7);
        let chain = HalvingChain::build(&pts, ChainConfig::for_size(n), 8).unwrap();
        let mut oracle = MajorityOracle::new(&chain);
        let mut exact = ExactMajority { points: &pts };
        for i in 0..n {
            for j in i + 1..n {
                for side in [Side::Positive, Side::Negative] {
                    let h = Halfplane::from_pair(&pts, i, j, side).unwrap();
                    assert_eq!(
                        oracle.is_majority(&h),
                        exact.is_majority(&h),
                        "pair ({i}, {j})"
                    );
                }
            }
        }
    }

    #[test]
    fn last_call_dominates_cost() {
        let n = 4096;
        let pts = random_points(n, 9);
        let chain = HalvingChain::build(&pts, ChainConfig::for_size(n), 10).unwrap();
        let mut oracle = MajorityOracle::new(&chain);
        let rect = Rect::bounding(&pts).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..500 {
            oracle.is_majority(&Halfplane::random(&mut rng, &rect));
        }
        let stats = oracle.query_cost();
        let log_n = (n as f64).log2().ceil() as u32 + 1;
        let last: u64 = stats.per_query.iter().map(|q| q.last_call_nodes).sum();
        for q in &stats.per_query {
            assert!(q.approx_calls <= log_n, "{q:?}");
            assert!(
                q.levels.windows(2).all(|w| w[0] >= w[1]),
                "levels must not get coarser: {q:?}"
            );
        }
        assert!(
            last as f64 >= 0.3 * stats.nodes_visited as f64,
            "last {last} of {}",
            stats.nodes_visited
        );
    }

    #[test]
    fn percentiles() {
        let mut s = QueryStats::default();
        for v in 1..=100 {
            s.record(QueryRecord {
                nodes_visited: v,
                ..Default::default()
            });
        }
        assert_eq!(s.percentile_nodes(99.0), 99);
        assert_eq!(s.percentile_nodes(100.0), 100);
        assert_eq!(s.mean_nodes(), 50.5);
    }

    #[test]
    fn histogram_small_cases() {
        let two = [Point::new(0, 0), Point::new(1, 1)];
        let h = level_histogram(&two).unwrap();
        assert_eq!(h.total(), 1);
        let three = [Point::new(0, 0), Point::new(1, 3), Point::new(2, 1)];
        let h = level_histogram(&three).unwrap();
        assert_eq!(h.total(), 3);
        assert!(matches!(
            level_histogram(&[Point::new(1, 3), Point::new(1, 5)]),
            Err(Error::ParallelDuals { i: 0, j: 1 })
        ));
    }

    #[test]
    fn histogram_totals_and_monotone_cumulative() {
        let pts = random_points(256, 12);
        let h = level_histogram(&pts).unwrap();
        assert_eq!(h.total(), pairs(256));
        let rows = h.rows();
        assert!(rows.windows(2).all(|w| w[0].cumulative <= w[1].cumulative));
        assert_eq!(rows.last().unwrap().cumulative, pairs(256));
        let mut csv = Vec::new();
        h.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with("i,n_i,cumulative\n1,"));
        assert_eq!(text.lines().count(), rows.len() + 1);
    }

    #[test]
    fn histogram_matches_primal_below_counts() {
        // level of vertex (i, j) = points strictly below the line through i and j
        let pts = random_points(40, 13);
        let h = level_histogram(&pts).unwrap();
        let mut counts = vec![0u64; h.counts.len()];
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                let up = Halfplane::from_pair(&pts, i, j, Side::Positive).unwrap();
                let below = pts.iter().filter(|&&p| up.eval(p) < 0).count();
                counts[below.abs_diff(20)] += 1;
            }
        }
        assert_eq!(h.counts, counts);
    }
}
