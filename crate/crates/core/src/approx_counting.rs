//! Nested random halvings `S_0 ⊃ S_1 ⊃ ... ⊃ S_r` and the approximate
//! halfplane counter built on them.
//!
//! `S_{j+1}` keeps one uniformly chosen endpoint of every edge of a
//! low-crossing matching of `S_j`, so `2^j |h ∩ S_j|` is an unbiased
//! estimate of `|h ∩ S|` whose error grows like `2^{3j/4} n^{1/4}`. A query
//! with error budget `i` is answered on the smallest `S_j` whose error bound
//! fits in `i`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Halfplane, Point, Rect, Side};
use crate::low_crossing::{low_crossing_matching, EdgeSet};
use crate::partition_tree::{CountResult, PartitionTree};

const HALVING_STREAM: u64 = 0;
const PROBE_STREAM: u64 = 1;

/// Seeded generator for one named sub-stream of `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    /// Confidence parameter, `N >= n`.
    pub big_n: u64,
    /// Constant of the level-selection rule.
    pub c: f64,
    /// Halving stops once a level has at most this many points.
    pub s_min: usize,
    pub leaf_size: usize,
    /// Random probe halfplanes used for certificates when `n > 64`.
    pub probes: usize,
    /// When false every query is answered from the coarsest level regardless
    /// of its error budget. Only useful as a negative control.
    pub enforce_budget: bool,
}

impl ChainConfig {
    /// Defaults for `n` points: `N = n^2`, `C = 1`, `s_min = 16`.
    pub fn for_size(n: usize) -> Self {
        let n = n.max(2) as u64;
        ChainConfig {
            big_n: n * n,
            c: 1.0,
            s_min: 16,
            leaf_size: PartitionTree::DEFAULT_LEAF_SIZE,
            probes: 1000,
            enforce_budget: true,
        }
    }
}

/// Keeps one endpoint of every matching edge, each chosen by a fair coin,
/// plus every vertex the matching leaves uncovered. Returns sorted local
/// indices.
pub fn halve<R: Rng + ?Sized>(matching: &EdgeSet, rng: &mut R) -> Vec<usize> {
    let mut kept: Vec<usize> = matching
        .edges
        .iter()
        .map(|&(a, b)| if rng.random_bool(0.5) { a } else { b })
        .collect();
    kept.extend(matching.unmatched());
    kept.sort_unstable();
    kept
}

#[derive(Clone, Debug)]
pub struct ChainLevel {
    /// Indices into the original point set.
    pub ids: Vec<usize>,
    pub tree: PartitionTree,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelCertificate {
    pub level: usize,
    pub size: usize,
    /// `max |2^j |h ∩ S_j| - |h ∩ S||` over the probe set.
    pub max_error: u64,
    /// `C 2^{3j/4} n^{1/4} (ln N)^{1/2}`.
    pub bound: f64,
}

impl LevelCertificate {
    pub fn holds(&self) -> bool {
        self.max_error as f64 <= self.bound
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct ApproxReply {
    pub value: usize,
    pub level: usize,
    pub exact: bool,
    pub visited: u64,
}

#[derive(Clone, Debug)]
pub struct HalvingChain {
    n: usize,
    seed: u64,
    config: ChainConfig,
    levels: Vec<ChainLevel>,
    certificates: Vec<LevelCertificate>,
    max_usable_level: usize,
    probe_count: usize,
}

impl HalvingChain {
    pub fn build(points: &[Point], config: ChainConfig, seed: u64) -> Result<Self> {
        check_config(points.len(), &config)?;
        let mut rng = stream_rng(seed, HALVING_STREAM);
        let mut levels = Vec::new();
        let mut ids: Vec<usize> = (0..points.len()).collect();
        loop {
            let pts: Vec<Point> = ids.iter().map(|&k| points[k]).collect();
            let tree = PartitionTree::with_leaf_size(&pts, config.leaf_size);
            if ids.len() <= config.s_min.max(1) {
                levels.push(ChainLevel { ids, tree });
                break;
            }
            let (_, _, matching) = low_crossing_matching(&tree);
            let next: Vec<usize> = halve(&matching, &mut rng)
                .into_iter()
                .map(|k| ids[k])
                .collect();
            levels.push(ChainLevel { ids, tree });
            ids = next;
        }
        Ok(Self::assemble(points, config, seed, levels))
    }

    fn assemble(points: &[Point], config: ChainConfig, seed: u64, levels: Vec<ChainLevel>) -> Self {
        let mut chain = HalvingChain {
            n: points.len(),
            seed,
            config,
            levels,
            certificates: Vec::new(),
            max_usable_level: 0,
            probe_count: 0,
        };
        chain.certify(points);
        chain
    }

    /// Measures each level's worst error over the probe set and caps the
    /// usable depth below the first level whose certificate fails.
    fn certify(&mut self, points: &[Point]) {
        let probes = certificate_probes(points, self.config.probes, self.seed);
        let depth = self.levels.len();
        let worst = probes
            .par_iter()
            .map(|h| {
                let exact = self.levels[0].tree.count(h) as i64;
                (0..depth)
                    .map(|j| (((self.levels[j].tree.count(h) as i64) << j) - exact).unsigned_abs())
                    .collect::<Vec<u64>>()
            })
            .reduce(
                || vec![0; depth],
                |a, b| a.iter().zip(&b).map(|(x, y)| *x.max(y)).collect(),
            );
        self.certificates = (0..depth)
            .map(|j| LevelCertificate {
                level: j,
                size: self.levels[j].ids.len(),
                max_error: worst[j],
                bound: self.error_bound(j),
            })
            .collect();
        self.max_usable_level = self
            .certificates
            .iter()
            .position(|c| !c.holds())
            .map_or(depth - 1, |j| j.saturating_sub(1));
        self.probe_count = probes.len();
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn config(&self) -> &ChainConfig {
        &self.config
    }

    pub fn levels(&self) -> &[ChainLevel] {
        &self.levels
    }

    pub fn certificates(&self) -> &[LevelCertificate] {
        &self.certificates
    }

    pub fn probe_count(&self) -> usize {
        self.probe_count
    }

    /// Deepest level queries may use after certification.
    pub fn max_usable_level(&self) -> usize {
        self.max_usable_level
    }

    /// `C 2^{3j/4} n^{1/4} (ln N)^{1/2}`, natural log.
    pub fn error_bound(&self, level: usize) -> f64 {
        let n = self.n as f64;
        self.config.c
            * 2f64.powf(0.75 * level as f64)
            * n.powf(0.25)
            * (self.config.big_n as f64).ln().max(0.0).sqrt()
    }

    /// Level that answers a query with error budget `i`.
    pub fn level_for(&self, i: usize) -> usize {
        if !self.config.enforce_budget {
            return self.levels.len() - 1;
        }
        if (i as u128).pow(4) <= self.n as u128 {
            return 0;
        }
        (0..=self.max_usable_level)
            .rev()
            .find(|&j| self.error_bound(j) <= i as f64)
            .unwrap_or(0)
    }

    /// `r_i(h, S)`: within `i` of `|h ∩ S|` whenever the chain is good.
    pub fn approx_count(&self, h: &Halfplane, i: usize) -> Result<usize> {
        self.approx_count_detailed(h, i).map(|r| r.value)
    }

    pub fn approx_count_detailed(&self, h: &Halfplane, i: usize) -> Result<ApproxReply> {
        if i > self.n {
            return Err(Error::InvalidErrorBudget { i, n: self.n });
        }
        let level = self.level_for(i);
        let CountResult { count, visited } = self.levels[level].tree.count_with_stats(h);
        Ok(ApproxReply {
            value: (count << level).min(self.n),
            level,
            exact: level == 0,
            visited,
        })
    }

    /// `|h ∩ S|` from the full set.
    pub fn exact_count(&self, h: &Halfplane) -> CountResult {
        self.levels[0].tree.count_with_stats(h)
    }

    pub fn snapshot(&self) -> ChainSnapshot {
        ChainSnapshot {
            version: ChainSnapshot::VERSION,
            seed: self.seed,
            n: self.n,
            config: self.config.clone(),
            level_sizes: self.levels.iter().map(|l| l.ids.len()).collect(),
            levels: self.levels.iter().map(|l| l.ids.clone()).collect(),
        }
    }

    /// Rebuilds trees and certificates from the stored level memberships.
    pub fn from_snapshot(points: &[Point], snap: &ChainSnapshot) -> Result<Self> {
        if snap.version != ChainSnapshot::VERSION {
            return Err(Error::SnapshotVersion(snap.version));
        }
        if snap.n != points.len() {
            return Err(Error::InvalidParameter(format!(
                "snapshot covers {} points, got {}",
                snap.n,
                points.len()
            )));
        }
        check_config(points.len(), &snap.config)?;
        if snap.levels.is_empty() || snap.levels.len() != snap.level_sizes.len() {
            return Err(Error::InvalidParameter(
                "snapshot level list is malformed".into(),
            ));
        }
        let mut levels = Vec::with_capacity(snap.levels.len());
        for (j, ids) in snap.levels.iter().enumerate() {
            let expected = if j == 0 {
                points.len()
            } else {
                snap.levels[j - 1].len().div_ceil(2)
            };
            if ids.len() != expected
                || ids.len() != snap.level_sizes[j]
                || ids.iter().any(|&k| k >= points.len())
            {
                return Err(Error::InvalidParameter(format!(
                    "snapshot level {j} is inconsistent"
                )));
            }
            let pts: Vec<Point> = ids.iter().map(|&k| points[k]).collect();
            levels.push(ChainLevel {
                ids: ids.clone(),
                tree: PartitionTree::with_leaf_size(&pts, snap.config.leaf_size),
            });
        }
        Ok(Self::assemble(
            points,
            snap.config.clone(),
            snap.seed,
            levels,
        ))
    }
}

fn check_config(n: usize, config: &ChainConfig) -> Result<()> {
    if config.big_n < n as u64 {
        return Err(Error::InvalidParameter(format!(
            "N = {} is below n = {n}",
            config.big_n
        )));
    }
    if !(config.c.is_finite() && config.c > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "C = {} must be positive",
            config.c
        )));
    }
    Ok(())
}

/// Every pair boundary (both closed sides) for up to 64 points, otherwise
/// `count` seeded random halfplanes over the bounding box.
pub fn certificate_probes(points: &[Point], count: usize, seed: u64) -> Vec<Halfplane> {
    if points.len() <= 64 {
        let mut probes = Vec::new();
        for i in 0..points.len() {
            for j in i + 1..points.len() {
                for side in [Side::Positive, Side::Negative] {
                    if let Ok(h) = Halfplane::from_pair(points, i, j, side) {
                        probes.push(h);
                    }
                }
            }
        }
        return probes;
    }
    let rect = Rect::bounding(points).expect("non-empty");
    let mut rng = stream_rng(seed, PROBE_STREAM);
    (0..count)
        .map(|_| Halfplane::random(&mut rng, &rect))
        .collect()
}

/// Serialized chain: enough to rebuild every level deterministically.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainSnapshot {
    pub version: u32,
    pub seed: u64,
    pub n: usize,
    pub config: ChainConfig,
    pub level_sizes: Vec<usize>,
    pub levels: Vec<Vec<usize>>,
}

impl ChainSnapshot {
    pub const VERSION: u32 = 1;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::count_in_halfplane_naive;
    use crate::low_crossing::{classify_edges, EdgeKind};

    fn random_points(n: usize, seed: u64) -> Vec<Point> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                Point::new(
                    rng.random_range(-100_000..=100_000),
                    rng.random_range(-100_000..=100_000),
                )
            })
            .collect()
    }

    #[test]
    fn halving_a_single_edge_is_a_fair_coin() {
        let m = EdgeSet {
            kind: EdgeKind::Matching,
            n: 2,
            edges: vec![(0, 1)],
        };
        let firsts = (0..2000u64)
            .filter(|&s| halve(&m, &mut ChaCha8Rng::seed_from_u64(s)) == vec![0])
            .count();
        // Binomial(2000, 1/2): 4 sigma is about 89
        assert!((firsts as i64 - 1000).abs() < 90, "{firsts}");
    }

    #[test]
    fn halving_keeps_the_unmatched_point() {
        let m = EdgeSet {
            kind: EdgeKind::Matching,
            n: 3,
            edges: vec![(0, 1)],
        };
        for s in 0..50 {
            let kept = halve(&m, &mut ChaCha8Rng::seed_from_u64(s));
            assert_eq!(kept.len(), 2);
            assert!(kept.contains(&2));
        }
    }

    #[test]
    fn halving_is_unbiased() {
        let pts = random_points(100, 1);
        let tree = PartitionTree::build(&pts);
        let (_, _, m) = low_crossing_matching(&tree);
        let h = Halfplane::from_points(
            Point::new(-100_000, -30_000),
            Point::new(100_000, 20_000),
            Side::Positive,
        )
        .unwrap();
        let truth = count_in_halfplane_naive(&pts, &h) as f64;
        let (_, crossed) = classify_edges(&m, &pts, &h);
        let trials = 10_000;
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let total: usize = (0..trials)
            .map(|_| {
                let kept = halve(&m, &mut rng);
                2 * kept.iter().filter(|&&k| h.contains(pts[k])).count()
            })
            .sum();
        let mean = total as f64 / trials as f64;
        let tol = 4.0 * (crossed as f64 / trials as f64).sqrt();
        assert!(crossed > 0);
        assert!(
            (mean - truth).abs() <= tol,
            "mean {mean} truth {truth} tol {tol}"
        );
    }

    #[test]
    fn small_sets_are_a_single_exact_level() {
        let pts = random_points(16, 3);
        let chain = HalvingChain::build(&pts, ChainConfig::for_size(16), 0).unwrap();
        assert_eq!(chain.levels().len(), 1);
        let rect = Rect::bounding(&pts).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let h = Halfplane::random(&mut rng, &rect);
            for i in [0, 5, 16] {
                assert_eq!(
                    chain.approx_count(&h, i).unwrap(),
                    count_in_halfplane_naive(&pts, &h)
                );
            }
        }
    }

    #[test]
    fn level_sizes_follow_the_ceiling_recurrence() {
        let pts = random_points(1024, 5);
        let chain = HalvingChain::build(&pts, ChainConfig::for_size(1024), 6).unwrap();
        let sizes: Vec<usize> = chain.levels().iter().map(|l| l.ids.len()).collect();
        assert_eq!(sizes, vec![1024, 512, 256, 128, 64, 32, 16]);

        let pts = random_points(1001, 7);
        let chain = HalvingChain::build(&pts, ChainConfig::for_size(1001), 8).unwrap();
        for w in chain.levels().windows(2) {
            assert_eq!(w[1].ids.len(), w[0].ids.len().div_ceil(2));
            assert!(w[1].ids.iter().all(|k| w[0].ids.binary_search(k).is_ok()));
        }
        assert!(chain.levels().last().unwrap().ids.len() <= 16);
    }

    #[test]
    fn zero_budget_is_exact_and_full_budget_is_clipped() {
        let pts = random_points(2000, 9);
        let chain = HalvingChain::build(&pts, ChainConfig::for_size(2000), 10).unwrap();
        let rect = Rect::bounding(&pts).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let h = Halfplane::random(&mut rng, &rect);
            let r = chain.approx_count_detailed(&h, 0).unwrap();
            assert!(r.exact);
            assert_eq!(r.value, count_in_halfplane_naive(&pts, &h));
            assert!(chain.approx_count(&h, 2000).unwrap() <= 2000);
        }
        let empty = Halfplane::new(0, 1, -200_000).unwrap();
        assert_eq!(chain.approx_count(&empty, 2000).unwrap(), 0);
        assert!(matches!(
            chain.approx_count(&empty, 2001),
            Err(Error::InvalidErrorBudget { i: 2001, n: 2000 })
        ));
    }

    #[test]
    fn level_choice_is_monotone_and_sized_as_predicted() {
        let n = 4096;
        let pts = random_points(n, 12);
        let chain = HalvingChain::build(&pts, ChainConfig::for_size(n), 13).unwrap();
        let ln_n = (chain.config().big_n as f64).ln();
        let mut prev = 0;
        for i in 0..=n {
            let j = chain.level_for(i);
            assert!(j >= prev, "level dropped at i = {i}");
            prev = j;
            let capped = j == chain.max_usable_level();
            if j > 0 && !capped {
                // largest admissible j implies |S_j| <= 2 C^{4/3} (n/i)^{4/3} (ln N)^{2/3} + 1
                let bound = 2.0
                    * chain.config().c.powf(4.0 / 3.0)
                    * (n as f64 / i as f64).powf(4.0 / 3.0)
                    * ln_n.powf(2.0 / 3.0)
                    + 1.0;
                assert!(
                    chain.levels()[j].ids.len() as f64 <= bound,
                    "i = {i}, j = {j}"
                );
            }
        }
    }

    #[test]
    fn certificates_cover_every_level() {
        let pts = random_points(4096, 14);
        let chain = HalvingChain::build(&pts, ChainConfig::for_size(4096), 15).unwrap();
        assert_eq!(chain.certificates().len(), chain.levels().len());
        assert_eq!(chain.certificates()[0].max_error, 0);
        assert_eq!(chain.probe_count(), 1000);
        for c in &chain.certificates()[..=chain.max_usable_level()] {
            assert!(c.holds(), "{c:?}");
        }
    }

    #[test]
    fn small_sets_certify_against_all_pair_boundaries() {
        let pts = random_points(40, 16);
        let chain = HalvingChain::build(
            &pts,
            ChainConfig {
                s_min: 4,
                ..ChainConfig::for_size(40)
            },
            17,
        )
        .unwrap();
        assert_eq!(chain.probe_count(), 40 * 39);
    }

    #[test]
    fn identical_seeds_reproduce_the_chain() {
        let pts = random_points(3000, 18);
        let a = HalvingChain::build(&pts, ChainConfig::for_size(3000), 19).unwrap();
        let b = HalvingChain::build(&pts, ChainConfig::for_size(3000), 19).unwrap();
        assert_eq!(a.snapshot(), b.snapshot());
        assert_eq!(a.certificates(), b.certificates());
        let c = HalvingChain::build(&pts, ChainConfig::for_size(3000), 20).unwrap();
        assert_ne!(a.snapshot().levels[1], c.snapshot().levels[1]);
    }

    #[test]
    fn snapshot_round_trip_preserves_answers() {
        let pts = random_points(1500, 21);
        let chain = HalvingChain::build(&pts, ChainConfig::for_size(1500), 22).unwrap();
        let json = serde_json::to_string(&chain.snapshot()).unwrap();
        let snap: ChainSnapshot = serde_json::from_str(&json).unwrap();
        let back = HalvingChain::from_snapshot(&pts, &snap).unwrap();
        assert_eq!(back.certificates(), chain.certificates());
        let rect = Rect::bounding(&pts).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..200 {
            let h = Halfplane::random(&mut rng, &rect);
            for i in [0, 40, 300, 1500] {
                assert_eq!(
                    back.approx_count(&h, i).unwrap(),
                    chain.approx_count(&h, i).unwrap()
                );
            }
        }
    }

    #[test]
    fn snapshot_rejects_bad_input() {
        let pts = random_points(100, 24);
        let chain = HalvingChain::build(&pts, ChainConfig::for_size(100), 25).unwrap();
        let mut snap = chain.snapshot();
        snap.version = 99;
        assert!(matches!(
            HalvingChain::from_snapshot(&pts, &snap),
            Err(Error::SnapshotVersion(99))
        ));
        let mut snap = chain.snapshot();
        snap.levels[1].pop();
        assert!(HalvingChain::from_snapshot(&pts, &snap).is_err());
        assert!(HalvingChain::from_snapshot(&pts[..50], &chain.snapshot()).is_err());
    }

    #[test]
    fn rejects_small_confidence_parameter() {
        let pts = random_points(100, 26);
        let config = ChainConfig {
            big_n: 50,
            ..ChainConfig::for_size(100)
        };
        assert!(matches!(
            HalvingChain::build(&pts, config, 0),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn empty_set_chain() {
        let chain = HalvingChain::build(&[], ChainConfig::for_size(0), 0).unwrap();
        let h = Halfplane::new(0, 1, 0).unwrap();
        assert_eq!(chain.approx_count(&h, 0).unwrap(), 0);
    }
}
