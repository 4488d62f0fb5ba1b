//! The acceptance suite: ten criteria, each returning a pass/fail outcome
//! with a one-line measurement summary. Failures are results, not errors.

use std::fmt;
use std::fs;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use rand::Rng;
use rayon::prelude::*;

use crate::approx_counting::{halve, stream_rng, ChainConfig, HalvingChain};
use crate::datasets::{coordinate_median, generate, generate_general_position, Distribution};
use crate::depth::{
    boundary_ties, depth_census, depth_exact_naive, depth_exact_sweep, depth_via_dual_identity,
    estimate_depth, MajorityMode,
};
use crate::experiments::{approx_errors, matching_crossing, side_query_cost, trial_seed};
use crate::geometry::{count_in_halfplane_naive, pairs, Halfplane, Point, Rect, Side};
use crate::low_crossing::{classify_edges, low_crossing_matching};
use crate::median_side::{level_histogram, MajorityOracle};
use crate::partition_tree::PartitionTree;

/// Deliberate defects used as negative controls.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fault {
    /// Approximate counts ignore their error budget and always use the
    /// coarsest level.
    BudgetDisabled,
}

#[derive(Clone, Debug, Default)]
pub struct VerifyOptions {
    pub seed: u64,
    pub fault: Option<Fault>,
    /// Where CSV artifacts go; a directory under the system temp dir when
    /// absent.
    pub out_dir: Option<PathBuf>,
}

impl VerifyOptions {
    pub fn with_seed(seed: u64) -> Self {
        VerifyOptions {
            seed,
            ..Default::default()
        }
    }

    fn seed(&self, criterion: usize, k: usize) -> u64 {
        trial_seed(self.seed, criterion, k)
    }

    fn chain_config(&self, n: usize) -> ChainConfig {
        let mut c = ChainConfig::for_size(n);
        c.enforce_budget = self.fault != Some(Fault::BudgetDisabled);
        c
    }

    fn out_dir(&self) -> std::io::Result<PathBuf> {
        let dir = match &self.out_dir {
            Some(d) => d.clone(),
            None => std::env::temp_dir().join(format!("majdepth-verify-{}", self.seed)),
        };
        fs::create_dir_all(&dir)?;
        Ok(dir)
    }
}

#[derive(Clone, Debug)]
pub struct CriterionOutcome {
    pub id: &'static str,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl fmt::Display for CriterionOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<3} {} {}: {} [{:.1}s]",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.title,
            self.detail,
            self.elapsed.as_secs_f64()
        )
    }
}

pub type CriterionFn = fn(&VerifyOptions) -> CriterionOutcome;

pub const CRITERIA: [(&str, CriterionFn); 10] = [
    ("A1", oracle_agreement),
    ("A2", trivial_depth),
    ("A3", crossing_bound),
    ("A4", approx_count_contract),
    ("A5", halving_unbiased),
    ("A6", side_query_scaling),
    ("A7", majority_correctness),
    ("A8", estimator_concentration),
    ("A9", exhaustive_exactness),
    ("A10", histogram_sanity),
];

/// Runs the criteria whose ids are in `only`, or all of them.
pub fn verify_all(opts: &VerifyOptions, only: Option<&[String]>) -> Vec<CriterionOutcome> {
    CRITERIA
        .iter()
        .filter(|(id, _)| only.is_none_or(|ids| ids.iter().any(|s| s.eq_ignore_ascii_case(id))))
        .map(|(_, f)| f(opts))
        .collect()
}

fn outcome(
    id: &'static str,
    title: &'static str,
    start: Instant,
    passed: bool,
    detail: String,
) -> CriterionOutcome {
    CriterionOutcome {
        id,
        title,
        passed,
        detail,
        elapsed: start.elapsed(),
    }
}

fn random_query<R: Rng + ?Sized>(rng: &mut R, range: i64) -> Point {
    Point::new(
        rng.random_range(-range..=range),
        rng.random_range(-range..=range),
    )
}

/// Naive, sweep and dual-identity depths agree on general-position inputs.
pub fn oracle_agreement(opts: &VerifyOptions) -> CriterionOutcome {
    let start = Instant::now();
    let mut instances = 0;
    let mut mismatches = Vec::new();
    for n in [5, 8, 16, 32, 64] {
        let results: Vec<Option<String>> = (0..100)
            .into_par_iter()
            .map(|k| {
                let seed = opts.seed(1, n * 1000 + k);
                let pts = generate_general_position(Distribution::UniformDisk, n, seed).ok()?;
                let mut rng = stream_rng(seed, 0);
                let q = loop {
                    let q = random_query(&mut rng, 600_000);
                    if boundary_ties(&pts, q) == 0 {
                        break q;
                    }
                };
                let naive = depth_exact_naive(&pts, q).ok();
                let sweep = depth_exact_sweep(&pts, q).ok();
                let dual = depth_via_dual_identity(&pts, q).ok();
                (naive.is_none() || naive != sweep || naive != dual)
                    .then(|| format!("n={n} k={k}: {naive:?}/{sweep:?}/{dual:?}"))
            })
            .collect();
        instances += results.len();
        mismatches.extend(results.into_iter().flatten());
    }
    let elapsed = start.elapsed();
    let passed = mismatches.is_empty() && elapsed < Duration::from_secs(120);
    let detail = match mismatches.first() {
        None => format!("{instances} instances, all three methods equal"),
        Some(m) => format!("{} mismatches of {instances}, first {m}", mismatches.len()),
    };
    outcome("A1", "oracle agreement", start, passed, detail)
}

/// For `n <= 4` every closed side is major, so every pair counts.
pub fn trivial_depth(opts: &VerifyOptions) -> CriterionOutcome {
    let start = Instant::now();
    let mut failures = 0;
    let mut checked = 0;
    for n in [2usize, 3, 4] {
        let pts = generate(Distribution::UniformDisk, n, opts.seed(2, n)).expect("small n");
        let mut rng = stream_rng(opts.seed(2, n), 0);
        for _ in 0..50 {
            let q = random_query(&mut rng, 1 << 20);
            let want = pairs(n);
            let ok = depth_exact_naive(&pts, q).ok() == Some(want)
                && depth_exact_sweep(&pts, q).ok() == Some(want)
                && depth_via_dual_identity(&pts, q).map_or(true, |d| d == want);
            failures += !ok as usize;
            checked += 1;
        }
    }
    let detail = format!("{checked} queries, {failures} with depth != C(n,2)");
    outcome("A2", "trivial-depth law", start, failures == 0, detail)
}

/// Matching crossing number stays within `4 sqrt(n)` on at least 99% of
/// instances for every size.
pub fn crossing_bound(opts: &VerifyOptions) -> CriterionOutcome {
    let start = Instant::now();
    let mut passed = true;
    let mut worst_ratio: f64 = 0.0;
    let mut worst_rate: f64 = 1.0;
    for k in 4..=12 {
        let n = 1usize << k;
        let bound = 4.0 * (n as f64).sqrt();
        let counts: Vec<usize> = (0..50)
            .into_par_iter()
            .map(|t| {
                let seed = opts.seed(3, n * 100 + t);
                let pts = generate(Distribution::UniformDisk, n, seed).expect("valid size");
                matching_crossing(&pts, seed, 1000)
            })
            .collect();
        let within = counts.iter().filter(|&&c| c as f64 <= bound).count();
        let rate = within as f64 / counts.len() as f64;
        worst_rate = worst_rate.min(rate);
        worst_ratio = counts
            .iter()
            .map(|&c| c as f64 / (n as f64).sqrt())
            .fold(worst_ratio, f64::max);
        passed &= rate >= 0.99;
    }
    let detail = format!("worst per-size pass rate {:.0}%, empirical constant max(crossing/sqrt n) = {worst_ratio:.3}", 100.0 * worst_rate);
    outcome("A3", "crossing bound", start, passed, detail)
}

/// Every budgeted count lands within its budget, on at least 19 of 20
/// chain builds.
pub fn approx_count_contract(opts: &VerifyOptions) -> CriterionOutcome {
    let start = Instant::now();
    let n = 4096;
    let pts = generate(Distribution::UniformDisk, n, opts.seed(4, 0)).expect("valid size");
    let builds: Vec<(bool, u64)> = (0..20)
        .into_par_iter()
        .map(|b| {
            let seed = opts.seed(4, b + 1);
            let chain =
                HalvingChain::build(&pts, opts.chain_config(n), seed).expect("valid config");
            let mut ok = true;
            let mut worst = 0;
            for i in [64usize, 128, 256, 512] {
                let s = approx_errors(&pts, &chain, i, 1000, seed ^ i as u64);
                ok &= s.violations == 0;
                worst = worst.max(s.max_abs_error * 1000 / i as u64);
            }
            (ok, worst)
        })
        .collect();
    let good = builds.iter().filter(|b| b.0).count();
    let worst = builds.iter().map(|b| b.1).max().unwrap_or(0) as f64 / 1000.0;
    let detail =
        format!("{good}/20 builds within budget on all 4000 queries, worst |error|/i = {worst:.3}");
    outcome(
        "A4",
        "approximate-count contract",
        start,
        good >= 19,
        detail,
    )
}

/// Mean of `2 |h ∩ S'|` over many halvings matches `|h ∩ S|`.
pub fn halving_unbiased(opts: &VerifyOptions) -> CriterionOutcome {
    let start = Instant::now();
    let n = 100;
    let pts = generate(Distribution::UniformDisk, n, opts.seed(5, 0)).expect("valid size");
    let tree = PartitionTree::build(&pts);
    let (_, _, matching) = low_crossing_matching(&tree);
    let rect = Rect::bounding(&pts).expect("n > 0");
    let mut rng = stream_rng(opts.seed(5, 1), 0);
    let (h, crossed) = loop {
        let h = Halfplane::random(&mut rng, &rect);
        let (_, crossed) = classify_edges(&matching, &pts, &h);
        if crossed >= 4 {
            break (h, crossed);
        }
    };
    let exact = count_in_halfplane_naive(&pts, &h) as f64;
    let runs = 10_000;
    let mut rng = stream_rng(opts.seed(5, 2), 0);
    let total: usize = (0..runs)
        .map(|_| {
            2 * halve(&matching, &mut rng)
                .iter()
                .filter(|&&k| h.contains(pts[k]))
                .count()
        })
        .sum();
    let mean = total as f64 / runs as f64;
    let tol = 4.0 * (crossed as f64 / runs as f64).sqrt();
    let detail = format!(
        "|h∩S| = {exact}, mean 2|h∩S'| = {mean:.4}, tolerance {tol:.4} ({crossed} crossed edges)"
    );
    outcome(
        "A5",
        "halving unbiasedness",
        start,
        (mean - exact).abs() <= tol,
        detail,
    )
}

/// Oracle cost grows polylogarithmically while exact counting grows like
/// `sqrt(n)`.
pub fn side_query_scaling(opts: &VerifyOptions) -> CriterionOutcome {
    let start = Instant::now();
    let measure = |n: usize| {
        let seed = opts.seed(6, n);
        let pts = generate(Distribution::UniformDisk, n, seed).expect("valid size");
        let chain = HalvingChain::build(&pts, opts.chain_config(n), seed).expect("valid config");
        side_query_cost(&pts, &chain, 10_000, seed)
    };
    let (small, large) = (measure(1 << 10), measure(1 << 14));
    let oracle_ratio = large.mean_nodes / small.mean_nodes;
    let exact_ratio = large.exact_mean_nodes / small.exact_mean_nodes;
    let elapsed = start.elapsed();
    let passed = oracle_ratio <= 3.0 && exact_ratio >= 3.5 && elapsed < Duration::from_secs(300);
    let detail = format!(
        "mean nodes {:.1} -> {:.1} (x{oracle_ratio:.2}), exact {:.1} -> {:.1} (x{exact_ratio:.2})",
        small.mean_nodes, large.mean_nodes, small.exact_mean_nodes, large.exact_mean_nodes
    );
    outcome("A6", "side-query cost scaling", start, passed, detail)
}

/// The doubling majority test agrees with a linear scan on every closed
/// pair-boundary halfplane; one reseeded retry per build.
pub fn majority_correctness(opts: &VerifyOptions) -> CriterionOutcome {
    let start = Instant::now();
    let n = 128;
    let disagreements = |pts: &[Point], seed: u64| {
        let chain = HalvingChain::build(pts, opts.chain_config(n), seed).expect("valid config");
        let mut oracle = MajorityOracle::new(&chain);
        let mut bad = 0;
        for i in 0..n {
            for j in i + 1..n {
                for side in [Side::Positive, Side::Negative] {
                    let h = Halfplane::from_pair(pts, i, j, side).expect("distinct");
                    bad += (oracle.is_majority(&h) != (2 * count_in_halfplane_naive(pts, &h) >= n))
                        as usize;
                }
            }
        }
        bad
    };
    let results: Vec<(bool, bool)> = (0..20)
        .into_par_iter()
        .map(|b| {
            let seed = opts.seed(7, b);
            let pts = generate(Distribution::UniformDisk, n, seed).expect("valid size");
            if disagreements(&pts, seed) == 0 {
                (true, false)
            } else {
                (disagreements(&pts, seed ^ 0x5EED) == 0, true)
            }
        })
        .collect();
    let failed = results.iter().filter(|r| !r.0).count();
    let retried = results.iter().filter(|r| r.1).count();
    let detail = format!(
        "20 builds x {} halfplanes, {retried} retried, {failed} failed twice",
        2 * pairs(n)
    );
    outcome(
        "A7",
        "majority-test correctness",
        start,
        failed == 0,
        detail,
    )
}

/// Relative error of the estimator concentrates at the sampling rate.
pub fn estimator_concentration(opts: &VerifyOptions) -> CriterionOutcome {
    let start = Instant::now();
    let n = 256;
    let pts = generate(Distribution::UniformDisk, n, opts.seed(8, 0)).expect("valid size");
    let q = coordinate_median(&pts).expect("n > 0");
    let d = depth_exact_sweep(&pts, q).expect("distinct points");
    let trials: Vec<f64> = (0..200)
        .into_par_iter()
        .map(|t| {
            let seed = opts.seed(8, t + 1);
            let chain =
                HalvingChain::build(&pts, opts.chain_config(n), seed).expect("valid config");
            estimate_depth(
                &pts,
                q,
                2000,
                seed.wrapping_add(1),
                MajorityMode::Oracle(&chain),
            )
            .expect("distinct points")
            .d_prime
        })
        .collect();
    let within = trials
        .iter()
        .filter(|&&e| (e - d as f64).abs() / d as f64 <= 0.1)
        .count();
    let mean = trials.iter().sum::<f64>() / trials.len() as f64;
    let mean_rel = (mean - d as f64).abs() / d as f64;
    let passed = within * 100 >= 95 * trials.len() && mean_rel <= 0.01;
    let detail = format!(
        "d = {d}, {within}/200 trials within 10%, mean d' = {mean:.1} ({:.3}% off)",
        100.0 * mean_rel
    );
    outcome("A8", "estimator concentration", start, passed, detail)
}

/// Census over all pairs with exact majority answers reproduces the depth.
pub fn exhaustive_exactness(opts: &VerifyOptions) -> CriterionOutcome {
    let start = Instant::now();
    let mismatches = (0..50usize)
        .into_par_iter()
        .filter(|&k| {
            let n = 5 + k % 36;
            let seed = opts.seed(9, k);
            let pts = generate(Distribution::UniformDisk, n, seed).expect("valid size");
            let q = random_query(&mut stream_rng(seed, 0), 600_000);
            let census = depth_census(&pts, q, MajorityMode::Exact).expect("distinct points");
            census.d_prime != depth_exact_naive(&pts, q).expect("distinct points") as f64
        })
        .count();
    let detail = format!("50 instances, n in 5..=40, {mismatches} mismatches");
    outcome(
        "A9",
        "exhaustive-mode exactness",
        start,
        mismatches == 0,
        detail,
    )
}

/// Level histograms account for every vertex and are written as CSV.
pub fn histogram_sanity(opts: &VerifyOptions) -> CriterionOutcome {
    let start = Instant::now();
    let mut passed = true;
    let mut notes = Vec::new();
    let dir = opts.out_dir();
    for n in [64usize, 128, 256] {
        let pts = generate(Distribution::UniformDisk, n, opts.seed(10, n)).expect("valid size");
        let hist = match level_histogram(&pts) {
            Ok(h) => h,
            Err(e) => {
                passed = false;
                notes.push(format!("n={n}: {e}"));
                continue;
            }
        };
        let rows = hist.rows();
        let monotone = rows.windows(2).all(|w| w[0].cumulative <= w[1].cumulative);
        passed &= hist.total() == pairs(n) && monotone;
        let written = dir
            .as_ref()
            .ok()
            .map(|d| d.join(format!("level_histogram_n{n}.csv")))
            .and_then(|path| {
                let mut buf = Vec::new();
                hist.write_csv(&mut buf).ok()?;
                fs::write(&path, buf).ok().map(|_| path)
            });
        passed &= written.is_some();
        notes.push(format!(
            "n={n} total {} bound ratio {:.4}",
            hist.total(),
            hist.max_bound_ratio()
        ));
    }
    if let Ok(d) = dir {
        notes.push(format!("CSV in {}", d.display()));
    }
    outcome(
        "A10",
        "level-histogram sanity",
        start,
        passed,
        notes.join(", "),
    )
}
