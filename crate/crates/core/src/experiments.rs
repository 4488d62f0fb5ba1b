//! Scaling experiments with CSV output. Rows come out ordered by `(n, trial)`
//! whatever order the worker pool finishes them in.
//!
//! | experiment        | columns                                                            |
//! |-------------------|--------------------------------------------------------------------|
//! | `crossing`        | `n,trial,structure,max_crossing,ratio_to_sqrt_n`                   |
//! | `stabbing`        | `n,trials,max_crossed,p99_crossed`                                 |
//! | `approx-error`    | `n,trial,i,level,queries,max_abs_error,violations`                 |
//! | `side-query-cost` | `n,trial,queries,mean_nodes,p99_nodes,exact_mean_nodes,mean_calls` |
//! | `estimator-error` | `n,r,trial,rel_error,d_exact,d_prime`                              |
//! | `level-histogram` | `n,i,n_i,cumulative`                                               |

use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::approx_counting::{stream_rng, ChainConfig, HalvingChain};
use crate::datasets::{coordinate_median, generate, Distribution};
use crate::depth::{
    depth_exact_sweep, estimate_depth, pilot_p_hat, sample_pair, sample_size_for, MajorityMode,
    DEFAULT_PILOT,
};
use crate::error::{Error, Result};
use crate::geometry::{Halfplane, Point, Rect, Side};
use crate::low_crossing::{crossing_number, low_crossing_matching, ProbeLine};
use crate::median_side::{level_histogram, MajorityOracle};
use crate::partition_tree::PartitionTree;

const QUERY_STREAM: u64 = 11;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Crossing,
    Stabbing,
    ApproxError,
    SideQueryCost,
    EstimatorError,
    LevelHistogram,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::Crossing,
        Experiment::Stabbing,
        Experiment::ApproxError,
        Experiment::SideQueryCost,
        Experiment::EstimatorError,
        Experiment::LevelHistogram,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Crossing => "crossing",
            Experiment::Stabbing => "stabbing",
            Experiment::ApproxError => "approx-error",
            Experiment::SideQueryCost => "side-query-cost",
            Experiment::EstimatorError => "estimator-error",
            Experiment::LevelHistogram => "level-histogram",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown experiment {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub sizes: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub distribution: Distribution,
    pub epsilon: f64,
    /// Constant `c` of the sample-size rule.
    pub confidence: f64,
    /// Chain confidence parameter; `n^2` when absent.
    pub big_n: Option<u64>,
    /// Estimator sample count; derived from `epsilon` and a pilot when absent.
    pub samples: Option<u64>,
    /// Queries or probes per trial.
    pub queries: usize,
    pub exact_majority: bool,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Desk-scale defaults for `experiment`.
    pub fn new(experiment: Experiment) -> Self {
        let pow2 = |lo: u32, hi: u32| (lo..=hi).map(|k| 1usize << k).collect::<Vec<_>>();
        let (sizes, trials, queries) = match experiment {
            Experiment::Crossing => (pow2(4, 12), 10, 1000),
            Experiment::Stabbing => (pow2(8, 14), 1, 1000),
            Experiment::ApproxError => (vec![1024, 4096], 5, 1000),
            Experiment::SideQueryCost => (pow2(10, 14), 1, 10_000),
            Experiment::EstimatorError => (vec![256, 1024], 50, 0),
            Experiment::LevelHistogram => (vec![64, 128, 256], 1, 0),
        };
        ExperimentConfig {
            experiment,
            sizes,
            trials,
            seed: 1,
            distribution: Distribution::UniformDisk,
            epsilon: 0.1,
            confidence: 2.0,
            big_n: None,
            samples: None,
            queries,
            exact_majority: false,
            out: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if self.sizes.is_empty() || self.sizes.iter().any(|&n| n < 2) {
            return bad("sizes must be non-empty and at least 2");
        }
        if self.trials == 0 {
            return bad("trials must be positive");
        }
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return bad("epsilon must lie in (0, 1]");
        }
        if !(self.confidence > 0.0 && self.confidence.is_finite()) {
            return bad("confidence must be positive");
        }
        if self.samples == Some(0) || self.big_n == Some(0) {
            return bad("samples and N must be positive");
        }
        if self.queries == 0
            && matches!(
                self.experiment,
                Experiment::Stabbing | Experiment::ApproxError | Experiment::SideQueryCost
            )
        {
            return bad("queries must be positive");
        }
        Ok(())
    }

    fn chain_config(&self, n: usize) -> ChainConfig {
        let mut c = ChainConfig::for_size(n);
        if let Some(big_n) = self.big_n {
            c.big_n = big_n;
        }
        c
    }
}

/// Seed of one `(n, trial)` cell, independent across cells.
pub fn trial_seed(seed: u64, n: usize, trial: usize) -> u64 {
    let mut z =
        seed ^ (n as u64).rotate_left(32) ^ (trial as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Nearest-rank percentile of an ascending slice.
pub fn percentile(sorted: &[u64], pct: f64) -> u64 {
    if sorted.is_empty() {
        return 0;
    }
    let rank = ((pct / 100.0) * sorted.len() as f64).ceil().max(1.0) as usize;
    sorted[rank.min(sorted.len()) - 1]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CrossingMeasure {
    pub tree: usize,
    pub path: usize,
    pub matching: usize,
}

/// Crossing numbers of the spanning tree, path and matching over the
/// standard probe set.
pub fn measure_crossing(points: &[Point], seed: u64, random_probes: usize) -> CrossingMeasure {
    let ptree = PartitionTree::build(points);
    let (tree, path, matching) = low_crossing_matching(&ptree);
    let probes = ProbeLine::standard(points, &mut stream_rng(seed, QUERY_STREAM), random_probes);
    CrossingMeasure {
        tree: crossing_number(&tree, points, &probes),
        path: crossing_number(&path, points, &probes),
        matching: crossing_number(&matching, points, &probes),
    }
}

/// Matching crossing number only.
pub fn matching_crossing(points: &[Point], seed: u64, random_probes: usize) -> usize {
    let ptree = PartitionTree::build(points);
    let (_, _, matching) = low_crossing_matching(&ptree);
    let probes = ProbeLine::standard(points, &mut stream_rng(seed, QUERY_STREAM), random_probes);
    crossing_number(&matching, points, &probes)
}

/// Random closed halfplane bounded by a uniformly chosen pair line, i.e.
/// through a random vertex of the dual arrangement.
pub fn random_vertex_halfplane<R: Rng + ?Sized>(points: &[Point], rng: &mut R) -> Halfplane {
    let (i, j) = sample_pair(rng, points.len());
    let side = if rng.random_bool(0.5) {
        Side::Positive
    } else {
        Side::Negative
    };
    Halfplane::from_pair(points, i, j, side).expect("distinct points")
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SideQueryCost {
    pub queries: usize,
    pub mean_nodes: f64,
    pub p99_nodes: u64,
    /// Nodes visited by one exact count on the full tree, same halfplanes.
    pub exact_mean_nodes: f64,
    pub mean_calls: f64,
}

pub fn side_query_cost(
    points: &[Point],
    chain: &HalvingChain,
    queries: usize,
    seed: u64,
) -> SideQueryCost {
    let mut rng = stream_rng(seed, QUERY_STREAM);
    let mut oracle = MajorityOracle::new(chain);
    let mut exact_nodes = 0u64;
    for _ in 0..queries {
        let h = random_vertex_halfplane(points, &mut rng);
        oracle.is_majority(&h);
        exact_nodes += chain.exact_count(&h).visited;
    }
    let stats = oracle.query_cost();
    SideQueryCost {
        queries,
        mean_nodes: stats.mean_nodes(),
        p99_nodes: stats.percentile_nodes(99.0),
        exact_mean_nodes: exact_nodes as f64 / queries.max(1) as f64,
        mean_calls: stats.approx_calls as f64 / queries.max(1) as f64,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ApproxErrorSummary {
    pub level: usize,
    pub max_abs_error: u64,
    /// Queries whose error exceeded the budget.
    pub violations: usize,
}

/// `queries` random halfplanes over the bounding box of `points`, each
/// answered with budget `i` and compared with the exact count.
pub fn approx_errors(
    points: &[Point],
    chain: &HalvingChain,
    i: usize,
    queries: usize,
    seed: u64,
) -> ApproxErrorSummary {
    let rect = Rect::bounding(points).expect("non-empty");
    let mut rng = stream_rng(seed, QUERY_STREAM);
    let mut out = ApproxErrorSummary {
        level: chain.level_for(i),
        max_abs_error: 0,
        violations: 0,
    };
    for _ in 0..queries {
        let h = Halfplane::random(&mut rng, &rect);
        let exact = chain.exact_count(&h).count;
        let err = chain
            .approx_count(&h, i)
            .expect("budget within range")
            .abs_diff(exact) as u64;
        out.max_abs_error = out.max_abs_error.max(err);
        out.violations += (err > i as u64) as usize;
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EstimatorTrial {
    pub r: u64,
    pub d_exact: u64,
    pub d_prime: f64,
    pub rel_error: f64,
}

/// One estimator run on `points` at `q` with a freshly seeded chain.
pub fn estimator_trial(
    points: &[Point],
    q: Point,
    d_exact: u64,
    samples: Option<u64>,
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<EstimatorTrial> {
    let chain;
    let mode = if cfg.exact_majority {
        MajorityMode::Exact
    } else {
        chain = HalvingChain::build(points, cfg.chain_config(points.len()), seed)?;
        MajorityMode::Oracle(&chain)
    };
    let r = match samples {
        Some(r) => r,
        None => {
            let p_hat = pilot_p_hat(points, q, DEFAULT_PILOT, seed ^ 0xA5A5, mode)?;
            sample_size_for(cfg.epsilon, p_hat, cfg.confidence, points.len())?
        }
    };
    let est = estimate_depth(points, q, r, seed.wrapping_add(1), mode)?;
    let rel_error = if d_exact == 0 {
        est.d_prime
    } else {
        (est.d_prime - d_exact as f64).abs() / d_exact as f64
    };
    Ok(EstimatorTrial {
        r,
        d_exact,
        d_prime: est.d_prime,
        rel_error,
    })
}

#[derive(Debug, Serialize)]
struct CrossingRow {
    n: usize,
    trial: usize,
    structure: &'static str,
    max_crossing: usize,
    ratio_to_sqrt_n: f64,
}

#[derive(Debug, Serialize)]
struct StabbingRow {
    n: usize,
    trials: usize,
    max_crossed: u64,
    p99_crossed: u64,
}

#[derive(Debug, Serialize)]
struct ApproxErrorRow {
    n: usize,
    trial: usize,
    i: usize,
    level: usize,
    queries: usize,
    max_abs_error: u64,
    violations: usize,
}

#[derive(Debug, Serialize)]
struct SideQueryCostRow {
    n: usize,
    trial: usize,
    queries: usize,
    mean_nodes: f64,
    p99_nodes: u64,
    exact_mean_nodes: f64,
    mean_calls: f64,
}

#[derive(Debug, Serialize)]
struct EstimatorErrorRow {
    n: usize,
    r: u64,
    trial: usize,
    rel_error: f64,
    d_exact: u64,
    d_prime: f64,
}

#[derive(Debug, Serialize)]
struct HistogramRow {
    n: usize,
    i: usize,
    n_i: u64,
    cumulative: u64,
}

fn cells(cfg: &ExperimentConfig) -> Vec<(usize, usize)> {
    cfg.sizes
        .iter()
        .flat_map(|&n| (0..cfg.trials).map(move |t| (n, t)))
        .collect()
}

fn write_rows<W: Write, T: Serialize>(out: W, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

fn instance(cfg: &ExperimentConfig, n: usize, trial: usize) -> Result<Vec<Point>> {
    generate(cfg.distribution, n, trial_seed(cfg.seed, n, trial))
}

/// Runs the configured experiment, writes CSV to `out` and returns short
/// human-readable summary lines.
pub fn run<W: Write>(cfg: &ExperimentConfig, out: W) -> Result<Vec<String>> {
    cfg.validate()?;
    match cfg.experiment {
        Experiment::Crossing => {
            let rows = cells(cfg)
                .into_par_iter()
                .map(|(n, t)| {
                    let pts = instance(cfg, n, t)?;
                    let m = measure_crossing(&pts, trial_seed(cfg.seed, n, t), cfg.queries);
                    let sq = (n as f64).sqrt();
                    Ok(
                        [("tree", m.tree), ("path", m.path), ("matching", m.matching)].map(
                            |(structure, c)| CrossingRow {
                                n,
                                trial: t,
                                structure,
                                max_crossing: c,
                                ratio_to_sqrt_n: c as f64 / sq,
                            },
                        ),
                    )
                })
                .collect::<Result<Vec<_>>>()?;
            let worst = rows
                .iter()
                .flatten()
                .filter(|r| r.structure == "matching")
                .map(|r| r.ratio_to_sqrt_n);
            let summary = format!(
                "largest matching crossing / sqrt(n): {:.3}",
                worst.fold(0.0, f64::max)
            );
            write_rows(out, rows.into_iter().flatten())?;
            Ok(vec![summary])
        }
        Experiment::Stabbing => {
            let rows = cfg
                .sizes
                .par_iter()
                .map(|&n| {
                    let pts = instance(cfg, n, 0)?;
                    let tree = PartitionTree::build(&pts);
                    let rect = Rect::bounding(&pts).expect("n >= 2");
                    let mut rng = stream_rng(trial_seed(cfg.seed, n, 0), QUERY_STREAM);
                    let mut crossed: Vec<u64> = (0..cfg.queries)
                        .map(|_| {
                            tree.crossed_node_count(&Halfplane::random(&mut rng, &rect)) as u64
                        })
                        .collect();
                    crossed.sort_unstable();
                    Ok(StabbingRow {
                        n,
                        trials: cfg.queries,
                        max_crossed: *crossed.last().unwrap_or(&0),
                        p99_crossed: percentile(&crossed, 99.0),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            write_rows(out, rows)?;
            Ok(Vec::new())
        }
        Experiment::ApproxError => {
            let rows = cells(cfg)
                .into_par_iter()
                .map(|(n, t)| {
                    let pts = instance(cfg, n, t)?;
                    let seed = trial_seed(cfg.seed, n, t);
                    let chain = HalvingChain::build(&pts, cfg.chain_config(n), seed)?;
                    let budgets =
                        std::iter::successors(Some(n / 64), |&i| (i < n / 8).then_some(2 * i));
                    Ok(budgets
                        .filter(|&i| i > 0)
                        .map(|i| {
                            let s = approx_errors(&pts, &chain, i, cfg.queries, seed ^ i as u64);
                            ApproxErrorRow {
                                n,
                                trial: t,
                                i,
                                level: s.level,
                                queries: cfg.queries,
                                max_abs_error: s.max_abs_error,
                                violations: s.violations,
                            }
                        })
                        .collect::<Vec<_>>())
                })
                .collect::<Result<Vec<_>>>()?;
            let violations: usize = rows.iter().flatten().map(|r| r.violations).sum();
            write_rows(out, rows.into_iter().flatten())?;
            Ok(vec![format!("budget violations: {violations}")])
        }
        Experiment::SideQueryCost => {
            let rows = cells(cfg)
                .into_par_iter()
                .map(|(n, t)| {
                    let pts = instance(cfg, n, t)?;
                    let seed = trial_seed(cfg.seed, n, t);
                    let chain = HalvingChain::build(&pts, cfg.chain_config(n), seed)?;
                    let c = side_query_cost(&pts, &chain, cfg.queries, seed);
                    Ok(SideQueryCostRow {
                        n,
                        trial: t,
                        queries: c.queries,
                        mean_nodes: c.mean_nodes,
                        p99_nodes: c.p99_nodes,
                        exact_mean_nodes: c.exact_mean_nodes,
                        mean_calls: c.mean_calls,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let mut summary = Vec::new();
            if let (Some(first), Some(last)) = (rows.first(), rows.last()) {
                if last.n > first.n {
                    summary.push(format!(
                        "n {} -> {}: oracle mean nodes x{:.2}, exact mean nodes x{:.2}",
                        first.n,
                        last.n,
                        last.mean_nodes / first.mean_nodes,
                        last.exact_mean_nodes / first.exact_mean_nodes
                    ));
                }
            }
            write_rows(out, rows)?;
            Ok(summary)
        }
        Experiment::EstimatorError => {
            let rows = cfg
                .sizes
                .iter()
                .map(|&n| {
                    let pts = instance(cfg, n, 0)?;
                    let q = coordinate_median(&pts).expect("n >= 2");
                    let d = depth_exact_sweep(&pts, q)?;
                    (0..cfg.trials)
                        .into_par_iter()
                        .map(|t| {
                            let e = estimator_trial(
                                &pts,
                                q,
                                d,
                                cfg.samples,
                                cfg,
                                trial_seed(cfg.seed, n, t),
                            )?;
                            Ok(EstimatorErrorRow {
                                n,
                                r: e.r,
                                trial: t,
                                rel_error: e.rel_error,
                                d_exact: e.d_exact,
                                d_prime: e.d_prime,
                            })
                        })
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            let rows: Vec<_> = rows.into_iter().flatten().collect();
            let within = rows.iter().filter(|r| r.rel_error <= cfg.epsilon).count();
            let summary = format!(
                "{within}/{} trials within relative error {}",
                rows.len(),
                cfg.epsilon
            );
            write_rows(out, rows)?;
            Ok(vec![summary])
        }
        Experiment::LevelHistogram => {
            let mut rows = Vec::new();
            let mut summary = Vec::new();
            for &n in &cfg.sizes {
                let hist = level_histogram(&instance(cfg, n, 0)?)?;
                summary.push(format!(
                    "n={n}: max cumulative / (n^(4/3) i^(2/3)) = {:.4}",
                    hist.max_bound_ratio()
                ));
                rows.extend(hist.rows().into_iter().map(|r| HistogramRow {
                    n,
                    i: r.i,
                    n_i: r.n_i,
                    cumulative: r.cumulative,
                }));
            }
            write_rows(out, rows)?;
            Ok(summary)
        }
    }
}
