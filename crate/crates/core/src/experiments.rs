//! Monte Carlo and exhaustive estimates of the approximation ratio on the
//! k-donut, with the concentration of the structural matching costs.
//!
//! Trial `i` draws its 1-tree from the ChaCha stream `(seed, i)`, so results
//! do not depend on the number of worker threads; aggregation is a fold in
//! trial order over exact integer sums.

use std::io::Write;

use num_rational::Ratio;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{KDonut, Metric};
use crate::matching::{odd_vertices, oracle_min_matching, structural_matchings, MatchingKind, MAX_ORACLE_VERTICES};
use crate::sampler::{enumerate_one_trees, one_tree_from_choices, sample_one_tree, ChaChaBits, ChoiceVector, OneTree};
use crate::tours::{b_tour_m1, b_tour_m2, eulerian_subgraph, hierholzer_tour, shortcut};

/// Largest shortcut loss a B-tour may incur on `T ⊎ M1` and `T ⊎ M2`.
pub const M1_SHORTCUT_LOSS: u64 = 9;
pub const M2_SHORTCUT_LOSS: u64 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum MatchingMode {
    /// The cheaper of the two structural matchings.
    Structural,
    /// Exact minimum-cost perfect matching (small k only).
    Oracle,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum TourPolicy {
    BTour,
    Hierholzer,
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub k: usize,
    pub trials: u64,
    pub seed: u64,
    pub matching: MatchingMode,
    pub policy: TourPolicy,
    /// Concentration slack; `sqrt(ln k / k)` when `None`.
    pub epsilon: Option<f64>,
    /// Average over every 1-tree instead of sampling (`trials` is ignored).
    pub exhaustive: bool,
    /// Worker threads; the global rayon pool when `None`.
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    pub fn new(k: usize, trials: u64, seed: u64) -> Self {
        ExperimentConfig {
            k,
            trials,
            seed,
            matching: MatchingMode::Structural,
            policy: TourPolicy::BTour,
            epsilon: None,
            exhaustive: false,
            threads: None,
        }
    }
}

/// Exact averages from an exhaustive run, as reduced fractions.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExactSummary {
    pub ratio_euler: String,
    pub ratio_shortcut: String,
    pub mean_m1_cost: String,
    pub mean_m2_cost: String,
    pub concentration: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub k: usize,
    pub trials: u64,
    pub seed: u64,
    pub exhaustive: bool,
    pub matching_mode: MatchingMode,
    pub tour_policy: TourPolicy,
    pub mean_euler_cost: f64,
    pub mean_shortcut_cost: f64,
    /// Mean Eulerian cost over the optimum `4k + 2`.
    pub ratio_euler: f64,
    pub ratio_shortcut: f64,
    /// Standard error of `ratio_euler`.
    pub std_error: f64,
    pub std_error_shortcut: f64,
    pub mean_m1_cost: f64,
    pub mean_m2_cost: f64,
    pub max_shortcut_loss: u64,
    pub epsilon: Option<f64>,
    /// Fraction of trials with both structural matchings costing at least
    /// `(3/2 - epsilon) k`.
    pub concentration: Option<f64>,
    pub concentration_std_error: Option<f64>,
    /// Union bound `1 - 2 exp(-2 epsilon^2 k / 3)`.
    pub concentration_bound: Option<f64>,
    /// Trials where the oracle matching beat both structural ones.
    pub claim2_mismatches: Option<u64>,
    pub exact: Option<ExactSummary>,
}

#[derive(Clone, Copy, Debug)]
struct Trial {
    euler: u64,
    shortcut: u64,
    m1: u64,
    m2: u64,
    concentrated: bool,
    claim2_mismatch: bool,
}

pub fn default_epsilon(k: usize) -> f64 {
    let k = k as f64;
    (k.ln() / k).sqrt()
}

/// `1 - 2 exp(-2 epsilon^2 k / 3)`.
pub fn concentration_bound(k: usize, epsilon: f64) -> f64 {
    1.0 - 2.0 * (-2.0 * epsilon * epsilon * k as f64 / 3.0).exp()
}

fn valid_epsilon(e: f64) -> bool {
    e > 0.0 && e < 0.5
}

fn run_trial(
    g: &KDonut,
    metric: &Metric,
    t: &OneTree,
    cfg: &ExperimentConfig,
    epsilon: Option<f64>,
    bits: &mut ChaChaBits,
) -> Result<Trial> {
    let tag = |e: Error| e.with_choice(&t.choice().to_string());
    let odds = odd_vertices(t, g).map_err(tag)?;
    let s = structural_matchings(&odds, metric).map_err(tag)?;
    let (matching, claim2_mismatch) = match cfg.matching {
        MatchingMode::Structural => (s.best().clone(), false),
        MatchingMode::Oracle => {
            let m = oracle_min_matching(&odds, metric)?;
            let mismatch = m.cost != s.min_cost();
            (m, mismatch)
        }
    };
    let a = eulerian_subgraph(g, metric, t, &matching)?;
    let tour = match cfg.policy {
        TourPolicy::BTour => match matching.kind {
            MatchingKind::M1 => b_tour_m1(&a, g),
            _ => b_tour_m2(&a, g),
        },
        TourPolicy::Hierholzer => hierholzer_tour(&a, bits.rng_mut()),
    }
    .map_err(tag)?;
    let h = shortcut(&tour, metric);
    if h.cost > tour.cost {
        return Err(tag(Error::structure(
            "shortcut",
            format!("shortcut cost {} exceeds tour cost {}", h.cost, tour.cost),
        )));
    }
    if cfg.policy == TourPolicy::BTour {
        let bound = if matching.kind == MatchingKind::M1 {
            M1_SHORTCUT_LOSS
        } else {
            M2_SHORTCUT_LOSS
        };
        if tour.cost - h.cost > bound {
            return Err(tag(Error::structure(
                "shortcut",
                format!("B-tour shortcut lost {} (> {bound})", tour.cost - h.cost),
            )));
        }
    }
    let k = g.k() as f64;
    let concentrated = epsilon.is_some_and(|e| {
        let floor = (1.5 - e) * k - 1e-9;
        s.m1.cost as f64 >= floor && s.m2.cost as f64 >= floor
    });
    Ok(Trial {
        euler: tour.cost,
        shortcut: h.cost,
        m1: s.m1.cost,
        m2: s.m2.cost,
        concentrated,
        claim2_mismatch,
    })
}

/// Standard error of the mean of integer samples, from exact sums.
fn std_error(n: u64, sum: u128, sum_sq: u128) -> f64 {
    if n < 2 {
        return 0.0;
    }
    let n128 = u128::from(n);
    let numerator = n128 * sum_sq - sum * sum;
    let variance = numerator as f64 / (n128 * (n128 - 1)) as f64;
    (variance / n as f64).sqrt()
}

/// Runs one experiment. Errors from any trial are reported for the lowest
/// failing trial index.
pub fn estimate_ratio(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let g = KDonut::new(cfg.k)?;
    if !cfg.exhaustive && cfg.trials == 0 {
        return Err(Error::InvalidInput("trials must be at least 1".into()));
    }
    if cfg.matching == MatchingMode::Oracle {
        if 2 * cfg.k > MAX_ORACLE_VERTICES {
            return Err(Error::BudgetExceeded {
                what: "oracle matching",
                k: cfg.k,
                max: MAX_ORACLE_VERTICES / 2,
            });
        }
        if cfg.policy == TourPolicy::BTour {
            return Err(Error::InvalidInput(
                "B-tours are defined on the structural matchings; use --policy hierholzer with the oracle".into(),
            ));
        }
    }
    let epsilon = match cfg.epsilon {
        Some(e) if !valid_epsilon(e) => {
            return Err(Error::InvalidInput(format!("epsilon must lie in (0, 1/2), got {e}")))
        }
        Some(e) => Some(e),
        None => Some(default_epsilon(cfg.k)).filter(|&e| valid_epsilon(e)),
    };
    let metric = Metric::new(&g);
    let trials = if cfg.exhaustive {
        enumerate_one_trees(&g)?.len() as u64
    } else {
        cfg.trials
    };

    let one = |i: u64| -> Result<Trial> {
        let mut bits = ChaChaBits::new(cfg.seed, i);
        let t = if cfg.exhaustive {
            one_tree_from_choices(&g, ChoiceVector::from_index(g.k(), i))?
        } else {
            sample_one_tree(&g, &mut bits)
        };
        run_trial(&g, &metric, &t, cfg, epsilon, &mut bits)
    };
    let outcomes: Vec<Result<Trial>> = match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?
            .install(|| (0..trials).into_par_iter().map(one).collect()),
        None => (0..trials).into_par_iter().map(one).collect(),
    };
    let outcomes: Vec<Trial> = outcomes.into_iter().collect::<Result<_>>()?;
    Ok(summarize(cfg, &g, epsilon, &outcomes))
}

fn summarize(cfg: &ExperimentConfig, g: &KDonut, epsilon: Option<f64>, outcomes: &[Trial]) -> ExperimentReport {
    let n = outcomes.len() as u64;
    let opt = (4 * g.k() + 2) as u64;
    let (mut euler, mut euler_sq, mut short, mut short_sq) = (0u128, 0u128, 0u128, 0u128);
    let (mut m1, mut m2, mut concentrated, mut mismatches, mut worst) = (0u64, 0u64, 0u64, 0u64, 0u64);
    for t in outcomes {
        euler += u128::from(t.euler);
        euler_sq += u128::from(t.euler) * u128::from(t.euler);
        short += u128::from(t.shortcut);
        short_sq += u128::from(t.shortcut) * u128::from(t.shortcut);
        m1 += t.m1;
        m2 += t.m2;
        concentrated += u64::from(t.concentrated);
        mismatches += u64::from(t.claim2_mismatch);
        worst = worst.max(t.euler - t.shortcut);
    }
    let nf = n as f64;
    let mean_euler = euler as f64 / nf;
    let mean_short = short as f64 / nf;
    let fraction = concentrated as f64 / nf;
    let exact = cfg.exhaustive.then(|| {
        let (e, s) = (euler as u64, short as u64);
        ExactSummary {
            ratio_euler: Ratio::new(e, n * opt).to_string(),
            ratio_shortcut: Ratio::new(s, n * opt).to_string(),
            mean_m1_cost: Ratio::new(m1, n).to_string(),
            mean_m2_cost: Ratio::new(m2, n).to_string(),
            concentration: epsilon.map(|_| Ratio::new(concentrated, n).to_string()),
        }
    });
    ExperimentReport {
        k: g.k(),
        trials: n,
        seed: cfg.seed,
        exhaustive: cfg.exhaustive,
        matching_mode: cfg.matching,
        tour_policy: cfg.policy,
        mean_euler_cost: mean_euler,
        mean_shortcut_cost: mean_short,
        ratio_euler: mean_euler / opt as f64,
        ratio_shortcut: mean_short / opt as f64,
        std_error: std_error(n, euler, euler_sq) / opt as f64,
        std_error_shortcut: std_error(n, short, short_sq) / opt as f64,
        mean_m1_cost: m1 as f64 / nf,
        mean_m2_cost: m2 as f64 / nf,
        max_shortcut_loss: worst,
        epsilon,
        concentration: epsilon.map(|_| fraction),
        concentration_std_error: epsilon.map(|_| (fraction * (1.0 - fraction) / nf).sqrt()),
        concentration_bound: epsilon.map(|e| concentration_bound(g.k(), e)),
        claim2_mismatches: (cfg.matching == MatchingMode::Oracle).then_some(mismatches),
        exact,
    }
}

/// Fraction of trials where both structural matchings cost at least
/// `(3/2 - epsilon) k`.
pub fn concentration_check(k: usize, trials: u64, epsilon: f64, seed: u64) -> Result<f64> {
    if !valid_epsilon(epsilon) {
        return Err(Error::InvalidInput(format!(
            "epsilon must lie in (0, 1/2), got {epsilon}"
        )));
    }
    let mut cfg = ExperimentConfig::new(k, trials, seed);
    cfg.epsilon = Some(epsilon);
    Ok(estimate_ratio(&cfg)?.concentration.unwrap_or(0.0))
}

/// One structural-matching, B-tour report per `k`.
pub fn ratio_sweep(ks: &[usize], trials: u64, seed: u64, threads: Option<usize>) -> Result<Vec<ExperimentReport>> {
    if ks.is_empty() {
        return Err(Error::InvalidInput("no values of k given".into()));
    }
    ks.iter()
        .map(|&k| {
            let mut cfg = ExperimentConfig::new(k, trials, seed);
            cfg.threads = threads;
            estimate_ratio(&cfg)
        })
        .collect()
}

/// Whether each `ratio_euler` is at least the previous one minus `sigmas`
/// combined standard errors.
pub fn nondecreasing_within(reports: &[ExperimentReport], sigmas: f64) -> bool {
    reports.windows(2).all(|w| {
        let slack = sigmas * (w[0].std_error.powi(2) + w[1].std_error.powi(2)).sqrt();
        w[1].ratio_euler >= w[0].ratio_euler - slack
    })
}

#[derive(Serialize)]
struct CsvRow {
    k: usize,
    trials: u64,
    ratio_euler: f64,
    ratio_shortcut: f64,
    stderr: f64,
}

/// Columns `k, trials, ratio_euler, ratio_shortcut, stderr`.
pub fn write_csv<W: Write>(reports: &[ExperimentReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in reports {
        w.serialize(CsvRow {
            k: r.k,
            trials: r.trials,
            ratio_euler: r.ratio_euler,
            ratio_shortcut: r.ratio_shortcut,
            stderr: r.std_error,
        })
        .map_err(|e| Error::InvalidInput(format!("csv: {e}")))?;
    }
    w.flush().map_err(|e| Error::InvalidInput(format!("csv: {e}")))?;
    Ok(())
}
