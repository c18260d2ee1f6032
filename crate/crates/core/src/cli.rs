//! Command-line front end. `run` parses arguments, dispatches, and maps
//! errors to exit codes: 2 for bad arguments, 1 for structure violations
//! (printed as JSON with the offending choice vector).

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::experiments::{estimate_ratio, ratio_sweep, write_csv, ExperimentConfig, MatchingMode, TourPolicy};
use crate::graph::{KDonut, Metric};
use crate::lp::{check_extreme, check_feasible, extreme_point, MAX_EXTREME_K};
use crate::matching::{odd_vertices, oracle_min_matching, structural_matchings, MatchingKind, PerfectMatching};
use crate::maxent_oracle::certify;
use crate::sampler::{
    enumerate_one_trees, one_tree_from_choices, parity_vector, sample_one_tree, ChaChaBits, ChoiceVector, OneTree,
};
use crate::tours::{b_tour_m1, b_tour_m2, eulerian_subgraph, hierholzer_tour, shortcut};

/// `verify` enumerates every 1-tree for the parity check up to this k.
pub const VERIFY_PARITY_MAX_K: usize = 10;
/// ... and runs the matching oracle on every 1-tree up to this k.
pub const VERIFY_MATCHING_MAX_K: usize = 6;

#[derive(Parser, Debug)]
#[command(
    name = "maxent-donut",
    version,
    about = "Max-entropy TSP rounding on graphic k-donuts"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the k-donut and its half-integral LP solution.
    Generate {
        #[arg(long)]
        k: usize,
    },
    /// Sample one 1-tree, or stream all of them as JSON lines.
    Sample {
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        stream: u64,
        /// Rebuild the 1-tree from a choice bit string instead of sampling.
        #[arg(long, conflicts_with = "enumerate")]
        choice: Option<ChoiceVector>,
        #[arg(long)]
        enumerate: bool,
    },
    /// Check the LP solution and the parity and matching structure.
    Verify {
        #[arg(long)]
        k: usize,
    },
    /// Build one Euler tour and its shortcut.
    Tour {
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        stream: u64,
        /// Rebuild the 1-tree from a choice bit string instead of sampling.
        #[arg(long)]
        choice: Option<ChoiceVector>,
        #[arg(long, value_enum, default_value_t = TourMatching::M1)]
        matching: TourMatching,
        #[arg(long, value_enum, default_value_t = TourPolicy::BTour)]
        policy: TourPolicy,
    },
    /// Compare the sampler with a numerical max-entropy solve (k = 3).
    Oracle {
        #[arg(long, default_value_t = 3)]
        k: usize,
    },
    /// Estimate the approximation ratio at one k.
    Experiment {
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 2000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = MatchingMode::Structural)]
        matching: MatchingMode,
        #[arg(long, value_enum, default_value_t = TourPolicy::BTour)]
        policy: TourPolicy,
        /// Concentration slack (default sqrt(ln k / k)).
        #[arg(long)]
        epsilon: Option<f64>,
        /// Average over every 1-tree instead of sampling.
        #[arg(long)]
        exhaustive: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        threads: Threads,
    },
    /// Estimate the ratio for several k.
    Sweep {
        #[arg(long, value_delimiter = ',', required = true)]
        ks: Vec<usize>,
        #[arg(long, default_value_t = 2000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write `k,trials,ratio_euler,ratio_shortcut,stderr` rows here.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        threads: Threads,
    },
}

#[derive(Args, Debug)]
struct Threads {
    /// Worker threads for the trials.
    #[arg(long, env = "MAXENT_DONUT_THREADS")]
    threads: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum TourMatching {
    M1,
    M2,
    Oracle,
}

/// Runs the tool on `argv` (program name first) and returns the exit status.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
            } else {
                let _ = write!(out, "{text}");
            }
            return e.exit_code();
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => 0,
        Err(e) => report_error(&e, out, err),
    }
}

/// Structure violations and solver failures go to `out` as JSON with exit
/// status 1; everything else is a usage error (status 2).
fn report_error(e: &Error, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let report = match e {
        Error::Structure { claim, detail, choice } => json!({
            "error": "structure violation",
            "claim": claim,
            "detail": detail,
            "choice": choice,
        }),
        Error::NonConvergence { iterations, residual } => json!({
            "error": "max-entropy solve did not converge",
            "iterations": iterations,
            "residual": residual,
        }),
        _ => {
            let _ = writeln!(err, "error: {e}\n\nFor more information, try '--help'.");
            return 2;
        }
    };
    let _ = writeln!(out, "{}", serde_json::to_string_pretty(&report).unwrap_or_default());
    let _ = writeln!(err, "error: {e}");
    1
}

fn io(e: std::io::Error) -> Error {
    Error::InvalidInput(format!("I/O: {e}"))
}

fn print(out: &mut dyn Write, value: &impl serde::Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::InvalidInput(e.to_string()))?;
    writeln!(out, "{text}").map_err(io)
}

fn labels(g: &KDonut, vertices: &[usize]) -> Vec<String> {
    vertices.iter().map(|&v| g.label(v)).collect()
}

fn tree_json(g: &KDonut, t: &OneTree) -> Value {
    json!({
        "choice": t.choice().to_string(),
        "cost": t.cost(),
        "edges": t.edges().iter().map(|&e| g.edge_label(e)).collect::<Vec<_>>(),
    })
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::Generate { k } => {
            let g = KDonut::new(k)?;
            let x = extreme_point(&g);
            let mut value = serde_json::to_value(&g).map_err(|e| Error::InvalidInput(e.to_string()))?;
            value["x_halves"] = x.to_json(&g);
            value["lp_objective"] = json!(x.objective());
            print(out, &value)
        }
        Command::Sample {
            k,
            seed,
            stream,
            choice,
            enumerate,
        } => {
            let g = KDonut::new(k)?;
            if enumerate {
                let mut w = BufWriter::new(out);
                for (index, t) in enumerate_one_trees(&g)?.enumerate() {
                    let mut value = tree_json(&g, &t);
                    value["index"] = json!(index);
                    writeln!(w, "{value}").map_err(io)?;
                }
                w.flush().map_err(io)
            } else {
                let mut value = match choice {
                    Some(c) => tree_json(&g, &one_tree_from_choices(&g, c)?),
                    None => {
                        let mut value = tree_json(&g, &sample_one_tree(&g, &mut ChaChaBits::new(seed, stream)));
                        value["seed"] = json!(seed);
                        value["stream"] = json!(stream);
                        value
                    }
                };
                value["k"] = json!(k);
                print(out, &value)
            }
        }
        Command::Verify { k } => print(out, &verify(k)?),
        Command::Tour {
            k,
            seed,
            stream,
            choice,
            matching,
            policy,
        } => print(out, &tour(k, seed, stream, choice, matching, policy)?),
        Command::Oracle { k } => print(out, &certify(&KDonut::new(k)?)?),
        Command::Experiment {
            k,
            trials,
            seed,
            matching,
            policy,
            epsilon,
            exhaustive,
            out: path,
            threads,
        } => {
            let cfg = ExperimentConfig {
                k,
                trials,
                seed,
                matching,
                policy,
                epsilon,
                exhaustive,
                threads: threads.threads,
            };
            let report = estimate_ratio(&cfg)?;
            match path {
                Some(p) => print(&mut File::create(p).map_err(io)?, &report),
                None => print(out, &report),
            }
        }
        Command::Sweep {
            ks,
            trials,
            seed,
            csv,
            threads,
        } => {
            let reports = ratio_sweep(&ks, trials, seed, threads.threads)?;
            if let Some(p) = csv {
                write_csv(&reports, File::create(p).map_err(io)?)?;
            }
            print(out, &reports)
        }
    }
}

fn verify(k: usize) -> Result<Value> {
    let g = KDonut::new(k)?;
    let x = extreme_point(&g);
    let feasible = check_feasible(&x, &g);
    let extreme = if k <= MAX_EXTREME_K {
        json!(check_extreme(&x, &g)?)
    } else {
        Value::Null
    };

    let claim1 = if k <= VERIFY_PARITY_MAX_K {
        let mut counts = vec![0u32; 1 << (2 * k)];
        for t in enumerate_one_trees(&g)? {
            let p = parity_vector(&t, &g)?;
            counts[p.index() as usize] += 1;
        }
        if let Some(i) = counts.iter().position(|&c| c != 2) {
            return Err(Error::structure(
                "claim1",
                format!("parity vector {i:b} occurs {} times, expected 2", counts[i]),
            ));
        }
        "pass"
    } else {
        "skipped"
    };

    let claim2 = if k <= VERIFY_MATCHING_MAX_K {
        let m = Metric::new(&g);
        for t in enumerate_one_trees(&g)? {
            let odds = odd_vertices(&t, &g)?;
            let s = structural_matchings(&odds, &m)?;
            let best = oracle_min_matching(&odds, &m)?;
            if best.cost != s.min_cost() {
                return Err(Error::structure(
                    "claim2",
                    format!(
                        "optimal matching costs {}, min(c(M1), c(M2)) = {}",
                        best.cost,
                        s.min_cost()
                    ),
                )
                .with_choice(&t.choice().to_string()));
            }
        }
        "pass"
    } else {
        "skipped"
    };

    Ok(json!({
        "k": k,
        "lp_objective": x.objective(),
        "feasible": feasible,
        "extreme": extreme,
        "claim1": claim1,
        "claim2": claim2,
    }))
}

/// With `choice`, the tree is rebuilt from it and `(seed, stream)` only
/// drives the Hierholzer shuffle.
fn tour(
    k: usize,
    seed: u64,
    stream: u64,
    choice: Option<ChoiceVector>,
    matching: TourMatching,
    policy: TourPolicy,
) -> Result<Value> {
    if matching == TourMatching::Oracle && policy == TourPolicy::BTour {
        return Err(Error::InvalidInput(
            "B-tours are defined on M1 and M2; use --policy hierholzer with the oracle".into(),
        ));
    }
    let g = KDonut::new(k)?;
    let m = Metric::new(&g);
    let mut bits = ChaChaBits::new(seed, stream);
    let t = match choice {
        Some(c) => one_tree_from_choices(&g, c)?,
        None => sample_one_tree(&g, &mut bits),
    };
    let choice = t.choice().to_string();
    let odds = odd_vertices(&t, &g)?;
    let s = structural_matchings(&odds, &m)?;
    let pm: PerfectMatching = match matching {
        TourMatching::M1 => s.m1.clone(),
        TourMatching::M2 => s.m2.clone(),
        TourMatching::Oracle => oracle_min_matching(&odds, &m)?,
    };
    let a = eulerian_subgraph(&g, &m, &t, &pm)?;
    let r = match (policy, pm.kind) {
        (TourPolicy::BTour, MatchingKind::M1) => b_tour_m1(&a, &g),
        (TourPolicy::BTour, _) => b_tour_m2(&a, &g),
        (TourPolicy::Hierholzer, _) => hierholzer_tour(&a, bits.rng_mut()),
    }
    .map_err(|e| e.with_choice(&choice))?;
    let h = shortcut(&r, &m);
    Ok(json!({
        "k": k,
        "seed": seed,
        "stream": stream,
        "choice": choice,
        "matching": pm.kind,
        "policy": policy,
        "tree_cost": t.cost(),
        "matching_cost": pm.cost,
        "matching_pairs": pm.pairs.iter().map(|&(a, b)| [g.label(a), g.label(b)]).collect::<Vec<_>>(),
        "euler_cost": r.cost,
        "shortcut_cost": h.cost,
        "euler_tour": labels(&g, &r.vertices),
        "hamiltonian_cycle": labels(&g, &h.vertices),
        "skipped_runs": h.skipped_runs,
    }))
}
