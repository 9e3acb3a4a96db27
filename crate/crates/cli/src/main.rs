//! Command-line harness for K_{r,s} bootstrap percolation experiments:
//! closure runs, Monte Carlo percolation-probability estimation, threshold
//! bisection, scaling sweeps, and lemma/balancedness verification.
//!
//! Every subcommand's output is a pure function of its arguments, input
//! files, and seed; thread count (the `BOOTPERC_THREADS` environment
//! variable) never changes a result. Exit codes: 0 success, 1 input error,
//! 2 internal invariant violation.

use std::fs::File;
use std::io::{self, BufReader, Read, Write};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use bootperc::graph::Graph;
use bootperc::mc::{
    default_bracket, estimate_probability, find_threshold, sweep_scaling, ThresholdSearch,
    TrialBatch,
};
use bootperc::oracles::{verify_case3_boundary, verify_multi_overlap, verify_single_overlap};
use bootperc::pattern::ratio_f64;
use bootperc::witness::check_run;
use bootperc::{closure, Error, Pattern};

const CSV_HEADER: &str = "n,pattern_r,pattern_s,p,trials,percolated_fraction,ci_lo,ci_hi,seed";

#[derive(Parser)]
#[command(name = "bootperc", version, about = "K_{r,s} graph bootstrap percolation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, clap::ValueEnum, PartialEq)]
enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the bootstrap closure of a graph read in edge-list format.
    Closure {
        #[arg(long = "pattern", num_args = 2, value_names = ["R", "S"], required = true)]
        pattern: Vec<usize>,
        /// Input edge-list file; stdin when omitted.
        #[arg(long)]
        input: Option<String>,
        /// Track witness sets and report the structural-lemma checks.
        #[arg(long)]
        track: bool,
        /// Write the closure's edge list to this file.
        #[arg(long)]
        write_closure: Option<String>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Report whether a graph percolates.
    Percolates {
        #[arg(long = "pattern", num_args = 2, value_names = ["R", "S"], required = true)]
        pattern: Vec<usize>,
        #[arg(long)]
        input: Option<String>,
    },
    /// Estimate the percolation probability at fixed (n, p).
    EstimateProb {
        #[arg(long)]
        n: usize,
        #[arg(long = "pattern", num_args = 2, value_names = ["R", "S"], required = true)]
        pattern: Vec<usize>,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Bisect for the empirical percolation threshold at fixed n.
    FindThreshold {
        #[arg(long)]
        n: usize,
        #[arg(long = "pattern", num_args = 2, value_names = ["R", "S"], required = true)]
        pattern: Vec<usize>,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 0.05)]
        rel_tol: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Initial bracket ends; the default is anchored at the lower-bound
        /// curve when the pattern is in its proven range.
        #[arg(long)]
        lo: Option<f64>,
        #[arg(long)]
        hi: Option<f64>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Threshold sweep across several n with a log-log exponent fit.
    Sweep {
        #[arg(long = "pattern", num_args = 2, value_names = ["R", "S"], required = true)]
        pattern: Vec<usize>,
        /// Comma-separated list of graph sizes, at least three.
        #[arg(long, value_delimiter = ',', required = true)]
        n_list: Vec<usize>,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 0.05)]
        rel_tol: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Exhaustively verify the extremal overlap inequalities.
    VerifyLemmas {
        #[arg(long)]
        r: usize,
        #[arg(long)]
        s: usize,
        #[arg(long, default_value_t = 4)]
        m_max: usize,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Classify K_{r,s} balancedness (closed form and brute force).
    Balanced { r: usize, s: usize },
    /// Print the threshold bound curves over a range of n.
    Bounds {
        #[arg(long = "pattern", num_args = 2, value_names = ["R", "S"], required = true)]
        pattern: Vec<usize>,
        #[arg(long)]
        n_min: usize,
        #[arg(long)]
        n_max: usize,
        /// Geometric step between successive n.
        #[arg(long, default_value_t = 2.0)]
        factor: f64,
        /// Constant for the lower curve (the asymptotic constants are not
        /// pinned down; curves are parametric).
        #[arg(long, default_value_t = 1.0)]
        c_lower: f64,
        /// Constant for the upper curve.
        #[arg(long, default_value_t = 1.0)]
        c_upper: f64,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
}

#[derive(Serialize)]
struct Meta {
    version: &'static str,
    command: Vec<String>,
}

fn meta() -> Meta {
    Meta {
        version: env!("CARGO_PKG_VERSION"),
        command: std::env::args().collect(),
    }
}

fn read_graph(input: &Option<String>) -> Result<Graph, Error> {
    match input {
        Some(path) => Graph::read_edge_list(BufReader::new(File::open(path)?)),
        None => {
            let mut buf = String::new();
            io::stdin().read_to_string(&mut buf)?;
            Graph::read_edge_list(buf.as_bytes())
        }
    }
}

fn pattern_of(parts: &[usize]) -> Result<Pattern, Error> {
    Pattern::new(parts[0], parts[1])
}

fn pretty<T: Serialize>(value: &T) -> Result<String, Error> {
    serde_json::to_string_pretty(value).map_err(|e| Error::Internal(e.to_string()))
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Closure {
            pattern,
            input,
            track,
            write_closure,
            format,
        } => {
            let pattern = pattern_of(&pattern)?;
            let g = read_graph(&input)?;
            let res = closure(&g, pattern);
            let lemma_report = if track {
                Some(check_run(&g, pattern, None)?)
            } else {
                None
            };
            if let Some(path) = write_closure {
                let mut f = File::create(path)?;
                res.final_graph.write_edge_list(&mut f)?;
            }
            match format {
                Format::Json => {
                    #[derive(Serialize)]
                    struct Out<'a> {
                        meta: Meta,
                        n: usize,
                        pattern: (usize, usize),
                        initial_edges: usize,
                        final_edges: usize,
                        percolated: bool,
                        trace: &'a [bootperc::InfectionStep],
                        lemma_report: &'a Option<bootperc::witness::RunLemmaReport>,
                    }
                    let out = Out {
                        meta: meta(),
                        n: g.n(),
                        pattern: (pattern.r(), pattern.s()),
                        initial_edges: g.edge_count(),
                        final_edges: res.final_graph.edge_count(),
                        percolated: res.percolated,
                        trace: &res.trace,
                        lemma_report: &lemma_report,
                    };
                    println!("{}", pretty(&out)?);
                }
                _ => {
                    println!("n: {}", g.n());
                    println!("pattern: {pattern}");
                    println!("percolated: {}", res.percolated);
                    println!("infections: {}", res.trace.len());
                    for step in &res.trace {
                        println!(
                            "  t={} edge={} sides={:?}|{:?}",
                            step.t, step.edge, step.copy.side_a, step.copy.side_b
                        );
                    }
                    if let Some(rep) = &lemma_report {
                        println!(
                            "lemma checks: {} ({} infected edges checked)",
                            if rep.all_ok() { "all ok" } else { "VIOLATIONS" },
                            rep.checks.len()
                        );
                        for v in &rep.violations {
                            println!("  violation: {v}");
                        }
                    }
                }
            }
        }
        Command::Percolates { pattern, input } => {
            let pattern = pattern_of(&pattern)?;
            let g = read_graph(&input)?;
            println!("percolated: {}", closure(&g, pattern).percolated);
        }
        Command::EstimateProb {
            n,
            pattern,
            p,
            trials,
            seed,
            format,
        } => {
            let pattern = pattern_of(&pattern)?;
            let batch = TrialBatch {
                n,
                pattern,
                p,
                trials,
                base_seed: seed,
            };
            let est = estimate_probability(&batch)?;
            match format {
                Format::Csv => {
                    println!("{CSV_HEADER}");
                    println!(
                        "{n},{},{},{p},{trials},{},{},{},{seed}",
                        pattern.r(),
                        pattern.s(),
                        est.fraction,
                        est.ci_lo,
                        est.ci_hi
                    );
                }
                Format::Json => {
                    #[derive(Serialize)]
                    struct Out {
                        meta: Meta,
                        batch: TrialBatch,
                        estimate: bootperc::mc::ProbEstimate,
                    }
                    println!(
                        "{}",
                        pretty(&Out {
                            meta: meta(),
                            batch,
                            estimate: est,
                        })?
                    );
                }
                Format::Text => {
                    println!(
                        "fraction: {} ({}/{} trials), 95% CI [{:.6}, {:.6}]",
                        est.fraction, est.successes, est.trials, est.ci_lo, est.ci_hi
                    );
                }
            }
        }
        Command::FindThreshold {
            n,
            pattern,
            trials,
            rel_tol,
            seed,
            lo,
            hi,
            format,
        } => {
            let pattern = pattern_of(&pattern)?;
            let default = default_bracket(pattern, n);
            let search = ThresholdSearch {
                n,
                pattern,
                trials_per_probe: trials,
                bracket: (lo.unwrap_or(default.0), hi.unwrap_or(default.1)),
                rel_tol,
                base_seed: seed,
            };
            let res = find_threshold(&search)?;
            match format {
                Format::Csv => {
                    println!("{CSV_HEADER}");
                    for pr in &res.probes {
                        println!(
                            "{n},{},{},{},{trials},{},{},{},{seed}",
                            pattern.r(),
                            pattern.s(),
                            pr.p,
                            pr.fraction,
                            pr.ci_lo,
                            pr.ci_hi
                        );
                    }
                }
                Format::Json => {
                    #[derive(Serialize)]
                    struct Out {
                        meta: Meta,
                        result: bootperc::mc::ThresholdResult,
                    }
                    println!(
                        "{}",
                        pretty(&Out {
                            meta: meta(),
                            result: res,
                        })?
                    );
                }
                Format::Text => {
                    println!("p_hat: {}", res.p_hat);
                    println!("bracket: [{}, {}]", res.lo, res.hi);
                    println!("probes: {}", res.probes.len());
                    for pr in &res.probes {
                        println!("  p={:.6} fraction={}", pr.p, pr.fraction);
                    }
                }
            }
        }
        Command::Sweep {
            pattern,
            n_list,
            trials,
            rel_tol,
            seed,
            format,
        } => {
            let pattern = pattern_of(&pattern)?;
            let res = sweep_scaling(pattern, &n_list, trials, rel_tol, seed)?;
            match format {
                Format::Csv => {
                    // p column carries p_hat; ci columns carry the final
                    // bisection bracket; fraction is the 1/2 probe level.
                    println!("{CSV_HEADER}");
                    for row in &res.rows {
                        if let (Some(p_hat), Some(hw)) = (row.p_hat, row.half_width) {
                            println!(
                                "{},{},{},{p_hat},{trials},0.5,{},{},{seed}",
                                row.n,
                                pattern.r(),
                                pattern.s(),
                                p_hat - hw,
                                p_hat + hw
                            );
                        }
                    }
                }
                Format::Json => {
                    #[derive(Serialize)]
                    struct Out {
                        meta: Meta,
                        result: bootperc::mc::ScalingResult,
                    }
                    println!(
                        "{}",
                        pretty(&Out {
                            meta: meta(),
                            result: res,
                        })?
                    );
                }
                Format::Text => {
                    println!("pattern: {pattern}");
                    println!("theory exponent: {:.6}", res.theory_exponent);
                    match res.fitted_exponent {
                        Some(f) => println!("fitted exponent: {f:.6}"),
                        None => println!("fitted exponent: unavailable"),
                    }
                    for row in &res.rows {
                        match (row.p_hat, &row.error) {
                            (Some(p), _) => println!(
                                "  n={} p_hat={p:.6} lower={:.6} upper={:.6}",
                                row.n,
                                row.lower_curve.unwrap_or(f64::NAN),
                                row.upper_curve.unwrap_or(f64::NAN)
                            ),
                            (None, Some(e)) => println!("  n={} FAILED: {e}", row.n),
                            (None, None) => unreachable!(),
                        }
                    }
                }
            }
        }
        Command::VerifyLemmas { r, s, m_max, format } => {
            let pattern = Pattern::new(r, s)?;
            let single = verify_single_overlap(pattern)?;
            let multi = verify_multi_overlap(pattern, m_max)?;
            let case3 = verify_case3_boundary(pattern, m_max)?;
            match format {
                Format::Json => {
                    #[derive(Serialize)]
                    struct Out {
                        meta: Meta,
                        single: bootperc::oracles::SingleOverlapReport,
                        multi: bootperc::oracles::MultiOverlapReport,
                        case3: bootperc::oracles::Case3Report,
                    }
                    println!(
                        "{}",
                        pretty(&Out {
                            meta: meta(),
                            single,
                            multi,
                            case3,
                        })?
                    );
                }
                _ => {
                    println!("pattern: {pattern}");
                    println!(
                        "single-overlap: {} (min {}/{} at (P,Q)=({},{}))",
                        if single.pass { "pass" } else { "FAIL" },
                        single.min_value.num,
                        single.min_value.den,
                        single.min_at.0,
                        single.min_at.1
                    );
                    println!(
                        "multi-overlap (m <= {m_max}): {} ({} instances)",
                        if multi.pass { "pass" } else { "FAIL" },
                        multi.instances_checked
                    );
                    println!(
                        "exact-split boundary (m <= {m_max}): {}",
                        if case3.pass { "pass" } else { "FAIL" }
                    );
                }
            }
        }
        Command::Balanced { r, s } => {
            let pattern = Pattern::new(r, s)?;
            let lam = pattern.lambda();
            let report = pattern.is_balanced_brute_force()?;
            println!("balanced: {}", pattern.is_balanced_closed_form());
            println!("lambda: {}/{}", lam.numer(), lam.denom());
            println!(
                "brute force: balanced={} worst subgraph K_{{{},{}}} ratio {}/{}",
                report.balanced,
                report.worst_subgraph.0,
                report.worst_subgraph.1,
                report.worst_ratio_num,
                report.worst_ratio_den
            );
            if let Some(note) = report.note {
                println!("note: {note}");
            }
        }
        Command::Bounds {
            pattern,
            n_min,
            n_max,
            factor,
            c_lower,
            c_upper,
            format,
        } => {
            let pattern = pattern_of(&pattern)?;
            if n_min < 3 || n_min > n_max || factor <= 1.0 {
                return Err(Error::Input(format!(
                    "invalid range: n_min {n_min}, n_max {n_max}, factor {factor}"
                )));
            }
            #[derive(Serialize)]
            struct Row {
                n: usize,
                lower: Option<f64>,
                upper: Option<f64>,
                general_lower: Option<f64>,
            }
            let mut rows = Vec::new();
            let mut n = n_min;
            while n <= n_max {
                rows.push(Row {
                    n,
                    lower: pattern.lower_bound_p(n).ok().map(|v| c_lower * v),
                    upper: pattern.upper_curve(n, c_upper).ok(),
                    general_lower: pattern.general_lower_bound_p(n).ok().map(|(v, _)| v),
                });
                let next = ((n as f64) * factor).ceil() as usize;
                n = next.max(n + 1);
            }
            match format {
                Format::Json => {
                    #[derive(Serialize)]
                    struct Out {
                        meta: Meta,
                        pattern: (usize, usize),
                        lambda: f64,
                        rows: Vec<Row>,
                    }
                    println!(
                        "{}",
                        pretty(&Out {
                            meta: meta(),
                            pattern: (pattern.r(), pattern.s()),
                            lambda: ratio_f64(pattern.lambda()),
                            rows,
                        })?
                    );
                }
                _ => {
                    println!("n,lower,upper,general_lower");
                    for row in rows {
                        let fmt = |v: Option<f64>| {
                            v.map(|x| x.to_string()).unwrap_or_else(|| "".into())
                        };
                        println!(
                            "{},{},{},{}",
                            row.n,
                            fmt(row.lower),
                            fmt(row.upper),
                            fmt(row.general_lower)
                        );
                    }
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ Error::Internal(_)) => {
            let _ = writeln!(io::stderr(), "error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            let _ = writeln!(io::stderr(), "error: {e}");
            ExitCode::from(1)
        }
    }
}
