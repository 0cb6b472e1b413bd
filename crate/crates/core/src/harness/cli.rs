//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 when the outcome breaks the subcommand's
//! uniqueness contract (ambiguous or infeasible recovery, degenerate draw,
//! failed campaign), 2 on usage and input errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::adversary;
use crate::cycles;
use crate::error::{Error, Result};
use crate::model::{gen_matrix, measure, parse_picks, EntryDist, NoiseSpec, Selection};
use crate::robust;
use crate::solver::{self, SolveConfig, Status};

use super::csvio;
use super::experiment::{run_experiment, ExperimentConfig, ExperimentKind};
use super::SCHEMA_VERSION;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONTRACT: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "unlabeled-sensing",
    version,
    about = "Recover signals from shuffled linear measurements"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw an i.i.d. random sensing matrix and write it as CSV.
    Gen {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value = "gaussian")]
        dist: EntryDist,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute y = S A x (+ noise at a given SNR).
    Measure {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        x: PathBuf,
        /// Comma-separated 0-based rows of A, in measurement order.
        #[arg(long)]
        picks: String,
        /// Linear-scale signal-to-noise ratio; omit for noiseless output.
        #[arg(long)]
        snr: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Exact recovery from noiseless unlabeled measurements.
    Recover {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        y: PathBuf,
        #[arg(long)]
        first_hit: bool,
        #[arg(long)]
        no_prune: bool,
        #[arg(long, default_value_t = 1e-9)]
        residual_tol: f64,
        #[arg(long, default_value_t = 1e-6)]
        uniqueness_tol: f64,
        #[arg(long)]
        max_nodes: Option<u64>,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Least-squares recovery from noisy unlabeled measurements.
    Robust {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        y: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Cycle decomposition of a true/candidate selection pair.
    Cycles {
        #[arg(long = "true")]
        true_picks: String,
        #[arg(long)]
        cand: String,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Construct an ambiguous pair for a random N x K matrix with N < 2K.
    Adversary {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "gaussian")]
        dist: EntryDist,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Run a seeded Monte Carlo campaign.
    Montecarlo {
        #[arg(long)]
        kind: ExperimentKind,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "gaussian")]
        dist: EntryDist,
        /// Comma-separated SNR grid for snr_sweep.
        #[arg(long)]
        snrs: Option<String>,
        /// snr_sweep on the fixed 4x2 instance.
        #[arg(long)]
        golden: bool,
        #[arg(long)]
        no_prune: bool,
        /// Omit the wall-clock block so output is byte-reproducible.
        #[arg(long)]
        no_timing: bool,
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.cmd) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Degenerate(_) => EXIT_CONTRACT,
                _ => EXIT_USAGE,
            }
        }
    }
}

fn emit<T: Serialize>(value: &T, path: Option<&Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match path {
        Some(p) => std::fs::write(p, text).map_err(|source| Error::Io {
            path: p.to_path_buf(),
            source,
        }),
        None => {
            let _ = std::io::stdout().write_all(text.as_bytes());
            Ok(())
        }
    }
}

fn dispatch(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Gen {
            m,
            k,
            dist,
            seed,
            out,
        } => {
            csvio::write_matrix(&out, &gen_matrix(m, k, dist, seed)?)?;
            Ok(EXIT_OK)
        }
        Command::Measure {
            a,
            x,
            picks,
            snr,
            seed,
            out,
        } => {
            let a = csvio::read_matrix(&a)?;
            let x = csvio::read_vector(&x)?;
            let sel = Selection::new(a.rows(), parse_picks(&picks)?)?;
            let noise = snr.map_or(NoiseSpec::None, |snr| NoiseSpec::GaussianSnr { snr });
            let inst = measure(&a, &x, &sel, noise, seed)?;
            csvio::write_vector(&out, &inst.y)?;
            Ok(EXIT_OK)
        }
        Command::Recover {
            a,
            y,
            first_hit,
            no_prune,
            residual_tol,
            uniqueness_tol,
            max_nodes,
            json,
        } => {
            let a = csvio::read_matrix(&a)?;
            let y = csvio::read_vector(&y)?;
            let cfg = SolveConfig {
                residual_tol,
                uniqueness_tol,
                prune: !no_prune,
                first_hit,
                max_nodes,
            };
            let rep = solver::solve(&a, &y, &cfg)?;
            emit(
                &json!({
                    "schema_version": SCHEMA_VERSION,
                    "status": rep.status,
                    "x_hat": rep.x_hat,
                    "distinct_solutions": rep.distinct_solutions,
                    "witness_selections": rep.witness_selections.iter().map(|s| s.picks()).collect::<Vec<_>>(),
                    "nodes_explored": rep.nodes_explored,
                    "nodes_pruned": rep.nodes_pruned,
                    "config": cfg,
                }),
                json.as_deref(),
            )?;
            Ok(if rep.status == Status::Unique {
                EXIT_OK
            } else {
                EXIT_CONTRACT
            })
        }
        Command::Robust { a, y, n, json } => {
            let a = csvio::read_matrix(&a)?;
            let y = csvio::read_vector(&y)?;
            let rep = robust::robust_recover(&a, &y, n)?;
            emit(
                &json!({
                    "schema_version": SCHEMA_VERSION,
                    "x_hat": rep.x_hat,
                    "best_selection": rep.best_selection.picks(),
                    "best_residual": rep.best_residual,
                    "runner_up_residual": rep.runner_up_residual,
                }),
                json.as_deref(),
            )?;
            Ok(EXIT_OK)
        }
        Command::Cycles {
            true_picks,
            cand,
            m,
            json,
        } => {
            let t = Selection::new(m, parse_picks(&true_picks)?)?;
            let c = Selection::new(m, parse_picks(&cand)?)?;
            let d = cycles::decompose(&t, &c)?;
            emit(
                &json!({
                    "schema_version": SCHEMA_VERSION,
                    "m": m,
                    "true": t.picks(),
                    "cand": c.picks(),
                    "cycles": d.cycles,
                    "n_complete": d.n_complete,
                    "n_total": d.n_total,
                }),
                json.as_deref(),
            )?;
            Ok(EXIT_OK)
        }
        Command::Adversary {
            k,
            n,
            seed,
            dist,
            json,
        } => {
            let b = gen_matrix(n, k, dist, seed)?;
            let (body, code) = match adversary::construct(&b) {
                Ok(pair) => (
                    json!({
                        "schema_version": SCHEMA_VERSION,
                        "status": "ambiguous_pair",
                        "k": k, "n": n, "seed": seed, "dist": dist,
                        "b": b,
                        "x": pair.x,
                        "x_hat": pair.x_hat,
                        "pi": pair.pi.picks(),
                        "residual": pair.residual,
                        "separation": pair.separation,
                    }),
                    EXIT_OK,
                ),
                Err(Error::Degenerate(msg)) => (
                    json!({
                        "schema_version": SCHEMA_VERSION,
                        "status": "degenerate",
                        "k": k, "n": n, "seed": seed, "dist": dist,
                        "b": b,
                        "message": msg,
                    }),
                    EXIT_CONTRACT,
                ),
                Err(e) => return Err(e),
            };
            emit(&body, json.as_deref())?;
            Ok(code)
        }
        Command::Montecarlo {
            kind,
            k,
            n,
            m,
            trials,
            seed,
            dist,
            snrs,
            golden,
            no_prune,
            no_timing,
            json,
        } => {
            let mut cfg = ExperimentConfig::new(kind, k, n, m, trials, seed);
            cfg.dist = dist;
            cfg.golden = golden;
            cfg.solver.prune = !no_prune;
            cfg.snrs = snrs.map(|s| parse_floats(&s)).transpose()?;
            let mut rep = run_experiment(&cfg)?;
            if no_timing {
                rep.timing = None;
            }
            emit(&rep, json.as_deref())?;
            let ok = match kind {
                ExperimentKind::SnrSweep => true,
                _ => rep.aggregates.successes == rep.aggregates.trials,
            };
            Ok(if ok { EXIT_OK } else { EXIT_CONTRACT })
        }
    }
}

fn parse_floats(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::invalid(format!("bad number {t:?} in {s:?}")))
        })
        .collect()
}
