//! Seeded Monte Carlo campaigns.
//!
//! Trial `t` of a campaign with master seed `s` uses `sub_seed(s, t)` for
//! every random object it draws, so each record can be reproduced on its own
//! and trials can run in any order. Reports are deterministic apart from the
//! optional `timing` block.

use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adversary;
use crate::densela::{default_rank_tol, norm2, norm_inf, Mat};
use crate::error::{Error, Result};
use crate::model::{
    self, gen_matrix, gen_signal, measure, sub_seed, EntryDist, NoiseSpec, Selection,
};
use crate::robust::{self, SweepRow};
use crate::solver::{self, SolveConfig, Status};

use super::SCHEMA_VERSION;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    MontecarloExact,
    SnrSweep,
    Converse,
    NullspaceCheck,
}

impl std::str::FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "montecarlo_exact" => Ok(ExperimentKind::MontecarloExact),
            "snr_sweep" => Ok(ExperimentKind::SnrSweep),
            "converse" => Ok(ExperimentKind::Converse),
            "nullspace_check" => Ok(ExperimentKind::NullspaceCheck),
            other => Err(Error::invalid(format!("unknown experiment kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub k: usize,
    pub n: usize,
    pub m: usize,
    pub trials: usize,
    pub seed: u64,
    pub dist: EntryDist,
    pub solver: SolveConfig,
    /// SNR grid for `snr_sweep`; defaults to 1e2, 1e4, ..., 1e12.
    pub snrs: Option<Vec<f64>>,
    /// `snr_sweep` on the fixed 4x2 instance instead of a random one.
    pub golden: bool,
}

impl ExperimentConfig {
    pub fn new(
        kind: ExperimentKind,
        k: usize,
        n: usize,
        m: usize,
        trials: usize,
        seed: u64,
    ) -> Self {
        ExperimentConfig {
            kind,
            k,
            n,
            m,
            trials,
            seed,
            dist: EntryDist::Gaussian,
            solver: SolveConfig::default(),
            snrs: None,
            golden: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (k, n, m) = (self.k, self.n, self.m);
        if k == 0 || n == 0 || n > m || self.trials == 0 {
            return Err(Error::invalid(format!(
                "need k >= 1, 1 <= n <= m, trials >= 1; got k={k} n={n} m={m} trials={}",
                self.trials
            )));
        }
        match self.kind {
            ExperimentKind::MontecarloExact if n < k => Err(Error::Precondition(format!(
                "exact recovery needs n >= k, got n={n} k={k}"
            ))),
            ExperimentKind::SnrSweep if !self.golden && n < k => Err(Error::Precondition(format!(
                "sweep needs n >= k, got n={n} k={k}"
            ))),
            ExperimentKind::Converse if k < 2 || n < 2 || n >= 2 * k => Err(Error::Precondition(
                format!("converse needs k >= 2 and 2 <= n < 2k, got n={n} k={k}"),
            )),
            ExperimentKind::NullspaceCheck if n < 2 * k => Err(Error::Precondition(format!(
                "null-space check needs n >= 2k, got n={n} k={k}"
            ))),
            _ => Ok(()),
        }
    }

    pub fn snr_grid(&self) -> Vec<f64> {
        self.snrs
            .clone()
            .unwrap_or_else(|| (1..=6).map(|e| 10f64.powi(2 * e)).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub sub_seed: u64,
    pub success: bool,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error_inf: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub separation: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nodes_explored: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nodes_pruned: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snr: Option<f64>,
}

impl TrialRecord {
    fn new(trial: u64, sub_seed: u64, status: impl Into<String>) -> Self {
        TrialRecord {
            trial,
            sub_seed,
            success: false,
            status: status.into(),
            error_inf: None,
            residual: None,
            separation: None,
            nodes_explored: None,
            nodes_pruned: None,
            snr: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub mean_error: Option<f64>,
    pub max_error: Option<f64>,
    pub degenerate_count: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_residual: Option<f64>,
    /// Fraction of trials in which the pruned search cut at least one node.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pruned_fraction: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_snr: Option<Vec<SweepRow>>,
}

/// Wall-clock data, kept apart from everything that must be reproducible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub generated_at_unix_ms: u128,
    pub wall_seconds: f64,
    pub per_trial_seconds: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub config: ExperimentConfig,
    pub records: Vec<TrialRecord>,
    pub aggregates: Aggregates,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing: Option<Timing>,
}

/// Success threshold for exact recovery: `|x_hat - x|_inf <= 1e-8 (1 + |x|)`.
pub const EXACT_RECOVERY_TOL: f64 = 1e-8;

/// The 4x2 sensing matrix with unique recovery used as a fixed instance.
pub fn golden_matrix() -> Mat {
    Mat::from_rows(&[[1.0, 0.0], [0.0, 1.0], [1.0, 2.0], [1.0, -1.0]]).expect("static matrix")
}

pub const GOLDEN_SIGNAL: [f64; 2] = [1.0, -3.0];

fn exact_trial(cfg: &ExperimentConfig, trial: u64, seed: u64) -> Result<TrialRecord> {
    let a = gen_matrix(cfg.m, cfg.k, cfg.dist, seed)?;
    let x = gen_signal(cfg.k, 0.1, 10.0, seed)?;
    let sel = Selection::random(cfg.m, cfg.n, seed)?;
    let inst = measure(&a, &x, &sel, NoiseSpec::None, seed)?;
    let rep = solver::solve(&a, &inst.y, &cfg.solver)?;
    let mut rec = TrialRecord::new(trial, seed, rep.status.as_str());
    rec.nodes_explored = Some(rep.nodes_explored);
    rec.nodes_pruned = Some(rep.nodes_pruned);
    if let Some(xh) = &rep.x_hat {
        let err = norm_inf(&xh.iter().zip(&x).map(|(p, q)| p - q).collect::<Vec<_>>());
        rec.error_inf = Some(err);
        rec.success = rep.status == Status::Unique && err <= EXACT_RECOVERY_TOL * (1.0 + norm2(&x));
    }
    Ok(rec)
}

fn converse_trial(cfg: &ExperimentConfig, trial: u64, seed: u64) -> Result<TrialRecord> {
    let b = gen_matrix(cfg.n, cfg.k, cfg.dist, seed)?;
    match adversary::construct(&b) {
        Ok(pair) => {
            let mut rec = TrialRecord::new(trial, seed, "ambiguous_pair");
            let bx = b.matvec(&pair.x)?;
            rec.success = pair.residual <= adversary::PAIR_RESIDUAL_TOL * (1.0 + norm2(&bx))
                && pair.separation >= 0.5;
            rec.residual = Some(pair.residual);
            rec.separation = Some(pair.separation);
            Ok(rec)
        }
        Err(Error::Degenerate(_)) => Ok(TrialRecord::new(trial, seed, "degenerate")),
        Err(e) => Err(e),
    }
}

fn nullspace_trial(cfg: &ExperimentConfig, trial: u64, seed: u64) -> Result<TrialRecord> {
    let a = gen_matrix(cfg.m, cfg.k, cfg.dist, seed)?;
    let tol = default_rank_tol(cfg.n, 2 * cfg.k);
    let chk = solver::nullspace_property(&a, cfg.n, tol, solver::NULLSPACE_PAIR_BUDGET, seed)?;
    let mut rec = TrialRecord::new(
        trial,
        seed,
        if chk.passed { "contained" } else { "violated" },
    );
    rec.success = chk.passed;
    rec.residual = Some(chk.max_violation);
    rec.nodes_explored = Some(chk.pairs_checked);
    Ok(rec)
}

fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = std::env::var("US_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        b = b.num_threads(n.max(1));
    }
    b.build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))
}

fn run_trials<F>(cfg: &ExperimentConfig, f: F) -> Result<(Vec<TrialRecord>, Vec<f64>)>
where
    F: Fn(&ExperimentConfig, u64, u64) -> Result<TrialRecord> + Sync,
{
    let out = thread_pool()?.install(|| {
        (0..cfg.trials as u64)
            .into_par_iter()
            .map(|t| {
                let start = Instant::now();
                let rec = f(cfg, t, sub_seed(cfg.seed, t))?;
                Ok((rec, start.elapsed().as_secs_f64()))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(out.into_iter().unzip())
}

fn sweep(cfg: &ExperimentConfig) -> Result<(Vec<TrialRecord>, Vec<f64>, Vec<SweepRow>)> {
    let (a, x, sel) = if cfg.golden {
        (
            golden_matrix(),
            GOLDEN_SIGNAL.to_vec(),
            Selection::identity(4),
        )
    } else {
        (
            gen_matrix(cfg.m, cfg.k, cfg.dist, cfg.seed)?,
            gen_signal(cfg.k, 0.1, 10.0, cfg.seed)?,
            Selection::random(cfg.m, cfg.n, cfg.seed)?,
        )
    };
    let snrs = cfg.snr_grid();
    let start = Instant::now();
    let per_snr = robust::sweep_trials(&a, &x, &sel, &snrs, cfg.trials, cfg.seed)?;
    let secs = start.elapsed().as_secs_f64();
    let mut records = Vec::new();
    let mut rows = Vec::new();
    for (&snr, trials) in snrs.iter().zip(&per_snr) {
        rows.push(robust::summarize(snr, trials));
        for (t, st) in trials.iter().enumerate() {
            let mut rec = TrialRecord::new(
                records.len() as u64,
                sub_seed(cfg.seed, t as u64),
                if st.selection_recovered {
                    "selection_recovered"
                } else {
                    "selection_missed"
                },
            );
            rec.success = st.selection_recovered;
            rec.error_inf = Some(st.rel_error);
            rec.snr = snr.is_finite().then_some(snr);
            records.push(rec);
        }
    }
    let per = vec![secs / records.len().max(1) as f64; records.len()];
    Ok((records, per, rows))
}

fn aggregate(records: &[TrialRecord]) -> Aggregates {
    let successes = records.iter().filter(|r| r.success).count();
    let errs: Vec<f64> = records.iter().filter_map(|r| r.error_inf).collect();
    let residuals: Vec<f64> = records.iter().filter_map(|r| r.residual).collect();
    let pruned: Vec<u64> = records.iter().filter_map(|r| r.nodes_pruned).collect();
    Aggregates {
        trials: records.len(),
        successes,
        success_rate: successes as f64 / records.len() as f64,
        mean_error: (!errs.is_empty()).then(|| errs.iter().sum::<f64>() / errs.len() as f64),
        max_error: errs.iter().copied().reduce(f64::max),
        degenerate_count: records.iter().filter(|r| r.status == "degenerate").count(),
        max_residual: residuals.iter().copied().reduce(f64::max),
        pruned_fraction: (!pruned.is_empty())
            .then(|| pruned.iter().filter(|&&p| p > 0).count() as f64 / pruned.len() as f64),
        per_snr: None,
    }
}

/// Runs a campaign. The returned report carries a `timing` block; drop it
/// (set it to `None`) for byte-reproducible output.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let start = Instant::now();
    let (records, per_trial, per_snr) = match cfg.kind {
        ExperimentKind::MontecarloExact => {
            let (r, t) = run_trials(cfg, exact_trial)?;
            (r, t, None)
        }
        ExperimentKind::Converse => {
            let (r, t) = run_trials(cfg, converse_trial)?;
            (r, t, None)
        }
        ExperimentKind::NullspaceCheck => {
            let (r, t) = run_trials(cfg, nullspace_trial)?;
            (r, t, None)
        }
        ExperimentKind::SnrSweep => {
            let (r, t, rows) = sweep(cfg)?;
            (r, t, Some(rows))
        }
    };
    let mut aggregates = aggregate(&records);
    aggregates.per_snr = per_snr;
    let generated_at_unix_ms = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0);
    Ok(ExperimentReport {
        schema_version: SCHEMA_VERSION,
        config: cfg.clone(),
        records,
        aggregates,
        timing: Some(Timing {
            generated_at_unix_ms,
            wall_seconds: start.elapsed().as_secs_f64(),
            per_trial_seconds: per_trial,
        }),
    })
}

/// Re-derives a single exact-recovery record from its seed.
pub fn replay_exact_trial(cfg: &ExperimentConfig, trial: u64) -> Result<TrialRecord> {
    exact_trial(cfg, trial, model::sub_seed(cfg.seed, trial))
}
