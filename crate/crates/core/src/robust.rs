//! Recovery from noisy shuffled measurements and the principal-angle
//! distance between column spans.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::densela::{self, check_finite, default_rank_tol, norm2, Mat};
use crate::error::{Error, Result};
use crate::model::{apply_selection, enumerate_selections, gaussian_noise, sub_seed, Selection};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustReport {
    pub x_hat: Vec<f64>,
    pub best_selection: Selection,
    pub best_residual: f64,
    /// Smallest residual among the remaining selections; equals
    /// `best_residual` when there is only one selection.
    pub runner_up_residual: f64,
}

/// Minimizes `|y - S A x|` jointly over `n`-row selections `S` and signals `x`.
///
/// Ties on the residual go to the lexicographically first selection.
pub fn robust_recover(a: &Mat, y: &[f64], n: usize) -> Result<RobustReport> {
    if y.len() != n {
        return Err(Error::dim(format!("{} measurements but n = {n}", y.len())));
    }
    if n > a.rows() || n < a.cols() {
        return Err(Error::dim(format!(
            "need K <= n <= M, got K = {}, n = {n}, M = {}",
            a.cols(),
            a.rows()
        )));
    }
    check_finite(y, "measurement")?;

    let candidates: Vec<Selection> = enumerate_selections(a.rows(), n)?.collect();
    let fits = candidates
        .par_iter()
        .map(|s| densela::lstsq(&apply_selection(s, a)?, y))
        .collect::<Result<Vec<_>>>()?;

    // Sequential reduction keeps the tie-break independent of scheduling.
    let mut best = 0;
    for (i, f) in fits.iter().enumerate().skip(1) {
        if f.residual_norm < fits[best].residual_norm {
            best = i;
        }
    }
    let runner_up = fits
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != best)
        .map(|(_, f)| f.residual_norm)
        .fold(f64::INFINITY, f64::min);
    let best_fit = &fits[best];
    Ok(RobustReport {
        x_hat: best_fit.solution.clone(),
        best_selection: candidates[best].clone(),
        best_residual: best_fit.residual_norm,
        runner_up_residual: if runner_up.is_finite() {
            runner_up
        } else {
            best_fit.residual_norm
        },
    })
}

/// `sin` of the smallest principal angle between the column spans of `m1`
/// and `m2`.
///
/// Uses the largest cosine (top singular value of `Q1ᵀQ2`) for wide angles and
/// the smallest singular value of the projection residual `(I - Q2Q2ᵀ)Q1`
/// for narrow ones, where the cosine route loses half the digits.
pub fn subspace_distance(m1: &Mat, m2: &Mat) -> Result<f64> {
    if m1.rows() != m2.rows() {
        return Err(Error::dim(format!(
            "spans live in R^{} and R^{}",
            m1.rows(),
            m2.rows()
        )));
    }
    let basis = |m: &Mat| -> Result<Mat> {
        densela::column_basis(m, default_rank_tol(m.rows(), m.cols()))?
            .ok_or_else(|| Error::invalid("span of a zero matrix is undefined"))
    };
    let (mut q1, mut q2) = (basis(m1)?, basis(m2)?);
    if q1.cols() > q2.cols() {
        std::mem::swap(&mut q1, &mut q2);
    }

    let cross = q1.transpose().matmul(&q2)?;
    let cos_max = densela::singular_values(&cross)[0].clamp(0.0, 1.0);
    let from_cos = (1.0 - cos_max * cos_max).sqrt();
    if from_cos > std::f64::consts::FRAC_1_SQRT_2 {
        return Ok(from_cos);
    }

    // q1 has the smaller dimension, so every column of the residual carries
    // one principal angle.
    let proj = q2.matmul(&q2.transpose().matmul(&q1)?)?;
    let resid = Mat::new(
        q1.rows(),
        q1.cols(),
        q1.data()
            .iter()
            .zip(proj.data())
            .map(|(a, b)| a - b)
            .collect(),
    )?;
    let s = densela::singular_values(&resid);
    let sin_min = s.last().copied().unwrap_or(0.0);
    Ok(sin_min.clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    /// Linear-scale SNR; `None` stands for the noiseless sentinel.
    pub snr: Option<f64>,
    pub mean_rel_error: f64,
    pub max_rel_error: f64,
}

/// Outcome of one noisy trial in a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepTrial {
    pub rel_error: f64,
    /// Whether the minimizing selection is the one that produced `y`.
    pub selection_recovered: bool,
}

fn check_sweep(x: &[f64], clean: &[f64], snrs: &[f64], trials: usize) -> Result<()> {
    if trials == 0 {
        return Err(Error::invalid("stability sweep needs at least one trial"));
    }
    if snrs.is_empty() {
        return Err(Error::invalid("stability sweep needs at least one SNR"));
    }
    if snrs.iter().any(|s| s.is_nan() || *s <= 0.0) || snrs.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid(
            "SNRs must be positive and strictly ascending",
        ));
    }
    let finite = snrs.iter().any(|s| s.is_finite());
    if finite && norm2(x) == 0.0 {
        return Err(Error::Precondition(
            "SNR is undefined for a zero signal".into(),
        ));
    }
    if finite && norm2(clean) == 0.0 {
        return Err(Error::Precondition("SNR is undefined when B x = 0".into()));
    }
    Ok(())
}

/// Per-SNR, per-trial results of robust recovery on one fixed instance.
///
/// Trial `t` draws its noise direction from `sub_seed(seed, t)` at every SNR,
/// so consecutive SNRs differ only by noise scale. An infinite SNR means a
/// noiseless measurement.
pub fn sweep_trials(
    a: &Mat,
    x: &[f64],
    sel: &Selection,
    snrs: &[f64],
    trials: usize,
    seed: u64,
) -> Result<Vec<Vec<SweepTrial>>> {
    let b = apply_selection(sel, a)?;
    let clean = b.matvec(x)?;
    check_sweep(x, &clean, snrs, trials)?;
    let signal_power: f64 = clean.iter().map(|v| v * v).sum();
    let x_norm = norm2(x);

    snrs.iter()
        .map(|&snr| {
            (0..trials)
                .map(|t| {
                    let y: Vec<f64> = if snr.is_finite() {
                        let w = gaussian_noise(
                            clean.len(),
                            signal_power,
                            snr,
                            sub_seed(seed, t as u64),
                        );
                        clean.iter().zip(&w).map(|(c, n)| c + n).collect()
                    } else {
                        clean.clone()
                    };
                    let r = robust_recover(a, &y, sel.len())?;
                    let diff: Vec<f64> = r.x_hat.iter().zip(x).map(|(p, q)| p - q).collect();
                    let err = norm2(&diff);
                    Ok(SweepTrial {
                        rel_error: if x_norm > 0.0 { err / x_norm } else { err },
                        selection_recovered: r.best_selection == *sel,
                    })
                })
                .collect()
        })
        .collect()
}

/// Mean and max relative error of [`robust_recover`] at each SNR.
pub fn stability_sweep(
    a: &Mat,
    x: &[f64],
    sel: &Selection,
    snrs: &[f64],
    trials: usize,
    seed: u64,
) -> Result<Vec<SweepRow>> {
    let per_snr = sweep_trials(a, x, sel, snrs, trials, seed)?;
    Ok(snrs
        .iter()
        .zip(&per_snr)
        .map(|(&snr, ts)| summarize(snr, ts))
        .collect())
}

pub fn summarize(snr: f64, trials: &[SweepTrial]) -> SweepRow {
    SweepRow {
        snr: snr.is_finite().then_some(snr),
        mean_rel_error: trials.iter().map(|t| t.rel_error).sum::<f64>() / trials.len() as f64,
        max_rel_error: trials.iter().fold(0.0, |m, t| m.max(t.rel_error)),
    }
}
